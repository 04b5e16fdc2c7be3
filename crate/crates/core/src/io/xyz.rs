use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};

/// Reads one `x y z` point per line; `#` starts a comment.
pub fn load_xyz(path: &Path) -> Result<PointCloud> {
    parse_xyz(&read_text(path)?, path)
}

pub fn parse_xyz(text: &str, origin: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                origin,
                i + 1,
                format!("expected 3 coordinates, found {}", fields.len()),
            ));
        }
        let mut c = [0.0; 3];
        for (slot, f) in c.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| Error::parse(origin, i + 1, format!("bad coordinate {f:?}")))?;
        }
        let p = Vec3::from(c);
        if !p.is_finite() {
            return Err(Error::parse(origin, i + 1, "non-finite coordinate"));
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} contains no points",
            origin.display()
        )));
    }
    PointCloud::new(points)
}

/// One point per line, 9 significant digits per coordinate.
pub fn render_xyz(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 48);
    for p in cloud.points() {
        let _ = writeln!(out, "{:.8e} {:.8e} {:.8e}", p.x, p.y, p.z);
    }
    out
}

pub fn write_xyz(cloud: &PointCloud, path: &Path) -> Result<()> {
    write_text(path, &render_xyz(cloud))
}
