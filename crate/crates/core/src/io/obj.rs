use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, Vec3};

/// Reads the `v` and `f` records of a Wavefront OBJ file.
pub fn load_obj(path: &Path) -> Result<TriangleMesh> {
    parse_obj(&read_text(path)?, path)
}

/// Parses OBJ text; `origin` is only used in error messages.
///
/// Faces with more than three corners are fan-triangulated from their first
/// corner. Negative indices count back from the latest vertex. Texture and
/// normal references (`f 1/2/3`) and all other record types are ignored.
pub fn parse_obj(text: &str, origin: &Path) -> Result<TriangleMesh> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut fields = content.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|f| f.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::parse(origin, line, format!("bad vertex coordinate: {e}")))?;
                if coords.len() != 3 {
                    return Err(Error::parse(origin, line, "vertex needs three coordinates"));
                }
                let v = Vec3::new(coords[0], coords[1], coords[2]);
                if !v.is_finite() {
                    return Err(Error::parse(origin, line, "non-finite vertex coordinate"));
                }
                vertices.push(v);
            }
            Some("f") => {
                let corners = fields
                    .map(|f| resolve_index(f, vertices.len()))
                    .collect::<std::result::Result<Vec<_>, String>>()
                    .map_err(|m| Error::parse(origin, line, m))?;
                if corners.len() < 3 {
                    return Err(Error::parse(origin, line, "face needs at least three corners"));
                }
                for w in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[w], corners[w + 1]];
                    if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                        return Err(Error::parse(origin, line, "face repeats a vertex"));
                    }
                    faces.push(tri);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

fn resolve_index(field: &str, vertex_count: usize) -> std::result::Result<usize, String> {
    let head = field.split('/').next().unwrap_or("");
    let raw: i64 = head
        .parse()
        .map_err(|_| format!("bad face index {field:?}"))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        vertex_count as i64 + raw
    } else {
        return Err("face index 0 is invalid".into());
    };
    if idx < 0 || idx as usize >= vertex_count {
        return Err(format!(
            "face index {raw} out of range for {vertex_count} vertices"
        ));
    }
    Ok(idx as usize)
}

/// OBJ text with exact (round-trip) vertex coordinates and 1-based faces.
pub fn render_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn write_obj(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    write_text(path, &render_obj(mesh))
}
