use std::path::{Path, PathBuf};

use super::{load_obj, read_text, ProceduralShape};
use crate::error::{Error, Result};
use crate::geometry::{sample_mesh_surface, TriangleMesh};
use crate::metrics::EvalShape;

/// Where a manifest entry's mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSource {
    /// OBJ file, resolved against the manifest's directory when relative.
    Mesh(PathBuf),
    /// `procedural:<name>[:key=value,...]`
    Procedural(ProceduralShape),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub source: ShapeSource,
    pub count: usize,
    pub seed: u64,
}

impl ManifestEntry {
    pub fn mesh(&self) -> Result<TriangleMesh> {
        let mesh = match &self.source {
            ShapeSource::Mesh(path) => load_obj(path),
            ShapeSource::Procedural(shape) => shape.build(),
        };
        mesh.map_err(|e| Error::InvalidArgument(format!("manifest entry {:?}: {e}", self.id)))
    }

    /// Mesh plus `count` surface samples drawn with `seed`.
    pub fn load(&self) -> Result<EvalShape> {
        let mesh = self.mesh()?;
        let cloud = sample_mesh_surface(&mesh, self.count, self.seed)
            .map_err(|e| Error::InvalidArgument(format!("manifest entry {:?}: {e}", self.id)))?;
        Ok(EvalShape {
            id: self.id.clone(),
            mesh,
            cloud,
        })
    }
}

/// Dataset description: one `id<TAB>source<TAB>count<TAB>seed` line per shape.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load_shapes(&self) -> Result<Vec<EvalShape>> {
        self.entries.iter().map(ManifestEntry::load).collect()
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&read_text(path)?, path, base)
}

/// Parses manifest text. Blank lines and lines starting with `#` are skipped.
pub fn parse_manifest(text: &str, origin: &Path, base: &Path) -> Result<DatasetManifest> {
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim_end_matches('\r');
        if content.trim().is_empty() || content.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                origin,
                line,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let id = fields[0].trim().to_string();
        if id.is_empty() || id.contains(['/', '\\']) {
            return Err(Error::parse(origin, line, format!("invalid shape id {id:?}")));
        }
        if entries.iter().any(|e| e.id == id) {
            return Err(Error::parse(origin, line, format!("duplicate shape id {id:?}")));
        }
        let src = fields[1].trim();
        let source = match src.strip_prefix("procedural:") {
            Some(spec) => ShapeSource::Procedural(
                ProceduralShape::parse(spec).map_err(|e| Error::parse(origin, line, e.to_string()))?,
            ),
            None => {
                let p = Path::new(src);
                ShapeSource::Mesh(if p.is_absolute() { p.to_path_buf() } else { base.join(p) })
            }
        };
        let count: usize = fields[2]
            .trim()
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| Error::parse(origin, line, format!("bad sample count {:?}", fields[2])))?;
        let seed: u64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(origin, line, format!("bad seed {:?}", fields[3])))?;
        entries.push(ManifestEntry { id, source, count, seed });
    }
    if entries.is_empty() {
        return Err(Error::InvalidArgument(format!("{} lists no shapes", origin.display())));
    }
    Ok(DatasetManifest { entries })
}
