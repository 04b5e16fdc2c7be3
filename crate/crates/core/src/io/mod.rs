//! File formats: OBJ meshes, XYZ clouds, dataset manifests, checkpoints and
//! loss-history CSV, plus procedural toy shapes.

mod checkpoint;
mod history;
mod manifest;
mod obj;
mod procedural;
mod xyz;

pub use checkpoint::{load_checkpoint, parse_checkpoint, render_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_HEADER};
pub use history::{render_history_csv, write_history_csv, HISTORY_HEADER};
pub use manifest::{load_manifest, parse_manifest, DatasetManifest, ManifestEntry, ShapeSource};
pub use obj::{load_obj, parse_obj, render_obj, write_obj};
pub use procedural::{procedural_shape, ProceduralShape};
pub use xyz::{load_xyz, parse_xyz, render_xyz, write_xyz};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
