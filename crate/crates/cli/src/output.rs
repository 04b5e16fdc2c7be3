//! Staged output files.
//!
//! Every file a command produces is first written next to its destination
//! under a temporary name. `commit` renames them into place; dropping the
//! stage without committing deletes them, so a failed command leaves no
//! partial outputs and never clobbers an existing file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

#[derive(Default)]
pub struct Stage {
    files: Vec<(PathBuf, PathBuf)>,
}

pub fn temp_path(dest: &Path) -> PathBuf {
    let name = dest.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    dest.with_file_name(format!(".{name}.partial"))
}

impl Stage {
    /// Reserves `dest` and returns the temporary path to write instead.
    pub fn add(&mut self, dest: &Path) -> PathBuf {
        let tmp = temp_path(dest);
        self.files.push((tmp.clone(), dest.to_path_buf()));
        tmp
    }

    pub fn commit(mut self) -> Result<()> {
        for (tmp, dest) in std::mem::take(&mut self.files) {
            std::fs::rename(&tmp, &dest).with_context(|| format!("cannot move output into {}", dest.display()))?;
        }
        Ok(())
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        for (tmp, _) in &self.files {
            let _ = std::fs::remove_file(tmp);
        }
    }
}

/// Writes through a temporary file and renames, so `dest` is always either
/// its old content or the complete new content.
pub fn replace_atomically(dest: &Path, write: impl FnOnce(&Path) -> deformnet::Result<()>) -> Result<()> {
    let mut stage = Stage::default();
    let tmp = stage.add(dest);
    write(&tmp)?;
    stage.commit()
}
