use std::fmt::Write as _;
use std::path::Path;

use super::write_text;
use crate::error::Result;
use crate::training::LossRecord;

pub const HISTORY_HEADER: &str = "step,total,chamfer_fwd,deform_fwd,chamfer_bwd,deform_bwd";

/// Loss history as CSV with exact (round-trip) decimal values.
pub fn render_history_csv(history: &[LossRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e}",
            r.step, r.total, r.chamfer_fwd, r.deform_fwd, r.chamfer_bwd, r.deform_bwd
        );
    }
    out
}

pub fn write_history_csv(history: &[LossRecord], path: &Path) -> Result<()> {
    write_text(path, &render_history_csv(history))
}
