//! Split lists: one zero-padded frame id per line (`000000`, `000003`, ...).

use crate::kitti::{FrameId, KittiIoError};

/// Parses a split list into ascending, deduplicated frame ids. Duplicates are
/// tolerated with a warning so a hand-edited list never aborts a run.
pub fn parse_split(text: &str) -> Result<Vec<FrameId>, KittiIoError> {
    let mut ids = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let frame = raw
            .parse::<FrameId>()
            .map_err(|reason| KittiIoError::MalformedLine {
                line: idx + 1,
                reason,
            })?;
        ids.push(frame);
    }
    ids.sort_unstable();
    let before = ids.len();
    ids.dedup();
    if ids.len() != before {
        log::warn!(
            "split list held {} duplicate frame id(s)",
            before - ids.len()
        );
    }
    Ok(ids)
}

/// Emits one zero-padded id per line.
pub fn emit_split(ids: &[FrameId]) -> String {
    let mut out = String::new();
    for id in ids {
        out.push_str(&id.to_string());
        out.push('\n');
    }
    out
}
