//! Artifact files and human-readable summaries.
//!
//! JSON artifacts keep 0-based lines and columns, like the session logs.
//! Only the text summary on stderr uses 1-based positions.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use editgaze_core::{Adjusted, CharRange, Fixation, ProcessedSession, Timestamp, TokenId};
use serde::Serialize;

pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes `text` to `path`, or to stdout.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn fixation_lines(fixations: &[Fixation]) -> String {
    fixations
        .iter()
        .map(|f| serde_json::to_string(f).expect("fixations serialize") + "\n")
        .collect()
}

#[derive(Serialize)]
struct SnapshotEntry<'a> {
    index: usize,
    file: String,
    valid_from: Timestamp,
    valid_to: Option<Timestamp>,
    produced_by: Option<usize>,
    chars: usize,
    lines: usize,
    #[serde(skip)]
    text: &'a str,
}

#[derive(Serialize)]
struct BatchEntry {
    index: usize,
    t_start: Timestamp,
    t_end: Timestamp,
    edits: usize,
    old_range: CharRange,
    new_range: CharRange,
    delta: i64,
}

/// Where one fixation's token sits in every snapshot.
#[derive(Serialize)]
struct AdjustedView {
    fixation: usize,
    snapshot_index: usize,
    token_id: Option<TokenId>,
    positions: Vec<Adjusted>,
}

fn adjusted_views(s: &ProcessedSession) -> Vec<AdjustedView> {
    s.fixations
        .iter()
        .enumerate()
        .map(|(i, f)| AdjustedView {
            fixation: i,
            snapshot_index: f.snapshot_index,
            token_id: f.token_id,
            positions: (0..s.snapshots.len())
                .map(|k| {
                    s.adjust_to_snapshot(f, k)
                        .expect("target is a valid snapshot")
                })
                .collect(),
        })
        .collect()
}

pub fn write_snapshots(s: &ProcessedSession, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let ext = &s.archive.extension;
    let entries: Vec<SnapshotEntry> = s
        .snapshots
        .iter()
        .zip(&s.lines)
        .map(|(snap, lines)| SnapshotEntry {
            index: snap.index,
            file: format!("snapshot_{}.{ext}", snap.index),
            valid_from: snap.valid_from,
            valid_to: snap.valid_to,
            produced_by: snap.produced_by,
            chars: lines.len_chars(),
            lines: lines.line_count(),
            text: &snap.text,
        })
        .collect();
    for e in &entries {
        write(&out.join(&e.file), e.text)?;
    }
    write(&out.join("snapshots.json"), &json(&entries)?)
}

/// Every artifact of a processed session: the snapshot files and
/// `snapshots.json`, `batches.json`, `tokens.json`, `timelines.json`,
/// `fixations.jsonl`, `adjusted.json`, `gaze_tally.json` and
/// `verification.json`.
pub fn write_all(s: &ProcessedSession, out: &Path) -> Result<()> {
    write_snapshots(s, out)?;
    let batches: Vec<BatchEntry> = s
        .batches
        .iter()
        .map(|b| BatchEntry {
            index: b.index,
            t_start: b.t_start,
            t_end: b.t_end,
            edits: b.edits.len(),
            old_range: b.old_range,
            new_range: b.new_range,
            delta: b.delta,
        })
        .collect();
    write(&out.join("batches.json"), &json(&batches)?)?;
    write(&out.join("tokens.json"), &json(&s.tables)?)?;
    let timelines: Vec<_> = s.timelines.values().collect();
    write(&out.join("timelines.json"), &json(&timelines)?)?;
    write(&out.join("fixations.jsonl"), &fixation_lines(&s.fixations))?;
    write(&out.join("adjusted.json"), &json(&adjusted_views(s))?)?;
    write(&out.join("gaze_tally.json"), &json(&s.gaze_tally())?)?;
    write(&out.join("verification.json"), &json(&s.verification)?)
}

pub fn summary(s: &ProcessedSession) -> String {
    let t = s.gaze_tally();
    let on_tokens = s.fixations.iter().filter(|f| f.token_id.is_some()).count();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "snapshots      {} ({} batches)",
        s.snapshots.len(),
        s.batches.len()
    );
    let _ = writeln!(out, "tokens issued  {}", s.issued_ids());
    let _ = writeln!(
        out,
        "gaze samples   {} ({} valid, {} out of bounds, {} during edits)",
        t.total, t.valid, t.out_of_bounds, t.edit_concurrent
    );
    let _ = writeln!(
        out,
        "fixations      {} ({on_tokens} on tokens)",
        s.fixations.len()
    );
    match s.verification.first_divergence {
        None => {
            let _ = writeln!(out, "verification   final file matches");
        }
        Some(at) => {
            let last = s.lines.last().expect("snapshot 0 exists");
            let (line, col) = last.position_of(at).unwrap_or((last.line_count(), 0));
            let _ = writeln!(
                out,
                "verification   MISMATCH at offset {at} (line {}, column {})",
                line + 1,
                col + 1
            );
            if let Some(ctx) = &s.verification.context {
                let _ = writeln!(out, "  replayed: {:?}", ctx.snapshot_excerpt);
                let _ = writeln!(out, "  saved:    {:?}", ctx.final_excerpt);
            }
        }
    }
    out
}
