//! Gaze partitioning, fixation detection and token attribution.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lines::LineIndex;
use crate::session::{GazeSample, Timestamp, Validity};
use crate::snapshot::{EditBatch, Snapshot};
use crate::tracker::{TokenId, TokenTable};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GazeError {
    #[error("line {line} is past the end of the file ({line_count} lines)")]
    PositionOutOfFile { line: usize, line_count: usize },
    #[error("invalid filter config: {0}")]
    InvalidFilter(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixationAlgorithm {
    /// Dispersion-threshold identification.
    #[default]
    Idt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub algorithm: FixationAlgorithm,
    pub min_duration_ms: i64,
    pub dispersion_px: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            algorithm: FixationAlgorithm::Idt,
            min_duration_ms: 100,
            dispersion_px: 30.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), GazeError> {
        if self.min_duration_ms <= 0 {
            return Err(GazeError::InvalidFilter(
                "min_duration_ms must be positive".into(),
            ));
        }
        if !(self.dispersion_px > 0.0 && self.dispersion_px.is_finite()) {
            return Err(GazeError::InvalidFilter(
                "dispersion_px must be a positive number".into(),
            ));
        }
        Ok(())
    }
}

/// Valid samples recorded while one snapshot was on screen.
#[derive(Clone, Debug, PartialEq)]
pub struct GazeSlice {
    pub snapshot_index: usize,
    pub samples: Vec<GazeSample>,
    /// Samples dropped because they were recorded while the batch that
    /// produced this snapshot was being typed.
    pub discarded_count: usize,
}

/// Sample counts by fate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GazeTally {
    pub total: usize,
    pub valid: usize,
    pub out_of_bounds: usize,
    pub edit_concurrent: usize,
}

impl GazeTally {
    pub fn of(gazes: &[GazeSample], slices: &[GazeSlice]) -> Self {
        GazeTally {
            total: gazes.len(),
            valid: slices.iter().map(|s| s.samples.len()).sum(),
            out_of_bounds: gazes
                .iter()
                .filter(|g| g.validity == Validity::OutOfBounds)
                .count(),
            edit_concurrent: slices.iter().map(|s| s.discarded_count).sum(),
        }
    }

    pub fn is_conserved(&self) -> bool {
        self.valid + self.out_of_bounds + self.edit_concurrent == self.total
    }
}

/// One slice per snapshot. A valid sample goes to the snapshot whose
/// validity interval contains it; a sample inside a batch's closed
/// `[t_start, t_end]` interval is counted against that batch's snapshot and
/// dropped.
pub fn partition_gazes(
    gazes: &[GazeSample],
    snapshots: &[Snapshot],
    batches: &[EditBatch],
) -> Vec<GazeSlice> {
    let mut slices: Vec<GazeSlice> = snapshots
        .iter()
        .map(|s| GazeSlice {
            snapshot_index: s.index,
            samples: Vec::new(),
            discarded_count: 0,
        })
        .collect();
    // Batches finished strictly before the current sample.
    let mut done = 0;
    for g in gazes {
        if g.validity == Validity::OutOfBounds {
            continue;
        }
        while done < batches.len() && batches[done].t_end < g.timestamp {
            done += 1;
        }
        if let Some(batch) = batches.get(done).filter(|b| b.is_concurrent(g.timestamp)) {
            slices[batch.index].discarded_count += 1;
            continue;
        }
        if g.position().is_none() {
            // Already marked edit-concurrent upstream.
            slices[done].discarded_count += 1;
            continue;
        }
        slices[done].samples.push(g.clone());
    }
    slices
}

/// Running bounding box of a growing window.
struct Bounds {
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl Bounds {
    fn of(samples: &[GazeSample]) -> Self {
        let mut b = Bounds {
            min_x: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            min_y: f64::INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for s in samples {
            b.include(s);
        }
        b
    }

    fn include(&mut self, s: &GazeSample) {
        self.min_x = self.min_x.min(s.x);
        self.max_x = self.max_x.max(s.x);
        self.min_y = self.min_y.min(s.y);
        self.max_y = self.max_y.max(s.y);
    }

    fn spread(&self) -> f64 {
        (self.max_x - self.min_x) + (self.max_y - self.min_y)
    }

    /// Spread after adding `s`.
    fn with(&self, s: &GazeSample) -> f64 {
        (self.max_x.max(s.x) - self.min_x.min(s.x)) + (self.max_y.max(s.y) - self.min_y.min(s.y))
    }
}

/// Sample index ranges of the I-DT fixations in `samples`.
///
/// From each start sample the window first grows until it spans at least
/// `min_duration_ms`. If its dispersion `(max x - min x) + (max y - min y)`
/// is within `dispersion_px` it keeps growing while the dispersion stays
/// within the threshold, becomes a fixation, and scanning resumes after it.
/// Otherwise the start advances by one sample.
pub fn idt_windows(samples: &[GazeSample], cfg: &FilterConfig) -> Vec<Range<usize>> {
    let n = samples.len();
    let mut windows = Vec::new();
    let mut start = 0;
    let mut end = 0;
    while start < n {
        end = end.max(start);
        let t0 = samples[start].timestamp;
        while end < n && samples[end].timestamp - t0 < cfg.min_duration_ms {
            end += 1;
        }
        if end == n {
            break;
        }
        let mut bounds = Bounds::of(&samples[start..=end]);
        if bounds.spread() > cfg.dispersion_px {
            start += 1;
            continue;
        }
        while end + 1 < n && bounds.with(&samples[end + 1]) <= cfg.dispersion_px {
            end += 1;
            bounds.include(&samples[end]);
        }
        windows.push(start..end + 1);
        start = end + 1;
    }
    windows
}

/// A detected fixation attributed to a text position and, when it lands on
/// one, a token.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub snapshot_index: usize,
    pub t_start: Timestamp,
    pub t_end: Timestamp,
    pub duration_ms: i64,
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub line: usize,
    pub col: usize,
    pub token_id: Option<TokenId>,
    pub sample_count: usize,
}

/// Most frequent `(line, col)` among `samples`; ties go to the position seen first.
fn majority_position(samples: &[GazeSample]) -> (usize, usize) {
    let mut counts: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for (i, pos) in samples.iter().filter_map(GazeSample::position).enumerate() {
        counts.entry(pos).or_insert((0, i)).0 += 1;
    }
    counts
        .into_iter()
        .max_by(|(_, (ca, fa)), (_, (cb, fb))| ca.cmp(cb).then(fb.cmp(fa)))
        .map(|(pos, _)| pos)
        .expect("fixation windows are non-empty")
}

/// Detects fixations in one slice and attributes each to a token of the
/// slice's snapshot.
pub fn detect_fixations(
    slice: &GazeSlice,
    cfg: &FilterConfig,
    table: &TokenTable,
    lines: &LineIndex,
) -> Vec<Fixation> {
    let samples = &slice.samples;
    idt_windows(samples, cfg)
        .into_iter()
        .map(|w| {
            let members = &samples[w];
            let count = members.len() as f64;
            let (line, col) = majority_position(members);
            let (t_start, t_end) = (members[0].timestamp, members[members.len() - 1].timestamp);
            Fixation {
                snapshot_index: slice.snapshot_index,
                t_start,
                t_end,
                duration_ms: t_end - t_start,
                centroid_x: members.iter().map(|s| s.x).sum::<f64>() / count,
                centroid_y: members.iter().map(|s| s.y).sum::<f64>() / count,
                line,
                col,
                token_id: map_to_token(line, col, table, lines).ok().flatten(),
                sample_count: members.len(),
            }
        })
        .collect()
}

/// The token covering the character at `(line, col)`, or `None` on
/// whitespace or past the end of the line.
pub fn map_to_token(
    line: usize,
    col: usize,
    table: &TokenTable,
    lines: &LineIndex,
) -> Result<Option<TokenId>, GazeError> {
    if line >= lines.line_count() {
        return Err(GazeError::PositionOutOfFile {
            line,
            line_count: lines.line_count(),
        });
    }
    Ok(lines
        .offset_of(line, col)
        .and_then(|offset| table.at_offset(offset))
        .map(|e| e.id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::{EditEvent, EditKind};
    use crate::snapshot::{batch_edits, build_snapshots};
    use crate::tokenizer::tokenize;
    use crate::tracker::assign_initial_ids;

    fn sample(t: Timestamp, x: f64, y: f64) -> GazeSample {
        GazeSample::valid(t, x, y, 0, 0, "a.c")
    }

    fn slice(samples: Vec<GazeSample>) -> GazeSlice {
        GazeSlice {
            snapshot_index: 0,
            samples,
            discarded_count: 0,
        }
    }

    fn table_for(text: &str) -> (TokenTable, LineIndex) {
        (
            assign_initial_ids(tokenize(text, "c-family").unwrap()),
            LineIndex::new(text),
        )
    }

    #[test]
    fn identical_samples_form_one_fixation() {
        let samples: Vec<_> = (0..12).map(|i| sample(i * 10, 200.0, 100.0)).collect();
        let (table, lines) = table_for("x");
        let fix = detect_fixations(&slice(samples), &FilterConfig::default(), &table, &lines);
        assert_eq!(fix.len(), 1);
        assert_eq!(fix[0].duration_ms, 110);
        assert_eq!(fix[0].sample_count, 12);
        assert_eq!((fix[0].centroid_x, fix[0].centroid_y), (200.0, 100.0));
        assert_eq!(fix[0].token_id, Some(TokenId(0)));
    }

    #[test]
    fn two_separated_clusters() {
        let mut samples: Vec<_> = (0..16)
            .map(|i| sample(i * 10, 100.0 + (i % 3) as f64, 50.0))
            .collect();
        samples.extend((16..32).map(|i| sample(i * 10, 600.0, 50.0 + (i % 2) as f64)));
        let windows = idt_windows(&samples, &FilterConfig::default());
        assert_eq!(windows, vec![0..16, 16..32]);
    }

    #[test]
    fn short_streams_yield_nothing() {
        let samples: Vec<_> = (0..5).map(|i| sample(i * 10, 1.0, 1.0)).collect();
        assert!(idt_windows(&samples, &FilterConfig::default()).is_empty());
        assert!(idt_windows(&[], &FilterConfig::default()).is_empty());
    }

    #[test]
    fn dispersed_start_slides_forward() {
        let mut samples = vec![sample(0, 0.0, 0.0)];
        samples.extend((1..=12).map(|i| sample(i * 10, 500.0, 500.0)));
        assert_eq!(idt_windows(&samples, &FilterConfig::default()), vec![1..13]);
    }

    #[test]
    fn majority_attribution_prefers_earliest_on_tie() {
        let mut samples = Vec::new();
        for (i, pos) in [(2, 5), (1, 1), (1, 1), (2, 5), (3, 3)]
            .into_iter()
            .enumerate()
        {
            samples.push(GazeSample::valid(
                i as i64 * 30,
                10.0,
                10.0,
                pos.0,
                pos.1,
                "a.c",
            ));
        }
        assert_eq!(majority_position(&samples), (2, 5));
    }

    #[test]
    fn filter_validation() {
        assert!(FilterConfig::default().validate().is_ok());
        let bad = FilterConfig {
            min_duration_ms: 0,
            ..FilterConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = FilterConfig {
            dispersion_px: -1.0,
            ..FilterConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn token_mapping() {
        let (table, lines) = table_for("int a;\n  frequency = 1;\n");
        let freq = table
            .entries
            .iter()
            .find(|e| e.token.text == "frequency")
            .unwrap()
            .id;
        assert_eq!(map_to_token(1, 2, &table, &lines), Ok(Some(freq)));
        assert_eq!(map_to_token(1, 10, &table, &lines), Ok(Some(freq)));
        assert_eq!(map_to_token(1, 11, &table, &lines), Ok(None));
        assert_eq!(map_to_token(1, 0, &table, &lines), Ok(None));
        assert_eq!(map_to_token(0, 40, &table, &lines), Ok(None));
        assert_eq!(map_to_token(2, 0, &table, &lines), Ok(None));
        assert_eq!(
            map_to_token(3, 0, &table, &lines),
            Err(GazeError::PositionOutOfFile {
                line: 3,
                line_count: 3
            })
        );
    }

    #[test]
    fn partition_without_edits_keeps_all_valid() {
        let gazes = vec![
            sample(0, 1.0, 1.0),
            GazeSample::out_of_bounds(5, -1.0, 0.0),
            sample(10, 1.0, 1.0),
        ];
        let snaps = build_snapshots("x", &[], 0).unwrap();
        let slices = partition_gazes(&gazes, &snaps, &[]);
        assert_eq!(slices.len(), 1);
        assert_eq!(slices[0].samples.len(), 2);
        let tally = GazeTally::of(&gazes, &slices);
        assert_eq!(tally.out_of_bounds, 1);
        assert!(tally.is_conserved());
    }

    #[test]
    fn partition_discards_edit_concurrent_samples() {
        let edits = vec![
            EditEvent::new("a.c", EditKind::Insert, 0, "a", 100, 0, 0),
            EditEvent::new("a.c", EditKind::Insert, 1, "b", 200, 0, 1),
            EditEvent::new("a.c", EditKind::Insert, 2, "c", 9000, 0, 2),
        ];
        let batches = batch_edits(&edits, 3000);
        let snaps = build_snapshots("", &batches, 0).unwrap();
        let gazes: Vec<_> = [0, 99, 100, 150, 200, 201, 8999, 9000, 9001]
            .into_iter()
            .map(|t| sample(t, 0.0, 0.0))
            .collect();
        let slices = partition_gazes(&gazes, &snaps, &batches);
        let times = |k: usize| {
            slices[k]
                .samples
                .iter()
                .map(|s| s.timestamp)
                .collect::<Vec<_>>()
        };
        assert_eq!(times(0), vec![0, 99]);
        assert_eq!(times(1), vec![201, 8999]);
        assert_eq!(times(2), vec![9001]);
        assert_eq!(slices[1].discarded_count, 3);
        assert_eq!(slices[2].discarded_count, 1);
        for (slice, snap) in slices.iter().zip(&snaps) {
            assert!(slice.samples.iter().all(|s| snap.contains(s.timestamp)));
        }
        assert!(GazeTally::of(&gazes, &slices).is_conserved());
    }
}
