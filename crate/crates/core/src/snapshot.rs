//! Edit-log replay: batching, snapshot construction and final-file verification.

use serde::Serialize;
use thiserror::Error;

use crate::lines::LineIndex;
use crate::session::{EditEvent, EditKind, Timestamp};
use crate::tracker::{compose_ranges, CharRange};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("offset {offset} is outside the buffer (length {len})")]
    OffsetOutOfRange { offset: usize, len: usize },
    #[error("delete at {offset} expected {expected:?} but the buffer holds {found:?}")]
    DeleteMismatch {
        offset: usize,
        expected: String,
        found: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("batch {batch}, edit {edit}: {source}")]
pub struct SnapshotError {
    pub batch: usize,
    /// Position of the failing edit within its batch.
    pub edit: usize,
    #[source]
    pub source: EditError,
}

/// A mutable character buffer used for replay.
#[derive(Clone, Debug, Default)]
pub struct TextBuffer {
    chars: Vec<char>,
}

impl TextBuffer {
    pub fn new(text: &str) -> Self {
        TextBuffer {
            chars: text.chars().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn to_text(&self) -> String {
        self.chars.iter().collect()
    }

    pub fn apply(&mut self, e: &EditEvent) -> Result<(), EditError> {
        let len = self.chars.len();
        match e.kind {
            EditKind::Insert => {
                if e.offset > len {
                    return Err(EditError::OffsetOutOfRange {
                        offset: e.offset,
                        len,
                    });
                }
                self.chars.splice(e.offset..e.offset, e.text.chars());
            }
            EditKind::Delete => {
                let end = e.offset + e.length;
                if end > len {
                    return Err(EditError::OffsetOutOfRange { offset: end, len });
                }
                let found = &self.chars[e.offset..end];
                if !found.iter().copied().eq(e.text.chars()) {
                    return Err(EditError::DeleteMismatch {
                        offset: e.offset,
                        expected: e.text.clone(),
                        found: found.iter().collect(),
                    });
                }
                self.chars.drain(e.offset..end);
            }
        }
        Ok(())
    }

    /// 0-based line and column of `offset`; `offset == len()` is allowed.
    pub fn position_of(&self, offset: usize) -> Option<(usize, usize)> {
        if offset > self.chars.len() {
            return None;
        }
        let before = &self.chars[..offset];
        let row = before.iter().filter(|&&c| c == '\n').count();
        let line_start = before.iter().rposition(|&c| c == '\n').map_or(0, |i| i + 1);
        Some((row, offset - line_start))
    }

    /// Converts a UTF-16 code-unit offset to a character offset. Fails if the
    /// offset is past the end or falls inside a surrogate pair.
    pub fn utf16_to_char_offset(&self, units: usize) -> Option<usize> {
        let mut seen = 0;
        for (i, ch) in self.chars.iter().enumerate() {
            if seen == units {
                return Some(i);
            }
            if seen > units {
                return None;
            }
            seen += ch.len_utf16();
        }
        (seen == units).then_some(self.chars.len())
    }

    /// Converts a UTF-16 column on `row` to a character column.
    pub fn utf16_col_to_char_col(&self, row: usize, units: usize) -> Option<usize> {
        let idx = LineIndex::from_chars(&self.chars);
        let start = idx.line_start(row)?;
        let len = idx.line_len(row)?;
        let mut seen = 0;
        for (col, ch) in self.chars[start..start + len].iter().enumerate() {
            if seen == units {
                return Some(col);
            }
            if seen > units {
                return None;
            }
            seen += ch.len_utf16();
        }
        (seen == units).then_some(len)
    }
}

/// Applies one edit to `text`.
pub fn apply_edit(text: &str, e: &EditEvent) -> Result<String, EditError> {
    let mut buffer = TextBuffer::new(text);
    buffer.apply(e)?;
    Ok(buffer.to_text())
}

/// A maximal run of edits whose consecutive gaps are within the aggregation
/// window. Applying a batch produces one snapshot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EditBatch {
    pub index: usize,
    pub edits: Vec<EditEvent>,
    pub t_start: Timestamp,
    pub t_end: Timestamp,
    /// Hull of touched characters in pre-batch coordinates.
    pub old_range: CharRange,
    /// Hull of touched characters in post-batch coordinates.
    pub new_range: CharRange,
    pub delta: i64,
}

impl EditBatch {
    pub fn from_edits(index: usize, edits: Vec<EditEvent>) -> Self {
        assert!(!edits.is_empty(), "an edit batch holds at least one edit");
        let (old_range, new_range) = compose_ranges(&edits);
        EditBatch {
            index,
            t_start: edits[0].timestamp,
            t_end: edits[edits.len() - 1].timestamp,
            delta: edits.iter().map(EditEvent::delta).sum(),
            old_range,
            new_range,
            edits,
        }
    }

    /// Whether `t` falls inside the closed interval during which this batch
    /// was being typed.
    pub fn is_concurrent(&self, t: Timestamp) -> bool {
        self.t_start <= t && t <= self.t_end
    }
}

/// Groups timestamp-sorted edits into batches. A gap equal to the window
/// still aggregates.
pub fn batch_edits(edits: &[EditEvent], window_ms: u64) -> Vec<EditBatch> {
    let window = i64::try_from(window_ms).unwrap_or(i64::MAX);
    let mut batches = Vec::new();
    let mut current: Vec<EditEvent> = Vec::new();
    for e in edits {
        if let Some(last) = current.last() {
            if e.timestamp.saturating_sub(last.timestamp) > window {
                let run = std::mem::take(&mut current);
                batches.push(EditBatch::from_edits(batches.len() + 1, run));
            }
        }
        current.push(e.clone());
    }
    if !current.is_empty() {
        batches.push(EditBatch::from_edits(batches.len() + 1, current));
    }
    batches
}

/// The file's content over a validity interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub index: usize,
    #[serde(skip)]
    pub text: String,
    pub valid_from: Timestamp,
    /// `None` for the last snapshot, which stays valid indefinitely.
    pub valid_to: Option<Timestamp>,
    /// Index of the batch that produced this snapshot; `None` for the original.
    pub produced_by: Option<usize>,
}

impl Snapshot {
    pub fn contains(&self, t: Timestamp) -> bool {
        t >= self.valid_from && self.valid_to.is_none_or(|end| t < end)
    }
}

/// Replays `batches` over `original`. Snapshot 0 is the original file, valid
/// from `session_start`; snapshot k is valid from batch k's last edit until
/// batch k+1's first edit.
pub fn build_snapshots(
    original: &str,
    batches: &[EditBatch],
    session_start: Timestamp,
) -> Result<Vec<Snapshot>, SnapshotError> {
    let mut snapshots = Vec::with_capacity(batches.len() + 1);
    snapshots.push(Snapshot {
        index: 0,
        text: original.to_string(),
        valid_from: session_start,
        valid_to: batches.first().map(|b| b.t_start),
        produced_by: None,
    });
    let mut buffer = TextBuffer::new(original);
    for (i, batch) in batches.iter().enumerate() {
        for (edit, e) in batch.edits.iter().enumerate() {
            buffer.apply(e).map_err(|source| SnapshotError {
                batch: batch.index,
                edit,
                source,
            })?;
        }
        snapshots.push(Snapshot {
            index: i + 1,
            text: buffer.to_text(),
            valid_from: batch.t_end,
            valid_to: batches.get(i + 1).map(|b| b.t_start),
            produced_by: Some(batch.index),
        });
    }
    Ok(snapshots)
}

pub const CONTEXT_CHARS: usize = 40;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DivergenceContext {
    pub snapshot_excerpt: String,
    pub final_excerpt: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub matched: bool,
    pub first_divergence: Option<usize>,
    pub context: Option<DivergenceContext>,
}

fn excerpt(chars: &[char], at: usize) -> String {
    let start = at.saturating_sub(CONTEXT_CHARS).min(chars.len());
    let end = (at + CONTEXT_CHARS).min(chars.len());
    chars[start..end].iter().collect()
}

/// Compares the last reconstructed snapshot with the file the editor saved.
pub fn verify_final(last: &Snapshot, final_text: &str) -> VerificationReport {
    let ours: Vec<char> = last.text.chars().collect();
    let theirs: Vec<char> = final_text.chars().collect();
    let divergence = ours
        .iter()
        .zip(&theirs)
        .position(|(a, b)| a != b)
        .or_else(|| (ours.len() != theirs.len()).then(|| ours.len().min(theirs.len())));
    match divergence {
        None => VerificationReport {
            matched: true,
            first_divergence: None,
            context: None,
        },
        Some(at) => VerificationReport {
            matched: false,
            first_divergence: Some(at),
            context: Some(DivergenceContext {
                snapshot_excerpt: excerpt(&ours, at),
                final_excerpt: excerpt(&theirs, at),
            }),
        },
    }
}
