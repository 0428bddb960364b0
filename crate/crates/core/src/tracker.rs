//! Stable token identities across snapshots.
//!
//! Every token in the original file gets an id. When a batch of edits
//! produces a new snapshot, a new token inherits an old token's id only if
//! both lie on the same side of the batch's edited hull, the old span
//! shifted by the batch delta (after the hull) or unshifted (before it) is
//! exactly the new span, and kind and text are equal. Everything else gets a
//! fresh id, and ids are never reused.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{EditEvent, EditKind};
use crate::snapshot::EditBatch;
use crate::tokenizer::{RawToken, TokenKind};

/// Half-open character range `[start, end)`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct CharRange {
    pub start: usize,
    pub end: usize,
}

impl CharRange {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "range start {start} exceeds end {end}");
        CharRange { start, end }
    }

    pub fn empty(at: usize) -> Self {
        CharRange { start: at, end: at }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }

    /// True if `self` ends at or before `other` starts.
    pub fn is_before(&self, other: &CharRange) -> bool {
        self.end <= other.start
    }

    /// True if `self` starts at or after `other` ends.
    pub fn is_after(&self, other: &CharRange) -> bool {
        self.start >= other.end
    }

    fn shifted(&self, delta: i64) -> Option<CharRange> {
        let start = usize::try_from(self.start as i64 + delta).ok()?;
        let end = usize::try_from(self.end as i64 + delta).ok()?;
        Some(CharRange { start, end })
    }
}

impl fmt::Display for CharRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Hull of the characters a sequence of edits touches, as
/// `(pre-edit range, post-edit range)`. Each edit's position is in the
/// coordinates of the buffer as left by the previous edits.
pub fn compose_ranges(edits: &[EditEvent]) -> (CharRange, CharRange) {
    let mut iter = edits.iter();
    let Some(first) = iter.next() else {
        return (CharRange::default(), CharRange::default());
    };
    let touched = |e: &EditEvent| match e.kind {
        EditKind::Insert => (e.offset, e.offset),
        EditKind::Delete => (e.offset, e.offset + e.length),
    };
    let (a, b) = touched(first);
    let mut old = CharRange::new(a, b);
    let mut new = CharRange::new(a, (b as i64 + first.delta()) as usize);
    for e in iter {
        let (a, b) = touched(e);
        // Net shift between pre-batch and current coordinates past the hull.
        let shift = new.len() as i64 - old.len() as i64;
        let old_start = if a < new.start { a } else { old.start };
        let old_end = if b > new.end {
            (b as i64 - shift) as usize
        } else {
            old.end
        };
        let cur_start = new.start.min(a);
        let cur_end = new.end.max(b);
        old = CharRange::new(old_start, old_end);
        new = CharRange::new(cur_start, (cur_end as i64 + e.delta()) as usize);
    }
    (old, new)
}

/// The batch's edited hull in pre- and post-batch coordinates.
pub fn edited_range(batch: &EditBatch) -> (CharRange, CharRange) {
    compose_ranges(&batch.edits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u64);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEntry {
    pub id: TokenId,
    #[serde(flatten)]
    pub token: RawToken,
}

/// Tokens of one snapshot with their ids, in span order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTable {
    pub snapshot_index: usize,
    pub entries: Vec<TokenEntry>,
    /// Next id to issue; every id below it has been issued at some point.
    pub next_id: u64,
}

impl TokenTable {
    pub fn get(&self, id: TokenId) -> Option<&TokenEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// The entry whose span contains `offset`.
    pub fn at_offset(&self, offset: usize) -> Option<&TokenEntry> {
        let idx = self.entries.partition_point(|e| e.token.span.end <= offset);
        self.entries
            .get(idx)
            .filter(|e| e.token.span.contains(offset))
    }

    pub fn ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.entries.iter().map(|e| e.id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TrackError {
    #[error("batch {batch}: ranges {old_range} -> {new_range} disagree with delta {delta}")]
    RangeInconsistency {
        batch: usize,
        old_range: CharRange,
        new_range: CharRange,
        delta: i64,
    },
}

/// Ids `0..n` in span order for the original file's tokens.
pub fn assign_initial_ids(tokens: Vec<RawToken>) -> TokenTable {
    let entries: Vec<TokenEntry> = tokens
        .into_iter()
        .enumerate()
        .map(|(i, token)| TokenEntry {
            id: TokenId(i as u64),
            token,
        })
        .collect();
    TokenTable {
        snapshot_index: 0,
        next_id: entries.len() as u64,
        entries,
    }
}

/// Carries ids from `prev` onto the tokens of the snapshot produced by `batch`.
pub fn advance(
    prev: &TokenTable,
    batch: &EditBatch,
    new_tokens: Vec<RawToken>,
) -> Result<TokenTable, TrackError> {
    let (old_range, new_range) = (batch.old_range, batch.new_range);
    if new_range.len() as i64 - old_range.len() as i64 != batch.delta {
        return Err(TrackError::RangeInconsistency {
            batch: batch.index,
            old_range,
            new_range,
            delta: batch.delta,
        });
    }
    let by_span: HashMap<CharRange, &TokenEntry> =
        prev.entries.iter().map(|e| (e.token.span, e)).collect();
    let mut next_id = prev.next_id;
    let mut entries = Vec::with_capacity(new_tokens.len());
    for token in new_tokens {
        let span = token.span;
        let heir = if span.is_before(&new_range) {
            by_span
                .get(&span)
                .filter(|old| old.token.span.is_before(&old_range))
        } else if span.is_after(&new_range) {
            span.shifted(-batch.delta)
                .and_then(|old_span| by_span.get(&old_span))
                .filter(|old| old.token.span.is_after(&old_range))
        } else {
            None
        };
        let inherited = heir
            .filter(|old| old.token.kind == token.kind && old.token.text == token.text)
            .map(|old| old.id);
        let id = inherited.unwrap_or_else(|| {
            let id = TokenId(next_id);
            next_id += 1;
            id
        });
        entries.push(TokenEntry { id, token });
    }
    Ok(TokenTable {
        snapshot_index: prev.snapshot_index + 1,
        entries,
        next_id,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineRecord {
    pub snapshot: usize,
    pub span: CharRange,
    pub line: usize,
    pub col: usize,
    pub text: String,
}

/// The life of one token id across snapshots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTimeline {
    pub token_id: TokenId,
    pub kind: TokenKind,
    pub birth_snapshot: usize,
    /// First snapshot in which the token no longer exists.
    pub death_snapshot: Option<usize>,
    pub records: Vec<TimelineRecord>,
}

impl TokenTimeline {
    pub fn is_alive_in(&self, snapshot: usize) -> bool {
        snapshot >= self.birth_snapshot && self.death_snapshot.is_none_or(|d| snapshot < d)
    }

    pub fn record(&self, snapshot: usize) -> Option<&TimelineRecord> {
        if !self.is_alive_in(snapshot) {
            return None;
        }
        self.records.get(snapshot - self.birth_snapshot)
    }

    pub fn text(&self) -> &str {
        &self.records[0].text
    }
}

/// One timeline per id that appears in `tables`, which must be ordered by
/// snapshot and produced by [`assign_initial_ids`] and [`advance`].
pub fn build_timelines(tables: &[TokenTable]) -> BTreeMap<TokenId, TokenTimeline> {
    let mut timelines: BTreeMap<TokenId, TokenTimeline> = BTreeMap::new();
    for (snapshot, table) in tables.iter().enumerate() {
        for entry in &table.entries {
            let record = TimelineRecord {
                snapshot,
                span: entry.token.span,
                line: entry.token.line,
                col: entry.token.col,
                text: entry.token.text.clone(),
            };
            timelines
                .entry(entry.id)
                .or_insert_with(|| TokenTimeline {
                    token_id: entry.id,
                    kind: entry.token.kind,
                    birth_snapshot: snapshot,
                    death_snapshot: None,
                    records: Vec::new(),
                })
                .records
                .push(record);
        }
        if snapshot > 0 {
            for id in tables[snapshot - 1].ids() {
                let tl = timelines.get_mut(&id).expect("previous ids have timelines");
                if tl.death_snapshot.is_none() && tl.birth_snapshot + tl.records.len() == snapshot {
                    tl.death_snapshot = Some(snapshot);
                }
            }
        }
    }
    timelines
}
