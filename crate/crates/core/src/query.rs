//! The processed-session query layer.
//!
//! [`process`] runs the whole pipeline over a loaded [`SessionArchive`]:
//! batching, snapshot replay, verification, tokenization, id tracking, gaze
//! partitioning and fixation detection. The resulting [`ProcessedSession`]
//! is immutable and answers the three researcher queries.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::gaze::{detect_fixations, partition_gazes, Fixation, GazeSlice, GazeTally};
use crate::lines::LineIndex;
use crate::session::SessionArchive;
use crate::snapshot::{
    batch_edits, build_snapshots, verify_final, EditBatch, Snapshot, VerificationReport,
};
use crate::tokenizer::GrammarRegistry;
use crate::tracker::{
    advance, assign_initial_ids, build_timelines, TokenId, TokenTable, TokenTimeline,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("token id {0} was never issued")]
    UnknownTokenId(TokenId),
    #[error("no batch {0}")]
    UnknownBatch(usize),
    #[error("no snapshot {0}")]
    UnknownSnapshot(usize),
}

#[derive(Clone, Debug)]
pub struct ProcessedSession {
    pub archive: SessionArchive,
    pub batches: Vec<EditBatch>,
    pub snapshots: Vec<Snapshot>,
    pub lines: Vec<LineIndex>,
    pub tables: Vec<TokenTable>,
    pub timelines: BTreeMap<TokenId, TokenTimeline>,
    pub slices: Vec<GazeSlice>,
    /// All fixations in time order.
    pub fixations: Vec<Fixation>,
    pub verification: VerificationReport,
}

/// Runs the pipeline with the built-in grammars.
pub fn process(archive: SessionArchive) -> Result<ProcessedSession, crate::Error> {
    process_with(archive, &GrammarRegistry::default())
}

pub fn process_with(
    archive: SessionArchive,
    grammars: &GrammarRegistry,
) -> Result<ProcessedSession, crate::Error> {
    let cfg = &archive.config;
    cfg.validate()?;
    let grammar = grammars.get(&cfg.grammar)?;
    let batches = batch_edits(&archive.edit_log, cfg.aggregation_window_ms);
    let snapshots = build_snapshots(&archive.original_text, &batches, archive.session_start())?;
    let verification = verify_final(
        snapshots.last().expect("snapshot 0 always exists"),
        &archive.final_text,
    );
    log::debug!(
        "{} edits in {} batches, {} snapshots",
        archive.edit_log.len(),
        batches.len(),
        snapshots.len()
    );
    if let Some(at) = verification.first_divergence {
        log::warn!("last snapshot diverges from the saved final file at offset {at}");
    }
    let lines: Vec<LineIndex> = snapshots.iter().map(|s| LineIndex::new(&s.text)).collect();

    let mut tables = Vec::with_capacity(snapshots.len());
    tables.push(assign_initial_ids(grammar.tokenize(&snapshots[0].text)));
    for (batch, snap) in batches.iter().zip(&snapshots[1..]) {
        let prev = tables.last().expect("table 0 pushed above");
        let next = advance(prev, batch, grammar.tokenize(&snap.text))?;
        tables.push(next);
    }
    let timelines = build_timelines(&tables);

    let slices = partition_gazes(&archive.gaze_log, &snapshots, &batches);
    let fixations = slices
        .iter()
        .flat_map(|slice| {
            let k = slice.snapshot_index;
            detect_fixations(slice, &cfg.filter, &tables[k], &lines[k])
        })
        .collect::<Vec<_>>();
    log::debug!(
        "{} fixations over {} gaze samples",
        fixations.len(),
        archive.gaze_log.len()
    );

    Ok(ProcessedSession {
        archive,
        batches,
        snapshots,
        lines,
        tables,
        timelines,
        slices,
        fixations,
        verification,
    })
}

/// Position of a fixation re-expressed in another snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Adjusted {
    Mapped { line: usize, col: usize },
    Unmapped,
}

/// Tokens that died and were born in one batch, and the earlier fixations
/// that landed on the dead ones.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChangeSet {
    pub batch_index: usize,
    pub died: Vec<TokenId>,
    pub born: Vec<TokenId>,
    pub affected_fixations: Vec<Fixation>,
}

impl ProcessedSession {
    pub fn gaze_tally(&self) -> GazeTally {
        GazeTally::of(&self.archive.gaze_log, &self.slices)
    }

    /// Number of ids ever issued.
    pub fn issued_ids(&self) -> u64 {
        self.tables.last().map_or(0, |t| t.next_id)
    }

    pub fn fixations_on_token(&self, id: TokenId) -> Result<Vec<Fixation>, QueryError> {
        if id.0 >= self.issued_ids() {
            return Err(QueryError::UnknownTokenId(id));
        }
        Ok(self
            .fixations
            .iter()
            .filter(|f| f.token_id == Some(id))
            .cloned()
            .collect())
    }

    pub fn adjust_to_snapshot(&self, f: &Fixation, target: usize) -> Result<Adjusted, QueryError> {
        if target >= self.snapshots.len() {
            return Err(QueryError::UnknownSnapshot(target));
        }
        let Some(id) = f.token_id else {
            return Ok(Adjusted::Unmapped);
        };
        let timeline = self
            .timelines
            .get(&id)
            .ok_or(QueryError::UnknownTokenId(id))?;
        let (Some(here), Some(there)) =
            (timeline.record(f.snapshot_index), timeline.record(target))
        else {
            return Ok(Adjusted::Unmapped);
        };
        let offset = self.lines[f.snapshot_index]
            .offset_of(f.line, f.col)
            .unwrap_or(here.span.start);
        let intra = offset
            .saturating_sub(here.span.start)
            .min(there.span.len().saturating_sub(1));
        let (line, col) = self.lines[target]
            .position_of(there.span.start + intra)
            .expect("timeline spans lie within their snapshot");
        Ok(Adjusted::Mapped { line, col })
    }

    pub fn tokens_changed_by(&self, batch_index: usize) -> Result<ChangeSet, QueryError> {
        if batch_index == 0 || batch_index > self.batches.len() {
            return Err(QueryError::UnknownBatch(batch_index));
        }
        let before: BTreeSet<TokenId> = self.tables[batch_index - 1].ids().collect();
        let after: BTreeSet<TokenId> = self.tables[batch_index].ids().collect();
        let died: Vec<TokenId> = before.difference(&after).copied().collect();
        let born: Vec<TokenId> = after.difference(&before).copied().collect();
        let dead: BTreeSet<TokenId> = died.iter().copied().collect();
        let affected_fixations = self
            .fixations
            .iter()
            .filter(|f| f.snapshot_index < batch_index)
            .filter(|f| f.token_id.is_some_and(|id| dead.contains(&id)))
            .cloned()
            .collect();
        Ok(ChangeSet {
            batch_index,
            died,
            born,
            affected_fixations,
        })
    }
}
