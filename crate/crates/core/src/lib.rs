//! Edit-aware gaze analysis for source code.
//!
//! Reconstructs every version of a file from a recorded edit log, tracks
//! lexical tokens with stable ids across those versions, and attributes
//! eye-tracking fixations to the token that was on screen when they
//! happened.
//!
//! The pipeline, in order:
//!
//! 1. [`session`]: load the original and final file, the change log and the
//!    gaze log.
//! 2. [`snapshot`]: aggregate edits into batches and replay them into
//!    snapshots, then verify the last snapshot against the saved file.
//! 3. [`tokenizer`]: lex each snapshot.
//! 4. [`tracker`]: assign ids in the original and carry them forward.
//! 5. [`gaze`]: pair gazes with snapshots, detect fixations, map them to tokens.
//! 6. [`query`]: answer questions across snapshots.
//!
//! [`ingest`] is independent of the pipeline: it measures how many samples
//! a real-time resolver keeps at eye-tracker rates.

pub mod gaze;
pub mod ingest;
pub mod lines;
pub mod query;
pub mod session;
pub mod snapshot;
pub mod tokenizer;
pub mod tracker;

use thiserror::Error;

pub use gaze::{
    detect_fixations, idt_windows, map_to_token, partition_gazes, FilterConfig, Fixation,
    FixationAlgorithm, GazeError, GazeSlice, GazeTally,
};
pub use ingest::{
    resolve_point, run_benchmark, BenchConfig, BenchError, EditorGeometry, FoldRange, Resolution,
    RetentionReport,
};
pub use lines::LineIndex;
pub use query::{process, process_with, Adjusted, ChangeSet, ProcessedSession, QueryError};
pub use session::{
    load_session, parse_change_log, parse_change_log_encoded, parse_gaze_log, serialize_change_log,
    serialize_gaze_log, validate_edit_log, EditEvent, EditKind, GazeSample, OffsetEncoding,
    SessionArchive, SessionConfig, SessionError, Timestamp, Validity,
};
pub use snapshot::{
    apply_edit, batch_edits, build_snapshots, verify_final, EditBatch, EditError, Snapshot,
    SnapshotError, VerificationReport,
};
pub use tokenizer::{tokenize, Grammar, GrammarRegistry, RawToken, TokenKind, TokenizeError};
pub use tracker::{
    advance, assign_initial_ids, build_timelines, edited_range, CharRange, TokenId, TokenTable,
    TokenTimeline, TrackError,
};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Gaze(#[from] GazeError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Bench(#[from] BenchError),
}
