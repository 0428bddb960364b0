//! Session domain types and the on-disk session formats.
//!
//! A session directory holds:
//!
//! - `original.<ext>`: the file as it was when tracking started
//! - `final.<ext>`: the file as saved by the editor when tracking stopped
//! - `changes.json`: a JSON array of edit records
//! - `gazes.jsonl`: one gaze sample per line
//! - `session.toml` (optional): processing parameters
//!
//! Offsets, lines and columns are 0-based. Offsets count Unicode scalar
//! values unless `offset_encoding = "utf16"` is configured, in which case
//! they are converted while the log is validated.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaze::{FilterConfig, FixationAlgorithm};
use crate::snapshot::TextBuffer;

/// Milliseconds since the Unix epoch.
pub type Timestamp = i64;

pub const DEFAULT_WINDOW_MS: u64 = 3000;
pub const DEFAULT_GRAMMAR: &str = "c-family";

pub const CHANGES_FILE: &str = "changes.json";
pub const GAZES_FILE: &str = "gazes.jsonl";
pub const CONFIG_FILE: &str = "session.toml";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("record {index}: {reason}")]
    MalformedRecord { index: usize, reason: String },
    #[error(
        "record {index}: timestamp {timestamp} is earlier than the previous record ({previous})"
    )]
    NonMonotonicTimestamps {
        index: usize,
        previous: Timestamp,
        timestamp: Timestamp,
    },
    #[error("record {index}: negative offset {offset}")]
    NegativeOffset { index: usize, offset: i64 },
    #[error("missing session file {0}")]
    MissingFile(String),
    #[error("edit {index}: {reason}")]
    InvariantViolation { index: usize, reason: String },
    #[error("session references more than one file ({expected:?} and {found:?})")]
    MultiFileSession { expected: String, found: String },
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Insert,
    Delete,
}

/// One recorded insert or delete.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditEvent {
    pub file: String,
    #[serde(rename = "type")]
    pub kind: EditKind,
    pub offset: usize,
    pub text: String,
    #[serde(rename = "len")]
    pub length: usize,
    pub timestamp: Timestamp,
    pub row: usize,
    pub col: usize,
}

impl EditEvent {
    /// Builds an event with `length` derived from `text`.
    pub fn new(
        file: impl Into<String>,
        kind: EditKind,
        offset: usize,
        text: impl Into<String>,
        timestamp: Timestamp,
        row: usize,
        col: usize,
    ) -> Self {
        let text = text.into();
        EditEvent {
            file: file.into(),
            kind,
            offset,
            length: text.chars().count(),
            text,
            timestamp,
            row,
            col,
        }
    }

    /// Net change in buffer length caused by this edit.
    pub fn delta(&self) -> i64 {
        match self.kind {
            EditKind::Insert => self.length as i64,
            EditKind::Delete => -(self.length as i64),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Valid,
    OutOfBounds,
    EditConcurrent,
}

/// One eye-tracker reading, optionally resolved to a text position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "GazeRecord", into = "GazeRecord")]
pub struct GazeSample {
    pub timestamp: Timestamp,
    pub x: f64,
    pub y: f64,
    pub line: Option<usize>,
    pub col: Option<usize>,
    pub file: Option<String>,
    pub validity: Validity,
}

impl GazeSample {
    pub fn valid(
        timestamp: Timestamp,
        x: f64,
        y: f64,
        line: usize,
        col: usize,
        file: impl Into<String>,
    ) -> Self {
        GazeSample {
            timestamp,
            x,
            y,
            line: Some(line),
            col: Some(col),
            file: Some(file.into()),
            validity: Validity::Valid,
        }
    }

    pub fn out_of_bounds(timestamp: Timestamp, x: f64, y: f64) -> Self {
        GazeSample {
            timestamp,
            x,
            y,
            line: None,
            col: None,
            file: None,
            validity: Validity::OutOfBounds,
        }
    }

    pub fn position(&self) -> Option<(usize, usize)> {
        match (self.validity, self.line, self.col) {
            (Validity::Valid, Some(line), Some(col)) => Some((line, col)),
            _ => None,
        }
    }
}

/// Wire form of a gaze sample: `line`, `col` and `file` are omitted for
/// samples that did not resolve to text.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GazeRecord {
    timestamp: Timestamp,
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    col: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file: Option<String>,
}

impl From<GazeRecord> for GazeSample {
    fn from(r: GazeRecord) -> Self {
        match (r.line, r.col, r.file) {
            (Some(line), Some(col), Some(file)) => {
                GazeSample::valid(r.timestamp, r.x, r.y, line, col, file)
            }
            _ => GazeSample::out_of_bounds(r.timestamp, r.x, r.y),
        }
    }
}

impl From<GazeSample> for GazeRecord {
    fn from(s: GazeSample) -> Self {
        let valid = s.validity == Validity::Valid;
        GazeRecord {
            timestamp: s.timestamp,
            x: s.x,
            y: s.y,
            line: s.line.filter(|_| valid),
            col: s.col.filter(|_| valid),
            file: s.file.filter(|_| valid),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetEncoding {
    /// Unicode scalar values.
    #[default]
    Chars,
    /// UTF-16 code units, as reported by JavaScript-based editors.
    Utf16,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionConfig {
    pub aggregation_window_ms: u64,
    pub filter: FilterConfig,
    pub grammar: String,
    pub offset_encoding: OffsetEncoding,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            aggregation_window_ms: DEFAULT_WINDOW_MS,
            filter: FilterConfig::default(),
            grammar: DEFAULT_GRAMMAR.to_string(),
            offset_encoding: OffsetEncoding::Chars,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    aggregation_window_ms: Option<u64>,
    fixation_algorithm: Option<FixationAlgorithm>,
    min_duration_ms: Option<i64>,
    dispersion_px: Option<f64>,
    grammar: Option<String>,
    offset_encoding: Option<OffsetEncoding>,
}

impl SessionConfig {
    /// Parses `session.toml`. Missing keys keep their defaults.
    pub fn parse(raw: &str) -> Result<Self, SessionError> {
        let file: ConfigFile =
            toml::from_str(raw).map_err(|e| SessionError::Config(e.to_string()))?;
        let mut cfg = SessionConfig::default();
        if let Some(w) = file.aggregation_window_ms {
            cfg.aggregation_window_ms = w;
        }
        if let Some(a) = file.fixation_algorithm {
            cfg.filter.algorithm = a;
        }
        if let Some(d) = file.min_duration_ms {
            cfg.filter.min_duration_ms = d;
        }
        if let Some(d) = file.dispersion_px {
            cfg.filter.dispersion_px = d;
        }
        if let Some(g) = file.grammar {
            cfg.grammar = g;
        }
        if let Some(e) = file.offset_encoding {
            cfg.offset_encoding = e;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if self.aggregation_window_ms == 0 {
            return Err(SessionError::Config(
                "aggregation_window_ms must be positive".into(),
            ));
        }
        self.filter
            .validate()
            .map_err(|e| SessionError::Config(e.to_string()))
    }
}

/// Everything recorded for one tracked file.
#[derive(Clone, Debug)]
pub struct SessionArchive {
    /// Editor path of the tracked file, as it appears in the logs.
    pub file: Option<String>,
    /// Extension of `original.<ext>`, reused for emitted snapshots.
    pub extension: String,
    pub original_text: String,
    pub final_text: String,
    pub edit_log: Vec<EditEvent>,
    pub gaze_log: Vec<GazeSample>,
    pub config: SessionConfig,
}

impl SessionArchive {
    /// Earliest recorded timestamp across both logs, or 0 for an empty session.
    pub fn session_start(&self) -> Timestamp {
        let first_edit = self.edit_log.first().map(|e| e.timestamp);
        let first_gaze = self.gaze_log.first().map(|g| g.timestamp);
        match (first_edit, first_gaze) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => 0,
        }
    }
}

fn malformed(index: usize, reason: impl ToString) -> SessionError {
    SessionError::MalformedRecord {
        index,
        reason: reason.to_string(),
    }
}

/// Parses a `changes.json` edit log, preserving file order.
pub fn parse_change_log(raw: &[u8]) -> Result<Vec<EditEvent>, SessionError> {
    parse_change_log_encoded(raw, OffsetEncoding::Chars)
}

/// Like [`parse_change_log`], for logs whose `len` counts `encoding` units.
/// Offsets stay as recorded; [`validate_edit_log`] converts them.
pub fn parse_change_log_encoded(
    raw: &[u8],
    encoding: OffsetEncoding,
) -> Result<Vec<EditEvent>, SessionError> {
    let values: Vec<serde_json::Value> =
        serde_json::from_slice(raw).map_err(|e| malformed(0, e))?;
    let mut events = Vec::with_capacity(values.len());
    for (index, value) in values.into_iter().enumerate() {
        if let Some(offset) = value.get("offset").and_then(|v| v.as_i64()) {
            if offset < 0 {
                return Err(SessionError::NegativeOffset { index, offset });
            }
        }
        let event: EditEvent = serde_json::from_value(value).map_err(|e| malformed(index, e))?;
        let chars = match encoding {
            OffsetEncoding::Chars => event.text.chars().count(),
            OffsetEncoding::Utf16 => event.text.encode_utf16().count(),
        };
        if event.length == 0 {
            return Err(malformed(index, "len must be at least 1"));
        }
        if event.length != chars {
            return Err(malformed(
                index,
                format!("len {} does not match text length {}", event.length, chars),
            ));
        }
        if let Some(prev) = events.last().map(|e: &EditEvent| e.timestamp) {
            if event.timestamp < prev {
                return Err(SessionError::NonMonotonicTimestamps {
                    index,
                    previous: prev,
                    timestamp: event.timestamp,
                });
            }
        }
        events.push(event);
    }
    Ok(events)
}

/// Canonical `changes.json` form: one compact record per line inside a JSON array.
pub fn serialize_change_log(events: &[EditEvent]) -> String {
    let mut out = String::from("[");
    for (i, e) in events.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(&serde_json::to_string(e).expect("edit events serialize"));
    }
    out.push_str(if events.is_empty() { "]\n" } else { "\n]\n" });
    out
}

/// Parses a `gazes.jsonl` log. Blank lines are skipped; record indices count
/// non-blank lines.
pub fn parse_gaze_log(raw: &[u8]) -> Result<Vec<GazeSample>, SessionError> {
    let text = std::str::from_utf8(raw).map_err(|e| malformed(0, e))?;
    let mut samples: Vec<GazeSample> = Vec::new();
    for (index, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let record: GazeRecord = serde_json::from_str(line).map_err(|e| malformed(index, e))?;
        let present = [
            record.line.is_some(),
            record.col.is_some(),
            record.file.is_some(),
        ];
        if present.iter().any(|&p| p) && !present.iter().all(|&p| p) {
            return Err(malformed(
                index,
                "line, col and file must be given together",
            ));
        }
        let sample = GazeSample::from(record);
        if let Some(prev) = samples.last().map(|s| s.timestamp) {
            if sample.timestamp < prev {
                return Err(SessionError::NonMonotonicTimestamps {
                    index,
                    previous: prev,
                    timestamp: sample.timestamp,
                });
            }
        }
        samples.push(sample);
    }
    Ok(samples)
}

pub fn serialize_gaze_sample(sample: &GazeSample) -> String {
    serde_json::to_string(sample).expect("gaze samples serialize")
}

pub fn serialize_gaze_log(samples: &[GazeSample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serialize_gaze_sample(s));
        out.push('\n');
    }
    out
}

fn read(path: &Path) -> Result<Vec<u8>, SessionError> {
    fs::read(path).map_err(|source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Finds `<stem>.<ext>` in `dir`, returning the path and extension.
fn find_source(dir: &Path, stem: &str) -> Result<(PathBuf, String), SessionError> {
    let entries = fs::read_dir(dir).map_err(|source| SessionError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut found: Vec<(PathBuf, String)> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let path = e.path();
            let name = path.file_name()?.to_str()?;
            let ext = name.strip_prefix(stem)?.strip_prefix('.')?.to_string();
            path.is_file().then_some((path, ext))
        })
        .collect();
    found.sort();
    found
        .into_iter()
        .next()
        .ok_or_else(|| SessionError::MissingFile(format!("{stem}.<ext>")))
}

fn required(dir: &Path, name: &str) -> Result<Vec<u8>, SessionError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(SessionError::MissingFile(name.to_string()));
    }
    read(&path)
}

fn read_text(path: &Path) -> Result<String, SessionError> {
    String::from_utf8(read(path)?).map_err(|e| SessionError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })
}

/// Loads and validates a session directory.
pub fn load_session(dir: &Path) -> Result<SessionArchive, SessionError> {
    let (original_path, extension) = find_source(dir, "original")?;
    let (final_path, _) = find_source(dir, "final")?;
    let original_text = read_text(&original_path)?;
    let final_text = read_text(&final_path)?;
    let config_path = dir.join(CONFIG_FILE);
    let config = if config_path.is_file() {
        SessionConfig::parse(&read_text(&config_path)?)?
    } else {
        SessionConfig::default()
    };
    let edit_log = parse_change_log_encoded(&required(dir, CHANGES_FILE)?, config.offset_encoding)?;
    let gaze_log = parse_gaze_log(&required(dir, GAZES_FILE)?)?;
    let file = tracked_file(&edit_log, &gaze_log)?;
    let edit_log = validate_edit_log(&original_text, edit_log, config.offset_encoding)?;
    Ok(SessionArchive {
        file,
        extension,
        original_text,
        final_text,
        edit_log,
        gaze_log,
        config,
    })
}

/// The single file every record refers to.
fn tracked_file(edits: &[EditEvent], gazes: &[GazeSample]) -> Result<Option<String>, SessionError> {
    let mut names = edits
        .iter()
        .map(|e| e.file.as_str())
        .chain(gazes.iter().filter_map(|g| g.file.as_deref()));
    let Some(first) = names.next() else {
        return Ok(None);
    };
    match names.find(|n| *n != first) {
        Some(other) => Err(SessionError::MultiFileSession {
            expected: first.to_string(),
            found: other.to_string(),
        }),
        None => Ok(Some(first.to_string())),
    }
}

/// Replays the log over `original`, checking every recorded row/column and
/// every deleted text against the reconstructed buffer. UTF-16 offsets,
/// lengths and columns are rewritten to scalar-value counts.
pub fn validate_edit_log(
    original: &str,
    mut events: Vec<EditEvent>,
    encoding: OffsetEncoding,
) -> Result<Vec<EditEvent>, SessionError> {
    let mut buffer = TextBuffer::new(original);
    for (index, event) in events.iter_mut().enumerate() {
        let violation = |reason: String| SessionError::InvariantViolation { index, reason };
        if encoding == OffsetEncoding::Utf16 {
            let units = event.text.encode_utf16().count();
            if event.length != units {
                return Err(violation(format!(
                    "len {} does not match UTF-16 length {}",
                    event.length, units
                )));
            }
            let offset = buffer.utf16_to_char_offset(event.offset).ok_or_else(|| {
                violation(format!(
                    "UTF-16 offset {} is outside the buffer or splits a surrogate pair",
                    event.offset
                ))
            })?;
            let (row, _) = buffer
                .position_of(offset)
                .expect("converted offset lies within the buffer");
            let col = buffer
                .utf16_col_to_char_col(row, event.col)
                .ok_or_else(|| violation(format!("UTF-16 column {} is invalid", event.col)))?;
            event.offset = offset;
            event.length = event.text.chars().count();
            event.col = col;
        }
        let (row, col) = buffer.position_of(event.offset).ok_or_else(|| {
            violation(format!(
                "offset {} exceeds buffer length {}",
                event.offset,
                buffer.len()
            ))
        })?;
        if (row, col) != (event.row, event.col) {
            return Err(violation(format!(
                "logged position ({}, {}) but offset {} is at ({row}, {col})",
                event.row, event.col, event.offset
            )));
        }
        buffer.apply(event).map_err(|e| violation(e.to_string()))?;
    }
    Ok(events)
}
