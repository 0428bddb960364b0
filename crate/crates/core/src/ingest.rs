//! High-rate gaze ingestion: screen-to-text resolution and the retention
//! benchmark.
//!
//! The benchmark runs two roles. The producer generates mock samples inside
//! the editor window at a fixed rate, resolves each to a line and column,
//! and offers it to a bounded queue without ever blocking; a full queue
//! drops the sample. The consumer drains the queue and appends samples to a
//! `gazes.jsonl` file in batches. After both finish, the persisted file is
//! checked sample by sample against the producer's ledger.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use crossbeam_queue::ArrayQueue;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{serialize_gaze_sample, GazeSample, Timestamp};

pub const MIN_RATE_HZ: u32 = 60;
pub const MAX_RATE_HZ: u32 = 2000;
/// Upper bound on samples per run, which keeps the ledger within a few
/// hundred megabytes.
pub const MAX_LEDGER_SAMPLES: u64 = 5_000_000;
/// How often the mock participant switches between open files.
const SWITCHES_PER_S: usize = 4;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),
    #[error("cannot write {path}: {source}")]
    OutputUnwritable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Buffer lines `start..=end` hidden by a fold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldRange {
    pub start: usize,
    pub end: usize,
}

/// Monospace editor layout used to turn screen points into text positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditorGeometry {
    pub gutter_px: f64,
    pub line_height_px: f64,
    pub char_width_px: f64,
    /// First display row shown at the top of the viewport.
    pub scroll_top_line: usize,
    pub scroll_left_col: usize,
    pub viewport_w_px: f64,
    pub viewport_h_px: f64,
    pub scale_factor: f64,
    /// Sorted, non-overlapping folds.
    #[serde(default)]
    pub folds: Vec<FoldRange>,
}

impl Default for EditorGeometry {
    fn default() -> Self {
        EditorGeometry {
            gutter_px: 50.0,
            line_height_px: 20.0,
            char_width_px: 10.0,
            scroll_top_line: 0,
            scroll_left_col: 0,
            viewport_w_px: 1200.0,
            viewport_h_px: 800.0,
            scale_factor: 1.0,
            folds: Vec::new(),
        }
    }
}

impl EditorGeometry {
    pub fn validate(&self) -> Result<(), BenchError> {
        let positive = [
            ("line_height_px", self.line_height_px),
            ("char_width_px", self.char_width_px),
            ("viewport_w_px", self.viewport_w_px),
            ("viewport_h_px", self.viewport_h_px),
            ("scale_factor", self.scale_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BenchError::InvalidConfig(format!(
                    "{name} must be positive"
                )));
            }
        }
        if !(self.gutter_px >= 0.0 && self.gutter_px < self.viewport_w_px) {
            return Err(BenchError::InvalidConfig(
                "gutter_px must lie within the viewport".into(),
            ));
        }
        let mut prev_end: Option<usize> = None;
        for f in &self.folds {
            if f.start > f.end || prev_end.is_some_and(|e| f.start <= e) {
                return Err(BenchError::InvalidConfig(
                    "folds must be sorted and non-overlapping".into(),
                ));
            }
            prev_end = Some(f.end);
        }
        Ok(())
    }

    /// Buffer line shown on `row`, skipping folded lines.
    pub fn display_row_to_line(&self, row: usize) -> usize {
        let mut line = row;
        for f in &self.folds {
            if f.start <= line {
                line += f.end - f.start + 1;
            } else {
                break;
            }
        }
        line
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Resolution {
    Position { line: usize, col: usize },
    Invalid,
}

/// Resolves a screen point to a buffer position.
#[inline]
pub fn resolve_point(g: &EditorGeometry, x: f64, y: f64) -> Resolution {
    let (x, y) = (x * g.scale_factor, y * g.scale_factor);
    if !(x >= g.gutter_px && x < g.viewport_w_px && y >= 0.0 && y < g.viewport_h_px) {
        return Resolution::Invalid;
    }
    let row = g.scroll_top_line + (y / g.line_height_px) as usize;
    let col = g.scroll_left_col + ((x - g.gutter_px) / g.char_width_px) as usize;
    Resolution::Position {
        line: g.display_row_to_line(row),
        col,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub rate_hz: u32,
    pub duration_s: f64,
    pub open_files: usize,
    pub queue_capacity: usize,
    pub geometry: EditorGeometry,
    pub output: PathBuf,
    pub seed: u64,
    /// Fraction of generated points placed outside the editor window.
    pub offscreen_fraction: f64,
    /// Samples the consumer writes per batch.
    pub write_batch: usize,
    /// Artificial delay after each persisted sample, for saturation tests.
    pub consumer_delay: Duration,
}

impl BenchConfig {
    pub fn new(rate_hz: u32, duration_s: f64, output: impl Into<PathBuf>) -> Self {
        BenchConfig {
            rate_hz,
            duration_s,
            open_files: 1,
            queue_capacity: 8192,
            geometry: EditorGeometry::default(),
            output: output.into(),
            seed: 0x5eed,
            offscreen_fraction: 0.0,
            write_batch: 256,
            consumer_delay: Duration::ZERO,
        }
    }

    pub fn sample_count(&self) -> u64 {
        (self.rate_hz as f64 * self.duration_s).round() as u64
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidConfig(m.to_string()));
        if !(MIN_RATE_HZ..=MAX_RATE_HZ).contains(&self.rate_hz) {
            return bad("rate_hz must be within 60..=2000");
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad("duration_s must be positive");
        }
        if self.open_files == 0 || self.queue_capacity == 0 || self.write_batch == 0 {
            return bad("open_files, queue_capacity and write_batch must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.offscreen_fraction) {
            return bad("offscreen_fraction must be within [0, 1]");
        }
        if self.sample_count() > MAX_LEDGER_SAMPLES {
            return bad("rate_hz * duration_s exceeds the ledger budget");
        }
        self.geometry.validate()
    }

    /// Layout of open file `i`; files differ by scroll position.
    pub fn file_geometry(&self, i: usize) -> EditorGeometry {
        EditorGeometry {
            scroll_top_line: self.geometry.scroll_top_line + 37 * i,
            ..self.geometry.clone()
        }
    }

    pub fn file_name(i: usize) -> String {
        format!("file_{i}.java")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub queue_full: u64,
    pub invalid: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetentionReport {
    pub rate_hz: u32,
    pub duration_s: f64,
    pub open_files: usize,
    pub sent: u64,
    pub resolved: u64,
    pub persisted: u64,
    pub retention: f64,
    pub p50_latency_us: f64,
    pub p99_latency_us: f64,
    pub max_latency_us: f64,
    pub drops_by_cause: DropCounts,
    /// Persisted samples that disagree with the ledger or with an offline
    /// re-resolution of their coordinates.
    pub mismatches: u64,
}

impl RetentionReport {
    pub fn is_conserved(&self) -> bool {
        self.sent == self.persisted + self.drops_by_cause.queue_full + self.drops_by_cause.invalid
    }

    pub fn table(&self) -> String {
        let rows = [
            ("rate (Hz)", self.rate_hz.to_string()),
            ("duration (s)", format!("{}", self.duration_s)),
            ("open files", self.open_files.to_string()),
            ("sent", self.sent.to_string()),
            ("resolved", self.resolved.to_string()),
            ("persisted", self.persisted.to_string()),
            ("retention", format!("{:.5}", self.retention)),
            (
                "dropped (queue full)",
                self.drops_by_cause.queue_full.to_string(),
            ),
            ("dropped (invalid)", self.drops_by_cause.invalid.to_string()),
            ("resolve p50 (us)", format!("{:.3}", self.p50_latency_us)),
            ("resolve p99 (us)", format!("{:.3}", self.p99_latency_us)),
            ("resolve max (us)", format!("{:.3}", self.max_latency_us)),
            ("mismatches", self.mismatches.to_string()),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter()
            .map(|(k, v)| format!("{k:<width$}  {v}\n"))
            .collect()
    }
}

struct LedgerEntry {
    sample: GazeSample,
    file: usize,
    resolved: bool,
    enqueued: bool,
}

/// Mock eye movement: fixations of 150-400 ms with a few pixels of jitter,
/// occasionally off screen.
struct MockEye {
    rng: ChaCha8Rng,
    center: (f64, f64),
    until: Duration,
}

impl MockEye {
    fn new(seed: u64) -> Self {
        MockEye {
            rng: ChaCha8Rng::seed_from_u64(seed),
            center: (0.0, 0.0),
            until: Duration::ZERO,
        }
    }

    fn next(&mut self, at: Duration, cfg: &BenchConfig) -> (f64, f64) {
        let g = &cfg.geometry;
        let (w, h) = (
            g.viewport_w_px / g.scale_factor,
            g.viewport_h_px / g.scale_factor,
        );
        let gutter = g.gutter_px / g.scale_factor;
        if at >= self.until {
            self.center = (
                self.rng.random_range(gutter + 4.0..w - 4.0),
                self.rng.random_range(4.0..h - 4.0),
            );
            self.until = at + Duration::from_millis(self.rng.random_range(150..400));
        }
        if cfg.offscreen_fraction > 0.0 && self.rng.random_bool(cfg.offscreen_fraction) {
            return (-self.rng.random_range(1.0..200.0), self.center.1);
        }
        let jitter = |rng: &mut ChaCha8Rng| rng.random_range(-3.0..3.0);
        let x = (self.center.0 + jitter(&mut self.rng)).clamp(gutter, w - 0.5);
        let y = (self.center.1 + jitter(&mut self.rng)).clamp(0.0, h - 0.5);
        (x, y)
    }
}

fn unix_ms() -> Timestamp {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as Timestamp)
}

/// Sleeps until `deadline`. A late producer catches up on the next
/// deadlines instead of drifting, and never spins, so concurrent runs on a
/// single core do not starve each other.
fn wait_until(deadline: Instant) {
    let now = Instant::now();
    if deadline > now {
        thread::sleep(deadline - now);
    }
}

fn consume(
    queue: &ArrayQueue<GazeSample>,
    done: &AtomicBool,
    out: &mut impl Write,
    cfg: &BenchConfig,
) -> io::Result<()> {
    let mut batch: Vec<GazeSample> = Vec::with_capacity(cfg.write_batch);
    let mut line = String::new();
    loop {
        match queue.pop() {
            Some(sample) => {
                batch.push(sample);
                if !cfg.consumer_delay.is_zero() {
                    thread::sleep(cfg.consumer_delay);
                }
                if batch.len() < cfg.write_batch {
                    continue;
                }
            }
            None if done.load(Ordering::Acquire) && queue.is_empty() => break,
            None => {
                if batch.is_empty() {
                    thread::sleep(Duration::from_micros(500));
                    continue;
                }
            }
        }
        for s in batch.drain(..) {
            line.clear();
            line.push_str(&serialize_gaze_sample(&s));
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
    }
    for s in batch.drain(..) {
        writeln!(out, "{}", serialize_gaze_sample(&s))?;
    }
    out.flush()
}

fn percentile_us(sorted_ns: &[u64], p: f64) -> f64 {
    if sorted_ns.is_empty() {
        return 0.0;
    }
    let rank = ((p * sorted_ns.len() as f64).ceil() as usize).clamp(1, sorted_ns.len());
    sorted_ns[rank - 1] as f64 / 1000.0
}

/// Checks each persisted line against the next enqueued ledger entry and
/// returns `(persisted, mismatches)`.
fn verify_output(
    path: &PathBuf,
    ledger: &[LedgerEntry],
    cfg: &BenchConfig,
) -> Result<(u64, u64), BenchError> {
    let unwritable = |source| BenchError::OutputUnwritable {
        path: path.clone(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(unwritable)?);
    let geometries: Vec<EditorGeometry> =
        (0..cfg.open_files).map(|i| cfg.file_geometry(i)).collect();
    let mut expected = ledger.iter().filter(|e| e.enqueued);
    let (mut persisted, mut mismatches) = (0u64, 0u64);
    for line in reader.lines() {
        let line = line.map_err(unwritable)?;
        persisted += 1;
        let parsed: Option<GazeSample> = serde_json::from_str(&line).ok();
        let ok = match (parsed, expected.next()) {
            (Some(got), Some(entry)) => {
                let recomputed = resolve_point(&geometries[entry.file], got.x, got.y);
                got.x.to_bits() == entry.sample.x.to_bits()
                    && got.y.to_bits() == entry.sample.y.to_bits()
                    && got == entry.sample
                    && matches!(recomputed, Resolution::Position { line, col }
                        if Some(line) == got.line && Some(col) == got.col)
            }
            _ => false,
        };
        if !ok {
            mismatches += 1;
        }
    }
    mismatches += expected.count() as u64;
    Ok((persisted, mismatches))
}

/// Runs one retention experiment.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<RetentionReport, BenchError> {
    cfg.validate()?;
    let file = File::create(&cfg.output).map_err(|source| BenchError::OutputUnwritable {
        path: cfg.output.clone(),
        source,
    })?;
    let total = cfg.sample_count() as usize;
    let geometries: Vec<EditorGeometry> =
        (0..cfg.open_files).map(|i| cfg.file_geometry(i)).collect();
    let names: Vec<String> = (0..cfg.open_files).map(BenchConfig::file_name).collect();
    let queue: ArrayQueue<GazeSample> = ArrayQueue::new(cfg.queue_capacity);
    let done = AtomicBool::new(false);
    let mut ledger: Vec<LedgerEntry> = Vec::with_capacity(total);
    let mut latencies_ns: Vec<u64> = Vec::with_capacity(total);

    let written = thread::scope(|scope| {
        let consumer = scope.spawn(|| {
            let mut out = BufWriter::with_capacity(1 << 16, file);
            consume(&queue, &done, &mut out, cfg)
        });

        let mut eye = MockEye::new(cfg.seed);
        let period = Duration::from_secs_f64(1.0 / cfg.rate_hz as f64);
        let wall_start = unix_ms();
        let t0 = Instant::now();
        for k in 0..total {
            let offset = period * k as u32;
            wait_until(t0 + offset);
            let active = (k * SWITCHES_PER_S / cfg.rate_hz as usize) % cfg.open_files;
            let (x, y) = eye.next(offset, cfg);
            let timestamp = wall_start + t0.elapsed().as_millis() as Timestamp;

            let started = Instant::now();
            let (sample, resolved, enqueued) = match resolve_point(&geometries[active], x, y) {
                Resolution::Position { line, col } => {
                    let sample =
                        GazeSample::valid(timestamp, x, y, line, col, names[active].clone());
                    let enqueued = queue.push(sample.clone()).is_ok();
                    (sample, true, enqueued)
                }
                Resolution::Invalid => (GazeSample::out_of_bounds(timestamp, x, y), false, false),
            };
            latencies_ns.push(started.elapsed().as_nanos() as u64);
            ledger.push(LedgerEntry {
                sample,
                file: active,
                resolved,
                enqueued,
            });
        }
        done.store(true, Ordering::Release);
        consumer.join().expect("consumer thread panicked")
    });
    written.map_err(|source| BenchError::OutputUnwritable {
        path: cfg.output.clone(),
        source,
    })?;

    let (persisted, mismatches) = verify_output(&cfg.output, &ledger, cfg)?;
    latencies_ns.sort_unstable();
    let sent = ledger.len() as u64;
    let resolved = ledger.iter().filter(|e| e.resolved).count() as u64;
    let enqueued = ledger.iter().filter(|e| e.enqueued).count() as u64;
    Ok(RetentionReport {
        rate_hz: cfg.rate_hz,
        duration_s: cfg.duration_s,
        open_files: cfg.open_files,
        sent,
        resolved,
        persisted,
        retention: if sent == 0 {
            1.0
        } else {
            persisted as f64 / sent as f64
        },
        p50_latency_us: percentile_us(&latencies_ns, 0.50),
        p99_latency_us: percentile_us(&latencies_ns, 0.99),
        max_latency_us: latencies_ns.last().map_or(0.0, |&n| n as f64 / 1000.0),
        drops_by_cause: DropCounts {
            queue_full: resolved - enqueued,
            invalid: sent - resolved,
        },
        mismatches,
    })
}
