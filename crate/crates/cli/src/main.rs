//! `editgaze`: run the edit-aware gaze pipeline over a recorded session.
//!
//! Exit codes: 0 success, 1 a stage failed, 2 the replayed file does not
//! match the saved final file, 64 bad usage.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use editgaze_core::{
    load_session, process, run_benchmark, BenchConfig, ProcessedSession, SessionConfig, TokenId,
};

/// A flag value that is well-formed but out of range; reported like any
/// other usage error.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_STAGE: u8 = 1;
const EXIT_MISMATCH: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "editgaze",
    version,
    about = "Edit-aware gaze analysis for source code"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline and write every artifact under --out.
    Process {
        session: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write each snapshot and an index of validity intervals.
    Snapshots {
        session: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Emit fixations as JSON lines.
    Fixations {
        session: PathBuf,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Query a processed session.
    Query {
        #[command(subcommand)]
        query: Query,
    },
    /// Measure gaze retention of the real-time resolver.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum Query {
    /// All fixations on one token id, across snapshots.
    FixationsOnToken {
        session: PathBuf,
        #[arg(long)]
        id: u64,
        #[command(flatten)]
        common: QueryCommon,
    },
    /// Re-express a fixation's position in another snapshot.
    Adjust {
        session: PathBuf,
        /// Index into the session's fixation list.
        #[arg(long)]
        fixation: usize,
        #[arg(long)]
        target: usize,
        #[command(flatten)]
        common: QueryCommon,
    },
    /// Tokens that died and were born in one edit batch.
    TokensChanged {
        session: PathBuf,
        #[arg(long)]
        batch: usize,
        #[command(flatten)]
        common: QueryCommon,
    },
}

#[derive(Args)]
struct QueryCommon {
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

/// Settings that take precedence over the session's `session.toml`.
#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    window_ms: Option<u64>,
    #[arg(long)]
    min_duration_ms: Option<i64>,
    #[arg(long)]
    dispersion_px: Option<f64>,
    #[arg(long)]
    grammar: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut SessionConfig) {
        if let Some(w) = self.window_ms {
            cfg.aggregation_window_ms = w;
        }
        if let Some(d) = self.min_duration_ms {
            cfg.filter.min_duration_ms = d;
        }
        if let Some(p) = self.dispersion_px {
            cfg.filter.dispersion_px = p;
        }
        if let Some(g) = &self.grammar {
            cfg.grammar = g.clone();
        }
    }

    /// Rejects out-of-range overrides before anything is loaded.
    fn check(&self) -> Result<()> {
        let mut cfg = SessionConfig::default();
        self.apply(&mut cfg);
        cfg.validate()
            .map_err(|e| UsageError(format!("invalid override: {e}")).into())
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 2000)]
    rate_hz: u32,
    #[arg(long, default_value_t = 30.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 1)]
    files: usize,
    #[arg(long, default_value_t = 8192)]
    queue_capacity: usize,
    /// Where persisted samples go; a temporary file if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Fraction of samples generated outside the editor window.
    #[arg(long, default_value_t = 0.0)]
    offscreen_fraction: f64,
    /// Artificial per-sample consumer delay in microseconds.
    #[arg(long, default_value_t = 0)]
    consumer_delay_us: u64,
}

fn load(session: &Path, overrides: &Overrides) -> Result<ProcessedSession> {
    overrides.check()?;
    let mut archive =
        load_session(session).with_context(|| format!("cannot load {}", session.display()))?;
    overrides.apply(&mut archive.config);
    log::info!(
        "{}: {} edits, {} gaze samples",
        session.display(),
        archive.edit_log.len(),
        archive.gaze_log.len()
    );
    process(archive).with_context(|| format!("cannot process {}", session.display()))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Process {
            session,
            out,
            overrides,
        } => {
            let s = load(&session, &overrides)?;
            output::write_all(&s, &out)?;
            eprint!("{}", output::summary(&s));
            Ok(if s.verification.matched {
                0
            } else {
                EXIT_MISMATCH
            })
        }
        Command::Snapshots {
            session,
            out,
            overrides,
        } => {
            let s = load(&session, &overrides)?;
            output::write_snapshots(&s, &out)?;
            Ok(0)
        }
        Command::Fixations {
            session,
            out,
            overrides,
        } => {
            let s = load(&session, &overrides)?;
            output::emit(out.as_deref(), &output::fixation_lines(&s.fixations))?;
            Ok(0)
        }
        Command::Query { query } => run_query(query),
        Command::Bench(args) => run_bench(args),
    }
}

fn run_query(query: Query) -> Result<u8> {
    let (text, out) = match query {
        Query::FixationsOnToken {
            session,
            id,
            common,
        } => {
            let s = load(&session, &common.overrides)?;
            let found = s.fixations_on_token(TokenId(id))?;
            (output::json(&found)?, common.out)
        }
        Query::Adjust {
            session,
            fixation,
            target,
            common,
        } => {
            let s = load(&session, &common.overrides)?;
            let Some(f) = s.fixations.get(fixation) else {
                bail!("no fixation {fixation} (session has {})", s.fixations.len());
            };
            let adjusted = s.adjust_to_snapshot(f, target)?;
            (output::json(&adjusted)?, common.out)
        }
        Query::TokensChanged {
            session,
            batch,
            common,
        } => {
            let s = load(&session, &common.overrides)?;
            (output::json(&s.tokens_changed_by(batch)?)?, common.out)
        }
    };
    output::emit(out.as_deref(), &text)?;
    Ok(0)
}

fn run_bench(args: BenchArgs) -> Result<u8> {
    let (path, temporary) = match args.out {
        Some(p) => (p, false),
        None => (
            std::env::temp_dir().join(format!("editgaze-bench-{}.jsonl", std::process::id())),
            true,
        ),
    };
    let mut cfg = BenchConfig::new(args.rate_hz, args.duration_s, &path);
    cfg.open_files = args.files;
    cfg.queue_capacity = args.queue_capacity;
    cfg.seed = args.seed;
    cfg.offscreen_fraction = args.offscreen_fraction;
    cfg.consumer_delay = Duration::from_micros(args.consumer_delay_us);
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    let report = run_benchmark(&cfg);
    if temporary {
        let _ = std::fs::remove_file(&path);
    }
    let report = report?;
    eprint!("{}", report.table());
    print!("{}", output::json(&report)?);
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EDITGAZE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_STAGE)
            }
        }
    }
}
