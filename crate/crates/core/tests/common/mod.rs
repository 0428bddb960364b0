//! Oracles and generators shared by the integration and acceptance tests.
//!
//! Every oracle here is written against plain `String`s and linear scans,
//! never against the crate's own buffers or indexes.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use editgaze_core::{
    tokenize, EditBatch, EditEvent, EditKind, FilterConfig, GazeSample, RawToken, TokenKind,
};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Well-formed fixture sessions, sorted by name. Broken variants live under
/// `fixtures/broken` and are not included.
pub fn fixture_sessions() -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(fixtures_dir())
        .expect("fixtures directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.is_dir() && p.file_name().is_some_and(|n| n != "broken"))
        .collect();
    dirs.sort();
    dirs
}

pub fn broken_fixture(name: &str) -> PathBuf {
    fixtures_dir().join("broken").join(name)
}

// ---------------------------------------------------------------------------
// String-splice replay

fn byte_at(s: &str, chars: usize) -> Option<usize> {
    s.char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(s.len()))
        .nth(chars)
}

/// Applies one edit by splicing a `String`. `None` if the edit does not fit.
pub fn splice(text: &mut String, e: &EditEvent) -> Option<()> {
    let start = byte_at(text, e.offset)?;
    match e.kind {
        EditKind::Insert => text.insert_str(start, &e.text),
        EditKind::Delete => {
            let end = byte_at(text, e.offset + e.text.chars().count())?;
            if text[start..end] != e.text {
                return None;
            }
            text.replace_range(start..end, "");
        }
    }
    Some(())
}

/// Replays edits one at a time; on failure returns the index of the first
/// edit that does not apply.
pub fn splice_replay(original: &str, edits: &[EditEvent]) -> Result<String, usize> {
    let mut text = original.to_string();
    for (i, e) in edits.iter().enumerate() {
        splice(&mut text, e).ok_or(i)?;
    }
    Ok(text)
}

/// Length in chars of the longest common prefix.
pub fn common_prefix_chars(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

// ---------------------------------------------------------------------------
// Random edit scripts

pub struct Script {
    pub original: String,
    pub edits: Vec<EditEvent>,
    /// The text the simulated editor ended with.
    pub final_text: String,
}

const LINES: &[&str] = &[
    "int count = 0;",
    "for (int i = 0; i < n; i++) {",
    "    total += values[i] * 2;",
    "}",
    "// accumulate the running sum",
    "/* block comment */ x = y >> 3;",
    "String name = \"caf\u{e9} \\\"quoted\\\"\";",
    "char c = '\\n';",
    "double ratio = 1.5e-3f;",
    "if (a <= b && b != c) { return a; }",
    "",
    "    ",
    "public static void main(String[] args) {",
    "    System.out.println(\"\u{1F600} done\");",
    "label: while (true) break label;",
    "x += 0x1F; y <<= 2;",
    "\t\treturn frequency;",
];

const SNIPPETS: &[&str] = &[
    "x",
    "frequency",
    " ",
    "\n",
    "(",
    ")",
    ";",
    "0",
    "42",
    "\"s\"",
    "/*",
    "*/",
    "//",
    "+=",
    "==",
    "int ",
    "return ",
    "\u{e9}",
    "\u{1F600}",
    "\u{4E2D}",
    "\t",
    "'",
    "\"",
];

struct Editor {
    file: String,
    buf: Vec<char>,
    t: i64,
    edits: Vec<EditEvent>,
}

impl Editor {
    fn position(&self, offset: usize) -> (usize, usize) {
        let before = &self.buf[..offset];
        let row = before.iter().filter(|&&c| c == '\n').count();
        let start = before.iter().rposition(|&c| c == '\n').map_or(0, |i| i + 1);
        (row, offset - start)
    }

    fn push(&mut self, kind: EditKind, offset: usize, text: String) {
        let (row, col) = self.position(offset);
        let n = text.chars().count();
        match kind {
            EditKind::Insert => {
                self.buf.splice(offset..offset, text.chars());
            }
            EditKind::Delete => {
                self.buf.drain(offset..offset + n);
            }
        }
        self.edits.push(EditEvent::new(
            self.file.clone(),
            kind,
            offset,
            text,
            self.t,
            row,
            col,
        ));
    }

    fn line_starts(&self) -> Vec<usize> {
        let mut starts = vec![0];
        starts.extend(
            self.buf
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == '\n')
                .map(|(i, _)| i + 1),
        );
        starts
    }
}

fn gap(rng: &mut impl Rng, window: i64) -> i64 {
    match rng.random_range(0..10) {
        0..=5 => rng.random_range(0..=window.min(400)),
        6 => window,
        7 => rng.random_range(0..=window),
        _ => window + rng.random_range(1..20_000),
    }
}

/// A random file of at most `max_lines` lines and a script of at most
/// `max_edits` edits: typing bursts, backspace runs, multi-line deletes,
/// paste bursts and word replacements.
pub fn random_script(
    rng: &mut impl Rng,
    max_lines: usize,
    max_edits: usize,
    window: i64,
) -> Script {
    let lines = rng.random_range(0..=max_lines);
    let mut original = String::new();
    for i in 0..lines {
        original.push_str(LINES.choose(rng).expect("non-empty"));
        if i + 1 < lines || rng.random_bool(0.8) {
            original.push('\n');
        }
    }
    let mut ed = Editor {
        file: "src/Main.java".into(),
        buf: original.chars().collect(),
        t: 1_700_000_000_000 + rng.random_range(0..1_000_000),
        edits: Vec::new(),
    };
    let target = rng.random_range(0..=max_edits);
    while ed.edits.len() < target {
        ed.t += gap(rng, window);
        let room = target - ed.edits.len();
        let len = ed.buf.len();
        match rng.random_range(0..6) {
            // Typing burst.
            0 | 1 => {
                let mut at = rng.random_range(0..=len);
                let n = rng.random_range(1..=room.min(12));
                for i in 0..n {
                    if i > 0 {
                        ed.t += rng.random_range(30..250);
                    }
                    let s = SNIPPETS.choose(rng).expect("non-empty").to_string();
                    let k = s.chars().count();
                    ed.push(EditKind::Insert, at, s);
                    at += k;
                }
            }
            // Backspace run.
            2 if len > 0 => {
                let mut at = rng.random_range(1..=len);
                let n = rng.random_range(1..=room.min(8)).min(at);
                for i in 0..n {
                    if i > 0 {
                        ed.t += rng.random_range(30..200);
                    }
                    at -= 1;
                    let c = ed.buf[at].to_string();
                    ed.push(EditKind::Delete, at, c);
                }
            }
            // Multi-line delete.
            3 if len > 0 => {
                let starts = ed.line_starts();
                let a = rng.random_range(0..starts.len());
                let b = rng.random_range(a..starts.len());
                let from = starts[a];
                let to = starts
                    .get(b + 1)
                    .copied()
                    .unwrap_or(len)
                    .max(from + 1)
                    .min(len);
                if to > from {
                    let text: String = ed.buf[from..to].iter().collect();
                    ed.push(EditKind::Delete, from, text);
                }
            }
            // Paste burst: copy a region and paste it, sometimes twice.
            4 if len > 0 => {
                let from = rng.random_range(0..len);
                let to = rng.random_range(from + 1..=len.min(from + 200));
                let text: String = ed.buf[from..to].iter().collect();
                let pastes = rng.random_range(1..=room.min(3));
                for i in 0..pastes {
                    if i > 0 {
                        ed.t += rng.random_range(100..900);
                    }
                    let at = rng.random_range(0..=ed.buf.len());
                    ed.push(EditKind::Insert, at, text.clone());
                }
            }
            // Replace a short run with a snippet.
            _ if len > 0 && room >= 2 => {
                let from = rng.random_range(0..len);
                let to = rng.random_range(from + 1..=len.min(from + 10));
                let old: String = ed.buf[from..to].iter().collect();
                ed.push(EditKind::Delete, from, old);
                ed.t += rng.random_range(0..50);
                let s = SNIPPETS.choose(rng).expect("non-empty").to_string();
                ed.push(EditKind::Insert, from, s);
            }
            _ => {
                let at = rng.random_range(0..=len);
                ed.push(EditKind::Insert, at, "x".into());
            }
        }
    }
    Script {
        original,
        final_text: ed.buf.iter().collect(),
        edits: ed.edits,
    }
}

// ---------------------------------------------------------------------------
// I-DT by exhaustive search

fn dispersion(samples: &[GazeSample]) -> f64 {
    let xs = samples.iter().map(|s| s.x);
    let ys = samples.iter().map(|s| s.y);
    let (min_x, max_x) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    let (min_y, max_y) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
        (a.min(y), b.max(y))
    });
    (max_x - min_x) + (max_y - min_y)
}

/// For each start, the longest window that lasts at least the minimum
/// duration and whose dispersion, recomputed from scratch, is within the
/// threshold. No such window: slide by one.
pub fn idt_oracle(samples: &[GazeSample], cfg: &FilterConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        let best = (start..samples.len())
            .filter(|&end| samples[end].timestamp - samples[start].timestamp >= cfg.min_duration_ms)
            .filter(|&end| dispersion(&samples[start..=end]) <= cfg.dispersion_px)
            .max();
        match best {
            Some(end) => {
                out.push((start, end + 1));
                start = end + 1;
            }
            None => start += 1,
        }
    }
    out
}

/// A stream of fixation-like clusters and saccades at a random rate, with
/// duplicate timestamps, dropouts and clusters sitting right at the
/// dispersion threshold.
pub fn random_stream(rng: &mut impl Rng, cfg: &FilterConfig) -> Vec<GazeSample> {
    let step = *[1i64, 4, 8, 10, 16, 17].choose(rng).expect("non-empty");
    let mut t = rng.random_range(0..1_000_000i64);
    let mut out = Vec::new();
    let n_clusters = rng.random_range(0..12);
    for _ in 0..n_clusters {
        let (cx, cy) = (rng.random_range(0.0..1200.0), rng.random_range(0.0..800.0));
        let dur = rng.random_range(0..=(cfg.min_duration_ms * 4));
        let spread = match rng.random_range(0..4) {
            0 => 0.0,
            1 => cfg.dispersion_px / 4.0,
            2 => cfg.dispersion_px / 2.0,
            _ => cfg.dispersion_px,
        };
        let end = t + dur;
        while t <= end {
            let x = cx + rng.random_range(-0.5..=0.5) * spread;
            let y = cy + rng.random_range(-0.5..=0.5) * spread;
            let line = (y / 20.0) as usize;
            let col = (x / 10.0) as usize;
            out.push(GazeSample::valid(t, x, y, line, col, "a.java"));
            t += if rng.random_bool(0.05) { 0 } else { step };
            if rng.random_bool(0.02) {
                t += rng.random_range(20..200);
            }
        }
        // Saccade samples.
        for _ in 0..rng.random_range(0..4) {
            let (x, y) = (rng.random_range(0.0..1200.0), rng.random_range(0.0..800.0));
            out.push(GazeSample::valid(
                t,
                x,
                y,
                (y / 20.0) as usize,
                (x / 10.0) as usize,
                "a.java",
            ));
            t += step;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Token identity from scratch

/// Pre- and post-batch hulls of everything a batch touched, computed by
/// simulating the batch over tagged cells.
///
/// Cells are original characters (alive or deleted), inserted characters,
/// and zero-width scars left where inserted characters were deleted. All
/// cells except untouched originals count as touched; the hulls run from
/// the first to the last touched cell.
pub fn hull_oracle(pre_len: usize, edits: &[EditEvent]) -> ((usize, usize), (usize, usize)) {
    #[derive(Clone, Copy, PartialEq)]
    enum Cell {
        Orig,
        Tomb,
        Ins,
        Scar,
    }
    let mut cells = vec![Cell::Orig; pre_len];
    fn visible_index(cells: &[Cell], offset: usize) -> usize {
        let mut seen = 0;
        for (i, c) in cells.iter().enumerate() {
            if matches!(c, Cell::Orig | Cell::Ins) {
                if seen == offset {
                    return i;
                }
                seen += 1;
            }
        }
        cells.len()
    }
    for e in edits {
        let at = visible_index(&cells, e.offset);
        match e.kind {
            EditKind::Insert => {
                let n = e.text.chars().count();
                cells.splice(at..at, std::iter::repeat_n(Cell::Ins, n));
            }
            EditKind::Delete => {
                let mut i = at;
                let mut left = e.text.chars().count();
                while left > 0 {
                    match cells[i] {
                        Cell::Orig => {
                            cells[i] = Cell::Tomb;
                            left -= 1;
                        }
                        Cell::Ins => {
                            cells[i] = Cell::Scar;
                            left -= 1;
                        }
                        _ => {}
                    }
                    i += 1;
                }
            }
        }
    }
    let touched = |c: &Cell| *c != Cell::Orig;
    let Some(first) = cells.iter().position(touched) else {
        // Unreachable for non-empty batches.
        return ((0, 0), (0, 0));
    };
    let last = cells.iter().rposition(touched).expect("first exists");
    let count = |range: &[Cell], pre: bool| {
        range
            .iter()
            .filter(|c| {
                if pre {
                    matches!(c, Cell::Orig | Cell::Tomb)
                } else {
                    matches!(c, Cell::Orig | Cell::Ins)
                }
            })
            .count()
    };
    let old = (count(&cells[..first], true), count(&cells[..=last], true));
    let new = (count(&cells[..first], false), count(&cells[..=last], false));
    (old, new)
}

/// Per-snapshot id vectors (in token order) obtained by re-matching every
/// pair of consecutive snapshots from scratch with a linear search over all
/// previous tokens.
pub fn rematch_ids(snapshot_texts: &[String], batches: &[EditBatch]) -> Vec<Vec<(u64, RawToken)>> {
    let lex = |t: &str| tokenize(t, "c-family").expect("built-in grammar");
    let mut next = 0u64;
    let mut first: Vec<(u64, RawToken)> = Vec::new();
    for tok in lex(&snapshot_texts[0]) {
        first.push((next, tok));
        next += 1;
    }
    let mut all = vec![first];
    for (k, batch) in batches.iter().enumerate() {
        let prev = &all[k];
        let (os, oe) = (batch.old_range.start, batch.old_range.end);
        let (ns, ne) = (batch.new_range.start, batch.new_range.end);
        let mut cur = Vec::new();
        for tok in lex(&snapshot_texts[k + 1]) {
            let (s, e) = (tok.span.start, tok.span.end);
            let heir = prev.iter().find(|(_, old)| {
                let (a, b) = (old.span.start, old.span.end);
                let same = old.kind == tok.kind && old.text == tok.text;
                let before = e <= ns && b <= os && a == s && b == e;
                let after = s >= ne
                    && a >= oe
                    && a as i64 + batch.delta == s as i64
                    && b as i64 + batch.delta == e as i64;
                same && (before || after)
            });
            let id = match heir {
                Some((id, _)) => *id,
                None => {
                    next += 1;
                    next - 1
                }
            };
            cur.push((id, tok));
        }
        all.push(cur);
    }
    all
}

/// Timelines rebuilt from per-snapshot id lists:
/// id -> (kind, birth, death, [(snapshot, start, end, text)]).
pub type OracleTimeline = (
    TokenKind,
    usize,
    Option<usize>,
    Vec<(usize, usize, usize, String)>,
);

pub fn oracle_timelines(ids: &[Vec<(u64, RawToken)>]) -> BTreeMap<u64, OracleTimeline> {
    let mut map: BTreeMap<u64, OracleTimeline> = BTreeMap::new();
    for (k, snap) in ids.iter().enumerate() {
        for (id, tok) in snap {
            let entry = map
                .entry(*id)
                .or_insert_with(|| (tok.kind, k, None, Vec::new()));
            entry
                .3
                .push((k, tok.span.start, tok.span.end, tok.text.clone()));
        }
    }
    for entry in map.values_mut() {
        let last = entry.3.last().expect("non-empty").0;
        if last + 1 < ids.len() {
            entry.2 = Some(last + 1);
        }
    }
    map
}
