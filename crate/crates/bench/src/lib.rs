//! Deterministic synthetic inputs for the benchmarks.

use editgaze_core::{EditEvent, EditKind, GazeSample, SessionArchive, SessionConfig};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LINES: &[&str] = &[
    "    public int lookup(String word) {",
    "        Integer c = counts.get(word);",
    "        return c == null ? 0 : c + 1;",
    "    }",
    "",
    "    // running total of all words seen so far",
    "    private static final double RATIO = 0.75e-2;",
    "        for (int i = 0; i < items.length; i++) { total += items[i]; }",
    "        String label = \"count: \" + total;",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A Java-like file of `lines` lines.
pub fn source(rng: &mut impl Rng, lines: usize) -> String {
    let mut out = String::from("public class Sample {\n");
    for _ in 0..lines.saturating_sub(2) {
        out.push_str(LINES.choose(rng).expect("non-empty"));
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

fn position(buf: &[char], at: usize) -> (usize, usize) {
    let before = &buf[..at];
    let row = before.iter().filter(|&&c| c == '\n').count();
    let col = at - before.iter().rposition(|&c| c == '\n').map_or(0, |p| p + 1);
    (row, col)
}

/// `n` single-character typing edits in bursts of ten, with a pause
/// longer than the default window between bursts. Returns the edits and
/// the final text.
pub fn typing_session(rng: &mut impl Rng, original: &str, n: usize) -> (Vec<EditEvent>, String) {
    let mut buf: Vec<char> = original.chars().collect();
    let mut edits = Vec::with_capacity(n);
    let mut t = 1_700_000_000_000i64;
    let mut at = 0;
    for i in 0..n {
        if i % 10 == 0 {
            t += 5_000;
            at = rng.random_range(0..=buf.len());
        } else {
            t += rng.random_range(50..300);
        }
        if i % 7 == 6 && at > 0 {
            at -= 1;
            let (row, col) = position(&buf, at);
            let c = buf.remove(at);
            edits.push(EditEvent::new(
                "Sample.java",
                EditKind::Delete,
                at,
                c.to_string(),
                t,
                row,
                col,
            ));
        } else {
            let (row, col) = position(&buf, at);
            let c = *['a', 'x', ' ', ';', '(', ')', '1', '\n']
                .choose(rng)
                .expect("non-empty");
            buf.insert(at, c);
            edits.push(EditEvent::new(
                "Sample.java",
                EditKind::Insert,
                at,
                c.to_string(),
                t,
                row,
                col,
            ));
            at += 1;
        }
    }
    (edits, buf.into_iter().collect())
}

/// A 120 Hz stream of `fixations` fixations of about 250 ms each.
pub fn gaze_stream(rng: &mut impl Rng, start: i64, fixations: usize) -> Vec<GazeSample> {
    let mut out = Vec::new();
    let mut t = start;
    for _ in 0..fixations {
        let (line, col) = (rng.random_range(0..40usize), rng.random_range(0..60usize));
        let (cx, cy) = (55.0 + col as f64 * 10.0, 10.0 + line as f64 * 20.0);
        for _ in 0..30 {
            let x = cx + rng.random_range(-3.0..3.0);
            let y = cy + rng.random_range(-3.0..3.0);
            out.push(GazeSample::valid(t, x, y, line, col, "Sample.java"));
            t += 8;
        }
        t += 40;
    }
    out
}

/// A complete session: `lines`-line file, `edits` typing edits and a gaze
/// stream covering the whole session.
pub fn session(seed: u64, lines: usize, edits: usize) -> SessionArchive {
    let mut rng = rng(seed);
    let original = source(&mut rng, lines);
    let (edit_log, final_text) = typing_session(&mut rng, &original, edits);
    let span = edit_log
        .last()
        .map_or(0, |e| e.timestamp - 1_700_000_000_000);
    let gaze_log = gaze_stream(&mut rng, 1_700_000_000_000, (span / 280).max(1) as usize);
    SessionArchive {
        file: Some("Sample.java".into()),
        extension: "java".into(),
        original_text: original,
        final_text,
        edit_log,
        gaze_log,
        config: SessionConfig::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use editgaze_core::{process, validate_edit_log, OffsetEncoding};

    #[test]
    fn generated_sessions_are_valid() {
        let s = session(7, 200, 500);
        let edits = validate_edit_log(&s.original_text, s.edit_log.clone(), OffsetEncoding::Chars)
            .expect("generated positions are consistent");
        assert_eq!(edits.len(), 500);
        let p = process(s).unwrap();
        assert!(p.verification.matched);
        assert!(!p.fixations.is_empty());
        assert!(p.gaze_tally().is_conserved());
    }
}
