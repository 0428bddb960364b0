//! Line/column arithmetic over character offsets.
//!
//! All offsets are counted in Unicode scalar values and all line/column
//! indices are 0-based. Lines are terminated by `'\n'`; the terminator
//! belongs to the line it ends but is not part of its visible length.

/// Start offsets of every line in a text, in characters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineIndex {
    starts: Vec<usize>,
    len_chars: usize,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut starts = vec![0];
        let mut len_chars = 0;
        for ch in text.chars() {
            len_chars += 1;
            if ch == '\n' {
                starts.push(len_chars);
            }
        }
        LineIndex { starts, len_chars }
    }

    pub fn from_chars(chars: &[char]) -> Self {
        let mut starts = vec![0];
        for (i, &ch) in chars.iter().enumerate() {
            if ch == '\n' {
                starts.push(i + 1);
            }
        }
        LineIndex {
            starts,
            len_chars: chars.len(),
        }
    }

    /// Number of lines. An empty text has one (empty) line, as does a text
    /// whose last character is not a newline.
    pub fn line_count(&self) -> usize {
        self.starts.len()
    }

    pub fn len_chars(&self) -> usize {
        self.len_chars
    }

    pub fn line_start(&self, line: usize) -> Option<usize> {
        self.starts.get(line).copied()
    }

    /// Visible length of `line`, excluding its terminating newline.
    pub fn line_len(&self, line: usize) -> Option<usize> {
        let start = *self.starts.get(line)?;
        let end = match self.starts.get(line + 1) {
            Some(&next) => next - 1,
            None => self.len_chars,
        };
        Some(end - start)
    }

    /// Offset of the character at `(line, col)`, or `None` when the column
    /// is at or past the end of the line.
    pub fn offset_of(&self, line: usize, col: usize) -> Option<usize> {
        let len = self.line_len(line)?;
        if col < len {
            Some(self.starts[line] + col)
        } else {
            None
        }
    }

    /// Line and column of `offset`. `offset == len_chars` is allowed and maps
    /// to the position just past the last character.
    pub fn position_of(&self, offset: usize) -> Option<(usize, usize)> {
        if offset > self.len_chars {
            return None;
        }
        let line = match self.starts.binary_search(&offset) {
            Ok(line) => line,
            Err(next) => next - 1,
        };
        Some((line, offset - self.starts[line]))
    }
}
