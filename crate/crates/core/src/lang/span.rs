use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// A byte range of source text plus the 1-based line/column of its start.
///
/// Columns count Unicode scalar values, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }

    /// Smallest span covering both; line/column come from whichever starts first.
    pub fn join(self, other: Span) -> Span {
        let (first, _) = if self.start <= other.start {
            (self, other)
        } else {
            (other, self)
        };
        Span {
            start: first.start,
            end: self.end.max(other.end),
            line: first.line,
            column: first.column,
        }
    }

    /// True when the span is in range for `text`, lies on character
    /// boundaries, and its line/column agree with its start offset.
    pub fn is_valid_for(&self, text: &str) -> bool {
        if self.start > self.end
            || self.end > text.len()
            || !text.is_char_boundary(self.start)
            || !text.is_char_boundary(self.end)
        {
            return false;
        }
        let (line, column) = LineIndex::new(text).line_col(self.start);
        line == self.line && column == self.column
    }
}

/// Offsets of line starts, for turning byte offsets into line/column pairs.
#[derive(Debug, Clone)]
pub struct LineIndex<'a> {
    text: &'a str,
    line_starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut line_starts = Vec::with_capacity(text.len() / 32 + 1);
        line_starts.push(0);
        line_starts.extend(
            text.bytes()
                .enumerate()
                .filter(|&(_, b)| b == b'\n')
                .map(|(i, _)| i + 1),
        );
        LineIndex { text, line_starts }
    }

    pub fn text(&self) -> &'a str {
        self.text
    }

    pub fn line_col(&self, offset: usize) -> (u32, u32) {
        let line = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let start = self.line_starts[line];
        let column = self.text[start..offset].chars().count() + 1;
        (line as u32 + 1, column as u32)
    }

    pub fn span(&self, start: usize, end: usize) -> Span {
        let (line, column) = self.line_col(start);
        Span {
            start,
            end,
            line,
            column,
        }
    }

    /// Splits `[start, end)` at line boundaries. A newline belongs to the
    /// fragment of the line it terminates.
    pub fn line_fragments(&self, start: usize, end: usize) -> Vec<Span> {
        let mut out = Vec::new();
        let mut cursor = start;
        for (i, b) in self.text.as_bytes()[start..end].iter().enumerate() {
            if *b == b'\n' {
                let stop = start + i + 1;
                out.push(self.span(cursor, stop));
                cursor = stop;
            }
        }
        if cursor < end || out.is_empty() {
            out.push(self.span(cursor, end));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_col_counts_chars() {
        let idx = LineIndex::new("ab\ncä d\n");
        assert_eq!(idx.line_col(0), (1, 1));
        assert_eq!(idx.line_col(3), (2, 1));
        // 'ä' is two bytes
        assert_eq!(idx.line_col(6), (2, 3));
        assert_eq!(idx.line_col(9), (3, 1));
    }

    #[test]
    fn fragments_split_after_newline() {
        let text = "one\ntwo\nthree";
        let idx = LineIndex::new(text);
        let frags = idx.line_fragments(1, 10);
        let pieces: Vec<&str> = frags.iter().map(|s| &text[s.start..s.end]).collect();
        assert_eq!(pieces, ["ne\n", "two\n", "th"]);
        assert_eq!(frags[1].line, 2);
        assert_eq!(frags[2].column, 1);
    }

    #[test]
    fn fragment_of_span_ending_at_newline() {
        let text = "ab\ncd";
        let idx = LineIndex::new(text);
        assert_eq!(idx.line_fragments(0, 3).len(), 1);
        assert_eq!(idx.line_fragments(1, 1).len(), 1);
    }

    #[test]
    fn validity() {
        let text = "x\nyz";
        let idx = LineIndex::new(text);
        assert!(idx.span(2, 4).is_valid_for(text));
        assert!(!Span {
            start: 2,
            end: 4,
            line: 1,
            column: 3
        }
        .is_valid_for(text));
        assert!(!idx.span(0, 5).is_valid_for("x"));
    }
}
