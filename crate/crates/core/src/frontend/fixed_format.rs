//! Reader for fixed-format (card image) COBOL source.
//!
//! Columns 1-6 hold the sequence number, column 7 the indicator and
//! columns 8-72 the program text. Anything from column 73 on is ignored.

use super::FrontendError;

const INDICATOR_COL: usize = 6;
const PAYLOAD_START: usize = 7;
const PAYLOAD_END: usize = 72;

/// Maps a character offset inside a [`LogicalLine`] back to the raw record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    /// Character offset in `LogicalLine::text` where this segment begins.
    pub offset: usize,
    /// 1-based source line of the record the segment came from.
    pub line: usize,
    /// 1-based source column of the segment's first character.
    pub col: usize,
}

/// Payload of one or more physical records after continuation merging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalLine {
    pub text: String,
    pub source_line: usize,
    /// True when at least one continuation record was merged in.
    pub continued: bool,
    segments: Vec<Segment>,
}

impl LogicalLine {
    /// A logical line that did not come from a card image (snippets, tests).
    pub fn free(text: impl Into<String>, source_line: usize) -> Self {
        Self {
            text: text.into(),
            source_line,
            continued: false,
            segments: vec![Segment {
                offset: 0,
                line: source_line,
                col: 1,
            }],
        }
    }

    /// Source `(line, column)` of the character at `offset` in `text`.
    pub fn position(&self, offset: usize) -> (usize, usize) {
        let seg = self
            .segments
            .iter()
            .rev()
            .find(|s| s.offset <= offset)
            .unwrap_or(&self.segments[0]);
        (seg.line, seg.col + (offset - seg.offset))
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }
}

/// Returns the quote character of a literal left open at the end of `text`.
fn open_quote(text: &str) -> Option<char> {
    let mut open: Option<char> = None;
    for ch in text.chars() {
        match open {
            Some(q) if ch == q => open = None,
            Some(_) => {}
            None if ch == '\'' || ch == '"' => open = Some(ch),
            None => {}
        }
    }
    open
}

fn looks_free_format(record: &str) -> bool {
    let upper = record.trim_start().to_ascii_uppercase();
    if upper.starts_with(">>SOURCE") && upper.contains("FREE") {
        return true;
    }
    // A division header starting in column 1 cannot be fixed format.
    let first = record.split_whitespace().next().unwrap_or("");
    record.starts_with(first)
        && !first.is_empty()
        && matches!(
            first.to_ascii_uppercase().as_str(),
            "IDENTIFICATION" | "ID" | "ENVIRONMENT" | "DATA" | "PROCEDURE"
        )
        && upper.split_whitespace().nth(1).map(|w| w.trim_end_matches('.')) == Some("DIVISION")
}

/// Splits raw source into logical lines.
///
/// Comment records (`*`, `/`, `D`/`d` in column 7) are dropped, continuation
/// records (`-`) are appended to the previous logical line and blank payloads
/// are skipped.
pub fn read_fixed_format(raw_text: &str) -> Result<Vec<LogicalLine>, FrontendError> {
    let mut lines: Vec<LogicalLine> = Vec::new();

    for (idx, record) in raw_text.split('\n').enumerate() {
        let line_no = idx + 1;
        let record = record.strip_suffix('\r').unwrap_or(record);
        if looks_free_format(record) {
            return Err(FrontendError::FreeFormat { line: line_no });
        }

        let chars: Vec<char> = record.chars().collect();
        let indicator = chars.get(INDICATOR_COL).copied().unwrap_or(' ');
        if matches!(indicator, '*' | '/' | 'D' | 'd') {
            continue;
        }
        let payload: String = chars
            .iter()
            .skip(PAYLOAD_START)
            .take(PAYLOAD_END - PAYLOAD_START)
            .collect();

        if indicator == '-' {
            let Some(prev) = lines.last_mut() else {
                return Err(FrontendError::ContinuationWithoutPredecessor { line: line_no });
            };
            let mut col = PAYLOAD_START + 1;
            let mut piece = payload.as_str();
            // A continued literal resumes after the quote that opens the
            // continuation record's text.
            if let Some(q) = open_quote(&prev.text) {
                let trimmed = piece.trim_start();
                if let Some(rest) = trimmed.strip_prefix(q) {
                    col += piece.chars().count() - rest.chars().count();
                    piece = rest;
                }
            }
            if piece.trim().is_empty() {
                continue;
            }
            let offset = prev.text.chars().count();
            prev.segments.push(Segment {
                offset,
                line: line_no,
                col,
            });
            prev.text.push_str(piece);
            prev.continued = true;
            continue;
        }

        if payload.trim().is_empty() {
            continue;
        }
        lines.push(LogicalLine {
            text: payload,
            source_line: line_no,
            continued: false,
            segments: vec![Segment {
                offset: 0,
                line: line_no,
                col: PAYLOAD_START + 1,
            }],
        });
    }

    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comment_records_are_dropped() {
        assert!(read_fixed_format("000100* COMMENT").unwrap().is_empty());
        assert!(read_fixed_format("000100/ PAGE EJECT").unwrap().is_empty());
        assert!(read_fixed_format("000100D    DISPLAY X.").unwrap().is_empty());
    }

    #[test]
    fn payload_is_sliced_from_column_eight() {
        let lines = read_fixed_format("000200     MOVE A TO B.").unwrap();
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].text, "    MOVE A TO B.");
        assert_eq!(lines[0].source_line, 1);
        assert!(!lines[0].continued);
    }

    #[test]
    fn columns_past_72_are_ignored() {
        let rec = format!("000300 {:<65}", "    MOVE A TO B.");
        let rec = format!("{rec}SEQ12345");
        assert_eq!(rec.chars().count(), 80);
        let lines = read_fixed_format(&rec).unwrap();
        assert!(!lines[0].text.contains("SEQ"));
        assert_eq!(lines[0].text.chars().count(), 65);
    }

    #[test]
    fn continuation_merges_into_previous_line() {
        let src = "000200     MOVE A\n000300-    TO B.";
        let lines = read_fixed_format(src).unwrap();
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].text, "    MOVE A    TO B.");
        assert!(lines[0].continued);
        assert_eq!(lines[0].position(0), (1, 8));
        // "TO" sits at column 12 of record 2.
        let to = lines[0].text.find("TO").unwrap();
        assert_eq!(lines[0].position(to), (2, 12));
    }

    #[test]
    fn continued_literal_drops_the_reopening_quote() {
        let src = "000100     DISPLAY 'HELLO\n000200-    ' WORLD'.";
        let lines = read_fixed_format(src).unwrap();
        assert_eq!(lines[0].text, "    DISPLAY 'HELLO WORLD'.");
    }

    #[test]
    fn leading_continuation_is_an_error() {
        let err = read_fixed_format("000100* C\n000200-    TO B.").unwrap_err();
        assert_eq!(err, FrontendError::ContinuationWithoutPredecessor { line: 2 });
    }

    #[test]
    fn blank_payloads_are_skipped() {
        let lines = read_fixed_format("000100\n\n000200      \n000300     EXIT.").unwrap();
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].source_line, 4);
    }

    #[test]
    fn free_format_is_rejected() {
        let err = read_fixed_format("IDENTIFICATION DIVISION.\nPROGRAM-ID. X.").unwrap_err();
        assert_eq!(err, FrontendError::FreeFormat { line: 1 });
        let err = read_fixed_format("       >>SOURCE FORMAT FREE").unwrap_err();
        assert_eq!(err, FrontendError::FreeFormat { line: 1 });
    }

    #[test]
    fn crlf_records_are_accepted() {
        let lines = read_fixed_format("000100     MOVE A TO B.\r\n").unwrap();
        assert_eq!(lines[0].text, "    MOVE A TO B.");
    }
}
