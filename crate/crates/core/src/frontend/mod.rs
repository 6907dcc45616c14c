//! Fixed-format COBOL reader, lexer, DATA DIVISION symbol table and
//! sentence splitter.

mod data_division;
mod fixed_format;
pub mod ir;
mod lexer;
mod reserved;
mod sentences;

pub use data_division::{is_legal_level, parse_data_division, procedure_division_start, DataItem, SymbolTable};
pub use fixed_format::{read_fixed_format, LogicalLine, Segment};
pub use lexer::{mark_data_names, tokenize, Token, TokenKind};
pub use reserved::ReservedWords;
pub use sentences::{classify_sentence, split_sentences, Origin, Sentence, SentenceSplit, IDENTIFIER_TYPE, PROCEDURE_TYPE};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("line {line}: continuation record has no preceding line")]
    ContinuationWithoutPredecessor { line: usize },
    #[error("line {line}: free-format source is not supported (fixed format only)")]
    FreeFormat { line: usize },
    #[error("line {line}, column {col}: unterminated literal")]
    UnterminatedLiteral { line: usize, col: usize },
    #[error("line {line}: illegal level number '{level}'")]
    MalformedLevel { level: String, line: usize },
}

/// One source file taken through the whole frontend.
#[derive(Debug, Clone)]
pub struct Program {
    pub file: String,
    pub symbols: SymbolTable,
    pub sentences: Vec<Sentence>,
    pub warnings: Vec<String>,
}

impl Program {
    /// Reads, tokenizes and splits a fixed-format source file.
    pub fn parse(source: &str, file: &str, reserved: &ReservedWords) -> Result<Self, FrontendError> {
        let lines = read_fixed_format(source)?;
        Self::from_lines(&lines, file, reserved)
    }

    /// Same as [`Program::parse`] for text without card-image columns.
    pub fn parse_free_text(text: &str, file: &str, reserved: &ReservedWords) -> Result<Self, FrontendError> {
        let lines: Vec<LogicalLine> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| LogicalLine::free(l, i + 1))
            .collect();
        Self::from_lines(&lines, file, reserved)
    }

    fn from_lines(lines: &[LogicalLine], file: &str, reserved: &ReservedWords) -> Result<Self, FrontendError> {
        let mut tokens = tokenize(lines, reserved)?;
        let symbols = parse_data_division(&tokens)?;
        mark_data_names(&mut tokens, &symbols);
        // Without a PROCEDURE DIVISION header the whole text is treated as
        // procedure code (snippets).
        let body_start = match procedure_division_start(&tokens) {
            Some(i) => i,
            None if symbols.is_empty() && data_division_absent(&tokens) => 0,
            None => tokens.len(),
        };
        let split = split_sentences(&tokens[body_start..], file, reserved);
        Ok(Self {
            file: file.to_string(),
            symbols,
            sentences: split.sentences,
            warnings: split.warnings,
        })
    }
}

fn data_division_absent(tokens: &[Token]) -> bool {
    !tokens
        .windows(2)
        .any(|w| w[1].text == "DIVISION" && w[1].kind == TokenKind::Keyword && w[0].kind == TokenKind::Keyword)
}
