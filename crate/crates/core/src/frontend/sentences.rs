use super::lexer::{Token, TokenKind};
use super::reserved::ReservedWords;

/// Sentence type of sentences that do not open with a verb.
pub const IDENTIFIER_TYPE: &str = "IDENTIFIER";
pub const PROCEDURE_TYPE: &str = "PROCEDURE";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Origin {
    pub file: String,
    pub line: usize,
}

/// A period-terminated run of tokens, period excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub sentence_type: String,
    pub origin: Origin,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined token texts with the terminating period restored.
    pub fn source_text(&self) -> String {
        let mut text = self.tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
        text.push('.');
        text
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentenceSplit {
    pub sentences: Vec<Sentence>,
    pub warnings: Vec<String>,
}

pub fn classify_sentence(tokens: &[Token], reserved: &ReservedWords) -> String {
    match tokens.first() {
        Some(t) if t.kind == TokenKind::Keyword && reserved.is_verb(&t.text) => t.text.clone(),
        Some(t) if t.text == PROCEDURE_TYPE => PROCEDURE_TYPE.to_string(),
        _ => IDENTIFIER_TYPE.to_string(),
    }
}

/// Partitions PROCEDURE DIVISION tokens at terminating periods.
pub fn split_sentences(tokens: &[Token], file: &str, reserved: &ReservedWords) -> SentenceSplit {
    let mut split = SentenceSplit::default();
    let mut current: Vec<Token> = Vec::new();
    let flush = |current: &mut Vec<Token>, split: &mut SentenceSplit| {
        if current.is_empty() {
            return;
        }
        let tokens = std::mem::take(current);
        split.sentences.push(Sentence {
            sentence_type: classify_sentence(&tokens, reserved),
            origin: Origin {
                file: file.to_string(),
                line: tokens[0].line,
            },
            tokens,
        });
    };

    for tok in tokens {
        if tok.is_period() {
            flush(&mut current, &mut split);
        } else {
            current.push(tok.clone());
        }
    }
    if let Some(first) = current.first() {
        let msg = format!("{file}:{}: sentence without terminating period", first.line);
        log::warn!("{msg}");
        split.warnings.push(msg);
        flush(&mut current, &mut split);
    }
    split
}
