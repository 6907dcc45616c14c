//! Per-sentence intermediate representation written by `ingest`.
//!
//! One JSON object per line:
//! `{"file":..,"line":..,"type":..,"tokens":[{"text":..,"kind":..}]}`.
//! Data-name tokens additionally carry `"top"`, the name of their level-01/77
//! ancestor, so later stages can abstract without the symbol table.

use serde::{Deserialize, Serialize};

use super::{Origin, Program, Sentence, Token, TokenKind};
use crate::abstraction::resolve_top_level;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrToken {
    pub text: String,
    pub kind: TokenKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrRecord {
    pub file: String,
    pub line: usize,
    #[serde(rename = "type")]
    pub sentence_type: String,
    pub tokens: Vec<IrToken>,
}

impl IrRecord {
    pub fn from_sentence(sentence: &Sentence, program: &Program) -> Self {
        let tokens = sentence
            .tokens
            .iter()
            .map(|t| IrToken {
                text: t.text.clone(),
                kind: t.kind,
                top: (t.kind == TokenKind::DataName)
                    .then(|| resolve_top_level(&t.text, &program.symbols).ok())
                    .flatten(),
            })
            .collect();
        Self {
            file: sentence.origin.file.clone(),
            line: sentence.origin.line,
            sentence_type: sentence.sentence_type.clone(),
            tokens,
        }
    }

    pub fn to_sentence(&self) -> Sentence {
        Sentence {
            tokens: self
                .tokens
                .iter()
                .map(|t| Token {
                    text: t.text.clone(),
                    kind: t.kind,
                    line: self.line,
                    col: 0,
                })
                .collect(),
            sentence_type: self.sentence_type.clone(),
            origin: Origin {
                file: self.file.clone(),
                line: self.line,
            },
        }
    }
}

/// All sentences of a program as IR records, in source order.
pub fn program_records(program: &Program) -> Vec<IrRecord> {
    program
        .sentences
        .iter()
        .map(|s| IrRecord::from_sentence(s, program))
        .collect()
}
