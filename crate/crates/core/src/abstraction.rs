//! Abstract structure representation of sentences.
//!
//! Reserved words pass through unchanged, data names collapse to a variable
//! token (after resolving them to their level-01/77 ancestor), other
//! user-defined names collapse to an identifier token and literals to a
//! literal token.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{Origin, ReservedWords, Sentence, SymbolTable, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("unknown data name '{0}'")]
    UnknownName(String),
    #[error("invalid abstraction config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbstractionMode {
    /// Every variable maps to one token, every identifier to another.
    #[default]
    Single,
    /// Variables and identifiers are numbered by first occurrence in the
    /// sentence: `<VAR_0>`, `<VAR_1>`, ...
    Indexed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractionConfig {
    pub mode: AbstractionMode,
    pub var_token: String,
    pub id_token: String,
    pub lit_token: String,
    /// Fail on data names missing from the symbol table instead of treating
    /// them as identifiers.
    #[serde(default)]
    pub strict: bool,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        Self {
            mode: AbstractionMode::Single,
            var_token: "<VAR>".into(),
            id_token: "<ID>".into(),
            lit_token: "<LIT>".into(),
            strict: false,
        }
    }
}

fn indexed(base: &str, k: usize) -> String {
    match base.strip_suffix('>') {
        Some(stem) => format!("{stem}_{k}>"),
        None => format!("{base}_{k}"),
    }
}

fn is_indexed_of(base: &str, text: &str) -> bool {
    let (stem, tail) = match base.strip_suffix('>') {
        Some(stem) => (stem, ">"),
        None => (base, ""),
    };
    text.strip_prefix(stem)
        .and_then(|r| r.strip_prefix('_'))
        .and_then(|r| r.strip_suffix(tail))
        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

impl AbstractionConfig {
    pub fn validate(&self, reserved: &ReservedWords) -> Result<(), AbstractionError> {
        let specials = [&self.var_token, &self.id_token, &self.lit_token];
        for (i, a) in specials.iter().enumerate() {
            if a.is_empty() {
                return Err(AbstractionError::InvalidConfig("special tokens must be non-empty".into()));
            }
            if reserved.is_reserved(&a.to_ascii_uppercase()) {
                return Err(AbstractionError::InvalidConfig(format!("'{a}' is a reserved word")));
            }
            if specials[i + 1..].contains(a) {
                return Err(AbstractionError::InvalidConfig(format!("'{a}' is used twice")));
            }
        }
        Ok(())
    }

    /// True for any token this config can emit in place of a user name.
    pub fn is_special(&self, text: &str) -> bool {
        text == self.var_token
            || text == self.id_token
            || text == self.lit_token
            || is_indexed_of(&self.var_token, text)
            || is_indexed_of(&self.id_token, text)
    }
}

/// Resolves a data name to its top-level (level-01/77) ancestor.
pub trait TopLevelResolver {
    fn top_level(&self, name: &str) -> Option<String>;
}

impl TopLevelResolver for SymbolTable {
    fn top_level(&self, name: &str) -> Option<String> {
        resolve_top_level(name, self).ok()
    }
}

impl TopLevelResolver for HashMap<String, String> {
    fn top_level(&self, name: &str) -> Option<String> {
        self.get(name).cloned()
    }
}

/// Back-reference lookup: follows parent links up to the level-01/77 item.
pub fn resolve_top_level(name: &str, symtab: &SymbolTable) -> Result<String, AbstractionError> {
    let mut idx = symtab
        .index_of(name)
        .ok_or_else(|| AbstractionError::UnknownName(name.to_string()))?;
    while let Some(parent) = symtab.item(idx).parent {
        idx = parent;
    }
    Ok(symtab.item(idx).name.clone())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractSentence {
    pub tokens: Vec<String>,
    pub sentence_type: String,
    pub origin: Origin,
    pub source_text: String,
}

impl AbstractSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One line of the abstract corpus JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: usize,
    #[serde(rename = "type")]
    pub sentence_type: String,
    pub tokens: Vec<String>,
    pub source_text: String,
    pub file: String,
    pub line: usize,
}

impl CorpusRecord {
    pub fn new(id: usize, s: &AbstractSentence) -> Self {
        Self {
            id,
            sentence_type: s.sentence_type.clone(),
            tokens: s.tokens.clone(),
            source_text: s.source_text.clone(),
            file: s.origin.file.clone(),
            line: s.origin.line,
        }
    }

    pub fn to_abstract(&self) -> AbstractSentence {
        AbstractSentence {
            tokens: self.tokens.clone(),
            sentence_type: self.sentence_type.clone(),
            origin: Origin {
                file: self.file.clone(),
                line: self.line,
            },
            source_text: self.source_text.clone(),
        }
    }
}

/// Numbers distinct names by first occurrence.
#[derive(Default)]
struct FirstSeen(Vec<String>);

impl FirstSeen {
    fn index(&mut self, name: &str) -> usize {
        match self.0.iter().position(|n| n == name) {
            Some(k) => k,
            None => {
                self.0.push(name.to_string());
                self.0.len() - 1
            }
        }
    }
}

pub fn abstract_sentence(
    s: &Sentence,
    resolver: &dyn TopLevelResolver,
    cfg: &AbstractionConfig,
) -> Result<AbstractSentence, AbstractionError> {
    let mut vars = FirstSeen::default();
    let mut ids = FirstSeen::default();
    let mut tokens = Vec::with_capacity(s.tokens.len());

    let identifier = |name: &str, ids: &mut FirstSeen| match cfg.mode {
        AbstractionMode::Single => cfg.id_token.clone(),
        AbstractionMode::Indexed => indexed(&cfg.id_token, ids.index(name)),
    };

    for tok in &s.tokens {
        if tok.is_period() {
            continue;
        }
        if cfg.is_special(&tok.text) {
            tokens.push(tok.text.clone());
            continue;
        }
        let out = match tok.kind {
            TokenKind::Keyword | TokenKind::Punct => tok.text.clone(),
            TokenKind::Literal => cfg.lit_token.clone(),
            TokenKind::Identifier => identifier(&tok.text, &mut ids),
            TokenKind::DataName => match resolver.top_level(&tok.text) {
                Some(top) => match cfg.mode {
                    AbstractionMode::Single => cfg.var_token.clone(),
                    AbstractionMode::Indexed => indexed(&cfg.var_token, vars.index(&top)),
                },
                None if cfg.strict => return Err(AbstractionError::UnknownName(tok.text.clone())),
                None => identifier(&tok.text, &mut ids),
            },
        };
        tokens.push(out);
    }

    Ok(AbstractSentence {
        tokens,
        sentence_type: s.sentence_type.clone(),
        origin: s.origin.clone(),
        source_text: s.source_text(),
    })
}
