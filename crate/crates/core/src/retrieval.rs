//! Sentence embedding store and exhaustive cosine top-k search.
//!
//! A store is a binary matrix file (header: magic, count, dim, checkpoint
//! hash; then little-endian f32 rows) with a JSONL metadata sidecar at
//! `<path>.jsonl`, one record per row in the same order.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{abstract_sentence, AbstractSentence, AbstractionError, CorpusRecord};
use crate::frontend::{mark_data_names, FrontendError, Program, ReservedWords, SymbolTable, Token, TokenKind};
use crate::neural::{ModelCheckpoint, NeuralError};

const MAGIC: &[u8; 8] = b"CBLEMBST";

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("cannot embed an empty sentence")]
    EmptySentence,
    #[error("vector dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("snippet does not parse into a sentence: {0}")]
    UnparseableSnippet(String),
    #[error("embedding store is empty")]
    EmptyStore,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("duplicate record id {0}")]
    DuplicateId(usize),
    #[error("store was built with checkpoint {store}, but checkpoint {checkpoint} was given")]
    CheckpointMismatch { store: String, checkpoint: String },
    #[error("malformed embedding store: {0}")]
    MalformedStore(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: usize,
    #[serde(rename = "type")]
    pub sentence_type: String,
    pub source_text: String,
    pub file: String,
    pub line: usize,
    #[serde(skip)]
    pub z: Vec<f32>,
}

pub fn embed_sentence(
    id: usize,
    sentence: &AbstractSentence,
    ckpt: &ModelCheckpoint,
) -> Result<EmbeddingRecord, RetrievalError> {
    if sentence.tokens.is_empty() {
        return Err(RetrievalError::EmptySentence);
    }
    Ok(EmbeddingRecord {
        id,
        sentence_type: sentence.sentence_type.clone(),
        source_text: sentence.source_text.clone(),
        file: sentence.origin.file.clone(),
        line: sentence.origin.line,
        z: ckpt.embed(&sentence.tokens)?,
    })
}

/// `a·b / (‖a‖‖b‖)`, accumulated in f64. A zero vector has similarity 0.
/// The norms are taken as `sqrt(‖a‖²‖b‖²)` so a vector's similarity with
/// itself is exactly 1.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        log::warn!("cosine similarity with a zero vector is defined as 0");
        return Ok(0.0);
    }
    Ok((ab / (aa * bb).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit<'a> {
    pub record: &'a EmbeddingRecord,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    checkpoint_hash: String,
    dim: usize,
    records: Vec<EmbeddingRecord>,
}

impl EmbeddingStore {
    pub fn new(checkpoint_hash: impl Into<String>, dim: usize) -> Self {
        Self {
            checkpoint_hash: checkpoint_hash.into(),
            dim,
            records: Vec::new(),
        }
    }

    /// Embeds every corpus record with `ckpt`, keeping input order.
    pub fn build(records: &[CorpusRecord], ckpt: &ModelCheckpoint) -> Result<Self, RetrievalError> {
        let embedded = records
            .par_iter()
            .map(|r| embed_sentence(r.id, &r.to_abstract(), ckpt))
            .collect::<Result<Vec<_>, _>>()?;
        let mut store = Self::new(ckpt.hash(), ckpt.params.latent_dim());
        for r in embedded {
            store.push(r)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, record: EmbeddingRecord) -> Result<(), RetrievalError> {
        if record.z.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch {
                left: record.z.len(),
                right: self.dim,
            });
        }
        if !record.z.iter().all(|v| v.is_finite()) {
            return Err(RetrievalError::MalformedStore(format!("record {} has a non-finite vector", record.id)));
        }
        if self.records.iter().any(|r| r.id == record.id) {
            return Err(RetrievalError::DuplicateId(record.id));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn checkpoint_hash(&self) -> &str {
        &self.checkpoint_hash
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn vectors(&self) -> Vec<&[f32]> {
        self.records.iter().map(|r| r.z.as_slice()).collect()
    }

    /// The `k` records most similar to `z`, by descending score and then
    /// ascending id.
    pub fn nearest(&self, z: &[f32], k: usize) -> Result<Vec<Hit<'_>>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::InvalidK);
        }
        if self.records.is_empty() {
            return Err(RetrievalError::EmptyStore);
        }
        let mut hits = self
            .records
            .iter()
            .map(|r| Ok(Hit {
                record: r,
                score: cosine_similarity(z, &r.z)?,
            }))
            .collect::<Result<Vec<_>, RetrievalError>>()?;
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.record.id.cmp(&b.record.id)));
        hits.truncate(k);
        Ok(hits)
    }

    /// Runs a raw COBOL snippet through the frontend, abstraction and
    /// encoder, then searches the store. Only the first sentence is used.
    pub fn query(
        &self,
        snippet: &str,
        ckpt: &ModelCheckpoint,
        reserved: &ReservedWords,
        context: QueryContext<'_>,
        k: usize,
    ) -> Result<Vec<Hit<'_>>, RetrievalError> {
        let ckpt_hash = ckpt.hash();
        if ckpt_hash != self.checkpoint_hash {
            return Err(RetrievalError::CheckpointMismatch {
                store: self.checkpoint_hash.clone(),
                checkpoint: ckpt_hash,
            });
        }
        let sentence = abstract_snippet(snippet, reserved, &ckpt.abstraction, context)?;
        let z = ckpt.embed(&sentence.tokens)?;
        self.nearest(&z, k)
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".jsonl");
        PathBuf::from(s)
    }

    pub fn save(&self, path: &Path) -> Result<(), RetrievalError> {
        let hash = self.checkpoint_hash.as_bytes();
        let mut bytes = Vec::with_capacity(28 + hash.len() + 4 * self.dim * self.records.len());
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.dim as u64).to_le_bytes());
        bytes.extend_from_slice(&(hash.len() as u32).to_le_bytes());
        bytes.extend_from_slice(hash);
        for r in &self.records {
            for v in &r.z {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(path, bytes)?;

        let mut meta = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut meta, r).map_err(std::io::Error::from)?;
            meta.push(b'\n');
        }
        fs::File::create(Self::sidecar_path(path))?.write_all(&meta)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        let bytes = fs::read(path)?;
        let bad = |m: &str| RetrievalError::MalformedStore(m.to_string());
        if bytes.len() < 28 || &bytes[..8] != MAGIC {
            return Err(bad("not an embedding store"));
        }
        let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let dim = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
        let hash_len = u32::from_le_bytes(bytes[24..28].try_into().expect("4 bytes")) as usize;
        let hash = bytes.get(28..28 + hash_len).ok_or_else(|| bad("truncated header"))?;
        let hash = String::from_utf8(hash.to_vec()).map_err(|_| bad("checkpoint hash is not UTF-8"))?;
        let matrix = &bytes[28 + hash_len..];
        if matrix.len() != 4 * count * dim {
            return Err(bad("matrix size does not match header"));
        }

        let sidecar = fs::File::open(Self::sidecar_path(path))?;
        let mut store = Self::new(hash, dim);
        let mut rows = matrix.chunks_exact(4 * dim.max(1));
        for line in BufReader::new(sidecar).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut record: EmbeddingRecord =
                serde_json::from_str(&line).map_err(|e| RetrievalError::MalformedStore(e.to_string()))?;
            let row = if dim == 0 { Some(&[][..]) } else { rows.next() };
            let row = row.ok_or_else(|| bad("more metadata lines than vectors"))?;
            record.z = row
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            store.push(record)?;
        }
        if store.len() != count {
            return Err(bad("metadata line count does not match header"));
        }
        Ok(store)
    }
}

/// Symbol information available when abstracting a query snippet.
#[derive(Debug, Clone, Copy)]
pub enum QueryContext<'a> {
    /// No declarations: names are classified by position (see
    /// [`classify_snippet_names`]).
    Snippet,
    /// Names are resolved against a program's DATA DIVISION.
    Program(&'a SymbolTable),
}

/// Without a DATA DIVISION every user word lexes as an identifier. Words in
/// procedure-name positions (after PERFORM, GO TO, THRU/THROUGH, before
/// SECTION, or alone in a sentence) stay identifiers; the rest become data
/// names that are their own top-level item.
pub fn classify_snippet_names(tokens: &mut [Token]) {
    let n = tokens.len();
    for i in 0..n {
        if tokens[i].kind != TokenKind::Identifier {
            continue;
        }
        let prev = |k: usize| i.checked_sub(k).map(|j| tokens[j].text.as_str());
        let procedure_name = n == 1
            || matches!(prev(1), Some("PERFORM" | "THRU" | "THROUGH"))
            || (prev(1) == Some("TO") && prev(2) == Some("GO"))
            || tokens.get(i + 1).is_some_and(|t| t.text == "SECTION");
        if !procedure_name {
            tokens[i].kind = TokenKind::DataName;
        }
    }
}

/// Parses and abstracts the first sentence of a free-form snippet.
pub fn abstract_snippet(
    snippet: &str,
    reserved: &ReservedWords,
    cfg: &crate::abstraction::AbstractionConfig,
    context: QueryContext<'_>,
) -> Result<AbstractSentence, RetrievalError> {
    let program = Program::parse_free_text(snippet, "<query>", reserved)
        .map_err(|e: FrontendError| RetrievalError::UnparseableSnippet(e.to_string()))?;
    let mut sentence = program
        .sentences
        .into_iter()
        .next()
        .ok_or_else(|| RetrievalError::UnparseableSnippet("no sentence found".into()))?;
    let abstracted = match context {
        QueryContext::Program(symbols) => {
            mark_data_names(&mut sentence.tokens, symbols);
            abstract_sentence(&sentence, symbols, cfg)
        }
        QueryContext::Snippet => {
            classify_snippet_names(&mut sentence.tokens);
            let own: HashMap<String, String> = sentence
                .tokens
                .iter()
                .filter(|t| t.kind == TokenKind::DataName)
                .map(|t| (t.text.clone(), t.text.clone()))
                .collect();
            abstract_sentence(&sentence, &own, cfg)
        }
    };
    let abstracted = abstracted.map_err(|e: AbstractionError| RetrievalError::UnparseableSnippet(e.to_string()))?;
    if abstracted.tokens.is_empty() {
        return Err(RetrievalError::EmptySentence);
    }
    Ok(abstracted)
}

pub fn hit_ids(hits: &[Hit<'_>]) -> Vec<usize> {
    hits.iter().map(|h| h.record.id).collect()
}

/// 1 + the number of records scoring strictly higher than `id`; records
/// with identical vectors share a rank.
pub fn competition_rank(hits: &[Hit<'_>], id: usize) -> Option<usize> {
    let score = hits.iter().find(|h| h.record.id == id)?.score;
    Some(1 + hits.iter().filter(|h| h.score > score).count())
}
