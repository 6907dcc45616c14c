use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::{CorpusError, CorpusItem};

pub const PAD: usize = 0;
pub const SOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const RESERVED_TOKENS: [&str; 4] = ["<PAD>", "<SOS>", "<EOS>", "<UNK>"];

/// Dense token <-> id mapping. Ids 0-3 are PAD, SOS, EOS and UNK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, usize>,
}

impl Vocabulary {
    fn with_reserved() -> Self {
        let mut v = Self {
            id_to_token: Vec::new(),
            token_to_id: HashMap::new(),
        };
        for t in RESERVED_TOKENS {
            v.insert(t);
        }
        v
    }

    fn insert(&mut self, token: &str) -> usize {
        if let Some(&id) = self.token_to_id.get(token) {
            return id;
        }
        let id = self.id_to_token.len();
        self.id_to_token.push(token.to_string());
        self.token_to_id.insert(token.to_string(), id);
        id
    }

    /// Reserved tokens followed by corpus tokens in first-occurrence order.
    pub fn build<S: CorpusItem>(sentences: &[S]) -> Result<Self, CorpusError> {
        if sentences.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut v = Self::with_reserved();
        for s in sentences {
            for t in s.tokens() {
                v.insert(t);
            }
        }
        Ok(v)
    }

    /// Builds from an explicit token list; the first four entries must be
    /// the reserved tokens.
    pub fn from_tokens<I, T>(tokens: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let mut v = Self {
            id_to_token: Vec::new(),
            token_to_id: HashMap::new(),
        };
        for t in tokens {
            let t = t.as_ref();
            if v.token_to_id.contains_key(t) {
                return Err(CorpusError::MalformedVocabulary(format!("duplicate token '{t}'")));
            }
            v.insert(t);
        }
        if v.id_to_token.len() < RESERVED_TOKENS.len()
            || v.id_to_token[..RESERVED_TOKENS.len()] != RESERVED_TOKENS
        {
            return Err(CorpusError::MalformedVocabulary(
                "must start with <PAD>, <SOS>, <EOS>, <UNK>".into(),
            ));
        }
        Ok(v)
    }

    /// Parses the newline-delimited file format (line number = id).
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        Self::from_tokens(text.lines())
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for t in &self.id_to_token {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the file representation, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_file_string().as_bytes()))
    }

    pub fn id(&self, token: &str) -> usize {
        self.token_to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .map(|&i| self.token(i).unwrap_or(RESERVED_TOKENS[UNK]).to_string())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSentence {
    pub id: usize,
    /// Token ids fed to the encoder (reversed unless reversal is disabled).
    pub encoder_input: Vec<usize>,
    /// Forward-order token ids followed by EOS.
    pub decoder_target: Vec<usize>,
    pub sentence_type: String,
}

impl EncodedSentence {
    /// Source length (without EOS).
    pub fn len(&self) -> usize {
        self.encoder_input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.encoder_input.is_empty()
    }
}

pub fn encode<S: CorpusItem>(id: usize, s: &S, v: &Vocabulary) -> EncodedSentence {
    encode_with(id, s, v, true)
}

/// `reverse = false` keeps the encoder input in source order.
pub fn encode_with<S: CorpusItem>(id: usize, s: &S, v: &Vocabulary, reverse: bool) -> EncodedSentence {
    let forward: Vec<usize> = s.tokens().iter().map(|t| v.id(t)).collect();
    let mut encoder_input = forward.clone();
    if reverse {
        encoder_input.reverse();
    }
    let mut decoder_target = forward;
    decoder_target.push(EOS);
    EncodedSentence {
        id,
        encoder_input,
        decoder_target,
        sentence_type: s.sentence_type().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::AbstractSentence;
    use crate::frontend::Origin;
    use proptest::prelude::*;

    fn abs(tokens: &[&str]) -> AbstractSentence {
        AbstractSentence {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            sentence_type: tokens.first().unwrap_or(&"").to_string(),
            origin: Origin {
                file: "f".into(),
                line: 1,
            },
            source_text: String::new(),
        }
    }

    #[test]
    fn build_counts_distinct_tokens() {
        let s = abs(&["MOVE", "<VAR>", "TO", "<VAR>"]);
        let v = Vocabulary::build(std::slice::from_ref(&s)).unwrap();
        assert_eq!(v.len(), 7);
        assert_eq!(v.tokens()[4..], ["MOVE", "<VAR>", "TO"]);
        assert_eq!(Vocabulary::build(&[s.clone(), s]).unwrap(), v);
        assert_eq!(Vocabulary::build::<AbstractSentence>(&[]), Err(CorpusError::EmptyCorpus));
    }

    #[test]
    fn reserved_ids() {
        let v = Vocabulary::build(&[abs(&["GO"])]).unwrap();
        assert_eq!(v.id("<PAD>"), PAD);
        assert_eq!(v.id("<SOS>"), SOS);
        assert_eq!(v.id("<EOS>"), EOS);
        assert_eq!(v.id("<UNK>"), UNK);
    }

    #[test]
    fn encode_reverses_input() {
        let s = abs(&["MOVE", "<VAR>", "TO", "<VAR>"]);
        let v = Vocabulary::build(std::slice::from_ref(&s)).unwrap();
        let e = encode(0, &s, &v);
        assert_eq!(e.encoder_input, [v.id("<VAR>"), v.id("TO"), v.id("<VAR>"), v.id("MOVE")]);
        assert_eq!(e.decoder_target, [v.id("MOVE"), v.id("<VAR>"), v.id("TO"), v.id("<VAR>"), EOS]);
        let e = encode_with(0, &s, &v, false);
        assert_eq!(e.encoder_input, e.decoder_target[..4]);
    }

    #[test]
    fn unknown_tokens_map_to_unk() {
        let v = Vocabulary::build(&[abs(&["MOVE"])]).unwrap();
        let e = encode(0, &abs(&["MOVE", "WHAT"]), &v);
        assert_eq!(e.decoder_target, [v.id("MOVE"), UNK, EOS]);
    }

    #[test]
    fn single_token() {
        let s = abs(&["GO"]);
        let v = Vocabulary::build(std::slice::from_ref(&s)).unwrap();
        let e = encode(0, &s, &v);
        assert_eq!(e.encoder_input, [v.id("GO")]);
        assert_eq!(e.decoder_target, [v.id("GO"), EOS]);
    }

    #[test]
    fn file_format() {
        let v = Vocabulary::build(&[abs(&["MOVE", "<VAR>"])]).unwrap();
        let text = v.to_file_string();
        assert_eq!(text, "<PAD>\n<SOS>\n<EOS>\n<UNK>\nMOVE\n<VAR>\n");
        assert_eq!(Vocabulary::parse(&text).unwrap(), v);
        assert!(Vocabulary::parse("MOVE\n").is_err());
        assert!(Vocabulary::parse("<PAD>\n<SOS>\n<EOS>\n<UNK>\nA\nA\n").is_err());
        assert_eq!(v.hash().len(), 64);
    }

    proptest! {
        #[test]
        fn encode_invariants(words in proptest::collection::vec("[A-Z]{1,3}", 1..20)) {
            let refs: Vec<&str> = words.iter().map(String::as_str).collect();
            let s = abs(&refs);
            let v = Vocabulary::build(std::slice::from_ref(&s)).unwrap();
            let e = encode(0, &s, &v);
            let mut rev = e.encoder_input.clone();
            rev.reverse();
            rev.push(EOS);
            prop_assert_eq!(&rev, &e.decoder_target);
            prop_assert_eq!(v.decode(&e.decoder_target[..words.len()]), words);
        }
    }
}
