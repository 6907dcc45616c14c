use std::collections::HashSet;

const STANDARD: &str = include_str!("../../data/reserved_words.txt");

/// The language-construct word set: reserved words, verbs and operators.
///
/// Words are stored uppercase. Verbs are a subset of the reserved words and
/// are the only words that give a sentence its type.
#[derive(Debug, Clone, Default)]
pub struct ReservedWords {
    words: HashSet<String>,
    verbs: HashSet<String>,
}

impl ReservedWords {
    /// The bundled COBOL-85 word list.
    pub fn standard() -> Self {
        let mut set = Self::default();
        set.extend_from_str(STANDARD);
        set
    }

    /// Adds words from a word-list file.
    ///
    /// One word per line; `#` starts a comment line; `[verbs]` and
    /// `[keywords]` switch section (default `[keywords]`).
    pub fn extend_from_str(&mut self, text: &str) {
        let mut verbs = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[verbs]" => verbs = true,
                "[keywords]" => verbs = false,
                word => {
                    let word = word.to_ascii_uppercase();
                    if verbs {
                        self.verbs.insert(word.clone());
                    }
                    self.words.insert(word);
                }
            }
        }
    }

    pub fn is_reserved(&self, upper: &str) -> bool {
        self.words.contains(upper)
    }

    pub fn is_verb(&self, upper: &str) -> bool {
        self.verbs.contains(upper)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
