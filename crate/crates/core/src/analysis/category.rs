use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Conditional,
    DataManipulation,
    Looping,
    Io,
    Kwds,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Conditional,
        Category::DataManipulation,
        Category::Looping,
        Category::Io,
        Category::Kwds,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Conditional => "conditional",
            Category::DataManipulation => "data_manipulation",
            Category::Looping => "looping",
            Category::Io => "i/o",
            Category::Kwds => "kwds",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown category '{s}'"))
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Sentence type → category, with an optional catch-all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMap {
    types: BTreeMap<String, Category>,
    fallback: Option<Category>,
}

impl Default for CategoryMap {
    fn default() -> Self {
        let mut types = BTreeMap::new();
        let groups: [(Category, &[&str]); 4] = [
            (Category::Conditional, &["IF", "EVALUATE"]),
            (Category::Looping, &["PERFORM", "GO", "SEARCH"]),
            (
                Category::DataManipulation,
                &[
                    "MOVE", "ADD", "SUBTRACT", "COMPUTE", "DIVIDE", "INITIALIZE", "SET", "STRING", "INSPECT",
                ],
            ),
            (
                Category::Io,
                &["OPEN", "CLOSE", "READ", "WRITE", "REWRITE", "ACCEPT", "START", "DISPLAY"],
            ),
        ];
        for (cat, names) in groups {
            for n in names {
                types.insert((*n).to_string(), cat);
            }
        }
        Self {
            types,
            fallback: Some(Category::Kwds),
        }
    }
}

impl CategoryMap {
    /// Parses `TYPE category` lines. `*` names the catch-all category;
    /// without one, unlisted types are an error at lookup. `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self, AnalysisError> {
        let mut map = Self {
            types: BTreeMap::new(),
            fallback: None,
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| AnalysisError::MalformedCategoryMap { line: i + 1, message };
            let mut parts = line.split_whitespace();
            let (Some(ty), Some(cat), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad(format!("expected 'TYPE category', got '{line}'")));
            };
            let cat: Category = cat.parse().map_err(bad)?;
            if ty == "*" {
                map.fallback = Some(cat);
            } else {
                map.types.insert(ty.to_ascii_uppercase(), cat);
            }
        }
        Ok(map)
    }

    pub fn get(&self, sentence_type: &str) -> Option<Category> {
        self.types.get(sentence_type).copied().or(self.fallback)
    }

    /// Categories for each type, or every type that has none.
    pub fn assign<'a, I: IntoIterator<Item = &'a str>>(&self, types: I) -> Result<Vec<Category>, AnalysisError> {
        let mut out = Vec::new();
        let mut missing = Vec::new();
        for t in types {
            match self.get(t) {
                Some(c) => out.push(c),
                None => missing.push(t.to_string()),
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            missing.sort();
            missing.dedup();
            Err(AnalysisError::UnmappedType(missing))
        }
    }
}
