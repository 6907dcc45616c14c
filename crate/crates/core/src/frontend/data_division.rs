use std::collections::HashMap;

use super::lexer::{Token, TokenKind};
use super::FrontendError;

/// A declared data item. Parent and children are indices into the owning
/// [`SymbolTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataItem {
    /// Uppercase name, or `FILLER` for anonymous entries.
    pub name: String,
    pub level: u8,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub line: usize,
}

impl DataItem {
    pub fn is_top_level(&self) -> bool {
        self.level == 1 || self.level == 77
    }

    pub fn is_filler(&self) -> bool {
        self.name == "FILLER"
    }
}

/// Level-number hierarchy of one program's DATA DIVISION.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    arena: Vec<DataItem>,
    by_name: HashMap<String, usize>,
    roots: Vec<usize>,
}

pub fn is_legal_level(level: u32) -> bool {
    (1..=49).contains(&level) || matches!(level, 66 | 77 | 88)
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares an item below `parent` (or as a root when `None`) and returns
    /// its index. A later declaration of the same name shadows earlier ones.
    pub fn declare(&mut self, name: &str, level: u8, parent: Option<usize>, line: usize) -> usize {
        let idx = self.arena.len();
        let name = name.to_ascii_uppercase();
        self.arena.push(DataItem {
            name: name.clone(),
            level,
            parent,
            children: Vec::new(),
            line,
        });
        match parent {
            Some(p) => self.arena[p].children.push(idx),
            None => self.roots.push(idx),
        }
        if name != "FILLER" {
            self.by_name.insert(name, idx);
        }
        idx
    }

    pub fn get(&self, name: &str) -> Option<&DataItem> {
        self.index_of(name).map(|i| &self.arena[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn item(&self, idx: usize) -> &DataItem {
        &self.arena[idx]
    }

    pub fn items(&self) -> &[DataItem] {
        &self.arena
    }

    pub fn roots(&self) -> impl Iterator<Item = &DataItem> {
        self.roots.iter().map(|&i| &self.arena[i])
    }

    pub fn root_indices(&self) -> &[usize] {
        &self.roots
    }

    /// Addressable names (FILLER excluded), in no particular order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.arena.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arena.is_empty()
    }
}

fn find_header(tokens: &[Token], first: &str, from: usize) -> Option<usize> {
    (from..tokens.len().saturating_sub(1)).find(|&i| {
        tokens[i].kind == TokenKind::Keyword
            && tokens[i].text == first
            && tokens[i + 1].kind == TokenKind::Keyword
            && tokens[i + 1].text == "DIVISION"
    })
}

/// Index of the `PROCEDURE` token opening the PROCEDURE DIVISION header.
pub fn procedure_division_start(tokens: &[Token]) -> Option<usize> {
    find_header(tokens, "PROCEDURE", 0)
}

/// Builds the symbol table from the DATA DIVISION entries in `tokens`.
///
/// Each entry is a period-terminated run starting with a level number.
/// Parentage follows the level-number stack; levels 66 and 88 attach to the
/// most recent 01/77 item.
pub fn parse_data_division(tokens: &[Token]) -> Result<SymbolTable, FrontendError> {
    let mut table = SymbolTable::new();
    let Some(start) = find_header(tokens, "DATA", 0) else {
        return Ok(table);
    };
    let end = procedure_division_start(&tokens[start..])
        .map(|i| start + i)
        .unwrap_or(tokens.len());
    let body = &tokens[start + 2..end];

    // (level, index) of the currently open groups.
    let mut stack: Vec<(u8, usize)> = Vec::new();
    let mut last_root: Option<usize> = None;

    for entry in body.split(|t| t.is_period()) {
        let Some(first) = entry.first() else { continue };
        if first.kind != TokenKind::Literal {
            // Section headers, FD/SD entries and COPY statements.
            continue;
        }
        let level = first
            .text
            .parse::<u32>()
            .ok()
            .filter(|l| is_legal_level(*l))
            .ok_or_else(|| FrontendError::MalformedLevel {
                level: first.text.clone(),
                line: first.line,
            })?;
        let name = match entry.get(1) {
            Some(t) if t.kind == TokenKind::Identifier => t.text.as_str(),
            _ => "FILLER",
        };
        let level = level as u8;

        match level {
            1 | 77 => {
                stack.clear();
                let idx = table.declare(name, level, None, first.line);
                stack.push((level, idx));
                last_root = Some(idx);
            }
            66 | 88 => {
                let parent = last_root.ok_or_else(|| FrontendError::MalformedLevel {
                    level: first.text.clone(),
                    line: first.line,
                })?;
                table.declare(name, level, Some(parent), first.line);
            }
            _ => {
                while stack.last().is_some_and(|&(l, _)| l >= level) {
                    stack.pop();
                }
                let parent = match stack.last() {
                    Some(&(l, idx)) if l != 77 => idx,
                    _ => {
                        return Err(FrontendError::MalformedLevel {
                            level: first.text.clone(),
                            line: first.line,
                        })
                    }
                };
                let idx = table.declare(name, level, Some(parent), first.line);
                stack.push((level, idx));
            }
        }
    }
    Ok(table)
}
