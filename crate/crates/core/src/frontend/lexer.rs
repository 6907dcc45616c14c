use serde::{Deserialize, Serialize};

use super::data_division::SymbolTable;
use super::fixed_format::LogicalLine;
use super::reserved::ReservedWords;
use super::FrontendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenKind {
    Keyword,
    DataName,
    Identifier,
    Literal,
    Punct,
}

impl TokenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenKind::Keyword => "KEYWORD",
            TokenKind::DataName => "DATA_NAME",
            TokenKind::Identifier => "IDENTIFIER",
            TokenKind::Literal => "LITERAL",
            TokenKind::Punct => "PUNCT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    pub line: usize,
    pub col: usize,
}

impl Token {
    pub fn new(text: impl Into<String>, kind: TokenKind) -> Self {
        Self {
            text: text.into(),
            kind,
            line: 0,
            col: 0,
        }
    }

    pub fn is_period(&self) -> bool {
        self.kind == TokenKind::Punct && self.text == "."
    }
}

const LITERAL_PREFIXES: [&str; 6] = ["X", "N", "Z", "G", "B", "NX"];

fn is_quote(c: char) -> bool {
    c == '\'' || c == '"'
}

fn is_numeric(word: &str) -> bool {
    let digits = word.strip_prefix(['+', '-']).unwrap_or(word);
    if digits.is_empty() {
        return false;
    }
    let mut seen_point = false;
    let mut seen_digit = false;
    let last = digits.len() - 1;
    for (i, c) in digits.char_indices() {
        match c {
            '0'..='9' => seen_digit = true,
            '.' | ',' if !seen_point && i != last => seen_point = true,
            _ => return false,
        }
    }
    seen_digit
}

fn punct_char(c: char) -> bool {
    matches!(c, '(' | ')' | ':')
}

struct Lexer<'a> {
    reserved: &'a ReservedWords,
    out: Vec<Token>,
}

impl Lexer<'_> {
    fn push(&mut self, line: &LogicalLine, offset: usize, text: String, kind: TokenKind) {
        let (l, c) = line.position(offset);
        self.out.push(Token {
            text,
            kind,
            line: l,
            col: c,
        });
    }

    fn classify(&self, piece: &str) -> (String, TokenKind) {
        if piece.len() == 1 && matches!(piece, "." | "," | ";" | "(" | ")" | ":") {
            return (piece.to_string(), TokenKind::Punct);
        }
        if is_numeric(piece) {
            return (piece.to_string(), TokenKind::Literal);
        }
        let upper = piece.to_ascii_uppercase();
        if self.reserved.is_reserved(&upper) {
            (upper, TokenKind::Keyword)
        } else {
            (upper, TokenKind::Identifier)
        }
    }

    /// True when the next word is a PICTURE character string.
    fn expects_picture(&self) -> bool {
        let mut rev = self.out.iter().rev();
        match rev.next() {
            Some(t) if t.kind == TokenKind::Keyword && (t.text == "PIC" || t.text == "PICTURE") => {
                true
            }
            Some(t) if t.kind == TokenKind::Keyword && t.text == "IS" => matches!(
                rev.next(),
                Some(p) if p.kind == TokenKind::Keyword && (p.text == "PIC" || p.text == "PICTURE")
            ),
            _ => false,
        }
    }

    fn word(&mut self, line: &LogicalLine, start: usize, word: &[char]) {
        // Trailing separators: a final period always precedes whitespace or
        // end of line here, which is what makes it a terminator.
        let mut body = word.len();
        let mut trailing = Vec::new();
        if body > 1 && word[body - 1] == '.' {
            body -= 1;
            trailing.push(body);
        }
        if body > 1 && matches!(word[body - 1], ',' | ';') {
            body -= 1;
            trailing.push(body);
        }
        trailing.reverse();

        if word.len() == 1 {
            let (text, kind) = self.classify(&word[0].to_string());
            self.push(line, start, text, kind);
            return;
        }

        let is_word: String = word[..body].iter().collect();
        if self.expects_picture() && !is_word.eq_ignore_ascii_case("IS") {
            let pic: String = word[..body].iter().collect();
            self.push(line, start, pic.to_ascii_uppercase(), TokenKind::Literal);
        } else {
            let mut piece_start = 0;
            for i in 0..=body {
                let at_end = i == body;
                if at_end || punct_char(word[i]) {
                    if piece_start < i {
                        let piece: String = word[piece_start..i].iter().collect();
                        let (text, kind) = self.classify(&piece);
                        self.push(line, start + piece_start, text, kind);
                    }
                    if !at_end {
                        self.push(line, start + i, word[i].to_string(), TokenKind::Punct);
                    }
                    piece_start = i + 1;
                }
            }
        }
        for i in trailing {
            self.push(line, start + i, word[i].to_string(), TokenKind::Punct);
        }
    }

    fn line(&mut self, line: &LogicalLine) -> Result<(), FrontendError> {
        let chars: Vec<char> = line.text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            if is_quote(chars[i]) {
                i = self.literal(line, &chars, start, i)?;
                continue;
            }
            let mut j = i;
            while j < chars.len() && !chars[j].is_whitespace() && !is_quote(chars[j]) {
                j += 1;
            }
            if j < chars.len() && is_quote(chars[j]) {
                let prefix: String = chars[start..j].iter().collect::<String>().to_ascii_uppercase();
                if LITERAL_PREFIXES.contains(&prefix.as_str()) {
                    i = self.literal(line, &chars, start, j)?;
                    continue;
                }
            }
            self.word(line, start, &chars[start..j]);
            i = j;
        }
        Ok(())
    }

    /// Lexes a quoted literal whose opening quote is at `quote`; returns the
    /// index just past the closing quote.
    fn literal(
        &mut self,
        line: &LogicalLine,
        chars: &[char],
        start: usize,
        quote: usize,
    ) -> Result<usize, FrontendError> {
        let q = chars[quote];
        let mut j = quote + 1;
        loop {
            match chars.get(j) {
                None => {
                    let (l, c) = line.position(start);
                    return Err(FrontendError::UnterminatedLiteral { line: l, col: c });
                }
                Some(&c) if c == q => {
                    if chars.get(j + 1) == Some(&q) {
                        j += 2;
                        continue;
                    }
                    break;
                }
                Some(_) => j += 1,
            }
        }
        let prefix: String = chars[start..quote].iter().collect::<String>().to_ascii_uppercase();
        let body: String = chars[quote..=j].iter().collect();
        self.push(line, start, format!("{prefix}{body}"), TokenKind::Literal);
        Ok(j + 1)
    }
}

/// Splits logical lines into tokens.
///
/// Data names cannot be known until the DATA DIVISION is parsed, so every
/// non-reserved word comes out as [`TokenKind::Identifier`]; see
/// [`mark_data_names`].
pub fn tokenize(lines: &[LogicalLine], reserved: &ReservedWords) -> Result<Vec<Token>, FrontendError> {
    let mut lexer = Lexer {
        reserved,
        out: Vec::new(),
    };
    for line in lines {
        lexer.line(line)?;
    }
    Ok(lexer.out)
}

/// Second pass: identifiers declared in the symbol table become data names.
pub fn mark_data_names(tokens: &mut [Token], symtab: &SymbolTable) {
    for tok in tokens.iter_mut() {
        if tok.kind == TokenKind::Identifier && symtab.contains(&tok.text) {
            tok.kind = TokenKind::DataName;
        }
    }
}
