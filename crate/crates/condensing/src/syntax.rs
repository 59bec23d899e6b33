//! Tokenizer shared by the set-expression and program parsers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Slash,
    Plus,
    Amp,
    Star,
    Arrow,
    Dot,
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// Splits `text` into tokens; `comment` starts a comment running to the end
/// of the line.
pub(crate) fn lex(text: &str, comment: char) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == comment {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let simple = match c {
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                ';' => Some(Tok::Semi),
                '/' => Some(Tok::Slash),
                '+' => Some(Tok::Plus),
                '&' => Some(Tok::Amp),
                '*' => Some(Tok::Star),
                '.' => Some(Tok::Dot),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Spanned { tok, line, col });
                i += 1;
            } else if c == '<' && chars.get(i + 1) == Some(&'-') {
                out.push(Spanned { tok: Tok::Arrow, line, col });
                i += 2;
            } else if c.is_alphanumeric() || c == '_' || c == '\'' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                out.push(Spanned { tok: Tok::Ident(chars[start..i].iter().collect()), line, col });
            } else {
                return Err(Error::parse(line, col, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(out)
}

/// Cursor over a token list with error helpers.
pub(crate) struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Spanned]) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn bump(&mut self) -> Option<&'a Spanned> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    /// (line, col) of the next token, or just past the last one.
    pub fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(s) => (s.line, s.col),
            None => self.toks.last().map(|s| (s.line, s.col + 1)).unwrap_or((1, 1)),
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::parse(line, col, msg)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok, what: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    pub fn ident(&mut self, what: &str) -> Result<(&'a str, usize, usize)> {
        match self.toks.get(self.pos) {
            Some(Spanned { tok: Tok::Ident(s), line, col }) => {
                self.pos += 1;
                Ok((s.as_str(), *line, *col))
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_program_line() {
        let toks = lex("p(X,Y) <- { X/a ; Y/a }. % fact", '%').unwrap();
        let kinds: Vec<Tok> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(kinds[0], Tok::Ident("p".into()));
        assert_eq!(kinds[6], Tok::Arrow);
        assert_eq!(*kinds.last().unwrap(), Tok::Dot);
        assert_eq!((toks[6].line, toks[6].col), (1, 8));
    }

    #[test]
    fn rejects_stray_characters() {
        assert!(matches!(lex("p <- $", '%'), Err(Error::Parse { line: 1, col: 6, .. })));
    }
}
