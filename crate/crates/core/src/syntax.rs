//! Tokenizer shared by the query and rule languages.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at {pos}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: String,
    pub found: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, expected: impl Into<String>, found: impl Into<String>) -> Self {
        SyntaxError {
            pos,
            expected: expected.into(),
            found: found.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Var(String),
    Str(String),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    /// Raw text between `-[` and `]->`.
    Path(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Var(v) => write!(f, "?{v}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Path(p) => write!(f, "path `-[{p}]->`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Position of the first character of the path body, for `Tok::Path`.
    pub inner: Pos,
}

fn is_ident_char(c: char) -> bool {
    !c.is_whitespace() && !crate::graph::RESERVED_LABEL_CHARS.contains(&c)
}

pub fn is_var_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(tok) = simple {
            bump!();
            out.push(Token { tok, pos, inner: pos });
            continue;
        }
        if c.is_whitespace() {
            bump!();
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if c == '?' {
            bump!();
            let start = i;
            while i < chars.len() && is_var_char(chars[i]) {
                bump!();
            }
            if start == i {
                let found = chars.get(i).map_or("end of input".into(), |c| format!("{c:?}"));
                return Err(SyntaxError::new(Pos { line, col }, "variable name", found));
            }
            out.push(Token {
                tok: Tok::Var(chars[start..i].iter().collect()),
                pos,
                inner: pos,
            });
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(SyntaxError::new(Pos { line, col }, "closing `\"`", "end of line"));
                    }
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some('\\') => {
                        bump!();
                        match chars.get(i) {
                            Some(&e @ ('"' | '\\')) => {
                                s.push(e);
                                bump!();
                            }
                            other => {
                                let found = other.map_or("end of input".into(), |c| format!("{c:?}"));
                                return Err(SyntaxError::new(Pos { line, col }, "`\\\"` or `\\\\`", found));
                            }
                        }
                    }
                    Some(&ch) => {
                        s.push(ch);
                        bump!();
                    }
                }
            }
            out.push(Token {
                tok: Tok::Str(s),
                pos,
                inner: pos,
            });
        } else if c == '-' && chars.get(i + 1) == Some(&'[') {
            bump!();
            bump!();
            let inner = Pos { line, col };
            let start = i;
            loop {
                if i >= chars.len() || chars[i] == '\n' {
                    return Err(SyntaxError::new(Pos { line, col }, "`]->`", "end of line"));
                }
                if chars[i] == ']' && chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                    break;
                }
                bump!();
            }
            let body: String = chars[start..i].iter().collect();
            bump!();
            bump!();
            bump!();
            out.push(Token {
                tok: Tok::Path(body),
                pos,
                inner,
            });
        } else if is_ident_char(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                bump!();
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                pos,
                inner: pos,
            });
        } else {
            return Err(SyntaxError::new(pos, "a term, label or `(`", format!("{c:?}")));
        }
    }
    Ok(out)
}

impl Iterator for Cursor {
    type Item = Token;

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.at).cloned();
        if t.is_some() {
            self.at += 1;
        }
        t
    }
}

/// Cursor over a token list that remembers where input ends.
pub struct Cursor {
    toks: Vec<Token>,
    at: usize,
    end: Pos,
}

impl Cursor {
    pub fn new(text: &str) -> Result<Self, SyntaxError> {
        let toks = tokenize(text)?;
        let lines = text.split('\n').count();
        let last = text.rsplit('\n').next().unwrap_or("");
        Ok(Cursor {
            toks,
            at: 0,
            end: Pos {
                line: lines,
                col: last.chars().count() + 1,
            },
        })
    }

    pub fn peek(&self) -> Option<&Token> {
        self.toks.get(self.at)
    }

    pub fn peek2(&self) -> Option<&Token> {
        self.toks.get(self.at + 1)
    }

    pub fn pos(&self) -> Pos {
        self.peek().map_or(self.end, |t| t.pos)
    }

    pub fn found(&self) -> String {
        self.peek().map_or("end of input".into(), |t| t.tok.to_string())
    }

    pub fn error(&self, expected: &str) -> SyntaxError {
        SyntaxError::new(self.pos(), expected, self.found())
    }

    pub fn expect(&mut self, tok: &Tok, expected: &str) -> Result<Token, SyntaxError> {
        match self.peek() {
            Some(t) if &t.tok == tok => Ok(self.next().expect("peeked")),
            _ => Err(self.error(expected)),
        }
    }
}
