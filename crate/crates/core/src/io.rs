//! Line-oriented text formats for graphs (`.erg`) and taxonomies (`.ergt`).
//!
//! Graph documents:
//!
//! ```text
//! # comment
//! entity <token> <Label> ["external id"]
//! rel <Label> <token>+
//! ```
//!
//! Taxonomy documents hold one `Child < Parent` pair per line. Both formats
//! accept LF and CRLF line endings and ignore blank lines; writers emit LF and
//! a canonical order, so output is byte-for-byte reproducible.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{EntityId, ErGraph, GraphError, Label};
use crate::taxonomy::LabelTaxonomy;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: undeclared entity token {token:?}")]
    DanglingReference { line: usize, token: String },
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Word {
    Bare(String),
    Quoted(String),
}

/// Splits a line into whitespace-separated words; quoted words may contain
/// spaces and `\"` / `\\` escapes. `#` outside quotes ends the line.
fn words(text: &str, line: usize) -> Result<Vec<Word>, FormatError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            break;
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    None => return Err(parse_err(line, "unterminated quoted string")),
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some(e @ ('"' | '\\')) => s.push(e),
                        _ => return Err(parse_err(line, "bad escape in quoted string")),
                    },
                    Some(ch) => s.push(ch),
                }
            }
            out.push(Word::Quoted(s));
        } else {
            let mut s = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || ch == '#' || ch == '"' {
                    break;
                }
                s.push(ch);
                chars.next();
            }
            out.push(Word::Bare(s));
        }
    }
    Ok(out)
}

fn bare<'w>(w: Option<&'w Word>, line: usize, what: &str) -> Result<&'w str, FormatError> {
    match w {
        Some(Word::Bare(s)) => Ok(s),
        Some(Word::Quoted(_)) => Err(parse_err(line, format!("expected {what}, found a quoted string"))),
        None => Err(parse_err(line, format!("expected {what}"))),
    }
}

fn label(w: Option<&Word>, line: usize) -> Result<Label, FormatError> {
    let s = bare(w, line, "a label")?;
    Label::new(s).map_err(|_| parse_err(line, format!("invalid label {s:?}")))
}

pub fn load_graph(text: &str) -> Result<ErGraph, FormatError> {
    let mut g = ErGraph::new();
    let mut tokens: HashMap<String, EntityId> = HashMap::new();
    for (i, raw) in text.split('\n').enumerate() {
        let line = i + 1;
        let ws = words(raw.strip_suffix('\r').unwrap_or(raw), line)?;
        let Some(first) = ws.first() else { continue };
        match first {
            Word::Bare(k) if k == "entity" => {
                let token = bare(ws.get(1), line, "an entity token")?;
                let lab = label(ws.get(2), line)?;
                let ext = match ws.get(3) {
                    None => None,
                    Some(Word::Quoted(s)) => Some(s.as_str()),
                    Some(Word::Bare(s)) => {
                        return Err(parse_err(line, format!("external id must be quoted, found {s:?}")));
                    }
                };
                if ws.len() > 4 {
                    return Err(parse_err(line, "trailing words after entity declaration"));
                }
                if tokens.contains_key(token) {
                    return Err(parse_err(line, format!("entity token {token:?} declared twice")));
                }
                let id = g
                    .add_entity(lab, ext)
                    .map_err(|source| FormatError::Graph { line, source })?;
                tokens.insert(token.to_string(), id);
            }
            Word::Bare(k) if k == "rel" => {
                let lab = label(ws.get(1), line)?;
                if ws.len() < 3 {
                    return Err(parse_err(line, "relation needs at least one argument"));
                }
                let mut args = Vec::with_capacity(ws.len() - 2);
                for w in &ws[2..] {
                    let t = bare(Some(w), line, "an entity token")?;
                    let id = tokens.get(t).ok_or_else(|| FormatError::DanglingReference {
                        line,
                        token: t.to_string(),
                    })?;
                    args.push(*id);
                }
                g.add_relation(lab, &args)
                    .map_err(|source| FormatError::Graph { line, source })?;
            }
            _ => return Err(parse_err(line, "expected `entity` or `rel`")),
        }
    }
    Ok(g)
}

pub(crate) fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Canonical document: entities in id order, then relations in id order.
pub fn write_graph(g: &ErGraph) -> String {
    let mut out = String::new();
    for e in g.entities() {
        let _ = write!(out, "entity e{} {}", e.id.0, e.label);
        if let Some(ext) = &e.ext {
            let _ = write!(out, " {}", quote(ext));
        }
        out.push('\n');
    }
    for r in g.relations() {
        let _ = write!(out, "rel {}", r.label);
        for a in &r.args {
            let _ = write!(out, " e{}", a.0);
        }
        out.push('\n');
    }
    out
}

pub fn load_taxonomy(text: &str) -> Result<LabelTaxonomy, FormatError> {
    let mut tax = LabelTaxonomy::new();
    for (i, raw) in text.split('\n').enumerate() {
        let line = i + 1;
        let ws = words(raw.strip_suffix('\r').unwrap_or(raw), line)?;
        if ws.is_empty() {
            continue;
        }
        // accept `A<B` as well as `A < B`
        let flat: Vec<String> = ws
            .iter()
            .map(|w| match w {
                Word::Bare(s) => Ok(s.clone()),
                Word::Quoted(_) => Err(parse_err(line, "labels are not quoted")),
            })
            .collect::<Result<_, _>>()?;
        let joined = flat.join(" ");
        let Some((child, parent)) = joined.split_once('<') else {
            return Err(parse_err(line, "expected `Child < Parent`"));
        };
        let child =
            Label::new(child.trim()).map_err(|_| parse_err(line, format!("invalid label {:?}", child.trim())))?;
        let parent =
            Label::new(parent.trim()).map_err(|_| parse_err(line, format!("invalid label {:?}", parent.trim())))?;
        tax.declare(child, parent);
    }
    Ok(tax)
}

/// Declared pairs in ascending order.
pub fn write_taxonomy(tax: &LabelTaxonomy) -> String {
    let mut out = String::new();
    for (c, p) in tax.declared() {
        let _ = writeln!(out, "{c} < {p}");
    }
    out
}
