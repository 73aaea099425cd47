//! Conjunctive query patterns with label constraints and path atoms.
//!
//! ```text
//! query      := item*
//! item       := atom | constraint | path_atom
//! atom       := LABEL '(' term (',' term)* ')'
//! constraint := VAR ':' LABEL
//! path_atom  := term '-[' path ']->' term
//! term       := VAR | STRING
//! VAR        := '?' [A-Za-z0-9_]+
//! STRING     := '"' ( [^"\\\n] | '\"' | '\\' )* '"'
//! ```
//!
//! Items are separated by whitespace; `#` starts a comment that runs to the
//! end of the line. Variables become pattern entities labelled with their
//! constraint, or with the universal label `_` when unconstrained; quoted
//! strings are constants resolved by external id in the data graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{EntityId, ErGraph, GraphError, Label};
use crate::matcher::{find_image_tuples, ErMapping, MatchOptions};
use crate::path::{eval_path, PathExpr, PathWarning};
use crate::syntax::{Cursor, Pos, SyntaxError, Tok};
use crate::taxonomy::LabelTaxonomy;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("variable ?{0} is not constrained by any atom, label or path")]
    UnconstrainedVariable(String),
    #[error("constant {0:?} does not name an entity of the data graph")]
    UnresolvedConstant(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A term of a pattern: variable or constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "\"{}\"", c.replace('\\', "\\\\").replace('"', "\\\"")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathAtom {
    pub expr: PathExpr,
    pub from: EntityId,
    pub to: EntityId,
}

/// A parsed pattern: the pattern graph plus which of its entities are named
/// variables and which are constants.
#[derive(Debug, Clone)]
pub struct QueryPattern {
    pub pattern: ErGraph,
    pub var_names: BTreeMap<EntityId, String>,
    pub const_refs: BTreeMap<EntityId, String>,
    pub path_atoms: Vec<PathAtom>,
}

impl QueryPattern {
    pub fn parse(text: &str) -> Result<Self, QueryError> {
        parse_query(text)
    }

    pub fn term(&self, e: EntityId) -> Term {
        match self.var_names.get(&e) {
            Some(v) => Term::Var(v.clone()),
            None => Term::Const(self.const_refs.get(&e).cloned().unwrap_or_default()),
        }
    }

    pub fn var(&self, name: &str) -> Option<EntityId> {
        self.var_names.iter().find(|(_, v)| *v == name).map(|(e, _)| *e)
    }

    /// Variable names, ascending.
    pub fn variables(&self) -> Vec<String> {
        let mut vs: Vec<String> = self.var_names.values().cloned().collect();
        vs.sort();
        vs
    }

    /// Every variable must occur in a relation or path atom or carry a
    /// label other than `_`.
    pub fn check(&self) -> Result<(), QueryError> {
        let in_paths: BTreeSet<EntityId> = self.path_atoms.iter().flat_map(|p| [p.from, p.to]).collect();
        for (&e, name) in &self.var_names {
            if self.pattern.incident(e).is_empty() && !in_paths.contains(&e) && self.pattern.entity_label(e).is_top() {
                return Err(QueryError::UnconstrainedVariable(name.clone()));
            }
        }
        Ok(())
    }

    fn canonical(&self) -> Canonical {
        let vars = self
            .var_names
            .iter()
            .map(|(e, v)| (v.clone(), self.pattern.entity_label(*e).clone()))
            .collect();
        let consts = self.const_refs.values().cloned().collect();
        let mut relations: Vec<(Label, Vec<Term>)> = self
            .pattern
            .relations()
            .map(|r| (r.label.clone(), r.args.iter().map(|a| self.term(*a)).collect()))
            .collect();
        relations.sort();
        let paths = self
            .path_atoms
            .iter()
            .map(|p| (p.expr.clone(), self.term(p.from), self.term(p.to)))
            .collect();
        Canonical {
            vars,
            consts,
            relations,
            paths,
        }
    }
}

#[derive(PartialEq)]
struct Canonical {
    vars: BTreeMap<String, Label>,
    consts: BTreeSet<String>,
    relations: Vec<(Label, Vec<Term>)>,
    paths: Vec<(PathExpr, Term, Term)>,
}

/// Structural equality: same variables, labels, constants, relation multiset
/// and path atoms, independent of entity numbering.
impl PartialEq for QueryPattern {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

/// Prints constraints, then atoms, then path atoms, one per line.
impl fmt::Display for QueryPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (e, v) in &self.var_names {
            let label = self.pattern.entity_label(*e);
            if !label.is_top() {
                writeln!(f, "?{v} : {label}")?;
            }
        }
        for r in self.pattern.relations() {
            let args: Vec<String> = r.args.iter().map(|a| self.term(*a).to_string()).collect();
            writeln!(f, "{}({})", r.label, args.join(", "))?;
        }
        for p in &self.path_atoms {
            writeln!(f, "{} -[{}]-> {}", self.term(p.from), p.expr, self.term(p.to))?;
        }
        Ok(())
    }
}

/// Collects items, then lays them out as a pattern graph with entities in
/// order of first appearance.
#[derive(Default)]
pub(crate) struct PatternBuilder {
    terms: Vec<Term>,
    index: BTreeMap<Term, usize>,
    constraints: BTreeMap<usize, Label>,
    atoms: Vec<(Label, Vec<usize>)>,
    paths: Vec<(PathExpr, usize, usize)>,
}

impl PatternBuilder {
    pub(crate) fn term(&mut self, t: Term) -> usize {
        if let Some(&i) = self.index.get(&t) {
            return i;
        }
        self.terms.push(t.clone());
        self.index.insert(t, self.terms.len() - 1);
        self.terms.len() - 1
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.atoms.is_empty()
    }

    pub(crate) fn has_paths(&self) -> bool {
        !self.paths.is_empty()
    }

    /// Parses one item at the cursor.
    pub(crate) fn item(&mut self, cur: &mut Cursor) -> Result<(), SyntaxError> {
        let Some(first) = cur.peek().cloned() else {
            return Err(cur.error("an atom, label constraint or path atom"));
        };
        match &first.tok {
            Tok::Ident(name) => {
                let label = parse_label(name, first.pos)?;
                cur.next();
                cur.expect(&Tok::LParen, "`(`")?;
                let mut args = vec![self.parse_term(cur)?];
                loop {
                    match cur.peek().map(|t| &t.tok) {
                        Some(Tok::Comma) => {
                            cur.next();
                            args.push(self.parse_term(cur)?);
                        }
                        Some(Tok::RParen) => {
                            cur.next();
                            break;
                        }
                        _ => return Err(cur.error("`,` or `)`")),
                    }
                }
                self.atoms.push((label, args));
            }
            Tok::Var(_) | Tok::Str(_) => {
                let is_constraint =
                    matches!(first.tok, Tok::Var(_)) && matches!(cur.peek2().map(|t| &t.tok), Some(Tok::Colon));
                if is_constraint {
                    let subject = self.parse_term(cur)?;
                    cur.next();
                    let tok = cur.next();
                    let label = match &tok {
                        Some(t) => match &t.tok {
                            Tok::Ident(name) => parse_label(name, t.pos)?,
                            other => return Err(SyntaxError::new(t.pos, "a label", other.to_string())),
                        },
                        None => return Err(cur.error("a label")),
                    };
                    match self.constraints.get(&subject) {
                        Some(existing) if *existing != label => {
                            return Err(SyntaxError::new(
                                first.pos,
                                format!("the earlier constraint {existing}"),
                                format!("conflicting constraint {label}"),
                            ));
                        }
                        _ => {
                            self.constraints.insert(subject, label);
                        }
                    }
                } else {
                    let from = self.parse_term(cur)?;
                    let tok = cur.next();
                    let expr = match &tok {
                        Some(t) => match &t.tok {
                            Tok::Path(body) => PathExpr::parse_at(body, t.inner)?,
                            other => {
                                let what = if matches!(first.tok, Tok::Var(_)) {
                                    "`:` or `-[`"
                                } else {
                                    "`-[`"
                                };
                                return Err(SyntaxError::new(t.pos, what, other.to_string()));
                            }
                        },
                        None => return Err(cur.error("`-[`")),
                    };
                    let to = self.parse_term(cur)?;
                    self.paths.push((expr, from, to));
                }
            }
            other => {
                return Err(SyntaxError::new(
                    first.pos,
                    "an atom, label constraint or path atom",
                    other.to_string(),
                ));
            }
        }
        Ok(())
    }

    fn parse_term(&mut self, cur: &mut Cursor) -> Result<usize, SyntaxError> {
        match cur.peek().map(|t| t.tok.clone()) {
            Some(Tok::Var(v)) => {
                cur.next();
                Ok(self.term(Term::Var(v)))
            }
            Some(Tok::Str(s)) => {
                cur.next();
                Ok(self.term(Term::Const(s)))
            }
            _ => Err(cur.error("`?variable` or \"constant\"")),
        }
    }

    pub(crate) fn build(self) -> Result<QueryPattern, QueryError> {
        let mut pattern = ErGraph::new();
        let mut var_names = BTreeMap::new();
        let mut const_refs = BTreeMap::new();
        let mut ids = Vec::with_capacity(self.terms.len());
        for (i, t) in self.terms.iter().enumerate() {
            let label = self.constraints.get(&i).cloned().unwrap_or_else(Label::top);
            let id = pattern.add_entity(label, None)?;
            match t {
                Term::Var(v) => var_names.insert(id, v.clone()),
                Term::Const(c) => const_refs.insert(id, c.clone()),
            };
            ids.push(id);
        }
        for (label, args) in self.atoms {
            let args: Vec<EntityId> = args.into_iter().map(|a| ids[a]).collect();
            pattern.add_relation(label, &args)?;
        }
        let path_atoms = self
            .paths
            .into_iter()
            .map(|(expr, from, to)| PathAtom {
                expr,
                from: ids[from],
                to: ids[to],
            })
            .collect();
        let q = QueryPattern {
            pattern,
            var_names,
            const_refs,
            path_atoms,
        };
        q.check()?;
        Ok(q)
    }
}

fn parse_label(text: &str, pos: Pos) -> Result<Label, SyntaxError> {
    Label::new(text).map_err(|_| SyntaxError::new(pos, "a label", format!("`{text}`")))
}

pub fn parse_query(text: &str) -> Result<QueryPattern, QueryError> {
    let mut cur = Cursor::new(text)?;
    let mut b = PatternBuilder::default();
    while cur.peek().is_some() {
        b.item(&mut cur)?;
    }
    b.build()
}

#[derive(Debug, Clone, Default)]
pub struct AnswerOptions {
    pub limit: Option<usize>,
    pub parallel: bool,
}

/// Binding rows: one column per variable (ascending name), rows ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnswerTable {
    pub variables: Vec<String>,
    pub rows: Vec<Vec<EntityId>>,
    pub warnings: Vec<PathWarning>,
}

/// Total mappings of the pattern into `g` that pin constants and satisfy
/// every path atom, ordered by image tuple.
pub fn answer_mappings<'a>(
    q: &'a QueryPattern,
    g: &'a ErGraph,
    tax: &LabelTaxonomy,
    parallel: bool,
) -> Result<(Vec<ErMapping<'a>>, Vec<PathWarning>), QueryError> {
    let mut restrict: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
    for (&e, ext) in &q.const_refs {
        let target = g
            .by_ext(ext)
            .ok_or_else(|| QueryError::UnresolvedConstant(ext.clone()))?;
        restrict.insert(e, [target].into());
    }

    let mut warnings = Vec::new();
    let mut path_pairs = Vec::with_capacity(q.path_atoms.len());
    for atom in &q.path_atoms {
        let pin = |e: EntityId| {
            restrict
                .get(&e)
                .filter(|s| s.len() == 1)
                .and_then(|s| s.iter().next().copied())
        };
        let res = eval_path(g, tax, &atom.expr, pin(atom.from), pin(atom.to));
        for w in res.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        let starts: BTreeSet<EntityId> = res.pairs.iter().map(|p| p.0).collect();
        let ends: BTreeSet<EntityId> = res.pairs.iter().map(|p| p.1).collect();
        narrow(&mut restrict, atom.from, starts);
        narrow(&mut restrict, atom.to, ends);
        path_pairs.push(res.pairs);
    }

    let opts = MatchOptions {
        restrict,
        parallel,
        ..MatchOptions::default()
    };
    let tuples = find_image_tuples(&q.pattern, g, tax, &opts);
    let mut out = Vec::new();
    for t in tuples {
        let img = |e: EntityId| t[e.index()].expect("total mapping");
        if q.path_atoms
            .iter()
            .zip(&path_pairs)
            .all(|(atom, pairs)| pairs.contains(&(img(atom.from), img(atom.to))))
        {
            let map = t
                .iter()
                .enumerate()
                .map(|(i, x)| (EntityId(i as u32), x.expect("total mapping")))
                .collect();
            out.push(ErMapping::new(&q.pattern, g, tax, map).expect("search only emits in-graph ids"));
        }
    }
    Ok((out, warnings))
}

fn narrow(restrict: &mut BTreeMap<EntityId, BTreeSet<EntityId>>, e: EntityId, allowed: BTreeSet<EntityId>) {
    match restrict.get_mut(&e) {
        Some(existing) => existing.retain(|x| allowed.contains(x)),
        None => {
            restrict.insert(e, allowed);
        }
    }
}

/// Answers a query: distinct binding rows of its variables.
pub fn answer(
    q: &QueryPattern,
    g: &ErGraph,
    tax: &LabelTaxonomy,
    opts: &AnswerOptions,
) -> Result<AnswerTable, QueryError> {
    let (mappings, warnings) = answer_mappings(q, g, tax, opts.parallel)?;
    let mut columns: Vec<(String, EntityId)> = q.var_names.iter().map(|(e, v)| (v.clone(), *e)).collect();
    columns.sort();
    let rows: BTreeSet<Vec<EntityId>> = mappings
        .iter()
        .map(|m| columns.iter().map(|(_, e)| m.get(*e).expect("total")).collect())
        .collect();
    let mut rows: Vec<Vec<EntityId>> = rows.into_iter().collect();
    if let Some(limit) = opts.limit {
        rows.truncate(limit);
    }
    Ok(AnswerTable {
        variables: columns.into_iter().map(|(v, _)| v).collect(),
        rows,
        warnings,
    })
}
