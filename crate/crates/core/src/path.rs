//! Regular path expressions over binary relations.
//!
//! ```text
//! alt     := seq ('|' seq)*
//! seq     := postfix ('/' postfix)*
//! postfix := primary ('*' | '+')*
//! primary := LABEL | '^' LABEL | '(' alt ')'
//! ```
//!
//! A step `l` follows a binary relation from its first to its second argument
//! when the relation label specializes `l`; `^l` follows it backwards. Only
//! arity-2 relations are traversed. `e*` includes the empty walk, so it relates
//! every entity to itself.
//!
//! Evaluation runs a breadth-first search over (entity, automaton state)
//! pairs of the Thompson automaton, which bounds the work by the size of that
//! product.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::graph::{EntityId, ErGraph, Label};
use crate::syntax::{Pos, SyntaxError};
use crate::taxonomy::LabelTaxonomy;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PathExpr {
    Step(Label),
    Inverse(Label),
    Seq(Vec<PathExpr>),
    Alt(Vec<PathExpr>),
    Star(Box<PathExpr>),
    Plus(Box<PathExpr>),
}

const PATH_OPERATORS: &[char] = &['/', '|', '*', '+', '^', '(', ')'];

impl PathExpr {
    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        Self::parse_at(text, Pos { line: 1, col: 1 })
    }

    /// Parses `text`, reporting positions relative to `origin`.
    pub fn parse_at(text: &str, origin: Pos) -> Result<Self, SyntaxError> {
        let mut p = PathParser {
            chars: text.chars().collect(),
            at: 0,
            origin,
        };
        let e = p.alt()?;
        p.skip_ws();
        if p.at < p.chars.len() {
            return Err(p.error("`/`, `|`, `*`, `+` or end of path"));
        }
        Ok(e)
    }

    /// Labels mentioned anywhere in the expression.
    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut BTreeSet<Label>) {
        match self {
            PathExpr::Step(l) | PathExpr::Inverse(l) => {
                out.insert(l.clone());
            }
            PathExpr::Seq(xs) | PathExpr::Alt(xs) => xs.iter().for_each(|x| x.collect_labels(out)),
            PathExpr::Star(x) | PathExpr::Plus(x) => x.collect_labels(out),
        }
    }

    /// Nesting depth of operators; a bare step has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            PathExpr::Step(_) | PathExpr::Inverse(_) => 0,
            PathExpr::Seq(xs) | PathExpr::Alt(xs) => 1 + xs.iter().map(PathExpr::depth).max().unwrap_or(0),
            PathExpr::Star(x) | PathExpr::Plus(x) => 1 + x.depth(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            PathExpr::Alt(_) => 0,
            PathExpr::Seq(_) => 1,
            PathExpr::Star(_) | PathExpr::Plus(_) => 2,
            PathExpr::Step(_) | PathExpr::Inverse(_) => 3,
        }
    }

    fn fmt_within(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_within(f, 0)?;
            return write!(f, ")");
        }
        match self {
            PathExpr::Step(l) => write!(f, "{l}"),
            PathExpr::Inverse(l) => write!(f, "^{l}"),
            PathExpr::Seq(xs) | PathExpr::Alt(xs) => {
                let (sep, inner) = if matches!(self, PathExpr::Seq(_)) {
                    ("/", 2)
                } else {
                    ("|", 1)
                };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    x.fmt_within(f, inner)?;
                }
                Ok(())
            }
            PathExpr::Star(x) => {
                x.fmt_within(f, 2)?;
                f.write_str("*")
            }
            PathExpr::Plus(x) => {
                x.fmt_within(f, 2)?;
                f.write_str("+")
            }
        }
    }
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_within(f, 0)
    }
}

impl std::str::FromStr for PathExpr {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PathExpr::parse(s)
    }
}

struct PathParser {
    chars: Vec<char>,
    at: usize,
    origin: Pos,
}

impl PathParser {
    fn pos(&self) -> Pos {
        Pos {
            line: self.origin.line,
            col: self.origin.col + self.at,
        }
    }

    fn error(&self, expected: &str) -> SyntaxError {
        let found = self
            .chars
            .get(self.at)
            .map_or("end of path".to_string(), |c| format!("{c:?}"));
        SyntaxError::new(self.pos(), expected, found)
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.at).is_some_and(|c| c.is_whitespace()) {
            self.at += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.chars.get(self.at) == Some(&c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn alt(&mut self) -> Result<PathExpr, SyntaxError> {
        let mut xs = vec![self.seq()?];
        while self.eat('|') {
            xs.push(self.seq()?);
        }
        Ok(if xs.len() == 1 {
            xs.pop().expect("one")
        } else {
            PathExpr::Alt(xs)
        })
    }

    fn seq(&mut self) -> Result<PathExpr, SyntaxError> {
        let mut xs = vec![self.postfix()?];
        while self.eat('/') {
            xs.push(self.postfix()?);
        }
        Ok(if xs.len() == 1 {
            xs.pop().expect("one")
        } else {
            PathExpr::Seq(xs)
        })
    }

    fn postfix(&mut self) -> Result<PathExpr, SyntaxError> {
        let mut e = self.primary()?;
        loop {
            if self.eat('*') {
                e = PathExpr::Star(Box::new(e));
            } else if self.eat('+') {
                e = PathExpr::Plus(Box::new(e));
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<PathExpr, SyntaxError> {
        if self.eat('(') {
            let e = self.alt()?;
            if !self.eat(')') {
                return Err(self.error("`)`"));
            }
            return Ok(e);
        }
        if self.eat('^') {
            return Ok(PathExpr::Inverse(self.label()?));
        }
        Ok(PathExpr::Step(self.label()?))
    }

    fn label(&mut self) -> Result<Label, SyntaxError> {
        self.skip_ws();
        let start = self.at;
        while self
            .chars
            .get(self.at)
            .is_some_and(|c| !c.is_whitespace() && !PATH_OPERATORS.contains(c))
        {
            self.at += 1;
        }
        let text: String = self.chars[start..self.at].iter().collect();
        Label::new(&text).map_err(|_| {
            self.at = start;
            self.error("a relation label")
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Dir {
    Forward,
    Backward,
}

/// Thompson automaton with epsilon moves.
struct Nfa {
    start: usize,
    accept: usize,
    eps: Vec<Vec<usize>>,
    moves: Vec<Vec<(Dir, Label, usize)>>,
}

impl Nfa {
    fn build(expr: &PathExpr) -> Self {
        let mut nfa = Nfa {
            start: 0,
            accept: 0,
            eps: Vec::new(),
            moves: Vec::new(),
        };
        let (s, a) = nfa.fragment(expr);
        nfa.start = s;
        nfa.accept = a;
        nfa
    }

    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.moves.push(Vec::new());
        self.eps.len() - 1
    }

    fn fragment(&mut self, expr: &PathExpr) -> (usize, usize) {
        match expr {
            PathExpr::Step(l) | PathExpr::Inverse(l) => {
                let (s, a) = (self.state(), self.state());
                let dir = if matches!(expr, PathExpr::Step(_)) {
                    Dir::Forward
                } else {
                    Dir::Backward
                };
                self.moves[s].push((dir, l.clone(), a));
                (s, a)
            }
            PathExpr::Seq(xs) => {
                let frags: Vec<_> = xs.iter().map(|x| self.fragment(x)).collect();
                for w in frags.windows(2) {
                    self.eps[w[0].1].push(w[1].0);
                }
                (frags[0].0, frags[frags.len() - 1].1)
            }
            PathExpr::Alt(xs) => {
                let (s, a) = (self.state(), self.state());
                for x in xs {
                    let (xs_, xa) = self.fragment(x);
                    self.eps[s].push(xs_);
                    self.eps[xa].push(a);
                }
                (s, a)
            }
            PathExpr::Star(x) | PathExpr::Plus(x) => {
                let (s, a) = (self.state(), self.state());
                let (xs_, xa) = self.fragment(x);
                self.eps[s].push(xs_);
                self.eps[xa].push(a);
                self.eps[xa].push(xs_);
                if matches!(expr, PathExpr::Star(_)) {
                    self.eps[s].push(a);
                }
                (s, a)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathWarning {
    /// No binary relation of the graph specializes this label.
    UnknownLabel(Label),
}

impl fmt::Display for PathWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathWarning::UnknownLabel(l) => write!(f, "no binary relation matches label {l}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathResult {
    pub pairs: BTreeSet<(EntityId, EntityId)>,
    pub warnings: Vec<PathWarning>,
}

/// All pairs `(a, b)` joined by a walk whose label word is in the language of
/// `expr`, optionally restricted to a start and/or end entity.
pub fn eval_path(
    g: &ErGraph,
    tax: &LabelTaxonomy,
    expr: &PathExpr,
    from: Option<EntityId>,
    to: Option<EntityId>,
) -> PathResult {
    let nfa = Nfa::build(expr);
    let n = g.entity_count();
    let states = nfa.eps.len();

    // adjacency per (direction, expression label)
    let mut adj: BTreeMap<(Dir, Label), Vec<Vec<EntityId>>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for label in expr.labels() {
        let mut fwd = vec![Vec::new(); n];
        let mut bwd = vec![Vec::new(); n];
        let mut seen = false;
        for r in g.relations().filter(|r| r.arity() == 2) {
            if tax.related(&r.label, &label) {
                seen = true;
                fwd[r.args[0].index()].push(r.args[1]);
                bwd[r.args[1].index()].push(r.args[0]);
            }
        }
        if !seen {
            warnings.push(PathWarning::UnknownLabel(label.clone()));
        }
        adj.insert((Dir::Forward, label.clone()), fwd);
        adj.insert((Dir::Backward, label), bwd);
    }

    let starts: Vec<EntityId> = match from {
        Some(f) if g.contains_entity(f) => vec![f],
        Some(_) => Vec::new(),
        None => g.entity_ids().collect(),
    };
    let mut pairs = BTreeSet::new();
    let mut visited = vec![false; n * states];
    let mut queue = VecDeque::new();
    for start in starts {
        visited.iter_mut().for_each(|v| *v = false);
        visited[start.index() * states + nfa.start] = true;
        queue.push_back((start, nfa.start));
        while let Some((e, s)) = queue.pop_front() {
            if s == nfa.accept && to.is_none_or(|t| t == e) {
                pairs.insert((start, e));
            }
            let mut push = |e2: EntityId, s2: usize, queue: &mut VecDeque<(EntityId, usize)>| {
                let slot = &mut visited[e2.index() * states + s2];
                if !*slot {
                    *slot = true;
                    queue.push_back((e2, s2));
                }
            };
            for &s2 in &nfa.eps[s] {
                push(e, s2, &mut queue);
            }
            for (dir, label, s2) in &nfa.moves[s] {
                let next = &adj[&(dir.clone(), label.clone())][e.index()];
                for &e2 in next {
                    push(e2, *s2, &mut queue);
                }
            }
        }
    }
    PathResult { pairs, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    fn p(s: &str) -> PathExpr {
        PathExpr::parse(s).unwrap()
    }

    fn chain() -> ErGraph {
        let mut g = ErGraph::new();
        let e: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|x| g.add_entity(l("P"), Some(x)).unwrap())
            .collect();
        g.add_relation(l("knows"), &[e[0], e[1]]).unwrap();
        g.add_relation(l("knows"), &[e[1], e[2]]).unwrap();
        g
    }

    fn ids(pairs: &[(u32, u32)]) -> BTreeSet<(EntityId, EntityId)> {
        pairs.iter().map(|&(a, b)| (EntityId(a), EntityId(b))).collect()
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(p("knows+"), PathExpr::Plus(Box::new(PathExpr::Step(l("knows")))));
        assert_eq!(p("a/b|c").to_string(), "a/b|c");
        assert_eq!(p("(a|b)/c*").to_string(), "(a|b)/c*");
        assert_eq!(p(" ^a / ( b ) ").to_string(), "^a/b");
        assert_eq!(p("(a/b)+").to_string(), "(a/b)+");
        assert_eq!(p("a**").to_string(), "a**");
        for bad in ["", "a/", "(a", "a)", "^", "a||b"] {
            assert!(PathExpr::parse(bad).is_err(), "{bad:?} parsed");
        }
    }

    #[test]
    fn plus_on_chain() {
        let r = eval_path(&chain(), &LabelTaxonomy::new(), &p("knows+"), None, None);
        assert_eq!(r.pairs, ids(&[(0, 1), (0, 2), (1, 2)]));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn star_is_reflexive_everywhere() {
        let mut g = chain();
        g.add_entity(l("Isolated"), None).unwrap();
        let r = eval_path(&g, &LabelTaxonomy::new(), &p("knows*"), None, None);
        for e in g.entity_ids() {
            assert!(r.pairs.contains(&(e, e)));
        }
    }

    #[test]
    fn sequence_and_inverse() {
        let mut g = ErGraph::new();
        let e: Vec<_> = (0..3).map(|_| g.add_entity(l("P"), None).unwrap()).collect();
        g.add_relation(l("worksWith"), &[e[0], e[1]]).unwrap();
        g.add_relation(l("knows"), &[e[1], e[2]]).unwrap();
        let tax = LabelTaxonomy::new();
        assert_eq!(
            eval_path(&g, &tax, &p("worksWith/knows"), None, None).pairs,
            ids(&[(0, 2)])
        );
        assert_eq!(
            eval_path(&g, &tax, &p("^knows/^worksWith"), None, None).pairs,
            ids(&[(2, 0)])
        );
    }

    #[test]
    fn endpoints_and_subsumption() {
        let mut tax = LabelTaxonomy::new();
        tax.declare(l("knows"), l("related"));
        let g = chain();
        let r = eval_path(&g, &tax, &p("related+"), Some(EntityId(0)), None);
        assert_eq!(r.pairs, ids(&[(0, 1), (0, 2)]));
        let r = eval_path(&g, &tax, &p("related+"), None, Some(EntityId(2)));
        assert_eq!(r.pairs, ids(&[(0, 2), (1, 2)]));
        let r = eval_path(&g, &LabelTaxonomy::new(), &p("related+"), None, None);
        assert!(r.pairs.is_empty());
        assert_eq!(r.warnings, vec![PathWarning::UnknownLabel(l("related"))]);
    }

    #[test]
    fn non_binary_relations_are_ignored() {
        let mut g = chain();
        g.add_relation(l("knows"), &[EntityId(2), EntityId(0), EntityId(1)])
            .unwrap();
        let r = eval_path(&g, &LabelTaxonomy::new(), &p("knows/knows/knows"), None, None);
        assert!(r.pairs.is_empty());
    }
}
