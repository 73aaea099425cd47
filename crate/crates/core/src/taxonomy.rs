//! Label taxonomy: a binary relation over labels kept closed under
//! reflexivity and transitivity.
//!
//! Pairs are directional: `(specific, general)`. `related(a, b)` reads
//! "`a` specializes `b`". Matching asks whether a data label specializes the
//! query label, so a query for `Person` finds a `Student` once
//! `Student < Person` is declared.
//!
//! Cycles are legal; mutually related labels form an equivalence class.
//! Every label specializes the universal label `_`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::graph::Label;

#[derive(Debug, Clone, Default)]
pub struct LabelTaxonomy {
    labels: Vec<Label>,
    index: HashMap<Label, usize>,
    declared: BTreeSet<(Label, Label)>,
    /// `up[i]` has bit `j` set iff `labels[i]` specializes `labels[j]`.
    up: Vec<Vec<u64>>,
    neighbours: Vec<BTreeSet<usize>>,
}

impl LabelTaxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, label: Label) -> usize {
        if let Some(&i) = self.index.get(&label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.clone());
        self.index.insert(label, i);
        let words = self.labels.len().div_ceil(64);
        for row in &mut self.up {
            row.resize(words, 0);
        }
        let mut row = vec![0u64; words];
        row[i / 64] |= 1 << (i % 64);
        self.up.push(row);
        self.neighbours.push(BTreeSet::new());
        i
    }

    fn bit(&self, a: usize, b: usize) -> bool {
        self.up[a][b / 64] & (1 << (b % 64)) != 0
    }

    /// Declares `child < parent` and updates the closure incrementally.
    pub fn declare(&mut self, child: Label, parent: Label) {
        if !self.declared.insert((child.clone(), parent.clone())) {
            return;
        }
        let c = self.intern(child);
        let p = self.intern(parent);
        if c != p {
            self.neighbours[c].insert(p);
            self.neighbours[p].insert(c);
        }
        if self.bit(c, p) {
            return;
        }
        // everything below c inherits everything above p
        let above = self.up[p].clone();
        for a in 0..self.labels.len() {
            if self.bit(a, c) {
                for (w, bits) in self.up[a].iter_mut().zip(&above) {
                    *w |= bits;
                }
            }
        }
    }

    /// Whether `a` specializes `b`. Reflexive for every label, declared or not.
    pub fn related(&self, a: &Label, b: &Label) -> bool {
        if a == b || b.is_top() {
            return true;
        }
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.bit(i, j),
            _ => false,
        }
    }

    /// Labels mentioned by at least one declaration, ascending.
    pub fn labels(&self) -> BTreeSet<Label> {
        self.labels.iter().cloned().collect()
    }

    pub fn declared(&self) -> impl Iterator<Item = &(Label, Label)> + '_ {
        self.declared.iter()
    }

    pub fn declared_count(&self) -> usize {
        self.declared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.declared.is_empty()
    }

    /// Every label `b` with `related(l, b)`, `l` included, ascending.
    /// The universal label is not listed.
    pub fn ancestors(&self, l: &Label) -> Vec<Label> {
        let Some(&i) = self.index.get(l) else {
            return vec![l.clone()];
        };
        let mut out: Vec<Label> = (0..self.labels.len())
            .filter(|&j| self.bit(i, j))
            .map(|j| self.labels[j].clone())
            .collect();
        out.sort();
        out
    }

    /// Materialized closure as a set of pairs, over declared labels only.
    pub fn closure_pairs(&self) -> BTreeSet<(Label, Label)> {
        let mut out = BTreeSet::new();
        for i in 0..self.labels.len() {
            for j in 0..self.labels.len() {
                if self.bit(i, j) {
                    out.insert((self.labels[i].clone(), self.labels[j].clone()));
                }
            }
        }
        out
    }

    /// Edge-count distance between two labels over declared pairs, ignoring
    /// direction. `None` when the labels are not connected.
    pub fn semantic_distance(&self, a: &Label, b: &Label) -> Option<usize> {
        if a == b {
            return Some(0);
        }
        let (&from, &to) = (self.index.get(a)?, self.index.get(b)?);
        let mut dist = vec![usize::MAX; self.labels.len()];
        let mut queue = VecDeque::from([from]);
        dist[from] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbours[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    if v == to {
                        return Some(dist[v]);
                    }
                    queue.push_back(v);
                }
            }
        }
        None
    }

    /// Minimal elements of `ls`: a label is dropped only when another member
    /// is strictly more specific. Equivalent labels are all kept.
    pub fn min_labels<'a, I>(&self, ls: I) -> BTreeSet<Label>
    where
        I: IntoIterator<Item = &'a Label>,
    {
        let ls: BTreeSet<&Label> = ls.into_iter().collect();
        ls.iter()
            .filter(|l| !ls.iter().any(|o| self.related(o, l) && !self.related(l, o)))
            .map(|l| (*l).clone())
            .collect()
    }

    /// Declared pairs grouped by child, for display.
    pub fn parents(&self) -> BTreeMap<Label, Vec<Label>> {
        let mut out: BTreeMap<Label, Vec<Label>> = BTreeMap::new();
        for (c, p) in &self.declared {
            out.entry(c.clone()).or_default().push(p.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    #[test]
    fn declared_and_transitive_pairs() {
        let mut t = LabelTaxonomy::new();
        t.declare(l("Student"), l("Person"));
        assert!(t.related(&l("Student"), &l("Person")));
        assert!(!t.related(&l("Person"), &l("Student")));
        t.declare(l("PhD"), l("Student"));
        assert!(t.related(&l("PhD"), &l("Person")));
    }

    #[test]
    fn cycles_make_equivalents() {
        let mut t = LabelTaxonomy::new();
        t.declare(l("A"), l("B"));
        t.declare(l("B"), l("A"));
        assert!(t.related(&l("A"), &l("B")) && t.related(&l("B"), &l("A")));
        let both = [l("A"), l("B")];
        assert_eq!(t.min_labels(&both).len(), 2);
    }

    #[test]
    fn reflexive_on_unknown_labels() {
        let t = LabelTaxonomy::new();
        assert!(t.related(&l("Person"), &l("Person")));
        assert!(t.related(&l("Person"), &Label::top()));
        assert!(!t.related(&Label::top(), &l("Person")));
    }

    #[test]
    fn long_chain() {
        let mut t = LabelTaxonomy::new();
        for i in 1..6 {
            t.declare(l(&format!("a{i}")), l(&format!("a{}", i + 1)));
        }
        assert!(t.related(&l("a1"), &l("a6")));
        assert!(!t.related(&l("a6"), &l("a1")));
    }

    #[test]
    fn chain_declared_top_down() {
        let mut t = LabelTaxonomy::new();
        for i in (1..6).rev() {
            t.declare(l(&format!("a{i}")), l(&format!("a{}", i + 1)));
        }
        assert!(t.related(&l("a1"), &l("a6")));
    }

    #[test]
    fn distances() {
        let mut t = LabelTaxonomy::new();
        assert_eq!(t.semantic_distance(&l("x"), &l("x")), Some(0));
        t.declare(l("Student"), l("Person"));
        t.declare(l("Teacher"), l("Person"));
        assert_eq!(t.semantic_distance(&l("Student"), &l("Person")), Some(1));
        assert_eq!(t.semantic_distance(&l("Student"), &l("Teacher")), Some(2));
        t.declare(l("Car"), l("Vehicle"));
        assert_eq!(t.semantic_distance(&l("Student"), &l("Car")), None);
        assert_eq!(t.semantic_distance(&l("Student"), &l("Nope")), None);
    }

    #[test]
    fn minimal_labels() {
        let mut t = LabelTaxonomy::new();
        t.declare(l("Student"), l("Person"));
        assert_eq!(t.min_labels(&[l("Person")]), [l("Person")].into());
        assert_eq!(t.min_labels(&[l("Student"), l("Person")]), [l("Student")].into());
        assert_eq!(
            t.min_labels(&[l("Student"), l("Teacher")]),
            [l("Student"), l("Teacher")].into()
        );
    }

    #[test]
    fn ancestors_exclude_top() {
        let mut t = LabelTaxonomy::new();
        t.declare(l("Student"), l("Person"));
        t.declare(l("Person"), l("Agent"));
        assert_eq!(t.ancestors(&l("Student")), vec![l("Agent"), l("Person"), l("Student")]);
        assert_eq!(t.ancestors(&l("Other")), vec![l("Other")]);
    }
}
