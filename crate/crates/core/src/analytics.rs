//! Typed graph analytics: projections filtered by relation type, community
//! detection by label propagation (plain and taxonomy-aware), exact
//! betweenness and random-walk centrality.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::{EntityId, ErGraph, Label};
use crate::taxonomy::LabelTaxonomy;

/// Undirected simple graph over all entities of a typed graph, built from its
/// binary relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    nodes: Vec<EntityId>,
    adjacency: Vec<Vec<usize>>,
}

impl Projection {
    /// Builds a projection from an explicit edge list over nodes `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a != b {
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        Projection {
            nodes: (0..n as u32).map(EntityId).collect(),
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[EntityId] {
        &self.nodes
    }

    /// Neighbour indices of node `i`, ascending.
    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(a, b)` with `a < b`, ascending.
    pub fn edges(&self) -> Vec<(EntityId, EntityId)> {
        let mut out = Vec::new();
        for (i, ns) in self.adjacency.iter().enumerate() {
            for &j in ns.iter().filter(|&&j| j > i) {
                out.push((self.nodes[i], self.nodes[j]));
            }
        }
        out
    }
}

/// Projects `g` onto the binary relations whose label specializes one of
/// `relation_labels` (all binary relations when `None`). Every entity is a
/// node; self-loops are dropped.
pub fn project(g: &ErGraph, tax: &LabelTaxonomy, relation_labels: Option<&BTreeSet<Label>>) -> Projection {
    let edges: Vec<(usize, usize)> = g
        .relations()
        .filter(|r| r.arity() == 2)
        .filter(|r| relation_labels.is_none_or(|ls| ls.iter().any(|f| tax.related(&r.label, f))))
        .map(|r| (r.args[0].index(), r.args[1].index()))
        .collect();
    Projection::from_edges(g.entity_count(), &edges)
}

/// Entity to community label.
pub type Partition = BTreeMap<EntityId, Label>;

/// How neighbour labels turn into support.
pub trait SupportAggregator {
    fn support(&self, neighbour_labels: &[&Label]) -> BTreeMap<Label, usize>;
}

/// One vote per neighbour for its own label.
pub struct PlainCount;

impl SupportAggregator for PlainCount {
    fn support(&self, neighbour_labels: &[&Label]) -> BTreeMap<Label, usize> {
        let mut out = BTreeMap::new();
        for l in neighbour_labels {
            *out.entry((*l).clone()).or_default() += 1;
        }
        out
    }
}

/// A neighbour's vote also counts for every label its label specializes.
pub struct SubsumptionSupport<'t>(pub &'t LabelTaxonomy);

impl SupportAggregator for SubsumptionSupport<'_> {
    fn support(&self, neighbour_labels: &[&Label]) -> BTreeMap<Label, usize> {
        let mut out = BTreeMap::new();
        for l in neighbour_labels {
            for a in self.0.ancestors(l) {
                *out.entry(a).or_default() += 1;
            }
        }
        out
    }
}

/// Where semantic propagation takes its initial labels from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SeedLabels {
    /// The entity's own label.
    #[default]
    EntityLabels,
    /// The smallest label among entities linked to it by a binary relation
    /// with this label (tag assignments); the entity label otherwise.
    Tags(Label),
}

#[derive(Debug, Clone)]
pub struct CommunityOptions {
    pub seed: u64,
    pub max_rounds: usize,
    pub semantic: bool,
    pub seed_labels: SeedLabels,
}

impl Default for CommunityOptions {
    fn default() -> Self {
        CommunityOptions {
            seed: 42,
            max_rounds: 100,
            semantic: false,
            seed_labels: SeedLabels::EntityLabels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Communities {
    pub partition: Partition,
    pub rounds: usize,
    pub converged: bool,
}

impl Communities {
    pub fn community_count(&self) -> usize {
        self.partition.values().collect::<BTreeSet<_>>().len()
    }
}

/// Asynchronous label propagation.
///
/// Each round visits the nodes in a seeded random order. A node collects
/// support for the labels around it and computes the winners: the labels of
/// maximal support, reduced to their most specific members in semantic mode.
/// It keeps its label when that label equals (or, in semantic mode,
/// specializes) a winner; otherwise it adopts a winner chosen uniformly at
/// random. Rounds stop once nothing changes or after `max_rounds`.
///
/// Non-semantic runs start from one label per node (`c<id>`); semantic runs
/// start from entity labels or tags and let votes flow up the taxonomy.
pub fn propagate_communities(p: &Projection, g: &ErGraph, tax: &LabelTaxonomy, opts: &CommunityOptions) -> Communities {
    let empty = LabelTaxonomy::new();
    let mut labels: Vec<Label> = p
        .nodes()
        .iter()
        .map(|&e| {
            if !opts.semantic {
                Label::new(&format!("c{}", e.0)).expect("valid label")
            } else {
                initial_semantic_label(g, e, &opts.seed_labels)
            }
        })
        .collect();
    let (agg, keep_tax): (Box<dyn SupportAggregator>, &LabelTaxonomy) = if opts.semantic {
        (Box::new(SubsumptionSupport(tax)), tax)
    } else {
        (Box::new(PlainCount), &empty)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..p.len()).collect();
    let mut rounds = 0;
    let mut converged = false;
    while rounds < opts.max_rounds {
        rounds += 1;
        order.shuffle(&mut rng);
        let mut changed = false;
        for &v in &order {
            let ns = p.neighbours(v);
            if ns.is_empty() {
                continue;
            }
            let votes: Vec<&Label> = ns.iter().map(|&u| &labels[u]).collect();
            let support = agg.support(&votes);
            let winners = winners(&support, keep_tax);
            if winners.iter().any(|w| keep_tax.related(&labels[v], w)) {
                continue;
            }
            let pick = winners[rng.gen_range(0..winners.len())].clone();
            labels[v] = pick;
            changed = true;
        }
        if !changed {
            converged = true;
            break;
        }
    }
    Communities {
        partition: p.nodes().iter().copied().zip(labels).collect(),
        rounds,
        converged,
    }
}

/// Labels of maximal support, reduced to the most specific ones, ascending.
pub fn winners(support: &BTreeMap<Label, usize>, tax: &LabelTaxonomy) -> Vec<Label> {
    let Some(&best) = support.values().max() else {
        return Vec::new();
    };
    let top: Vec<&Label> = support.iter().filter(|(_, &s)| s == best).map(|(l, _)| l).collect();
    tax.min_labels(top).into_iter().collect()
}

fn initial_semantic_label(g: &ErGraph, e: EntityId, seed: &SeedLabels) -> Label {
    match seed {
        SeedLabels::EntityLabels => g.entity_label(e).clone(),
        SeedLabels::Tags(tag) => g
            .incident(e)
            .iter()
            .filter_map(|&r| g.relation(r))
            .filter(|r| r.arity() == 2 && r.label == *tag && r.args[0] == e)
            .map(|r| g.entity_label(r.args[1]).clone())
            .min()
            .unwrap_or_else(|| g.entity_label(e).clone()),
    }
}

/// Per-entity scores, highest first, ties by ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub scores: Vec<(EntityId, f64)>,
}

impl ScoreTable {
    pub fn from_scores(nodes: &[EntityId], values: Vec<f64>) -> Self {
        let mut scores: Vec<(EntityId, f64)> = nodes.iter().copied().zip(values).collect();
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ScoreTable { scores }
    }

    pub fn get(&self, e: EntityId) -> Option<f64> {
        self.scores.iter().find(|(x, _)| *x == e).map(|(_, s)| *s)
    }

    pub fn top(&self) -> Option<EntityId> {
        self.scores.first().map(|(e, _)| *e)
    }
}

const SOURCE_CHUNK: usize = 64;

/// Exact betweenness on the undirected projection (Brandes' accumulation).
/// Each unordered pair `{s, t}` is counted once; disconnected pairs add
/// nothing. Per-source contributions are summed in a fixed order, so the
/// result does not depend on the thread count.
pub fn betweenness(p: &Projection) -> ScoreTable {
    let n = p.len();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut ws = Workspace::new(n);
            for &s in chunk {
                ws.accumulate(p, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for part in partials {
        for (t, x) in total.iter_mut().zip(part) {
            *t += x;
        }
    }
    for t in &mut total {
        *t /= 2.0;
    }
    ScoreTable::from_scores(p.nodes(), total)
}

struct Workspace {
    sigma: Vec<f64>,
    dist: Vec<i64>,
    delta: Vec<f64>,
    preds: Vec<Vec<usize>>,
    stack: Vec<usize>,
    queue: VecDeque<usize>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            sigma: vec![0.0; n],
            dist: vec![-1; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
            stack: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
        }
    }

    fn accumulate(&mut self, p: &Projection, s: usize, acc: &mut [f64]) {
        self.sigma.iter_mut().for_each(|x| *x = 0.0);
        self.dist.iter_mut().for_each(|x| *x = -1);
        self.delta.iter_mut().for_each(|x| *x = 0.0);
        self.preds.iter_mut().for_each(Vec::clear);
        self.stack.clear();

        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.stack.push(v);
            for &w in p.neighbours(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
        while let Some(w) = self.stack.pop() {
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct WalkOptions {
    pub seed: u64,
    /// Defaults to `10 * |V|`.
    pub walks: Option<usize>,
    /// Steps per walk; defaults to `2 * |V|`.
    pub walk_length: Option<usize>,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions {
            seed: 42,
            walks: None,
            walk_length: None,
        }
    }
}

/// Visit-count centrality: uniform random walks from uniformly chosen starts;
/// a node's score is its share of all visits that are neither the first nor
/// the last position of a walk. Walk `i` draws from its own generator seeded
/// with `seed + i`. With no interior visits at all the mass is spread evenly.
pub fn rw_centrality(p: &Projection, opts: &WalkOptions) -> ScoreTable {
    let n = p.len();
    if n == 0 {
        return ScoreTable { scores: Vec::new() };
    }
    let walks = opts.walks.unwrap_or(10 * n);
    let length = opts.walk_length.unwrap_or(2 * n);
    let counts: Vec<u64> = (0..walks)
        .into_par_iter()
        .fold(
            || vec![0u64; n],
            |mut acc, i| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
                let mut at = rng.gen_range(0..n);
                let mut path = Vec::with_capacity(length + 1);
                path.push(at);
                for _ in 0..length {
                    let ns = p.neighbours(at);
                    if ns.is_empty() {
                        break;
                    }
                    at = ns[rng.gen_range(0..ns.len())];
                    path.push(at);
                }
                if path.len() > 2 {
                    for &v in &path[1..path.len() - 1] {
                        acc[v] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let total: u64 = counts.iter().sum();
    let values = if total == 0 {
        vec![1.0 / n as f64; n]
    } else {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };
    ScoreTable::from_scores(p.nodes(), values)
}
