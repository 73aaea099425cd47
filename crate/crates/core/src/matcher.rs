//! Label-aware mappings between graphs and the search that enumerates them.
//!
//! An [`ErMapping`] from a pattern `H` to a data graph `G` is a partial map
//! `M` from the entities of `H` to the entities of `G` such that
//!
//! 1. each mapped entity keeps a compatible label: `related(l_G(M(e)), l_H(e))`;
//! 2. each relation `r'` of `H` whose arguments are all mapped has a witness
//!    `r` in `G` with the same arity and `n_G(r)[i] = M(n_H(r')[i])` at every
//!    position `i`;
//! 3. that witness has a compatible label: `related(l_G(r), l_H(r'))`.
//!
//! Relations with an unmapped argument impose nothing. Total mappings are
//! graph homomorphisms modulo the taxonomy; with an empty taxonomy they are
//! exact-label homomorphisms. Entity and relation labels share one taxonomy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{EntityId, ErGraph, RelationId};
use crate::taxonomy::LabelTaxonomy;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("mapping mentions {0}, which is not in the graph it claims")]
    ForeignElement(String),
    #[error("mappings do not chain: the first target is not the second source")]
    GraphMismatch,
}

/// A partial entity map plus the relation witnesses that justify it.
#[derive(Clone)]
pub struct ErMapping<'a> {
    source: &'a ErGraph,
    target: &'a ErGraph,
    entity_map: BTreeMap<EntityId, EntityId>,
    relation_witness: BTreeMap<RelationId, RelationId>,
}

impl<'a> ErMapping<'a> {
    /// Builds a mapping from an entity map, picking for every relation of the
    /// induced pattern the smallest valid witness. Relations without a valid
    /// witness get none, which [`validate_mapping`] then reports.
    pub fn new(
        source: &'a ErGraph,
        target: &'a ErGraph,
        tax: &LabelTaxonomy,
        entity_map: BTreeMap<EntityId, EntityId>,
    ) -> Result<Self, MatchError> {
        for (&h, &g) in &entity_map {
            if !source.contains_entity(h) {
                return Err(MatchError::ForeignElement(format!("pattern entity {h}")));
            }
            if !target.contains_entity(g) {
                return Err(MatchError::ForeignElement(format!("data entity {g}")));
            }
        }
        let mut relation_witness = BTreeMap::new();
        for r in source.relations() {
            let Some(images) = images(&entity_map, &r.args) else {
                continue;
            };
            if let Some(w) = smallest_witness(target, tax, &r.label, &images) {
                relation_witness.insert(r.id, w);
            }
        }
        Ok(ErMapping {
            source,
            target,
            entity_map,
            relation_witness,
        })
    }

    /// Assembles a mapping without any checks.
    pub fn from_parts(
        source: &'a ErGraph,
        target: &'a ErGraph,
        entity_map: BTreeMap<EntityId, EntityId>,
        relation_witness: BTreeMap<RelationId, RelationId>,
    ) -> Self {
        ErMapping {
            source,
            target,
            entity_map,
            relation_witness,
        }
    }

    /// Identity mapping of a graph onto itself.
    pub fn identity(g: &'a ErGraph) -> Self {
        ErMapping {
            source: g,
            target: g,
            entity_map: g.entity_ids().map(|e| (e, e)).collect(),
            relation_witness: g.relations().map(|r| (r.id, r.id)).collect(),
        }
    }

    pub fn source(&self) -> &'a ErGraph {
        self.source
    }

    pub fn target(&self) -> &'a ErGraph {
        self.target
    }

    pub fn entity_map(&self) -> &BTreeMap<EntityId, EntityId> {
        &self.entity_map
    }

    pub fn relation_witness(&self) -> &BTreeMap<RelationId, RelationId> {
        &self.relation_witness
    }

    pub fn get(&self, e: EntityId) -> Option<EntityId> {
        self.entity_map.get(&e).copied()
    }

    pub fn is_total(&self) -> bool {
        self.entity_map.len() == self.source.entity_count()
    }

    /// Images of the pattern entities in id order; `None` where unmapped.
    pub fn image_tuple(&self) -> Vec<Option<EntityId>> {
        self.source.entity_ids().map(|e| self.get(e)).collect()
    }
}

impl PartialEq for ErMapping<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.source, other.source)
            && std::ptr::eq(self.target, other.target)
            && self.entity_map == other.entity_map
            && self.relation_witness == other.relation_witness
    }
}

impl fmt::Debug for ErMapping<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ErMapping")
            .field("entity_map", &self.entity_map)
            .field("relation_witness", &self.relation_witness)
            .finish()
    }
}

fn images(map: &BTreeMap<EntityId, EntityId>, args: &[EntityId]) -> Option<Vec<EntityId>> {
    args.iter().map(|a| map.get(a).copied()).collect()
}

fn smallest_witness(
    g: &ErGraph,
    tax: &LabelTaxonomy,
    label: &crate::graph::Label,
    images: &[EntityId],
) -> Option<RelationId> {
    g.relations_with_args(images)
        .iter()
        .copied()
        .find(|&r| tax.related(g.relation_label(r), label))
}

/// First failing mapping condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Condition 1: the image label does not specialize the pattern label.
    EntityLabel { entity: EntityId, image: EntityId },
    /// Condition 2: no data relation carries the mapped argument tuple, or
    /// the recorded witness carries a different one.
    RelationArguments {
        relation: RelationId,
        witness: Option<RelationId>,
    },
    /// Condition 3: relations with the right arguments exist but none (or not
    /// the recorded witness) has a compatible label.
    RelationLabel {
        relation: RelationId,
        witness: Option<RelationId>,
    },
    /// A witness is recorded for a relation that has an unmapped argument.
    StrayWitness { relation: RelationId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EntityLabel { entity, image } => {
                write!(f, "entity label: {image} does not specialize pattern entity {entity}")
            }
            Violation::RelationArguments { relation, .. } => {
                write!(f, "relation arguments: no witness for pattern relation {relation}")
            }
            Violation::RelationLabel { relation, .. } => {
                write!(
                    f,
                    "relation label: no compatible witness for pattern relation {relation}"
                )
            }
            Violation::StrayWitness { relation } => {
                write!(f, "witness recorded for {relation}, which has unmapped arguments")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Violation),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Checks the three mapping conditions against the mapping's own graphs.
pub fn validate_mapping(m: &ErMapping<'_>, tax: &LabelTaxonomy) -> Result<Verdict, MatchError> {
    let (h, g) = (m.source, m.target);
    for (&e, &img) in &m.entity_map {
        if !h.contains_entity(e) {
            return Err(MatchError::ForeignElement(format!("pattern entity {e}")));
        }
        if !g.contains_entity(img) {
            return Err(MatchError::ForeignElement(format!("data entity {img}")));
        }
    }
    for (&r, &w) in &m.relation_witness {
        if !h.contains_relation(r) {
            return Err(MatchError::ForeignElement(format!("pattern relation {r}")));
        }
        if !g.contains_relation(w) {
            return Err(MatchError::ForeignElement(format!("data relation {w}")));
        }
    }

    for (&e, &img) in &m.entity_map {
        if !tax.related(g.entity_label(img), h.entity_label(e)) {
            return Ok(Verdict::Invalid(Violation::EntityLabel { entity: e, image: img }));
        }
    }
    for r in h.relations() {
        let Some(imgs) = images(&m.entity_map, &r.args) else {
            if m.relation_witness.contains_key(&r.id) {
                return Ok(Verdict::Invalid(Violation::StrayWitness { relation: r.id }));
            }
            continue;
        };
        match m.relation_witness.get(&r.id) {
            Some(&w) => {
                let wr = g.relation(w).expect("checked above");
                if wr.args != imgs {
                    return Ok(Verdict::Invalid(Violation::RelationArguments {
                        relation: r.id,
                        witness: Some(w),
                    }));
                }
                if !tax.related(&wr.label, &r.label) {
                    return Ok(Verdict::Invalid(Violation::RelationLabel {
                        relation: r.id,
                        witness: Some(w),
                    }));
                }
            }
            None => {
                let candidates = g.relations_with_args(&imgs);
                if candidates.is_empty() {
                    return Ok(Verdict::Invalid(Violation::RelationArguments {
                        relation: r.id,
                        witness: None,
                    }));
                }
                if !candidates.iter().any(|&c| tax.related(g.relation_label(c), &r.label)) {
                    return Ok(Verdict::Invalid(Violation::RelationLabel {
                        relation: r.id,
                        witness: None,
                    }));
                }
            }
        }
    }
    Ok(Verdict::Valid)
}

/// Composes `first: H -> G` with `second: G -> F`.
pub fn compose<'a>(
    first: &ErMapping<'a>,
    second: &ErMapping<'a>,
    tax: &LabelTaxonomy,
) -> Result<ErMapping<'a>, MatchError> {
    if !std::ptr::eq(first.target, second.source) {
        return Err(MatchError::GraphMismatch);
    }
    let map = first
        .entity_map
        .iter()
        .filter_map(|(&h, g)| second.get(*g).map(|f| (h, f)))
        .collect();
    ErMapping::new(first.source, second.target, tax, map)
}

#[derive(Debug, Clone)]
pub struct MatchOptions {
    /// Only total mappings (homomorphisms). Partial search is unoptimized.
    pub total: bool,
    pub injective: bool,
    /// Keep the first `limit` mappings of the ordered result.
    pub limit: Option<usize>,
    /// Allowed images per pattern entity, on top of label compatibility.
    pub restrict: BTreeMap<EntityId, BTreeSet<EntityId>>,
    /// Split the root candidates across the rayon pool.
    pub parallel: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            total: true,
            injective: false,
            limit: None,
            restrict: BTreeMap::new(),
            parallel: true,
        }
    }
}

/// Enumerates every mapping of `h` into `g` allowed by `opts`, each exactly
/// once, ordered by image tuple (pattern entities in id order, unmapped
/// before mapped).
pub fn find_mappings<'a>(
    h: &'a ErGraph,
    g: &'a ErGraph,
    tax: &LabelTaxonomy,
    opts: &MatchOptions,
) -> Vec<ErMapping<'a>> {
    let mut tuples = find_image_tuples(h, g, tax, opts);
    if let Some(limit) = opts.limit {
        tuples.truncate(limit);
    }
    tuples
        .into_iter()
        .map(|t| {
            let map = t
                .into_iter()
                .enumerate()
                .filter_map(|(i, img)| img.map(|x| (EntityId(i as u32), x)))
                .collect();
            ErMapping::new(h, g, tax, map).expect("search only emits in-graph ids")
        })
        .collect()
}

/// Same enumeration as [`find_mappings`], returning only the sorted image
/// tuples (no limit applied).
pub fn find_image_tuples(
    h: &ErGraph,
    g: &ErGraph,
    tax: &LabelTaxonomy,
    opts: &MatchOptions,
) -> Vec<Vec<Option<EntityId>>> {
    let Some(plan) = Plan::build(h, g, tax, opts) else {
        return Vec::new();
    };
    if plan.order.is_empty() {
        return vec![Vec::new()];
    }
    let root = plan.order[0];
    let mut roots: Vec<Option<EntityId>> = plan.candidates[root.index()].iter().copied().map(Some).collect();
    if !opts.total {
        roots.insert(0, None);
    }
    let run = |first: &Option<EntityId>| {
        let mut state = State::new(h, g);
        let mut out = Vec::new();
        state.try_assign(&plan, 0, *first, &mut out);
        out
    };
    let chunks: Vec<Vec<Vec<Option<EntityId>>>> = if opts.parallel {
        roots.par_iter().map(run).collect()
    } else {
        roots.iter().map(run).collect()
    };
    let mut all: Vec<_> = chunks.into_iter().flatten().collect();
    all.sort_unstable();
    all
}

struct Plan<'a> {
    h: &'a ErGraph,
    g: &'a ErGraph,
    tax: &'a LabelTaxonomy,
    total: bool,
    injective: bool,
    order: Vec<EntityId>,
    candidates: Vec<Vec<EntityId>>,
    /// Pattern relations whose last argument (in search order) is assigned at
    /// each step.
    checks: Vec<Vec<RelationId>>,
}

impl<'a> Plan<'a> {
    fn build(h: &'a ErGraph, g: &'a ErGraph, tax: &'a LabelTaxonomy, opts: &MatchOptions) -> Option<Self> {
        let mut candidates = Vec::with_capacity(h.entity_count());
        for e in h.entity_ids() {
            let allowed = opts.restrict.get(&e);
            let label = h.entity_label(e);
            let cands: Vec<EntityId> = g
                .entity_ids()
                .filter(|a| allowed.is_none_or(|s| s.contains(a)))
                .filter(|&a| tax.related(g.entity_label(a), label))
                .filter(|&a| !opts.total || incidence_compatible(h, g, tax, e, a))
                .collect();
            if cands.is_empty() && opts.total {
                return None;
            }
            candidates.push(cands);
        }
        let order = search_order(h, &candidates);
        let mut position = vec![0; h.entity_count()];
        for (i, e) in order.iter().enumerate() {
            position[e.index()] = i;
        }
        let mut checks = vec![Vec::new(); order.len()];
        for r in h.relations() {
            let last = r.args.iter().map(|a| position[a.index()]).max().expect("arity >= 1");
            checks[last].push(r.id);
        }
        Some(Plan {
            h,
            g,
            tax,
            total: opts.total,
            injective: opts.injective,
            order,
            candidates,
            checks,
        })
    }
}

/// Every (arity, position, label) slot that `e` occupies in the pattern must
/// be occupied by `a` in some compatible data relation. Only valid for total
/// search, where every pattern relation must be witnessed.
fn incidence_compatible(h: &ErGraph, g: &ErGraph, tax: &LabelTaxonomy, e: EntityId, a: EntityId) -> bool {
    h.incident(e).iter().all(|&r| {
        let pr = h.relation(r).expect("incident ids are valid");
        pr.args.iter().enumerate().filter(|(_, x)| **x == e).all(|(pos, _)| {
            g.incident(a).iter().any(|&dr| {
                let drel = g.relation(dr).expect("incident ids are valid");
                drel.arity() == pr.arity() && drel.args[pos] == a && tax.related(&drel.label, &pr.label)
            })
        })
    })
}

/// Smallest candidate set first, then grow along pattern relations, always
/// preferring the connected entity with the fewest candidates.
fn search_order(h: &ErGraph, candidates: &[Vec<EntityId>]) -> Vec<EntityId> {
    let n = h.entity_count();
    let mut placed = vec![false; n];
    let mut frontier = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let key = |e: usize| (candidates[e].len(), e);
    while order.len() < n {
        let next = (0..n)
            .filter(|&e| !placed[e] && frontier[e])
            .min_by_key(|&e| key(e))
            .or_else(|| (0..n).filter(|&e| !placed[e]).min_by_key(|&e| key(e)))
            .expect("unplaced entity remains");
        placed[next] = true;
        order.push(EntityId(next as u32));
        for &r in h.incident(EntityId(next as u32)) {
            for a in &h.relation(r).expect("valid").args {
                frontier[a.index()] = true;
            }
        }
    }
    order
}

struct State {
    assign: Vec<Option<EntityId>>,
    used: Vec<bool>,
}

impl State {
    fn new(h: &ErGraph, g: &ErGraph) -> Self {
        State {
            assign: vec![None; h.entity_count()],
            used: vec![false; g.entity_count()],
        }
    }

    fn try_assign(
        &mut self,
        plan: &Plan<'_>,
        step: usize,
        image: Option<EntityId>,
        out: &mut Vec<Vec<Option<EntityId>>>,
    ) {
        let e = plan.order[step];
        if let Some(a) = image {
            if plan.injective && self.used[a.index()] {
                return;
            }
            self.assign[e.index()] = Some(a);
            if !self.checks_pass(plan, step) {
                self.assign[e.index()] = None;
                return;
            }
            if plan.injective {
                self.used[a.index()] = true;
            }
        }
        self.descend(plan, step + 1, out);
        if let Some(a) = image {
            self.assign[e.index()] = None;
            if plan.injective {
                self.used[a.index()] = false;
            }
        }
    }

    fn descend(&mut self, plan: &Plan<'_>, step: usize, out: &mut Vec<Vec<Option<EntityId>>>) {
        if step == plan.order.len() {
            out.push(self.assign.clone());
            return;
        }
        let e = plan.order[step];
        if !plan.total {
            self.try_assign(plan, step, None, out);
        }
        for &a in &plan.candidates[e.index()] {
            self.try_assign(plan, step, Some(a), out);
        }
    }

    fn checks_pass(&self, plan: &Plan<'_>, step: usize) -> bool {
        let mut buf = Vec::new();
        plan.checks[step].iter().all(|&r| {
            let rel = plan.h.relation(r).expect("valid");
            buf.clear();
            for a in &rel.args {
                match self.assign[a.index()] {
                    Some(x) => buf.push(x),
                    // partial mapping: relation is outside the induced pattern
                    None => return true,
                }
            }
            smallest_witness(plan.g, plan.tax, &rel.label, &buf).is_some()
        })
    }
}
