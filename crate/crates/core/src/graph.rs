//! Typed hypergraphs: labelled entities plus labelled relations (hyperarcs)
//! whose arguments are ordered tuples of entities.
//!
//! A graph is built by a single writer through [`ErGraph::add_entity`] and
//! [`ErGraph::add_relation`] and is treated as frozen afterwards. Entity and
//! relation ids are dense and follow insertion order, so every iteration over
//! a graph is deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::taxonomy::LabelTaxonomy;

/// Characters that may not appear anywhere in a label.
pub const RESERVED_LABEL_CHARS: &[char] = &['(', ')', ',', '<', '#', '"', '[', ']'];

/// Name of the universal label. Every label specializes it; query terms
/// without a label constraint carry it.
pub const TOP_LABEL: &str = "_";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("invalid label {0:?}")]
    InvalidLabel(String),
    #[error("external id {0:?} is already used in this graph")]
    DuplicateExternalId(String),
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("unknown relation {0}")]
    UnknownRelation(RelationId),
    #[error("relations need at least one argument")]
    EmptyArgumentTuple,
    #[error("entities sharing external id {ext:?} have incomparable labels {left} and {right}")]
    IncomparableLabels { ext: String, left: Label, right: Label },
    #[error("graph has {size} entities, above the isomorphism search bound of {limit}")]
    SizeLimitExceeded { size: usize, limit: usize },
}

/// A label from the shared label set. Ordered lexicographically.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(text: &str) -> Result<Self, GraphError> {
        if Self::is_valid(text) {
            Ok(Label(Arc::from(text)))
        } else {
            Err(GraphError::InvalidLabel(text.to_string()))
        }
    }

    pub fn is_valid(text: &str) -> bool {
        !text.is_empty()
            && !text.starts_with('?')
            && !text
                .chars()
                .any(|c| c.is_whitespace() || RESERVED_LABEL_CHARS.contains(&c))
    }

    /// The universal label `_`.
    pub fn top() -> Self {
        Label(Arc::from(TOP_LABEL))
    }

    pub fn is_top(&self) -> bool {
        &*self.0 == TOP_LABEL
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl std::str::FromStr for Label {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RelationId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: EntityId,
    pub label: Label,
    pub ext: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub id: RelationId,
    pub label: Label,
    pub args: Vec<EntityId>,
}

impl Relation {
    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

/// Non-fatal findings of [`ErGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationWarning {
    /// The label is used both for entities and for relations.
    SharedLabel(Label),
}

impl fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationWarning::SharedLabel(l) => {
                write!(f, "label {l} is used by both entities and relations")
            }
        }
    }
}

/// Maps the ids of an input graph to the ids of a derived graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdTranslation {
    pub entities: BTreeMap<EntityId, EntityId>,
    pub relations: BTreeMap<RelationId, RelationId>,
}

/// Where the entities of both merge inputs ended up.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeTranslation {
    pub left: Vec<EntityId>,
    pub right: Vec<EntityId>,
}

/// An entity-relation graph.
#[derive(Debug, Clone, Default)]
pub struct ErGraph {
    entities: Vec<Entity>,
    relations: Vec<Relation>,
    by_ext: HashMap<String, EntityId>,
    incident: Vec<Vec<RelationId>>,
    by_args: HashMap<Vec<EntityId>, Vec<RelationId>>,
}

impl ErGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entity(&mut self, label: Label, ext: Option<&str>) -> Result<EntityId, GraphError> {
        if let Some(ext) = ext {
            if self.by_ext.contains_key(ext) {
                return Err(GraphError::DuplicateExternalId(ext.to_string()));
            }
        }
        let id = EntityId(self.entities.len() as u32);
        if let Some(ext) = ext {
            self.by_ext.insert(ext.to_string(), id);
        }
        self.entities.push(Entity {
            id,
            label,
            ext: ext.map(str::to_string),
        });
        self.incident.push(Vec::new());
        Ok(id)
    }

    pub fn add_relation(&mut self, label: Label, args: &[EntityId]) -> Result<RelationId, GraphError> {
        if args.is_empty() {
            return Err(GraphError::EmptyArgumentTuple);
        }
        if let Some(&bad) = args.iter().find(|a| a.index() >= self.entities.len()) {
            return Err(GraphError::UnknownEntity(bad));
        }
        let id = RelationId(self.relations.len() as u32);
        let mut seen = BTreeSet::new();
        for &a in args {
            if seen.insert(a) {
                self.incident[a.index()].push(id);
            }
        }
        self.by_args.entry(args.to_vec()).or_default().push(id);
        self.relations.push(Relation {
            id,
            label,
            args: args.to_vec(),
        });
        Ok(id)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities(&self) -> impl ExactSizeIterator<Item = &Entity> + '_ {
        self.entities.iter()
    }

    pub fn relations(&self) -> impl ExactSizeIterator<Item = &Relation> + '_ {
        self.relations.iter()
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> {
        (0..self.entities.len() as u32).map(EntityId)
    }

    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(id.index())
    }

    pub fn relation(&self, id: RelationId) -> Option<&Relation> {
        self.relations.get(id.index())
    }

    pub fn contains_entity(&self, id: EntityId) -> bool {
        id.index() < self.entities.len()
    }

    pub fn contains_relation(&self, id: RelationId) -> bool {
        id.index() < self.relations.len()
    }

    /// Label of an entity. Panics on foreign ids.
    pub fn entity_label(&self, id: EntityId) -> &Label {
        &self.entities[id.index()].label
    }

    /// Label of a relation. Panics on foreign ids.
    pub fn relation_label(&self, id: RelationId) -> &Label {
        &self.relations[id.index()].label
    }

    pub fn by_ext(&self, ext: &str) -> Option<EntityId> {
        self.by_ext.get(ext).copied()
    }

    /// Relations having `id` among their arguments, ascending, each listed once.
    pub fn incident(&self, id: EntityId) -> &[RelationId] {
        self.incident.get(id.index()).map_or(&[], Vec::as_slice)
    }

    /// Relations whose argument tuple is exactly `args`, ascending.
    pub fn relations_with_args(&self, args: &[EntityId]) -> &[RelationId] {
        self.by_args.get(args).map_or(&[], Vec::as_slice)
    }

    /// First relation with this exact label and argument tuple.
    pub fn find_relation(&self, label: &Label, args: &[EntityId]) -> Option<RelationId> {
        self.relations_with_args(args)
            .iter()
            .copied()
            .find(|r| self.relations[r.index()].label == *label)
    }

    /// Human-facing name of an entity: its external id, or `_:<n>`.
    pub fn display_name(&self, id: EntityId) -> String {
        match self.entity(id).and_then(|e| e.ext.as_deref()) {
            Some(ext) => ext.to_string(),
            None => format!("_:{}", id.0),
        }
    }

    /// Distinct labels used by entities and relations.
    pub fn labels(&self) -> BTreeSet<Label> {
        self.entities
            .iter()
            .map(|e| e.label.clone())
            .chain(self.relations.iter().map(|r| r.label.clone()))
            .collect()
    }

    /// Integrity sweep. Errors on broken references; warns on labels used
    /// for both entities and relations.
    pub fn validate(&self) -> Result<Vec<ValidationWarning>, GraphError> {
        for (i, e) in self.entities.iter().enumerate() {
            if e.id.index() != i {
                return Err(GraphError::UnknownEntity(e.id));
            }
            if let Some(ext) = &e.ext {
                if self.by_ext.get(ext) != Some(&e.id) {
                    return Err(GraphError::DuplicateExternalId(ext.clone()));
                }
            }
        }
        for (i, r) in self.relations.iter().enumerate() {
            if r.id.index() != i {
                return Err(GraphError::UnknownRelation(r.id));
            }
            if r.args.is_empty() {
                return Err(GraphError::EmptyArgumentTuple);
            }
            if let Some(&bad) = r.args.iter().find(|a| !self.contains_entity(**a)) {
                return Err(GraphError::UnknownEntity(bad));
            }
        }
        let entity_labels: BTreeSet<&Label> = self.entities.iter().map(|e| &e.label).collect();
        let relation_labels: BTreeSet<&Label> = self.relations.iter().map(|r| &r.label).collect();
        Ok(entity_labels
            .intersection(&relation_labels)
            .map(|l| ValidationWarning::SharedLabel((*l).clone()))
            .collect())
    }

    /// Sub-graph induced by `keep`: the kept entities plus every relation
    /// whose arguments are all kept. Ids are renumbered densely in original
    /// order.
    pub fn induced_subgraph(&self, keep: &BTreeSet<EntityId>) -> Result<(ErGraph, IdTranslation), GraphError> {
        if let Some(&bad) = keep.iter().find(|e| !self.contains_entity(**e)) {
            return Err(GraphError::UnknownEntity(bad));
        }
        let mut sub = ErGraph::new();
        let mut tr = IdTranslation::default();
        for &old in keep {
            let e = &self.entities[old.index()];
            let new = sub.add_entity(e.label.clone(), e.ext.as_deref())?;
            tr.entities.insert(old, new);
        }
        for r in &self.relations {
            if r.args.iter().all(|a| keep.contains(a)) {
                let args: Vec<EntityId> = r.args.iter().map(|a| tr.entities[a]).collect();
                let new = sub.add_relation(r.label.clone(), &args)?;
                tr.relations.insert(r.id, new);
            }
        }
        Ok((sub, tr))
    }
}

/// Merges two graphs.
///
/// Entities sharing an external id are unified; the unified entity takes the
/// more specific of the two labels (the lexicographically smaller one when the
/// labels are equivalent). Every other entity is copied. A relation (label and
/// unified argument tuple) appears as many times as the larger of its
/// multiplicities in the two inputs, so `merge(g, empty)` gives back `g`, as
/// does `merge(g, g)` when every entity of `g` has an external id.
pub fn merge(left: &ErGraph, right: &ErGraph, tax: &LabelTaxonomy) -> Result<(ErGraph, MergeTranslation), GraphError> {
    let mut out = ErGraph::new();
    let mut tr = MergeTranslation::default();

    let mut labels: Vec<Label> = left.entities.iter().map(|e| e.label.clone()).collect();
    let mut right_map = Vec::with_capacity(right.entity_count());
    let mut fresh = Vec::new();
    for e in &right.entities {
        match e.ext.as_deref().and_then(|x| left.by_ext(x)) {
            Some(shared) => {
                let current = &labels[shared.index()];
                labels[shared.index()] =
                    more_specific(tax, current, &e.label).ok_or_else(|| GraphError::IncomparableLabels {
                        ext: e.ext.clone().unwrap_or_default(),
                        left: current.clone(),
                        right: e.label.clone(),
                    })?;
                right_map.push(Some(shared));
            }
            None => {
                right_map.push(None);
                fresh.push(e);
            }
        }
    }

    for (e, label) in left.entities.iter().zip(labels) {
        tr.left.push(out.add_entity(label, e.ext.as_deref())?);
    }
    let mut fresh = fresh.into_iter();
    for slot in right_map {
        let id = match slot {
            Some(shared) => tr.left[shared.index()],
            None => {
                let e = fresh.next().expect("one fresh entity per unmatched slot");
                out.add_entity(e.label.clone(), e.ext.as_deref())?
            }
        };
        tr.right.push(id);
    }

    let mut left_count: HashMap<(Label, Vec<EntityId>), usize> = HashMap::new();
    for r in &left.relations {
        let args: Vec<EntityId> = r.args.iter().map(|a| tr.left[a.index()]).collect();
        *left_count.entry((r.label.clone(), args.clone())).or_default() += 1;
        out.add_relation(r.label.clone(), &args)?;
    }
    let mut right_count: HashMap<(Label, Vec<EntityId>), usize> = HashMap::new();
    for r in &right.relations {
        let args: Vec<EntityId> = r.args.iter().map(|a| tr.right[a.index()]).collect();
        let key = (r.label.clone(), args);
        let seen = right_count.entry(key.clone()).or_default();
        *seen += 1;
        if *seen > left_count.get(&key).copied().unwrap_or(0) {
            out.add_relation(key.0, &key.1)?;
        }
    }
    Ok((out, tr))
}

fn more_specific(tax: &LabelTaxonomy, a: &Label, b: &Label) -> Option<Label> {
    match (tax.related(a, b), tax.related(b, a)) {
        (true, true) => Some(a.min(b).clone()),
        (true, false) => Some(a.clone()),
        (false, true) => Some(b.clone()),
        (false, false) => None,
    }
}

/// Default entity bound for [`isomorphic`].
pub const ISOMORPHISM_LIMIT: usize = 12;

/// Exhaustive isomorphism test: a label-preserving bijection on entities that
/// carries the relation multiset of `a` onto that of `b`. External ids are
/// ignored. Exponential in the worst case; meant for test-sized graphs.
pub fn isomorphic(a: &ErGraph, b: &ErGraph) -> Result<bool, GraphError> {
    isomorphic_with_limit(a, b, ISOMORPHISM_LIMIT)
}

pub fn isomorphic_with_limit(a: &ErGraph, b: &ErGraph, limit: usize) -> Result<bool, GraphError> {
    for g in [a, b] {
        if g.entity_count() > limit {
            return Err(GraphError::SizeLimitExceeded {
                size: g.entity_count(),
                limit,
            });
        }
    }
    if a.entity_count() != b.entity_count() || a.relation_count() != b.relation_count() {
        return Ok(false);
    }
    let sig = |g: &ErGraph, e: EntityId| {
        let mut inc: Vec<(Label, usize, usize)> = g
            .relations
            .iter()
            .flat_map(|r| {
                r.args
                    .iter()
                    .enumerate()
                    .filter(move |(_, x)| **x == e)
                    .map(move |(pos, _)| (r.label.clone(), r.arity(), pos))
            })
            .collect();
        inc.sort();
        (g.entity_label(e).clone(), inc)
    };
    let sig_a: Vec<_> = a.entity_ids().map(|e| sig(a, e)).collect();
    let sig_b: Vec<_> = b.entity_ids().map(|e| sig(b, e)).collect();
    {
        let mut x = sig_a.clone();
        let mut y = sig_b.clone();
        x.sort();
        y.sort();
        if x != y {
            return Ok(false);
        }
    }
    let target: HashMap<(Label, Vec<EntityId>), usize> = b.relations.iter().fold(HashMap::new(), |mut m, r| {
        *m.entry((r.label.clone(), r.args.clone())).or_default() += 1;
        m
    });
    // relations of `a` become checkable once their highest argument is assigned
    let mut ready: Vec<Vec<&Relation>> = vec![Vec::new(); a.entity_count()];
    for r in &a.relations {
        let last = r.args.iter().max().expect("arity >= 1");
        ready[last.index()].push(r);
    }

    // entity label plus (relation label, arity, position) per incidence
    type Signature = (Label, Vec<(Label, usize, usize)>);

    struct Search<'g> {
        sig_a: Vec<Signature>,
        sig_b: Vec<Signature>,
        ready: Vec<Vec<&'g Relation>>,
        target: HashMap<(Label, Vec<EntityId>), usize>,
        used: Vec<bool>,
        map: Vec<EntityId>,
    }

    impl Search<'_> {
        fn run(&mut self, i: usize) -> bool {
            if i == self.sig_a.len() {
                let mut counts: HashMap<(Label, Vec<EntityId>), usize> = HashMap::new();
                for rs in &self.ready {
                    for r in rs {
                        let args = r.args.iter().map(|x| self.map[x.index()]).collect();
                        *counts.entry((r.label.clone(), args)).or_default() += 1;
                    }
                }
                return counts == self.target;
            }
            for cand in 0..self.sig_b.len() {
                if self.used[cand] || self.sig_a[i] != self.sig_b[cand] {
                    continue;
                }
                self.map.push(EntityId(cand as u32));
                let ok = self.ready[i].iter().all(|r| {
                    let args: Vec<EntityId> = r.args.iter().map(|x| self.map[x.index()]).collect();
                    self.target.contains_key(&(r.label.clone(), args))
                });
                if ok {
                    self.used[cand] = true;
                    if self.run(i + 1) {
                        return true;
                    }
                    self.used[cand] = false;
                }
                self.map.pop();
            }
            false
        }
    }

    let mut search = Search {
        used: vec![false; b.entity_count()],
        map: Vec::with_capacity(a.entity_count()),
        sig_a,
        sig_b,
        ready,
        target,
    };
    Ok(search.run(0))
}
