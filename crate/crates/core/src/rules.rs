//! Forward-chaining rules over typed graphs.
//!
//! ```text
//! rules := rule*
//! rule  := 'RULE' NAME 'WHERE' item+ 'THEN' item+ 'END'
//! ```
//!
//! `item` is the query item grammar without path atoms. A pass matches every
//! hypothesis against the graph as it stood at the start of the pass and then
//! adds the instantiated conclusions; saturation repeats passes until one adds
//! nothing. Duplicates are detected by exact label and argument tuple.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{EntityId, ErGraph, GraphError};
use crate::matcher::{find_image_tuples, MatchOptions};
use crate::query::{PatternBuilder, QueryError, QueryPattern, Term};
use crate::syntax::{Cursor, SyntaxError, Tok};
use crate::taxonomy::LabelTaxonomy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RuleMode {
    /// Conclusions may only use hypothesis variables.
    #[default]
    Safe,
    /// Conclusion-only variables create one fresh entity per firing.
    Existential,
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("rule {rule}: variable ?{var} appears only in the conclusion")]
    UnsafeRule { rule: String, var: String },
    #[error("rule {rule}: conclusion constant {ext:?} does not name an entity of the graph")]
    UnresolvedConstant { rule: String, ext: String },
    #[error("no fixpoint after {} passes", .partial.report.iterations)]
    IterationLimitExceeded { partial: Box<Saturation> },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

const KEYWORDS: [&str; 4] = ["RULE", "WHERE", "THEN", "END"];

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub hypothesis: QueryPattern,
    pub conclusion: QueryPattern,
}

impl Rule {
    /// Conclusion variables absent from the hypothesis.
    pub fn conclusion_only_vars(&self) -> Vec<String> {
        let hyp: BTreeSet<&String> = self.hypothesis.var_names.values().collect();
        let mut out: Vec<String> = self
            .conclusion
            .var_names
            .values()
            .filter(|v| !hyp.contains(v))
            .cloned()
            .collect();
        out.sort();
        out
    }
}

/// Parses a rule file and rejects conclusion-only variables.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, RuleError> {
    parse_rules_with(text, RuleMode::Safe)
}

pub fn parse_rules_with(text: &str, mode: RuleMode) -> Result<Vec<Rule>, RuleError> {
    let mut cur = Cursor::new(text)?;
    let mut rules = Vec::new();
    let mut names = BTreeSet::new();
    while cur.peek().is_some() {
        keyword(&mut cur, "RULE")?;
        let name_pos = cur.pos();
        let name = match cur.next().map(|t| t.tok) {
            Some(Tok::Ident(n)) if !KEYWORDS.contains(&n.as_str()) => n,
            _ => return Err(SyntaxError::new(name_pos, "a rule name", "something else").into()),
        };
        if !names.insert(name.clone()) {
            return Err(SyntaxError::new(name_pos, "a fresh rule name", format!("duplicate `{name}`")).into());
        }
        keyword(&mut cur, "WHERE")?;
        let hypothesis = section(&mut cur, "THEN")?;
        keyword(&mut cur, "THEN")?;
        let conclusion = section(&mut cur, "END")?;
        keyword(&mut cur, "END")?;
        let rule = Rule {
            name,
            hypothesis,
            conclusion,
        };
        if mode == RuleMode::Safe {
            if let Some(var) = rule.conclusion_only_vars().into_iter().next() {
                return Err(RuleError::UnsafeRule { rule: rule.name, var });
            }
        }
        rules.push(rule);
    }
    Ok(rules)
}

fn keyword(cur: &mut Cursor, kw: &str) -> Result<(), SyntaxError> {
    match cur.peek().map(|t| &t.tok) {
        Some(Tok::Ident(w)) if w == kw => {
            cur.next();
            Ok(())
        }
        _ => Err(cur.error(&format!("`{kw}`"))),
    }
}

fn section(cur: &mut Cursor, until: &str) -> Result<QueryPattern, RuleError> {
    let start = cur.pos();
    let mut b = PatternBuilder::default();
    loop {
        match cur.peek().map(|t| &t.tok) {
            Some(Tok::Ident(w)) if KEYWORDS.contains(&w.as_str()) => break,
            None => break,
            _ => b.item(cur)?,
        }
    }
    if b.is_empty() {
        return Err(SyntaxError::new(start, "at least one atom", format!("`{until}`")).into());
    }
    if b.has_paths() {
        return Err(SyntaxError::new(start, "atoms without path expressions", "a path atom").into());
    }
    Ok(b.build()?)
}

#[derive(Debug, Clone)]
pub struct SaturationOptions {
    pub mode: RuleMode,
    pub max_iterations: usize,
    pub parallel: bool,
}

impl Default for SaturationOptions {
    fn default() -> Self {
        SaturationOptions {
            mode: RuleMode::Safe,
            max_iterations: 1000,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SaturationReport {
    /// Passes that changed the graph.
    pub iterations: usize,
    pub facts_added: usize,
    pub entities_added: usize,
    /// Firings that changed the graph, per rule name.
    pub fired: BTreeMap<String, usize>,
    pub reached_fixpoint: bool,
}

/// One added relation and the firing that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub relation: crate::graph::RelationId,
    pub rule: String,
    /// Hypothesis variable bindings, ascending by name.
    pub binding: Vec<(String, EntityId)>,
}

#[derive(Debug, Clone)]
pub struct Saturation {
    pub graph: ErGraph,
    pub report: SaturationReport,
    pub provenance: Vec<Derivation>,
}

impl Saturation {
    /// Provenance as TSV lines `fact<TAB>rule<TAB>binding`.
    pub fn provenance_tsv(&self) -> String {
        let mut out = String::new();
        for d in &self.provenance {
            let r = self.graph.relation(d.relation).expect("derived relation exists");
            let args: Vec<String> = r.args.iter().map(|a| self.graph.display_name(*a)).collect();
            let binding: Vec<String> = d
                .binding
                .iter()
                .map(|(v, e)| format!("{v}={}", self.graph.display_name(*e)))
                .collect();
            let _ = writeln!(
                out,
                "{}({})\t{}\t{}",
                r.label,
                args.join(","),
                d.rule,
                binding.join(",")
            );
        }
        out
    }
}

/// Runs the rules to fixpoint on a copy of `g`.
pub fn saturate(
    g: &ErGraph,
    rules: &[Rule],
    tax: &LabelTaxonomy,
    opts: &SaturationOptions,
) -> Result<Saturation, RuleError> {
    if opts.mode == RuleMode::Safe {
        for r in rules {
            if let Some(var) = r.conclusion_only_vars().into_iter().next() {
                return Err(RuleError::UnsafeRule {
                    rule: r.name.clone(),
                    var,
                });
            }
        }
    }
    for r in rules {
        for ext in r.conclusion.const_refs.values() {
            if g.by_ext(ext).is_none() {
                return Err(RuleError::UnresolvedConstant {
                    rule: r.name.clone(),
                    ext: ext.clone(),
                });
            }
        }
    }

    let mut sat = Saturation {
        graph: g.clone(),
        report: SaturationReport::default(),
        provenance: Vec::new(),
    };
    let mut fired_bindings: HashSet<(usize, Vec<EntityId>)> = HashSet::new();

    loop {
        if sat.report.iterations >= opts.max_iterations {
            return Err(RuleError::IterationLimitExceeded { partial: Box::new(sat) });
        }
        // match everything against the graph as it stood at the start of the pass
        let mut firings: Vec<(usize, Vec<EntityId>)> = Vec::new();
        for (ri, rule) in rules.iter().enumerate() {
            let Some(restrict) = pin_constants(&rule.hypothesis, &sat.graph) else {
                continue;
            };
            let mopts = MatchOptions {
                restrict,
                parallel: opts.parallel,
                ..MatchOptions::default()
            };
            for t in find_image_tuples(&rule.hypothesis.pattern, &sat.graph, tax, &mopts) {
                let images: Vec<EntityId> = t.into_iter().map(|x| x.expect("total")).collect();
                if opts.mode == RuleMode::Existential && fired_bindings.contains(&(ri, images.clone())) {
                    continue;
                }
                firings.push((ri, images));
            }
        }

        let mut changed = false;
        for (ri, images) in firings {
            let rule = &rules[ri];
            if fire(rule, &images, tax, &mut sat, opts.mode)? {
                changed = true;
                *sat.report.fired.entry(rule.name.clone()).or_default() += 1;
            }
            if opts.mode == RuleMode::Existential {
                fired_bindings.insert((ri, images));
            }
        }
        if !changed {
            sat.report.reached_fixpoint = true;
            return Ok(sat);
        }
        sat.report.iterations += 1;
    }
}

fn pin_constants(q: &QueryPattern, g: &ErGraph) -> Option<BTreeMap<EntityId, BTreeSet<EntityId>>> {
    q.const_refs
        .iter()
        .map(|(e, ext)| g.by_ext(ext).map(|t| (*e, [t].into())))
        .collect()
}

/// Instantiates one conclusion. Returns whether the graph changed.
fn fire(
    rule: &Rule,
    images: &[EntityId],
    tax: &LabelTaxonomy,
    sat: &mut Saturation,
    mode: RuleMode,
) -> Result<bool, RuleError> {
    let hyp = &rule.hypothesis;
    let bound: BTreeMap<&str, EntityId> = hyp
        .var_names
        .iter()
        .map(|(e, v)| (v.as_str(), images[e.index()]))
        .collect();
    let concl = &rule.conclusion;

    // conclusion labels must already hold for bound entities; relabelling is refused
    let mut targets: Vec<Option<EntityId>> = Vec::with_capacity(concl.pattern.entity_count());
    for e in concl.pattern.entities() {
        let target = match concl.term(e.id) {
            Term::Var(v) => bound.get(v.as_str()).copied(),
            Term::Const(c) => sat.graph.by_ext(&c),
        };
        if let Some(t) = target {
            if !tax.related(sat.graph.entity_label(t), &e.label) {
                return Ok(false);
            }
        }
        targets.push(target);
    }

    let needs_fresh = targets.iter().any(Option::is_none);
    if !needs_fresh
        && concl.pattern.relations().all(|r| {
            let args: Vec<EntityId> = r.args.iter().map(|a| targets[a.index()].expect("bound")).collect();
            sat.graph.find_relation(&r.label, &args).is_some()
        })
    {
        return Ok(false);
    }
    debug_assert!(!needs_fresh || mode == RuleMode::Existential);

    for (e, slot) in concl.pattern.entities().zip(targets.iter_mut()) {
        if slot.is_none() {
            let label = e.label.clone();
            *slot = Some(sat.graph.add_entity(label, None)?);
            sat.report.entities_added += 1;
        }
    }
    let mut binding: Vec<(String, EntityId)> = bound.iter().map(|(v, e)| (v.to_string(), *e)).collect();
    binding.sort();
    for r in concl.pattern.relations() {
        let args: Vec<EntityId> = r
            .args
            .iter()
            .map(|a| targets[a.index()].expect("resolved above"))
            .collect();
        if sat.graph.find_relation(&r.label, &args).is_none() {
            let id = sat.graph.add_relation(r.label.clone(), &args)?;
            sat.report.facts_added += 1;
            sat.provenance.push(Derivation {
                relation: id,
                rule: rule.name.clone(),
                binding: binding.clone(),
            });
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{isomorphic, Label};

    const TRANS: &str = "RULE trans WHERE part(?x,?y) part(?y,?z) THEN part(?x,?z) END";

    fn l(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    fn chain(n: usize, label: &str) -> ErGraph {
        let mut g = ErGraph::new();
        let es: Vec<_> = (0..n)
            .map(|i| g.add_entity(l("T"), Some(&format!("n{i}"))).unwrap())
            .collect();
        for w in es.windows(2) {
            g.add_relation(l(label), &[w[0], w[1]]).unwrap();
        }
        g
    }

    #[test]
    fn parse_safe_rule() {
        let rules = parse_rules(TRANS).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].name, "trans");
        assert_eq!(rules[0].hypothesis.pattern.relation_count(), 2);
        assert!(rules[0].conclusion_only_vars().is_empty());
    }

    #[test]
    fn unsafe_and_malformed_rules() {
        let text = "RULE r WHERE p(?x) THEN q(?x, ?w) END";
        assert!(matches!(parse_rules(text), Err(RuleError::UnsafeRule { .. })));
        assert!(parse_rules_with(text, RuleMode::Existential).is_ok());
        assert!(matches!(
            parse_rules("RULE r WHERE THEN q(?x) END"),
            Err(RuleError::Syntax(_))
        ));
        assert!(parse_rules("RULE r WHERE p(?x) THEN q(?x)").is_err());
        assert!(parse_rules("RULE r WHERE ?x -[p]-> ?y THEN q(?x) END").is_err());
        assert!(parse_rules(&format!("{TRANS}\n{TRANS}")).is_err());
    }

    #[test]
    fn transitive_chain() {
        let rules = parse_rules(TRANS).unwrap();
        let out = saturate(
            &chain(4, "part"),
            &rules,
            &LabelTaxonomy::new(),
            &SaturationOptions::default(),
        )
        .unwrap();
        assert_eq!(out.graph.relation_count(), 6);
        assert_eq!(out.report.facts_added, 3);
        assert!(out.report.reached_fixpoint);
        assert_eq!(out.provenance.len(), 3);
        let again = saturate(&out.graph, &rules, &LabelTaxonomy::new(), &SaturationOptions::default()).unwrap();
        assert_eq!(again.report.facts_added, 0);
    }

    #[test]
    fn empty_rule_set() {
        let g = chain(3, "part");
        let out = saturate(&g, &[], &LabelTaxonomy::new(), &SaturationOptions::default()).unwrap();
        assert_eq!(out.report.iterations, 0);
        assert_eq!(out.report.facts_added, 0);
        assert!(isomorphic(&out.graph, &g).unwrap());
    }

    #[test]
    fn type_propagation() {
        let rules = parse_rules(
            "RULE subTrans WHERE sub(?a,?b) sub(?b,?c) THEN sub(?a,?c) END
             RULE typeProp WHERE type(?x,?c) sub(?c,?d) THEN type(?x,?d) END",
        )
        .unwrap();
        let mut g = ErGraph::new();
        let x = g.add_entity(l("R"), Some("x")).unwrap();
        let a = g.add_entity(l("Class"), Some("A")).unwrap();
        let b = g.add_entity(l("Class"), Some("B")).unwrap();
        let c = g.add_entity(l("Class"), Some("C")).unwrap();
        g.add_relation(l("type"), &[x, a]).unwrap();
        g.add_relation(l("sub"), &[a, b]).unwrap();
        g.add_relation(l("sub"), &[b, c]).unwrap();
        let out = saturate(&g, &rules, &LabelTaxonomy::new(), &SaturationOptions::default()).unwrap();
        assert_eq!(out.report.facts_added, 3);
        assert!(out.graph.find_relation(&l("type"), &[x, b]).is_some());
        assert!(out.graph.find_relation(&l("type"), &[x, c]).is_some());
        assert!(out.graph.find_relation(&l("sub"), &[a, c]).is_some());
    }

    #[test]
    fn existential_restricted_chase() {
        let rules = parse_rules_with(
            "RULE parent WHERE ?x : Person THEN ?p : Person hasParent(?x, ?p) END",
            RuleMode::Existential,
        )
        .unwrap();
        let mut g = ErGraph::new();
        g.add_entity(l("Person"), None).unwrap();
        let opts = SaturationOptions {
            mode: RuleMode::Existential,
            max_iterations: 5,
            ..SaturationOptions::default()
        };
        // every fresh parent is a Person again, so the chase never ends
        let Err(RuleError::IterationLimitExceeded { partial }) = saturate(&g, &rules, &LabelTaxonomy::new(), &opts)
        else {
            panic!("expected the iteration limit");
        };
        assert!(!partial.report.reached_fixpoint);
        assert_eq!(partial.report.iterations, 5);
        assert_eq!(partial.graph.entity_count(), 6);

        let rules = parse_rules_with("RULE owner WHERE ?x : Car THEN owns(?o, ?x) END", RuleMode::Existential).unwrap();
        let mut g = ErGraph::new();
        g.add_entity(l("Car"), None).unwrap();
        let out = saturate(&g, &rules, &LabelTaxonomy::new(), &opts).unwrap();
        assert_eq!(out.graph.entity_count(), 2);
        assert_eq!(out.report.entities_added, 1);
        assert!(out.report.reached_fixpoint);
    }

    #[test]
    fn conclusion_labels_do_not_relabel() {
        let rules = parse_rules("RULE r WHERE knows(?x,?y) THEN ?y : Person friend(?x,?y) END").unwrap();
        let mut tax = LabelTaxonomy::new();
        tax.declare(l("Student"), l("Person"));
        let mut g = ErGraph::new();
        let a = g.add_entity(l("Person"), None).unwrap();
        let s = g.add_entity(l("Student"), None).unwrap();
        let c = g.add_entity(l("Car"), None).unwrap();
        g.add_relation(l("knows"), &[a, s]).unwrap();
        g.add_relation(l("knows"), &[a, c]).unwrap();
        let out = saturate(&g, &rules, &tax, &SaturationOptions::default()).unwrap();
        assert_eq!(out.report.facts_added, 1);
        assert!(out.graph.find_relation(&l("friend"), &[a, s]).is_some());
    }

    #[test]
    fn provenance_lines() {
        let rules = parse_rules(TRANS).unwrap();
        let out = saturate(
            &chain(3, "part"),
            &rules,
            &LabelTaxonomy::new(),
            &SaturationOptions::default(),
        )
        .unwrap();
        assert_eq!(out.provenance_tsv(), "part(n0,n2)\ttrans\tx=n0,y=n1,z=n2\n");
    }
}
