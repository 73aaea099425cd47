//! Library operators chained the way a caller would: merge sources, saturate,
//! query, then analyse the result.

use std::collections::BTreeSet;

use ergraph::analytics::{betweenness, project, propagate_communities, CommunityOptions};
use ergraph::graph::merge;
use ergraph::io::{load_graph, load_taxonomy, write_graph};
use ergraph::query::{answer, parse_query, AnswerOptions};
use ergraph::rules::{parse_rules, saturate, SaturationOptions};
use ergraph::Label;

const TAX: &str = "Student < Person\nPhD < Student\nTeacher < Person\nadvises < knows\n";

#[test]
fn merge_infer_query_analyse() {
    let tax = load_taxonomy(TAX).unwrap();
    let a = load_graph(
        "entity a Student \"alice\"\nentity b Person \"bob\"\nentity c Person \"cara\"\n\
         rel knows a b\nrel knows b c\n",
    )
    .unwrap();
    let b = load_graph("entity a PhD \"alice\"\nentity t Teacher \"tom\"\nrel advises t a\n").unwrap();
    let (g, tr) = merge(&a, &b, &tax).unwrap();
    assert_eq!(g.entity_count(), 4);
    assert_eq!(tr.left[0], tr.right[0]);
    assert_eq!(g.entity_label(tr.left[0]).as_str(), "PhD");

    // knows is symmetric and reaches friends of friends
    let rules = parse_rules(
        "RULE sym WHERE knows(?x, ?y) THEN knows(?y, ?x) END\n\
         RULE fof WHERE knows(?x, ?y) knows(?y, ?z) ?x : Person ?z : Person THEN fof(?x, ?z) END",
    )
    .unwrap();
    let sat = saturate(&g, &rules, &tax, &SaturationOptions::default()).unwrap();
    assert!(sat.report.reached_fixpoint);
    // advises specializes knows, so tom -> alice also yields alice -> tom
    let tom = sat.graph.by_ext("tom").unwrap();
    let alice = sat.graph.by_ext("alice").unwrap();
    assert!(sat
        .graph
        .find_relation(&Label::new("knows").unwrap(), &[alice, tom])
        .is_some());

    let q = parse_query("fof(\"tom\", ?z)\n?z : Student").unwrap();
    let t = answer(&q, &sat.graph, &tax, &AnswerOptions::default()).unwrap();
    let names: BTreeSet<String> = t.rows.iter().map(|r| sat.graph.display_name(r[0])).collect();
    // two steps from tom reach bob and tom himself, neither a student
    assert!(names.is_empty(), "{names:?}");

    let q = parse_query("?x -[knows+]-> \"cara\"\n?x : Student").unwrap();
    let t = answer(&q, &sat.graph, &tax, &AnswerOptions::default()).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(sat.graph.display_name(t.rows[0][0]), "alice");

    let only_knows: BTreeSet<Label> = [Label::new("knows").unwrap()].into();
    let p = project(&sat.graph, &tax, Some(&only_knows));
    let scores = betweenness(&p);
    // path tom - alice - bob - cara
    let bob = sat.graph.by_ext("bob").unwrap();
    assert_eq!(scores.get(alice), Some(2.0));
    assert_eq!(scores.get(bob), Some(2.0));
    assert_eq!(scores.get(tom), Some(0.0));

    let c = propagate_communities(&p, &sat.graph, &tax, &CommunityOptions::default());
    assert!(c.converged);
    assert_eq!(c.partition.len(), 4);

    // the saturated graph survives a text round trip
    let text = write_graph(&sat.graph);
    assert_eq!(write_graph(&load_graph(&text).unwrap()), text);
}
