//! Builds two small graphs in code, checks them, and merges them on their
//! shared external ids.

use std::collections::BTreeSet;

use ergraph::graph::{isomorphic, merge};
use ergraph::io::write_graph;
use ergraph::{ErGraph, Label, LabelTaxonomy};

fn label(s: &str) -> Label {
    Label::new(s).expect("valid label")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut tax = LabelTaxonomy::new();
    tax.declare(label("Student"), label("Person"));

    let mut left = ErGraph::new();
    let alice = left.add_entity(label("Person"), Some("u1"))?;
    let course = left.add_entity(label("Course"), Some("c101"))?;
    let room = left.add_entity(label("Room"), Some("r7"))?;
    // arity 3: who attends what where
    left.add_relation(label("attends"), &[alice, course, room])?;

    let mut right = ErGraph::new();
    let alice2 = right.add_entity(label("Student"), Some("u1"))?;
    let bob = right.add_entity(label("Person"), Some("u2"))?;
    right.add_relation(label("knows"), &[alice2, bob])?;

    for w in left.validate()? {
        println!("warning: {w}");
    }

    let (merged, tr) = merge(&left, &right, &tax)?;
    println!(
        "left u1 -> {}, right u1 -> {}",
        tr.left[alice.index()],
        tr.right[alice2.index()]
    );
    print!("{}", write_graph(&merged));

    let keep: BTreeSet<_> = [tr.left[alice.index()], tr.right[bob.index()]].into();
    let (sub, _) = merged.induced_subgraph(&keep)?;
    println!(
        "induced on u1, u2: {} entities, {} relations",
        sub.entity_count(),
        sub.relation_count()
    );

    let again = merge(&merged, &merged, &tax)?.0;
    println!("merge(g, g) isomorphic to g: {}", isomorphic(&again, &merged)?);
    Ok(())
}
