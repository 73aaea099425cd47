//! Forward chaining to a fixpoint, with provenance, and the existential mode
//! that invents entities.

use ergraph::io::{load_graph, write_graph};
use ergraph::rules::{parse_rules, parse_rules_with, saturate, RuleError, RuleMode, SaturationOptions};
use ergraph::LabelTaxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tax = LabelTaxonomy::new();
    let g = load_graph(include_str!("../data/rdfs.erg"))?;
    let rules = parse_rules(include_str!("../data/rdfs-lite.ergr"))?;
    let out = saturate(&g, &rules, &tax, &SaturationOptions::default())?;
    println!(
        "{} facts added in {} passes, fixpoint: {}",
        out.report.facts_added, out.report.iterations, out.report.reached_fixpoint
    );
    print!("{}", out.provenance_tsv());

    let chain = load_graph(include_str!("../data/chain4.erg"))?;
    let trans = parse_rules(include_str!("../data/trans.ergr"))?;
    let closed = saturate(&chain, &trans, &tax, &SaturationOptions::default())?;
    print!("{}", write_graph(&closed.graph));

    // every person has a parent, who is a person: this never terminates
    let people = load_graph("entity a Person \"ann\"\n")?;
    let endless = parse_rules_with(
        "RULE parent WHERE ?x : Person THEN parentOf(?p, ?x) ?p : Person END",
        RuleMode::Existential,
    )?;
    let opts = SaturationOptions {
        mode: RuleMode::Existential,
        max_iterations: 4,
        ..SaturationOptions::default()
    };
    match saturate(&people, &endless, &tax, &opts) {
        Err(RuleError::IterationLimitExceeded { partial }) => {
            println!(
                "stopped after {} passes with {} entities",
                partial.report.iterations,
                partial.graph.entity_count()
            )
        }
        other => println!("unexpected: {:?}", other.map(|s| s.report)),
    }
    Ok(())
}
