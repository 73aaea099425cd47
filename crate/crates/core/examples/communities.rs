//! Label propagation communities, plain and taxonomy-aware.

use ergraph::analytics::{project, propagate_communities, CommunityOptions};
use ergraph::io::{load_graph, load_taxonomy};
use ergraph::LabelTaxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let flat = LabelTaxonomy::new();
    let g = load_graph(include_str!("../data/cliques.erg"))?;
    let p = project(&g, &flat, None);
    let split = (1..=20)
        .filter(|&seed| {
            let opts = CommunityOptions {
                seed,
                ..CommunityOptions::default()
            };
            propagate_communities(&p, &g, &flat, &opts).community_count() == 2
        })
        .count();
    println!("bridged cliques split in two for {split} of 20 seeds");

    let tax = load_taxonomy(include_str!("../data/student.ergt"))?;
    let campus = load_graph(include_str!("../data/campus.erg"))?;
    let opts = CommunityOptions {
        semantic: true,
        ..CommunityOptions::default()
    };
    let c = propagate_communities(&project(&campus, &tax, None), &campus, &tax, &opts);
    for (e, l) in &c.partition {
        println!("{}\t{l}", campus.display_name(*e));
    }
    println!("rounds: {}, converged: {}", c.rounds, c.converged);
    Ok(())
}
