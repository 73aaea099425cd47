//! Exact betweenness next to the random-walk estimate.

use ergraph::analytics::{betweenness, project, rw_centrality, WalkOptions};
use ergraph::io::load_graph;
use ergraph::LabelTaxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tax = LabelTaxonomy::new();
    for (name, text) in [
        ("star", include_str!("../data/star.erg")),
        ("barbell", include_str!("../data/barbell.erg")),
    ] {
        let g = load_graph(text)?;
        let p = project(&g, &tax, None);
        let exact = betweenness(&p);
        println!("{name}:");
        for (e, v) in exact.scores.iter().take(3) {
            println!("  {:<4} {v:.3}", g.display_name(*e));
        }
        for seed in [1, 2, 3] {
            let approx = rw_centrality(
                &p,
                &WalkOptions {
                    seed,
                    ..WalkOptions::default()
                },
            );
            let top = approx.top().map(|e| g.display_name(e)).unwrap_or_default();
            println!("  walks with seed {seed} rank {top} first");
        }
    }
    Ok(())
}
