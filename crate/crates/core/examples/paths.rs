//! Regular path expressions over binary relations.

use ergraph::io::{load_graph, load_taxonomy};
use ergraph::path::{eval_path, PathExpr};
use ergraph::LabelTaxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = load_graph(include_str!("../data/social.erg"))?;
    let tax = load_taxonomy(include_str!("../data/social.ergt"))?;

    for text in [
        "knows",
        "knows+",
        "knows/knows",
        "^knows",
        "knows*/author",
        "(knows|author)+",
        "cites*",
    ] {
        let expr: PathExpr = text.parse()?;
        let r = eval_path(&g, &tax, &expr, None, None);
        let pairs: Vec<String> = r
            .pairs
            .iter()
            .map(|(a, b)| format!("{}->{}", g.display_name(*a), g.display_name(*b)))
            .collect();
        println!("{expr:<18} {}", pairs.join(" "));
    }

    // without the taxonomy, friendOf edges no longer count as knows
    let expr = PathExpr::parse("knows+")?;
    let r = eval_path(&g, &LabelTaxonomy::new(), &expr, g.by_ext("ann"), None);
    println!("from ann, flat taxonomy: {} pairs", r.pairs.len());

    let r = eval_path(&g, &tax, &PathExpr::parse("likes")?, None, None);
    for w in r.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
