//! Conjunctive queries with label constraints, constants and path atoms.

use ergraph::io::{load_graph, load_taxonomy};
use ergraph::output::{answers, Format};
use ergraph::query::{answer, parse_query, AnswerOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tax = load_taxonomy(include_str!("../data/student.ergt"))?;
    let g = load_graph(include_str!("../data/student.erg"))?;

    for text in [
        include_str!("../data/q.ergq"),
        include_str!("../data/owner.ergq"),
        "owns(\"alice\", ?car)",
    ] {
        let q = parse_query(text)?;
        println!("query: {q}");
        let table = answer(&q, &g, &tax, &AnswerOptions::default())?;
        print!("{}", answers(&table, &g, Format::Tsv));
        println!();
    }

    // reachability through a path atom; friendOf specializes knows
    let social = load_graph(include_str!("../data/social.erg"))?;
    let stax = load_taxonomy(include_str!("../data/social.ergt"))?;
    let q = parse_query("?a -[knows+]-> ?b  author(?b, ?doc)")?;
    let table = answer(&q, &social, &stax, &AnswerOptions::default())?;
    print!("{}", answers(&table, &social, Format::Json));
    Ok(())
}
