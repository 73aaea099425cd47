//! Text formats: load, write canonically, load again.

use ergraph::graph::isomorphic;
use ergraph::io::{load_graph, load_taxonomy, write_graph, write_taxonomy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = "# hand-written, odd order\r\nentity z Doc \"a \\\"quoted\\\" id\"\nentity y Person\nrel author y z\n";
    let g = load_graph(doc)?;
    let canonical = write_graph(&g);
    print!("{canonical}");
    let back = load_graph(&canonical)?;
    println!("round trip isomorphic: {}", isomorphic(&g, &back)?);

    let tax = load_taxonomy("PhD<Student\nStudent < Person\n")?;
    print!("{}", write_taxonomy(&tax));

    for bad in ["entity a Person\nrel knows a b\n", "entity a Per(son\n"] {
        match load_graph(bad) {
            Ok(_) => println!("unexpectedly accepted"),
            Err(e) => println!("rejected: {e}"),
        }
    }
    Ok(())
}
