//! Pattern matching: every mapping of a pattern graph into a data graph,
//! then the same search restricted to injective and partial mappings.

use ergraph::io::{load_graph, load_taxonomy};
use ergraph::matcher::{compose, find_mappings, validate_mapping, ErMapping, MatchOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tax = load_taxonomy(include_str!("../data/student.ergt"))?;
    let data = load_graph(include_str!("../data/student.erg"))?;
    let pattern = load_graph(include_str!("../data/owner_pattern.erg"))?;

    let found = find_mappings(&pattern, &data, &tax, &MatchOptions::default());
    for m in &found {
        let pairs: Vec<String> = m
            .entity_map()
            .iter()
            .map(|(h, g)| format!("{h} -> {}", data.display_name(*g)))
            .collect();
        println!("mapping: {}", pairs.join(", "));
        assert!(validate_mapping(m, &tax)?.is_valid());
    }

    // a triangle maps into K4 in 4 * 3 * 2 ways
    let triangle = load_graph("entity a V\nentity b V\nentity c V\nrel e a b\nrel e b c\nrel e c a\n")?;
    let mut k4 = String::new();
    for i in 0..4 {
        k4.push_str(&format!("entity v{i} V\n"));
    }
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                k4.push_str(&format!("rel e v{i} v{j}\n"));
            }
        }
    }
    let k4 = load_graph(&k4)?;
    let all = find_mappings(&triangle, &k4, &tax, &MatchOptions::default());
    let injective = MatchOptions {
        injective: true,
        ..MatchOptions::default()
    };
    println!(
        "triangle -> K4: {} mappings, {} injective",
        all.len(),
        find_mappings(&triangle, &k4, &tax, &injective).len()
    );

    let partial = MatchOptions {
        total: false,
        ..MatchOptions::default()
    };
    println!(
        "partial mappings of the owner pattern: {}",
        find_mappings(&pattern, &data, &tax, &partial).len()
    );

    // mappings compose: pattern -> data -> data
    let id = ErMapping::identity(&data);
    let composed = compose(&found[0], &id, &tax)?;
    println!("composition valid: {}", validate_mapping(&composed, &tax)?.is_valid());
    Ok(())
}
