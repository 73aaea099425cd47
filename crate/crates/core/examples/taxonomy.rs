//! Label taxonomy: closure, ancestors, distances and minimal labels.

use ergraph::io::load_taxonomy;
use ergraph::Label;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tax = load_taxonomy(include_str!("../data/student.ergt"))?;
    let l = |s: &str| Label::new(s).expect("valid label");

    println!("PhD specializes Person: {}", tax.related(&l("PhD"), &l("Person")));
    println!("Person specializes PhD: {}", tax.related(&l("Person"), &l("PhD")));
    println!("everything specializes `_`: {}", tax.related(&l("Car"), &Label::top()));

    let names: Vec<String> = tax.ancestors(&l("PhD")).iter().map(ToString::to_string).collect();
    println!("ancestors(PhD) = {}", names.join(", "));

    for (a, b) in [("Student", "Person"), ("PhD", "Teacher"), ("PhD", "Car")] {
        match tax.semantic_distance(&l(a), &l(b)) {
            Some(d) => println!("distance({a}, {b}) = {d}"),
            None => println!("distance({a}, {b}) = inf"),
        }
    }

    let picked = tax.min_labels([l("Person"), l("Student"), l("Teacher")].iter());
    let picked: Vec<_> = picked.iter().map(Label::as_str).collect();
    println!("most specific of Person, Student, Teacher: {picked:?}");
    Ok(())
}
