//! # ergraph
//!
//! A typed-hypergraph engine. Graphs hold labelled entities and labelled
//! relations over ordered entity tuples of any arity; a label taxonomy (a
//! preorder over labels, read as "specializes") drives every operator:
//!
//! - [`matcher`]: mappings between graphs that respect relations and let a
//!   data label specialize a pattern label, with exhaustive search;
//! - [`query`] and [`path`]: a small conjunctive query language with regular
//!   path expressions;
//! - [`rules`]: forward-chaining saturation;
//! - [`graph::merge`]: merging graphs on shared external ids;
//! - [`analytics`]: label propagation communities and betweenness / random
//!   walk centrality over projections filtered by relation type.
//!
//! Runnable examples for each capability live in `examples/`; the `ergraph`
//! binary exposes the same operators on the command line.
//!
//! ```
//! use ergraph::{io, query};
//!
//! let g = io::load_graph("entity a Student \"alice\"\nentity b Car\n").unwrap();
//! let tax = io::load_taxonomy("Student < Person").unwrap();
//! let q = query::parse_query("?x : Person").unwrap();
//! let rows = query::answer(&q, &g, &tax, &Default::default()).unwrap();
//! assert_eq!(g.display_name(rows.rows[0][0]), "alice");
//! ```

pub mod analytics;
pub mod cli;
pub mod graph;
pub mod io;
pub mod matcher;
pub mod output;
pub mod path;
pub mod query;
pub mod rules;
pub mod syntax;
pub mod taxonomy;

pub use graph::{EntityId, ErGraph, Label, RelationId};
pub use matcher::{find_mappings, validate_mapping, ErMapping, MatchOptions};
pub use taxonomy::LabelTaxonomy;
