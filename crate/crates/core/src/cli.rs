//! Command-line front end. Exit codes: 0 success, 1 user error, 2 internal
//! error. Output depends only on the inputs, flags and seed; the thread count
//! never changes a byte.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analytics::{
    betweenness, project, propagate_communities, rw_centrality, CommunityOptions, SeedLabels, WalkOptions,
};
use crate::graph::{merge, ErGraph, Label};
use crate::io::{load_graph, load_taxonomy, write_graph};
use crate::matcher::{find_mappings, MatchOptions};
use crate::output::{self, Format};
use crate::path::{eval_path, PathExpr};
use crate::query::{answer, parse_query, AnswerOptions};
use crate::rules::{parse_rules_with, saturate, RuleError, RuleMode, Saturation, SaturationOptions};
use crate::taxonomy::LabelTaxonomy;

#[derive(Debug, Parser)]
#[command(
    name = "ergraph",
    version,
    about = "Query, infer over and analyse typed hypergraphs",
    long_about = "Query, infer over and analyse typed hypergraphs.\n\n\
        Graphs (.erg) hold `entity <token> <Label> [\"ext\"]` and `rel <Label> <token>+` lines; \
        taxonomies (.ergt) hold `Child < Parent` lines. Repeating --graph merges the graphs, \
        unifying entities that share an external id. Entities print as their external id, \
        or `_:<n>` when they have none."
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Graph document (.erg); repeat to merge several graphs
    #[arg(long = "graph", value_name = "PATH", global = true)]
    pub graphs: Vec<PathBuf>,
    /// Taxonomy document (.ergt)
    #[arg(long, value_name = "PATH", global = true)]
    pub taxonomy: Option<PathBuf>,
    /// Seed for randomized commands
    #[arg(long, default_value_t = 42, global = true)]
    pub seed: u64,
    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Tsv, global = true)]
    pub format: OutputFormat,
    /// Maximum number of result rows
    #[arg(long, global = true)]
    pub limit: Option<usize>,
    /// Worker threads (default: available parallelism)
    #[arg(long, env = "ERGRAPH_THREADS", global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Tsv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Tsv => Format::Tsv,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Safe,
    Existential,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and integrity-check the inputs
    #[command(long_about = "Load and integrity-check the inputs.\n\n\
        Prints `ok` followed by one `warning<TAB>message` line per finding \
        (for example a label used by both entities and relations). \
        Optional --pattern, --query and --rules files are parsed as well.")]
    Validate {
        /// Pattern graph (.erg) to parse
        #[arg(long)]
        pattern: Option<PathBuf>,
        /// Query (.ergq) to parse
        #[arg(long)]
        query: Option<PathBuf>,
        /// Rules (.ergr) to parse
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Enumerate mappings of a pattern graph into the data graph
    #[command(long_about = "Enumerate mappings of a pattern graph (.erg) into the data graph.\n\n\
        A data entity may stand for a pattern entity when its label specializes the pattern label; \
        every pattern relation needs a data relation with the same arguments (position by position) \
        and a specializing label. TSV: a header of pattern entity names, then one row per mapping \
        giving each image (`-` when unmapped), ordered by image tuple.")]
    Match {
        /// Pattern graph (.erg)
        #[arg(long, value_name = "FILE")]
        pattern: PathBuf,
        /// Require distinct images
        #[arg(long)]
        injective: bool,
        /// Also list partial mappings
        #[arg(long)]
        partial: bool,
    },
    /// Answer a query file (.ergq)
    #[command(long_about = "Answer a query file (.ergq).\n\n\
        Atoms `label(?x, \"ext\")`, constraints `?x : Label` and path atoms `?x -[expr]-> ?y`. \
        TSV: a header of variable names in ascending order, then distinct binding rows in ascending order.")]
    Query {
        /// Query document (.ergq)
        #[arg(long, value_name = "FILE")]
        query: PathBuf,
    },
    /// Evaluate a path expression
    #[command(long_about = "Evaluate a path expression over binary relations.\n\n\
        Syntax: `label`, `^label` (inverse), `a/b` (sequence), `a|b` (alternation), `e*`, `e+`, `( )`. \
        TSV: one `from<TAB>to` line per pair, ascending.")]
    Path {
        /// Path expression
        #[arg(long)]
        expr: String,
        /// External id of the start entity
        #[arg(long)]
        from: Option<String>,
        /// External id of the end entity
        #[arg(long)]
        to: Option<String>,
    },
    /// Saturate the graph with forward-chaining rules (.ergr)
    #[command(long_about = "Saturate the graph with forward-chaining rules (.ergr).\n\n\
        Rules read `RULE name WHERE atoms THEN atoms END`. Without --output the report is printed \
        as `# key value` lines followed by the saturated graph document; with --output the graph \
        goes to that file and only the report is printed. --provenance writes \
        `fact<TAB>rule<TAB>binding` lines.")]
    Infer {
        /// Rules document (.ergr)
        #[arg(long, value_name = "FILE")]
        rules: PathBuf,
        /// `existential` allows conclusion-only variables, which create fresh entities
        #[arg(long, value_enum, default_value_t = ModeArg::Safe)]
        mode: ModeArg,
        /// Give up after this many passes (exit 1, partial result printed)
        #[arg(long, default_value_t = 1000)]
        max_iterations: usize,
        /// Write the saturated graph here instead of stdout
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Write one `fact<TAB>rule<TAB>binding` line per derived fact
        #[arg(long, value_name = "FILE")]
        provenance: Option<PathBuf>,
    },
    /// Print the merged input graphs as one canonical document
    #[command(long_about = "Print the merged input graphs as one canonical graph document: \
        entities in id order, then relations in id order.")]
    Merge,
    /// Detect communities by label propagation
    #[command(long_about = "Detect communities by label propagation over binary relations.\n\n\
        --types restricts the relations used (labels that specialize one of the listed labels). \
        --semantic starts from entity labels and lets votes count for every label they specialize. \
        TSV: one `entity<TAB>community` line per entity. The seed is echoed on stderr.")]
    Communities {
        /// Start from entity labels and count votes up the taxonomy
        #[arg(long)]
        semantic: bool,
        /// Comma-separated relation labels
        #[arg(long, value_delimiter = ',')]
        types: Vec<String>,
        /// Stop after this many sweeps
        #[arg(long, default_value_t = 100)]
        max_rounds: usize,
        /// Seed semantic communities from targets of this binary relation
        #[arg(long)]
        tags: Option<String>,
    },
    /// Score entities by betweenness (or random-walk) centrality
    #[command(long_about = "Score entities by betweenness centrality over binary relations.\n\n\
        Each unordered pair of entities counts once. --types restricts the relations used. \
        --approx switches to visit counts of seeded random walks (the seed is echoed on stderr). \
        TSV: `entity<TAB>value` with six decimals, highest first, ties by entity id.")]
    Centrality {
        /// Comma-separated relation labels
        #[arg(long, value_delimiter = ',')]
        types: Vec<String>,
        /// Use random-walk visit counts
        #[arg(long)]
        approx: bool,
        /// Number of walks with --approx (default 10 per entity)
        #[arg(long)]
        walks: Option<usize>,
        /// Steps per walk with --approx (default 2 per entity)
        #[arg(long)]
        walk_length: Option<usize>,
    },
    /// Shortest declared-edge distance between two labels
    #[command(long_about = "Shortest distance between two labels over declared taxonomy pairs, \
        ignoring direction. Prints an integer, or `inf` when they are not connected.")]
    Distance {
        /// First label
        a: String,
        /// Second label
        b: String,
    },
    /// Entity, relation and label counts
    #[command(long_about = "Entity, relation and label counts as `key<TAB>value` lines.")]
    Stats,
}

#[derive(Debug)]
enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    fn user(e: impl std::fmt::Display) -> Self {
        CliError::User(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

/// Parses `args` and runs the command, writing to the given streams.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = write!(err, "{}", e.render());
                return 1;
            }
            let rendered = e.render().to_string();
            let mut lines = rendered.lines().map(str::trim).filter(|l| !l.is_empty());
            let mut first = lines.next().unwrap_or("error: invalid usage").to_string();
            if first.ends_with(':') {
                first = format!("{first} {}", lines.next().unwrap_or_default());
            }
            let _ = writeln!(err, "{first}");
            let _ = writeln!(err, "hint: see `ergraph --help` or `ergraph <command> --help`");
            return 1;
        }
    };

    let threads = cli
        .common
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "internal error: {e}");
            return 2;
        }
    };
    let mut diag = String::new();
    let result = pool.install(|| execute(&cli, &mut diag));
    let _ = err.write_all(diag.as_bytes());
    match result {
        Ok(text) => match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "internal error: {e}");
                2
            }
        },
        Err(CliError::User(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(CliError::Internal(msg)) => {
            let _ = writeln!(err, "internal error: {msg}");
            2
        }
    }
}

struct Inputs {
    graph: Option<ErGraph>,
    tax: LabelTaxonomy,
}

impl Inputs {
    fn load(common: &Common) -> Result<Self, CliError> {
        let tax = match &common.taxonomy {
            Some(p) => load_taxonomy(&read(p)?).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?,
            None => LabelTaxonomy::new(),
        };
        let mut graph: Option<ErGraph> = None;
        for p in &common.graphs {
            let g = load_graph(&read(p)?).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?;
            graph = Some(match graph {
                None => g,
                Some(acc) => {
                    merge(&acc, &g, &tax)
                        .map_err(|e| CliError::User(format!("merging {}: {e}", p.display())))?
                        .0
                }
            });
        }
        Ok(Inputs { graph, tax })
    }

    fn graph(&self) -> Result<&ErGraph, CliError> {
        self.graph
            .as_ref()
            .ok_or_else(|| CliError::User("this command needs at least one --graph".into()))
    }
}

fn labels(names: &[String]) -> Result<Option<BTreeSet<Label>>, CliError> {
    if names.is_empty() {
        return Ok(None);
    }
    names
        .iter()
        .map(|n| Label::new(n.trim()).map_err(CliError::user))
        .collect::<Result<BTreeSet<_>, _>>()
        .map(Some)
}

fn execute(cli: &Cli, err: &mut String) -> Result<String, CliError> {
    let common = &cli.common;
    let format: Format = common.format.into();
    let inputs = Inputs::load(common)?;
    let tax = &inputs.tax;

    match &cli.command {
        Command::Validate { pattern, query, rules } => {
            let mut warnings = Vec::new();
            if let Some(g) = &inputs.graph {
                warnings.extend(
                    g.validate()
                        .map_err(|e| CliError::Internal(e.to_string()))?
                        .iter()
                        .map(ToString::to_string),
                );
            }
            if let Some(p) = pattern {
                load_graph(&read(p)?).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?;
            }
            if let Some(p) = query {
                parse_query(&read(p)?).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?;
            }
            if let Some(p) = rules {
                parse_rules_with(&read(p)?, RuleMode::Existential)
                    .map_err(|e| CliError::User(format!("{}: {e}", p.display())))?;
            }
            Ok(match format {
                Format::Tsv => {
                    let mut s = String::from("ok\n");
                    for w in &warnings {
                        let _ = writeln!(s, "warning\t{w}");
                    }
                    s
                }
                Format::Json => json_text(json!({"ok": true, "warnings": warnings})),
            })
        }
        Command::Match {
            pattern,
            injective,
            partial,
        } => {
            let g = inputs.graph()?;
            let h = load_graph(&read(pattern)?).map_err(|e| CliError::User(format!("{}: {e}", pattern.display())))?;
            let opts = MatchOptions {
                total: !partial,
                injective: *injective,
                limit: common.limit,
                ..MatchOptions::default()
            };
            let ms = find_mappings(&h, g, tax, &opts);
            Ok(output::mappings(&ms, &h, g, format))
        }
        Command::Query { query } => {
            let g = inputs.graph()?;
            let q = parse_query(&read(query)?).map_err(|e| CliError::User(format!("{}: {e}", query.display())))?;
            let opts = AnswerOptions {
                limit: common.limit,
                parallel: true,
            };
            let t = answer(&q, g, tax, &opts).map_err(CliError::user)?;
            for w in &t.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            Ok(output::answers(&t, g, format))
        }
        Command::Path { expr, from, to } => {
            let g = inputs.graph()?;
            let e = PathExpr::parse(expr).map_err(CliError::user)?;
            let resolve = |ext: &Option<String>| -> Result<_, CliError> {
                ext.as_ref()
                    .map(|x| {
                        g.by_ext(x)
                            .ok_or_else(|| CliError::User(format!("no entity with external id {x:?}")))
                    })
                    .transpose()
            };
            let r = eval_path(g, tax, &e, resolve(from)?, resolve(to)?);
            for w in &r.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            let mut pairs = r.pairs;
            if let Some(limit) = common.limit {
                pairs = pairs.into_iter().take(limit).collect();
            }
            Ok(output::pairs(&pairs, g, format))
        }
        Command::Infer {
            rules,
            mode,
            max_iterations,
            output: out_path,
            provenance,
        } => {
            let g = inputs.graph()?;
            let mode = match mode {
                ModeArg::Safe => RuleMode::Safe,
                ModeArg::Existential => RuleMode::Existential,
            };
            let rs = parse_rules_with(&read(rules)?, mode)
                .map_err(|e| CliError::User(format!("{}: {e}", rules.display())))?;
            let opts = SaturationOptions {
                mode,
                max_iterations: *max_iterations,
                parallel: true,
            };
            let (sat, limit_hit) = match saturate(g, &rs, tax, &opts) {
                Ok(s) => (s, false),
                Err(RuleError::IterationLimitExceeded { partial }) => (*partial, true),
                Err(e) => return Err(CliError::user(e)),
            };
            if let Some(p) = provenance {
                std::fs::write(p, sat.provenance_tsv()).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?;
            }
            let doc = write_graph(&sat.graph);
            if let Some(p) = out_path {
                std::fs::write(p, &doc).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?;
            }
            let text = infer_report(&sat, format, out_path.is_none().then_some(doc.as_str()));
            if limit_hit {
                let _ = write!(err, "{text}");
                return Err(CliError::User(format!(
                    "no fixpoint within {max_iterations} passes; partial result printed"
                )));
            }
            Ok(text)
        }
        Command::Merge => Ok(write_graph(inputs.graph()?)),
        Command::Communities {
            semantic,
            types,
            max_rounds,
            tags,
        } => {
            let g = inputs.graph()?;
            let p = project(g, tax, labels(types)?.as_ref());
            let seed_labels = match tags {
                Some(t) => SeedLabels::Tags(Label::new(t).map_err(CliError::user)?),
                None => SeedLabels::EntityLabels,
            };
            let _ = writeln!(err, "seed {}", common.seed);
            let c = propagate_communities(
                &p,
                g,
                tax,
                &CommunityOptions {
                    seed: common.seed,
                    max_rounds: *max_rounds,
                    semantic: *semantic,
                    seed_labels,
                },
            );
            if !c.converged {
                let _ = writeln!(err, "warning: no fixpoint after {} rounds", c.rounds);
            }
            Ok(output::partition(&c, g, format))
        }
        Command::Centrality {
            types,
            approx,
            walks,
            walk_length,
        } => {
            let g = inputs.graph()?;
            let p = project(g, tax, labels(types)?.as_ref());
            let mut t = if *approx {
                let _ = writeln!(err, "seed {}", common.seed);
                rw_centrality(
                    &p,
                    &WalkOptions {
                        seed: common.seed,
                        walks: *walks,
                        walk_length: *walk_length,
                    },
                )
            } else {
                betweenness(&p)
            };
            if let Some(limit) = common.limit {
                t.scores.truncate(limit);
            }
            Ok(output::scores(&t, g, format))
        }
        Command::Distance { a, b } => {
            let a = Label::new(a).map_err(CliError::user)?;
            let b = Label::new(b).map_err(CliError::user)?;
            let d = tax.semantic_distance(&a, &b);
            Ok(match format {
                Format::Tsv => d.map_or("inf\n".into(), |d| format!("{d}\n")),
                Format::Json => json_text(json!({"distance": d})),
            })
        }
        Command::Stats => {
            let g = inputs.graph()?;
            let entity_labels: BTreeSet<&Label> = g.entities().map(|e| &e.label).collect();
            let relation_labels: BTreeSet<&Label> = g.relations().map(|r| &r.label).collect();
            let rows = [
                ("entities", g.entity_count()),
                ("relations", g.relation_count()),
                ("labels", g.labels().len()),
                ("entity_labels", entity_labels.len()),
                ("relation_labels", relation_labels.len()),
                ("taxonomy_pairs", tax.declared_count()),
            ];
            Ok(match format {
                Format::Tsv => rows.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect(),
                Format::Json => json_text(serde_json::Value::Object(
                    rows.iter().map(|(k, v)| (k.to_string(), json!(v))).collect(),
                )),
            })
        }
    }
}

fn json_text(v: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

fn infer_report(sat: &Saturation, format: Format, graph_doc: Option<&str>) -> String {
    let r = &sat.report;
    match format {
        Format::Tsv => {
            let prefix = if graph_doc.is_some() { "# " } else { "" };
            let mut s = String::new();
            let _ = writeln!(s, "{prefix}iterations {}", r.iterations);
            let _ = writeln!(s, "{prefix}facts_added {}", r.facts_added);
            let _ = writeln!(s, "{prefix}entities_added {}", r.entities_added);
            let _ = writeln!(s, "{prefix}reached_fixpoint {}", r.reached_fixpoint);
            for (rule, n) in &r.fired {
                let _ = writeln!(s, "{prefix}fired {rule} {n}");
            }
            if let Some(doc) = graph_doc {
                s.push_str(doc);
            }
            s
        }
        Format::Json => {
            let mut v = json!({
                "iterations": r.iterations,
                "facts_added": r.facts_added,
                "entities_added": r.entities_added,
                "reached_fixpoint": r.reached_fixpoint,
                "fired": r.fired,
            });
            if let Some(doc) = graph_doc {
                v["graph"] = json!(doc);
            }
            json_text(v)
        }
    }
}
