//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::process::Command;

use ergraph::path::PathExpr;
use ergraph::{EntityId, ErGraph, Label, LabelTaxonomy};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ENTITY_LABELS: &[&str] = &["A", "B", "C", "D"];
pub const RELATION_LABELS: &[&str] = &["p", "q", "r"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn l(s: &str) -> Label {
    Label::new(s).unwrap()
}

/// Random declarations among entity labels and among relation labels.
pub fn random_taxonomy(rng: &mut ChaCha8Rng, pairs: usize) -> LabelTaxonomy {
    let mut tax = LabelTaxonomy::new();
    for _ in 0..pairs {
        let pool = if rng.gen_bool(0.5) {
            ENTITY_LABELS
        } else {
            RELATION_LABELS
        };
        let a = pool.choose(rng).unwrap();
        let b = pool.choose(rng).unwrap();
        if a != b {
            tax.declare(l(a), l(b));
        }
    }
    tax
}

pub struct GraphShape {
    pub entities: usize,
    pub relations: usize,
    pub max_arity: usize,
    pub ext_prob: f64,
}

pub fn random_graph(rng: &mut ChaCha8Rng, shape: &GraphShape) -> ErGraph {
    let mut g = ErGraph::new();
    for i in 0..shape.entities {
        let ext = rng.gen_bool(shape.ext_prob).then(|| format!("x{i}"));
        g.add_entity(l(ENTITY_LABELS.choose(rng).unwrap()), ext.as_deref())
            .unwrap();
    }
    if shape.entities == 0 {
        return g;
    }
    for _ in 0..shape.relations {
        let arity = rng.gen_range(1..=shape.max_arity);
        let args: Vec<EntityId> = (0..arity)
            .map(|_| EntityId(rng.gen_range(0..shape.entities) as u32))
            .collect();
        g.add_relation(l(RELATION_LABELS.choose(rng).unwrap()), &args).unwrap();
    }
    g
}

/// Same graph with entities and relations inserted in shuffled order.
pub fn shuffled(g: &ErGraph, rng: &mut ChaCha8Rng) -> ErGraph {
    let mut order: Vec<EntityId> = g.entity_ids().collect();
    order.shuffle(rng);
    let mut out = ErGraph::new();
    let mut new_id = BTreeMap::new();
    for old in order {
        let e = g.entity(old).unwrap();
        new_id.insert(old, out.add_entity(e.label.clone(), e.ext.as_deref()).unwrap());
    }
    let mut rels: Vec<_> = g.relations().collect();
    rels.shuffle(rng);
    for r in rels {
        let args: Vec<EntityId> = r.args.iter().map(|a| new_id[a]).collect();
        out.add_relation(r.label.clone(), &args).unwrap();
    }
    out
}

/// Reflexive-transitive closure of the declared pairs by Floyd-Warshall.
pub struct Closure {
    pairs: BTreeSet<(String, String)>,
}

impl Closure {
    pub fn of(tax: &LabelTaxonomy) -> Self {
        let mut names: Vec<String> = tax.labels().iter().map(|x| x.to_string()).collect();
        names.sort();
        let n = names.len();
        let idx: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut m = vec![vec![false; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = true;
        }
        for (c, p) in tax.declared() {
            m[idx[c.as_str()]][idx[p.as_str()]] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if m[i][k] && m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
        let mut pairs = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                if m[i][j] {
                    pairs.insert((names[i].clone(), names[j].clone()));
                }
            }
        }
        Closure { pairs }
    }

    pub fn pairs(&self) -> &BTreeSet<(String, String)> {
        &self.pairs
    }

    /// Does `a` specialize `b`?
    pub fn holds(&self, a: &Label, b: &Label) -> bool {
        a == b || b.is_top() || self.pairs.contains(&(a.to_string(), b.to_string()))
    }
}

/// Every assignment of pattern entities to data entities (or to nothing, when
/// `partial`) that meets the mapping conditions, checked directly.
pub fn brute_force_mappings(
    h: &ErGraph,
    g: &ErGraph,
    x: &Closure,
    injective: bool,
    partial: bool,
) -> BTreeSet<Vec<Option<EntityId>>> {
    let n = h.entity_count();
    let choices: Vec<Option<EntityId>> = partial
        .then_some(None)
        .into_iter()
        .chain(g.entity_ids().map(Some))
        .collect();
    let mut out = BTreeSet::new();
    if choices.is_empty() && n > 0 {
        return out;
    }
    let mut idx = vec![0usize; n];
    loop {
        let tuple: Vec<Option<EntityId>> = idx.iter().map(|&i| choices[i]).collect();
        if mapping_conditions_hold(h, g, x, &tuple, injective) {
            out.insert(tuple);
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            idx[k] += 1;
            if idx[k] < choices.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn mapping_conditions_hold(h: &ErGraph, g: &ErGraph, x: &Closure, t: &[Option<EntityId>], injective: bool) -> bool {
    if injective {
        let images: Vec<EntityId> = t.iter().flatten().copied().collect();
        if images.iter().collect::<BTreeSet<_>>().len() != images.len() {
            return false;
        }
    }
    for e in h.entities() {
        if let Some(img) = t[e.id.index()] {
            if !x.holds(g.entity_label(img), &e.label) {
                return false;
            }
        }
    }
    h.relations().all(|r| {
        let Some(args) = r.args.iter().map(|a| t[a.index()]).collect::<Option<Vec<_>>>() else {
            return true;
        };
        g.relations().any(|s| s.args == args && x.holds(&s.label, &r.label))
    })
}

/// Random path expression over the relation labels; `depth` bounds nesting.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: usize, allow_star: bool) -> PathExpr {
    let leaf = |rng: &mut ChaCha8Rng| {
        let lab = l(RELATION_LABELS.choose(rng).unwrap());
        if rng.gen_bool(0.3) {
            PathExpr::Inverse(lab)
        } else {
            PathExpr::Step(lab)
        }
    };
    if depth <= 1 || rng.gen_bool(0.3) {
        return leaf(rng);
    }
    let kinds = if allow_star { 4 } else { 2 };
    match rng.gen_range(0..kinds) {
        0 => PathExpr::Seq(
            (0..rng.gen_range(2..=3))
                .map(|_| random_expr(rng, depth - 1, allow_star))
                .collect(),
        ),
        1 => PathExpr::Alt(
            (0..rng.gen_range(2..=3))
                .map(|_| random_expr(rng, depth - 1, allow_star))
                .collect(),
        ),
        2 => PathExpr::Star(Box::new(random_expr(rng, depth - 1, allow_star))),
        _ => PathExpr::Plus(Box::new(random_expr(rng, depth - 1, allow_star))),
    }
}

pub fn has_star(e: &PathExpr) -> bool {
    match e {
        PathExpr::Step(_) | PathExpr::Inverse(_) => false,
        PathExpr::Seq(xs) | PathExpr::Alt(xs) => xs.iter().any(has_star),
        PathExpr::Star(_) | PathExpr::Plus(_) => true,
    }
}

type Pairs = BTreeSet<(EntityId, EntityId)>;

fn binary_steps(g: &ErGraph, x: &Closure, lab: &Label, inverse: bool) -> Pairs {
    g.relations()
        .filter(|r| r.arity() == 2 && x.holds(&r.label, lab))
        .map(|r| {
            if inverse {
                (r.args[1], r.args[0])
            } else {
                (r.args[0], r.args[1])
            }
        })
        .collect()
}

fn compose(a: &Pairs, b: &Pairs) -> Pairs {
    let mut out = Pairs::new();
    for &(x, y) in a {
        for &(y2, z) in b.range((y, EntityId(0))..=(y, EntityId(u32::MAX))) {
            debug_assert_eq!(y, y2);
            out.insert((x, z));
        }
    }
    out
}

/// Transitive closure by Warshall over an n x n matrix.
fn warshall(n: usize, rel: &Pairs, reflexive: bool) -> Pairs {
    let mut m = vec![vec![false; n]; n];
    for &(a, b) in rel {
        m[a.index()][b.index()] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out = Pairs::new();
    for i in 0..n {
        for j in 0..n {
            if m[i][j] || (reflexive && i == j) {
                out.insert((EntityId(i as u32), EntityId(j as u32)));
            }
        }
    }
    out
}

/// Relational-algebra semantics of a path expression.
pub fn path_algebra(g: &ErGraph, x: &Closure, e: &PathExpr) -> Pairs {
    let n = g.entity_count();
    match e {
        PathExpr::Step(lab) => binary_steps(g, x, lab, false),
        PathExpr::Inverse(lab) => binary_steps(g, x, lab, true),
        PathExpr::Seq(xs) => {
            let mut acc = warshall(n, &Pairs::new(), true);
            for s in xs {
                acc = compose(&acc, &path_algebra(g, x, s));
            }
            acc
        }
        PathExpr::Alt(xs) => xs.iter().flat_map(|s| path_algebra(g, x, s)).collect(),
        PathExpr::Star(s) => warshall(n, &path_algebra(g, x, s), true),
        PathExpr::Plus(s) => warshall(n, &path_algebra(g, x, s), false),
    }
}

/// Longest word of a star-free expression.
pub fn max_word_len(e: &PathExpr) -> usize {
    match e {
        PathExpr::Step(_) | PathExpr::Inverse(_) => 1,
        PathExpr::Seq(xs) => xs.iter().map(max_word_len).sum(),
        PathExpr::Alt(xs) => xs.iter().map(max_word_len).max().unwrap_or(0),
        PathExpr::Star(_) | PathExpr::Plus(_) => unreachable!("star-free only"),
    }
}

/// One traversal step: relation label and whether it was walked backwards.
type Letter = (Label, bool);

/// End positions reachable after matching `e` from `start` in `word`.
fn match_word(e: &PathExpr, x: &Closure, word: &[Letter], start: usize) -> BTreeSet<usize> {
    match e {
        PathExpr::Step(lab) | PathExpr::Inverse(lab) => {
            let inverse = matches!(e, PathExpr::Inverse(_));
            match word.get(start) {
                Some((rl, back)) if *back == inverse && x.holds(rl, lab) => [start + 1].into(),
                _ => BTreeSet::new(),
            }
        }
        PathExpr::Seq(xs) => xs.iter().fold([start].into(), |ends: BTreeSet<usize>, s| {
            ends.iter().flat_map(|&i| match_word(s, x, word, i)).collect()
        }),
        PathExpr::Alt(xs) => xs.iter().flat_map(|s| match_word(s, x, word, start)).collect(),
        PathExpr::Star(_) | PathExpr::Plus(_) => unreachable!("star-free only"),
    }
}

/// Enumerates every walk of length 1..=max over binary relations (forwards or
/// backwards) and keeps its endpoints when its label word is in the language.
pub fn path_walks(g: &ErGraph, x: &Closure, e: &PathExpr) -> Pairs {
    let max = max_word_len(e);
    let mut out = Pairs::new();
    let bin: Vec<_> = g.relations().filter(|r| r.arity() == 2).collect();
    fn walk(
        g_bin: &[&ergraph::graph::Relation],
        x: &Closure,
        e: &PathExpr,
        start: EntityId,
        at: EntityId,
        word: &mut Vec<Letter>,
        max: usize,
        out: &mut Pairs,
    ) {
        if !word.is_empty() && match_word(e, x, word, 0).contains(&word.len()) {
            out.insert((start, at));
        }
        if word.len() == max {
            return;
        }
        for r in g_bin {
            for back in [false, true] {
                let (from, to) = if back {
                    (r.args[1], r.args[0])
                } else {
                    (r.args[0], r.args[1])
                };
                if from == at {
                    word.push((r.label.clone(), back));
                    walk(g_bin, x, e, start, to, word, max, out);
                    word.pop();
                }
            }
        }
    }
    for s in g.entity_ids() {
        walk(&bin, x, e, s, s, &mut Vec::new(), max, &mut out);
    }
    out
}

/// Betweenness by listing every shortest path of every unordered pair.
pub fn brute_betweenness(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let mut adj = vec![BTreeSet::new(); n];
    for &(a, b) in edges {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let mut score = vec![0.0; n];
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        for t in s + 1..n {
            if dist[t] == usize::MAX {
                continue;
            }
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(p) = stack.pop() {
                let last = *p.last().unwrap();
                if last == t {
                    paths.push(p);
                    continue;
                }
                for &w in &adj[last] {
                    if dist[w] == dist[last] + 1 && dist[w] <= dist[t] {
                        let mut q = p.clone();
                        q.push(w);
                        stack.push(q);
                    }
                }
            }
            let total = paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    score[v] += 1.0 / total;
                }
            }
        }
    }
    score
}

/// Random undirected edge list.
pub fn random_edges(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    edges
}

// ---- command line ----

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Golden invocations, run from the data directory. Each name has a
/// `tests/golden/<name>.out` file holding the expected stdout.
pub const GOLDEN: &[(&str, &[&str])] = &[
    (
        "validate",
        &[
            "validate",
            "--graph",
            "social.erg",
            "--taxonomy",
            "social.ergt",
            "--rules",
            "rdfs-lite.ergr",
        ],
    ),
    (
        "validate_json",
        &["validate", "--graph", "student.erg", "--format", "json"],
    ),
    (
        "match",
        &[
            "match",
            "--graph",
            "student.erg",
            "--taxonomy",
            "student.ergt",
            "--pattern",
            "owner_pattern.erg",
        ],
    ),
    (
        "match_partial",
        &[
            "match",
            "--graph",
            "student.erg",
            "--taxonomy",
            "student.ergt",
            "--pattern",
            "owner_pattern.erg",
            "--partial",
            "--format",
            "json",
        ],
    ),
    (
        "query",
        &[
            "query",
            "--graph",
            "student.erg",
            "--taxonomy",
            "student.ergt",
            "--query",
            "q.ergq",
        ],
    ),
    (
        "query_reach",
        &[
            "query",
            "--graph",
            "social.erg",
            "--taxonomy",
            "social.ergt",
            "--query",
            "reach.ergq",
        ],
    ),
    (
        "query_json",
        &[
            "query",
            "--graph",
            "student.erg",
            "--taxonomy",
            "student.ergt",
            "--query",
            "owner.ergq",
            "--format",
            "json",
        ],
    ),
    (
        "path",
        &[
            "path",
            "--graph",
            "social.erg",
            "--taxonomy",
            "social.ergt",
            "--expr",
            "knows+",
        ],
    ),
    (
        "path_from",
        &[
            "path",
            "--graph",
            "social.erg",
            "--taxonomy",
            "social.ergt",
            "--expr",
            "(knows|author)+",
            "--from",
            "ann",
        ],
    ),
    ("infer", &["infer", "--graph", "chain4.erg", "--rules", "trans.ergr"]),
    (
        "infer_rdfs",
        &[
            "infer",
            "--graph",
            "rdfs.erg",
            "--rules",
            "rdfs-lite.ergr",
            "--format",
            "json",
        ],
    ),
    (
        "merge",
        &[
            "merge",
            "--graph",
            "student.erg",
            "--graph",
            "people2.erg",
            "--taxonomy",
            "student.ergt",
        ],
    ),
    ("communities", &["communities", "--graph", "cliques.erg", "--seed", "7"]),
    (
        "communities_semantic",
        &[
            "communities",
            "--graph",
            "campus.erg",
            "--taxonomy",
            "student.ergt",
            "--semantic",
        ],
    ),
    ("centrality", &["centrality", "--graph", "star.erg"]),
    (
        "centrality_types",
        &[
            "centrality",
            "--graph",
            "social.erg",
            "--taxonomy",
            "social.ergt",
            "--types",
            "knows",
        ],
    ),
    (
        "centrality_approx",
        &[
            "centrality",
            "--graph",
            "barbell.erg",
            "--approx",
            "--seed",
            "3",
            "--format",
            "json",
        ],
    ),
    (
        "distance",
        &["distance", "Student", "Teacher", "--taxonomy", "student.ergt"],
    ),
    (
        "distance_inf",
        &["distance", "Student", "Car", "--taxonomy", "student.ergt"],
    ),
    ("stats", &["stats", "--graph", "barbell.erg"]),
];

pub struct Run {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

pub fn run_cli(args: &[&str], threads: Option<usize>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ergraph"));
    cmd.args(args).current_dir(data_dir()).env_remove("ERGRAPH_THREADS");
    if let Some(t) = threads {
        cmd.arg("--threads").arg(t.to_string());
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: out.stdout,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Compares every golden invocation against its file over several runs and
/// thread counts. Set `ERGRAPH_BLESS=1` to rewrite the files instead.
pub fn check_goldens(runs: usize, threads: &[usize]) -> Result<usize, String> {
    let bless = std::env::var_os("ERGRAPH_BLESS").is_some();
    let mut checked = 0;
    for (name, args) in GOLDEN {
        let path = golden_dir().join(format!("{name}.out"));
        if bless {
            let r = run_cli(args, Some(1));
            if r.code != 0 {
                return Err(format!("{name}: exit {} ({})", r.code, r.stderr.trim()));
            }
            std::fs::write(&path, &r.stdout).map_err(|e| e.to_string())?;
        }
        let want = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        for &t in threads {
            for run in 0..runs {
                let r = run_cli(args, Some(t));
                if r.code != 0 {
                    return Err(format!("{name}: exit {} ({})", r.code, r.stderr.trim()));
                }
                if r.stdout != want {
                    return Err(format!(
                        "{name}: run {run} with {t} threads differs from golden\n--- got\n{}",
                        String::from_utf8_lossy(&r.stdout)
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}
