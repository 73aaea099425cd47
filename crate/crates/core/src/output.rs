//! TSV and JSON renderings of result tables. Entities print as their external
//! id when they have one and as `_:<id>` otherwise. JSON output carries the
//! same fields as the TSV.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::analytics::{Communities, ScoreTable};
use crate::graph::{EntityId, ErGraph};
use crate::matcher::ErMapping;
use crate::query::AnswerTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Tsv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected tsv or json)")),
        }
    }
}

fn json_text(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

fn tsv_line(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join("\t"));
    out.push('\n');
}

/// Header of variable names, then one row per binding.
pub fn answers(t: &AnswerTable, g: &ErGraph, format: Format) -> String {
    match format {
        Format::Tsv => {
            let mut out = String::new();
            tsv_line(&mut out, &t.variables);
            for row in &t.rows {
                tsv_line(&mut out, &row.iter().map(|e| g.display_name(*e)).collect::<Vec<_>>());
            }
            out
        }
        Format::Json => json_text(json!({
            "variables": t.variables,
            "rows": t.rows.iter().map(|row| {
                t.variables.iter().zip(row).map(|(v, e)| (v.clone(), Value::from(g.display_name(*e))))
                    .collect::<serde_json::Map<_, _>>()
            }).collect::<Vec<_>>(),
        })),
    }
}

/// Header of pattern entity names (external id, else the canonical `e<n>`
/// token), then the image of each entity per mapping (`-` where unmapped).
pub fn mappings(ms: &[ErMapping<'_>], pattern: &ErGraph, data: &ErGraph, format: Format) -> String {
    let header: Vec<String> = pattern
        .entities()
        .map(|e| e.ext.as_deref().map_or_else(|| e.id.to_string(), str::to_string))
        .collect();
    let cell = |m: &ErMapping<'_>, e: EntityId| m.get(e).map(|x| data.display_name(x));
    match format {
        Format::Tsv => {
            let mut out = String::new();
            tsv_line(&mut out, &header);
            for m in ms {
                let row: Vec<String> = pattern
                    .entity_ids()
                    .map(|e| cell(m, e).unwrap_or_else(|| "-".into()))
                    .collect();
                tsv_line(&mut out, &row);
            }
            out
        }
        Format::Json => json_text(json!({
            "entities": header,
            "mappings": ms.iter().map(|m| {
                header.iter().zip(pattern.entity_ids())
                    .map(|(h, e)| (h.clone(), cell(m, e).map_or(Value::Null, Value::from)))
                    .collect::<serde_json::Map<_, _>>()
            }).collect::<Vec<_>>(),
        })),
    }
}

/// One `from<TAB>to` line per pair.
pub fn pairs(ps: &BTreeSet<(EntityId, EntityId)>, g: &ErGraph, format: Format) -> String {
    match format {
        Format::Tsv => {
            let mut out = String::new();
            for (a, b) in ps {
                tsv_line(&mut out, &[g.display_name(*a), g.display_name(*b)]);
            }
            out
        }
        Format::Json => json_text(Value::from(
            ps.iter()
                .map(|(a, b)| json!({"from": g.display_name(*a), "to": g.display_name(*b)}))
                .collect::<Vec<_>>(),
        )),
    }
}

/// `entity<TAB>value` with six decimals, in table order.
pub fn scores(t: &ScoreTable, g: &ErGraph, format: Format) -> String {
    match format {
        Format::Tsv => {
            let mut out = String::new();
            for (e, v) in &t.scores {
                let _ = writeln!(out, "{}\t{v:.6}", g.display_name(*e));
            }
            out
        }
        Format::Json => json_text(Value::from(
            t.scores
                .iter()
                .map(|(e, v)| {
                    let rounded: f64 = format!("{v:.6}").parse().expect("formatted float parses");
                    json!({"entity": g.display_name(*e), "value": rounded})
                })
                .collect::<Vec<_>>(),
        )),
    }
}

/// `entity<TAB>community` in entity order.
pub fn partition(c: &Communities, g: &ErGraph, format: Format) -> String {
    match format {
        Format::Tsv => {
            let mut out = String::new();
            for (e, l) in &c.partition {
                let _ = writeln!(out, "{}\t{l}", g.display_name(*e));
            }
            out
        }
        Format::Json => json_text(Value::from(
            c.partition
                .iter()
                .map(|(e, l)| json!({"entity": g.display_name(*e), "community": l.as_str()}))
                .collect::<Vec<_>>(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{betweenness, Projection};
    use crate::graph::Label;

    #[test]
    fn score_lines() {
        let mut g = ErGraph::new();
        g.add_entity(Label::new("P").unwrap(), Some("hub")).unwrap();
        for _ in 0..4 {
            g.add_entity(Label::new("P").unwrap(), None).unwrap();
        }
        let t = betweenness(&Projection::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]));
        let tsv = scores(&t, &g, Format::Tsv);
        assert!(tsv.starts_with("hub\t6.000000\n_:1\t0.000000\n"));
        let js: Value = serde_json::from_str(&scores(&t, &g, Format::Json)).unwrap();
        assert_eq!(js[0]["entity"], "hub");
        assert_eq!(js[0]["value"], 6.0);
    }
}
