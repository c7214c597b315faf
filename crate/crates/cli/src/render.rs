use std::fmt::Write;
use std::str::FromStr;
use std::time::Duration;

use serde_json::{json, Map, Value};
use trilogic_core::syntax::Literal;

use crate::run::RunStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected text or json)")),
        }
    }
}

/// A successful run, with every list already in output order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// Query instances that hold in the stratified model.
    Answers { query: Vec<Literal>, rows: Vec<String> },
    /// The whole stratified model.
    Model { atoms: Vec<String> },
    /// True and undefined atoms, or query instances, of the well-founded model.
    ThreeValued {
        query: Option<Vec<Literal>>,
        true_rows: Vec<String>,
        undefined_rows: Vec<String>,
    },
    /// Stable models, each as its atoms or the query instances it satisfies.
    Models {
        query: Option<Vec<Literal>>,
        models: Vec<Vec<String>>,
    },
}

fn query_text(q: &[Literal]) -> String {
    q.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

pub fn render(outcome: &Outcome, format: Format) -> String {
    match format {
        Format::Text => text(outcome),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&to_json(outcome)).expect("JSON values serialize");
            s.push('\n');
            s
        }
    }
}

fn block(out: &mut String, header: &str, rows: &[String]) {
    writeln!(out, "{header}:").unwrap();
    for r in rows {
        writeln!(out, "  {r}").unwrap();
    }
}

fn text(outcome: &Outcome) -> String {
    let mut out = String::new();
    match outcome {
        Outcome::Answers { rows, .. } | Outcome::Model { atoms: rows } => {
            if rows.is_empty() {
                out.push_str("no answers\n");
            }
            for r in rows {
                writeln!(out, "{r}").unwrap();
            }
        }
        Outcome::ThreeValued {
            true_rows,
            undefined_rows,
            ..
        } => {
            block(&mut out, "true", true_rows);
            block(&mut out, "undefined", undefined_rows);
        }
        Outcome::Models { models, .. } => {
            if models.is_empty() {
                out.push_str("no models\n");
            }
            for (i, m) in models.iter().enumerate() {
                block(&mut out, &format!("model {}", i + 1), m);
            }
        }
    }
    out
}

fn to_json(outcome: &Outcome) -> Value {
    let query = |q: &Option<Vec<Literal>>| q.as_deref().map_or(Value::Null, |q| Value::from(query_text(q)));
    match outcome {
        Outcome::Answers { query, rows } => json!({
            "semantics": "stratified",
            "query": query_text(query),
            "answers": rows,
        }),
        Outcome::Model { atoms } => json!({
            "semantics": "stratified",
            "model": atoms,
        }),
        Outcome::ThreeValued {
            query: q,
            true_rows,
            undefined_rows,
        } => json!({
            "semantics": "wfs",
            "query": query(q),
            "true": true_rows,
            "undefined": undefined_rows,
        }),
        Outcome::Models { query: q, models } => json!({
            "semantics": "stable",
            "query": query(q),
            "models": models,
        }),
    }
}

/// The counters of a run as one flat JSON object, plus wall time.
pub fn stats_json(stats: &RunStats, elapsed: Duration) -> String {
    let mut m = Map::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    match stats {
        RunStats::Fixpoint(s) => {
            put("rule_firings", s.rule_firings.into());
            put("join_probes", s.join_probes.into());
            put("tuples_derived", s.tuples_derived.into());
            put("duplicates_suppressed", s.duplicates_suppressed.into());
            put("iterations_per_stratum", s.iterations_per_stratum.clone().into());
            put("demand_fallbacks", s.demand_fallbacks.into());
            put("demand_tuples", s.demand_tuples.into());
        }
        RunStats::WellFounded {
            ground_atoms,
            ground_rules,
        } => {
            put("ground_atoms", (*ground_atoms).into());
            put("ground_rules", (*ground_rules).into());
        }
        RunStats::Stable {
            ground_atoms,
            ground_rules,
            solve,
        } => {
            put("ground_atoms", (*ground_atoms).into());
            put("ground_rules", (*ground_rules).into());
            put("decisions", solve.decisions.into());
            put("conflicts", solve.conflicts.into());
            put("backjumps", solve.backjumps.into());
            put("stability_checks", solve.stability_checks.into());
        }
    }
    put("wall_time_ms", (elapsed.as_secs_f64() * 1000.0).into());
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_blocks() {
        let o = Outcome::Models {
            query: None,
            models: vec![vec!["win(a)".into()], vec![]],
        };
        assert_eq!(render(&o, Format::Text), "model 1:\n  win(a)\nmodel 2:\n");
        let o = Outcome::ThreeValued {
            query: None,
            true_rows: vec![],
            undefined_rows: vec!["win(a)".into()],
        };
        assert_eq!(render(&o, Format::Text), "true:\nundefined:\n  win(a)\n");
    }

    #[test]
    fn json_carries_the_same_rows() {
        let o = Outcome::Model {
            atoms: vec!["p(1)".into(), "q(a)".into()],
        };
        let v: Value = serde_json::from_str(&render(&o, Format::Json)).unwrap();
        assert_eq!(v["model"], json!(["p(1)", "q(a)"]));
    }
}
