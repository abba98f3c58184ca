//! Report serialization.
//!
//! JSON output has sorted keys and floats rounded to nine significant
//! digits, so equal reports produce equal bytes. The schema is described in
//! `docs/report-schema.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::geometry::{Fact, FactSet};
use crate::metrics::{Metric, MetricConfig, ScoreCard};
use crate::numeric::Verdict;
use crate::pipeline::{FactRecord, Report};
use crate::rules::{DerivationDag, DerivationNode, Saturation};

pub const SCHEMA: &str = "geofind-report/1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format `{s}` (expected json or text)")),
        }
    }
}

/// A float rounded to nine significant digits; non-finite values become null.
pub fn fixed(x: f64) -> Value {
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

fn strings<'a, T: ToString + 'a>(items: impl IntoIterator<Item = &'a T>) -> Value {
    Value::Array(
        items
            .into_iter()
            .map(|x| Value::String(x.to_string()))
            .collect(),
    )
}

fn metric_map(values: &BTreeMap<Metric, f64>) -> Value {
    Value::Object(
        values
            .iter()
            .map(|(m, v)| (m.name().to_string(), fixed(*v)))
            .collect(),
    )
}

fn verdict_json(v: &Verdict) -> Value {
    match v {
        Verdict::Holds => json!({"status": "holds"}),
        Verdict::Fails { seed } => json!({"status": "fails", "seed": seed}),
        Verdict::Degenerate => json!({"status": "degenerate"}),
    }
}

fn score_json(s: &ScoreCard) -> Value {
    json!({
        "raw": metric_map(&s.raw),
        "normalized": metric_map(&s.normalized),
        "aggregate": fixed(s.aggregate),
    })
}

fn record_json(r: &FactRecord) -> Value {
    json!({
        "fact": r.fact.to_string(),
        "round": r.round,
        "derivation": {
            "rule": r.rule,
            "premises": strings(&r.premises),
            "conditional": r.conditional,
            "side_conditions": strings(&r.side_conditions),
        },
        "verdict": verdict_json(&r.verdict),
        "score": score_json(&r.score),
        "interesting": r.interesting,
        "rank": r.rank,
    })
}

fn metrics_config_json(cfg: &MetricConfig) -> Value {
    let weights: Map<String, Value> = Metric::ALL
        .iter()
        .map(|m| (m.name().to_string(), fixed(cfg.weight(*m))))
        .collect();
    let directions: Map<String, Value> = Metric::ALL
        .iter()
        .map(|m| {
            let d = match cfg.direction(*m) {
                crate::metrics::Direction::Higher => "higher",
                crate::metrics::Direction::Lower => "lower",
            };
            (m.name().to_string(), Value::String(d.into()))
        })
        .collect();
    json!({
        "weights": weights,
        "directions": directions,
        "threshold": fixed(cfg.threshold()),
        "top_k": cfg.top_k(),
    })
}

pub fn report_json(report: &Report) -> Value {
    let cfg = &report.config;
    json!({
        "schema": SCHEMA,
        "construction": {
            "steps": strings(&report.construction),
            "sha256": report.construction_digest,
        },
        "rules_sha256": report.rules_digest,
        "mode": report.mode.as_str(),
        "rounds": report.rounds,
        "stop_reason": report.stop_reason.as_str(),
        "hypotheses": strings(&report.hypotheses),
        "facts": report.facts.iter().map(record_json).collect::<Vec<_>>(),
        "ranking": report.ranking().iter().map(|r| r.fact.to_string()).collect::<Vec<_>>(),
        "discarded": {
            "tautologies": report.discarded.tautologies,
            "degenerate": report.discarded.degenerate,
            "empirically_false": report.discarded.empirically_false,
            "conditional_failed": report.discarded.conditional_failed,
        },
        "config": {
            "mode": cfg.mode.as_str(),
            "max_rounds": cfg.budget.max_rounds,
            "max_facts": cfg.budget.max_facts,
            "models": cfg.numeric.models,
            "tol": fixed(cfg.numeric.tol),
            "master_seed": cfg.numeric.master_seed,
            "strict_sides": cfg.strict_sides,
            "metrics": metrics_config_json(&cfg.metrics),
        },
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// One proof step: `fact ⇐ rule[premise, premise]`.
pub fn step_line(fact: &Fact, node: &DerivationNode) -> String {
    let premises: Vec<String> = node.premises.iter().map(|p| p.to_string()).collect();
    format!("{fact} ⇐ {}[{}]", node.rule, premises.join(", "))
}

/// Proof trace of `fact`, one step per line, with numerically checked side
/// conditions listed under the step that introduced them.
pub fn trace_text(dag: &DerivationDag, fact: &Fact) -> String {
    let mut out = String::new();
    for (f, node) in dag.trace(fact) {
        let _ = writeln!(out, "{}", step_line(f, node));
        if !node.numeric_sides.is_empty() {
            let sides: Vec<String> = node.numeric_sides.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "    checked numerically: {}", sides.join(", "));
        }
    }
    out
}

fn ranking_table(out: &mut String, ranked: &[&FactRecord]) {
    let _ = writeln!(out, "rank  score        round  obviousness  fact");
    for r in ranked {
        let _ = writeln!(
            out,
            "{:>4}  {:<11}  {:>5}  {:>11}  {}",
            r.rank.unwrap_or(0),
            fixed(r.score.aggregate).to_string(),
            r.round,
            r.score.raw[&Metric::Obviousness],
            r.fact
        );
    }
}

pub fn report_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "construction (sha256 {}):", report.construction_digest);
    for line in &report.construction {
        let _ = writeln!(out, "  {line}");
    }
    let _ = writeln!(out, "rules sha256 {}", report.rules_digest);
    let _ = writeln!(
        out,
        "mode {}, {} rounds, stopped at {}",
        report.mode.as_str(),
        report.rounds,
        report.stop_reason.as_str()
    );
    let ranked = report.ranking();
    let _ = writeln!(
        out,
        "{} hypotheses, {} derived facts kept, {} interesting",
        report.hypotheses.len(),
        report.facts.len(),
        ranked.len()
    );
    let d = &report.discarded;
    let _ = writeln!(
        out,
        "discarded: {} tautologies, {} degenerate, {} empirically false, {} failed side conditions",
        d.tautologies, d.degenerate, d.empirically_false, d.conditional_failed
    );
    let _ = writeln!(out);
    ranking_table(&mut out, &ranked);
    for r in &ranked {
        let _ = writeln!(out);
        let _ = writeln!(out, "#{} {}", r.rank.unwrap_or(0), r.fact);
        out.push_str(&trace_text(&report.dag, &r.fact));
    }
    out
}

pub fn emit_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => pretty(&report_json(report)),
        Format::Text => report_text(report),
    }
}

/// Ranking only, without the per-fact records.
pub fn emit_ranking(report: &Report, format: Format) -> String {
    let ranked = report.ranking();
    match format {
        Format::Json => pretty(&json!({
            "schema": SCHEMA,
            "ranking": ranked
                .iter()
                .map(|r| json!({"rank": r.rank, "fact": r.fact.to_string(), "aggregate": fixed(r.score.aggregate)}))
                .collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut out = String::new();
            ranking_table(&mut out, &ranked);
            out
        }
    }
}

/// Saturation result without numeric filtering or scoring.
pub fn emit_saturation(d0: &FactSet, sat: &Saturation, format: Format) -> String {
    let mut steps: Vec<(&Fact, &DerivationNode)> = sat.dag.iter().collect();
    steps.sort_by(|a, b| (a.1.round, a.0).cmp(&(b.1.round, b.0)));
    match format {
        Format::Json => pretty(&json!({
            "schema": SCHEMA,
            "rounds": sat.rounds,
            "stop_reason": sat.stop_reason.as_str(),
            "hypotheses": strings(d0.facts()),
            "facts": steps.iter().map(|(f, n)| json!({
                "fact": f.to_string(),
                "round": n.round,
                "rule": n.rule,
                "premises": strings(&n.premises),
                "conditional": n.conditional,
                "side_conditions": strings(&n.numeric_sides),
            })).collect::<Vec<_>>(),
            "discarded": {
                "tautologies": sat.trivial.tautologies,
                "degenerate": sat.trivial.degenerate,
            },
        })),
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{} rounds, stopped at {}; {} hypotheses, {} derived",
                sat.rounds,
                sat.stop_reason.as_str(),
                d0.len(),
                steps.len()
            );
            for (f, n) in steps {
                let _ = writeln!(out, "{:>3}  {}", n.round, step_line(f, n));
            }
            out
        }
    }
}
