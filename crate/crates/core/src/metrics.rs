//! Interestingness metrics and ranking.
//!
//! Eight per-fact metrics are computed from the fact itself, the hypothesis
//! set and the derivation DAG. Each metric is min-max normalized over the
//! derived facts being ranked (a metric that is constant across them
//! normalizes to 0.5), flipped when lower values are the interesting ones,
//! and combined with weights summing to 1.
//!
//! The formulas are ground-atom instantiations; see `docs/metrics.md`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{fact_symbols, Fact, FactSet, PointId};
use crate::rules::DerivationDag;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("metric config: weight of {metric} must be a finite non-negative number, got {value}")]
    BadWeight { metric: Metric, value: f64 },
    #[error("metric config: weights sum to zero")]
    ZeroWeights,
    #[error("metric config: threshold must lie in [0, 1], got {0}")]
    BadThreshold(f64),
    #[error("metric config: top_k must be positive")]
    BadTopK,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Obviousness,
    Weight,
    Complexity,
    Surprisingness,
    Intensity,
    Adaptivity,
    Focus,
    Usefulness,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Obviousness,
        Metric::Weight,
        Metric::Complexity,
        Metric::Surprisingness,
        Metric::Intensity,
        Metric::Adaptivity,
        Metric::Focus,
        Metric::Usefulness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Obviousness => "obviousness",
            Metric::Weight => "weight",
            Metric::Complexity => "complexity",
            Metric::Surprisingness => "surprisingness",
            Metric::Intensity => "intensity",
            Metric::Adaptivity => "adaptivity",
            Metric::Focus => "focus",
            Metric::Usefulness => "usefulness",
        }
    }

    pub fn default_direction(self) -> Direction {
        match self {
            Metric::Weight | Metric::Complexity => Direction::Lower,
            _ => Direction::Higher,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Larger values are more interesting.
    Higher,
    Lower,
}

impl Direction {
    fn apply(self, normalized: f64) -> f64 {
        match self {
            Direction::Higher => normalized,
            Direction::Lower => 1.0 - normalized,
        }
    }
}

/// Weights (summing to 1), directions, threshold and optional cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricConfig {
    weights: BTreeMap<Metric, f64>,
    directions: BTreeMap<Metric, Direction>,
    threshold: f64,
    top_k: Option<usize>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            weights: Metric::ALL.iter().map(|m| (*m, 1.0 / 8.0)).collect(),
            directions: Metric::ALL
                .iter()
                .map(|m| (*m, m.default_direction()))
                .collect(),
            threshold: 0.5,
            top_k: None,
        }
    }
}

/// On-disk form; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricConfigFile {
    threshold: Option<f64>,
    top_k: Option<usize>,
    #[serde(default)]
    weights: BTreeMap<Metric, f64>,
    #[serde(default)]
    directions: BTreeMap<Metric, Direction>,
}

impl MetricConfig {
    /// Unlisted weights default to 1 before renormalization; unlisted
    /// directions take the metric's default.
    pub fn new(
        weights: &BTreeMap<Metric, f64>,
        directions: &BTreeMap<Metric, Direction>,
        threshold: f64,
        top_k: Option<usize>,
    ) -> Result<Self, MetricError> {
        let mut raw = BTreeMap::new();
        for m in Metric::ALL {
            let w = weights.get(&m).copied().unwrap_or(1.0);
            if !(w.is_finite() && w >= 0.0) {
                return Err(MetricError::BadWeight {
                    metric: m,
                    value: w,
                });
            }
            raw.insert(m, w);
        }
        let total: f64 = raw.values().sum();
        if total <= 0.0 {
            return Err(MetricError::ZeroWeights);
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(MetricError::BadThreshold(threshold));
        }
        if top_k == Some(0) {
            return Err(MetricError::BadTopK);
        }
        Ok(MetricConfig {
            weights: raw.into_iter().map(|(m, w)| (m, w / total)).collect(),
            directions: Metric::ALL
                .iter()
                .map(|m| {
                    (
                        *m,
                        directions.get(m).copied().unwrap_or(m.default_direction()),
                    )
                })
                .collect(),
            threshold,
            top_k,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, MetricError> {
        let file: MetricConfigFile = toml::from_str(text)?;
        MetricConfig::new(
            &file.weights,
            &file.directions,
            file.threshold.unwrap_or(0.5),
            file.top_k,
        )
    }

    pub fn weight(&self, m: Metric) -> f64 {
        self.weights[&m]
    }

    pub fn direction(&self, m: Metric) -> Direction {
        self.directions[&m]
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn top_k(&self) -> Option<usize> {
        self.top_k
    }

    /// Overrides the threshold without revalidating weights. Values outside
    /// `[0, 1]` are allowed here so callers can select everything or nothing.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_top_k(mut self, top_k: Option<usize>) -> Self {
        self.top_k = top_k;
        self
    }

    fn aggregate(&self, normalized: &BTreeMap<Metric, f64>) -> f64 {
        Metric::ALL
            .iter()
            .map(|m| self.weights[m] * self.directions[m].apply(normalized[m]))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreCard {
    pub raw: BTreeMap<Metric, f64>,
    pub normalized: BTreeMap<Metric, f64>,
    pub aggregate: f64,
}

/// Number of derivation nodes in the ancestor closure of `fact`.
pub fn obviousness(fact: &Fact, dag: &DerivationDag) -> usize {
    dag.derivation_closure(fact).len()
}

/// Symbol occurrences, predicate included.
pub fn weight(fact: &Fact) -> usize {
    fact_symbols(fact).multiset.len()
}

/// Distinct symbols, predicate included.
pub fn complexity(fact: &Fact) -> usize {
    fact_symbols(fact).distinct.len()
}

/// Point pairs that appear together in at least one hypothesis.
#[derive(Clone, Debug, Default)]
pub struct CoOccurrence(BTreeSet<(PointId, PointId)>);

impl CoOccurrence {
    pub fn from_hypotheses<'a, I: IntoIterator<Item = &'a Fact>>(hypotheses: I) -> Self {
        let mut pairs = BTreeSet::new();
        for h in hypotheses {
            for (a, b) in point_pairs(h) {
                pairs.insert((a.clone(), b.clone()));
            }
        }
        CoOccurrence(pairs)
    }

    fn contains(&self, a: &PointId, b: &PointId) -> bool {
        self.0.contains(&(a.clone(), b.clone()))
    }
}

fn point_pairs(fact: &Fact) -> Vec<(&PointId, &PointId)> {
    let pts: Vec<&PointId> = fact.points().into_iter().collect();
    let mut out = Vec::new();
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            out.push((*a, *b));
        }
    }
    out
}

/// Fraction of the fact's point pairs that never share a hypothesis.
pub fn surprisingness(fact: &Fact, d0: &FactSet) -> f64 {
    surprisingness_with(fact, &CoOccurrence::from_hypotheses(d0.hypotheses()))
}

pub fn surprisingness_with(fact: &Fact, seen: &CoOccurrence) -> f64 {
    let pairs = point_pairs(fact);
    if pairs.is_empty() {
        return 0.0;
    }
    let new = pairs.iter().filter(|(a, b)| !seen.contains(a, b)).count();
    new as f64 / pairs.len() as f64
}

/// `1 - |points(fact)| / |points(leaf ancestors)|`, clamped to `[0, 1]`.
pub fn intensity(fact: &Fact, dag: &DerivationDag) -> f64 {
    let leaves = dag.leaf_ancestors(fact);
    let leaf_points: BTreeSet<&PointId> = leaves.iter().flat_map(|l| l.args()).collect();
    if leaf_points.is_empty() {
        return 0.0;
    }
    (1.0 - fact.points().len() as f64 / leaf_points.len() as f64).clamp(0.0, 1.0)
}

/// `1 - distinct points / argument positions`.
pub fn adaptivity(fact: &Fact) -> f64 {
    1.0 - fact.points().len() as f64 / fact.args().len() as f64
}

/// Balance of the clause `¬h1 ∨ … ∨ ¬hn ∨ fact` over the leaf hypotheses:
/// `|P - N| / (P + N)` with one positive literal.
pub fn focus(fact: &Fact, dag: &DerivationDag) -> f64 {
    if !dag.is_derived(fact) {
        return 1.0;
    }
    let positive = 1.0;
    let negative = dag.leaf_ancestors(fact).len() as f64;
    (positive - negative).abs() / (positive + negative)
}

/// Interesting facts other than `fact` whose derivation uses `fact`.
pub fn usefulness(fact: &Fact, dag: &DerivationDag, interesting: &BTreeSet<Fact>) -> usize {
    interesting
        .iter()
        .filter(|g| *g != fact && dag.ancestors(g).contains(fact))
        .count()
}

fn usefulness_counts<'a>(
    dag: &'a DerivationDag,
    interesting: &'a BTreeSet<Fact>,
) -> BTreeMap<&'a Fact, usize> {
    let mut counts = BTreeMap::new();
    for g in interesting {
        for a in dag.ancestors(g) {
            *counts.entry(a).or_insert(0) += 1;
        }
    }
    counts
}

/// Min-max over `values`; constant columns map to 0.5.
fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|v| {
            if hi > lo {
                ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.5
            }
        })
        .collect()
}

fn normalize_all(raw: &[BTreeMap<Metric, f64>]) -> Vec<BTreeMap<Metric, f64>> {
    let mut out = vec![BTreeMap::new(); raw.len()];
    for m in Metric::ALL {
        let column: Vec<f64> = raw.iter().map(|r| r[&m]).collect();
        for (slot, v) in out.iter_mut().zip(normalize(&column)) {
            slot.insert(m, v);
        }
    }
    out
}

/// Scores every derived fact in `facts` (hypotheses are skipped).
///
/// Usefulness depends on which facts are interesting, so scoring runs twice:
/// first with usefulness fixed at 0 to pick a provisional interesting set,
/// then with usefulness measured against that set.
pub fn score_all<'a, I>(
    facts: I,
    dag: &DerivationDag,
    d0: &FactSet,
    cfg: &MetricConfig,
) -> BTreeMap<Fact, ScoreCard>
where
    I: IntoIterator<Item = &'a Fact>,
{
    let ranked: BTreeSet<&Fact> = facts.into_iter().filter(|f| dag.is_derived(f)).collect();
    let ranked: Vec<&Fact> = ranked.into_iter().collect();
    if ranked.is_empty() {
        return BTreeMap::new();
    }
    let seen = CoOccurrence::from_hypotheses(d0.hypotheses());

    let mut raw: Vec<BTreeMap<Metric, f64>> = ranked
        .iter()
        .map(|f| {
            BTreeMap::from([
                (Metric::Obviousness, obviousness(f, dag) as f64),
                (Metric::Weight, weight(f) as f64),
                (Metric::Complexity, complexity(f) as f64),
                (Metric::Surprisingness, surprisingness_with(f, &seen)),
                (Metric::Intensity, intensity(f, dag)),
                (Metric::Adaptivity, adaptivity(f)),
                (Metric::Focus, focus(f, dag)),
                (Metric::Usefulness, 0.0),
            ])
        })
        .collect();

    let provisional: BTreeSet<Fact> = normalize_all(&raw)
        .iter()
        .zip(&ranked)
        .filter(|(n, _)| cfg.aggregate(n) >= cfg.threshold)
        .map(|(_, f)| (*f).clone())
        .collect();

    let counts = usefulness_counts(dag, &provisional);
    for (r, f) in raw.iter_mut().zip(&ranked) {
        r.insert(
            Metric::Usefulness,
            counts.get(f).copied().unwrap_or(0) as f64,
        );
    }

    let normalized = normalize_all(&raw);
    ranked
        .into_iter()
        .zip(raw)
        .zip(normalized)
        .map(|((f, raw), normalized)| {
            let aggregate = cfg.aggregate(&normalized);
            (
                f.clone(),
                ScoreCard {
                    raw,
                    normalized,
                    aggregate,
                },
            )
        })
        .collect()
}

/// Facts at or above the threshold, best first (ties by canonical form),
/// truncated to `top_k` when set.
pub fn filter_interesting(
    scores: &BTreeMap<Fact, ScoreCard>,
    cfg: &MetricConfig,
) -> Vec<(Fact, ScoreCard)> {
    let mut picked: Vec<(Fact, ScoreCard)> = scores
        .iter()
        .filter(|(_, s)| s.aggregate >= cfg.threshold)
        .map(|(f, s)| (f.clone(), s.clone()))
        .collect();
    picked.sort_by(|a, b| {
        b.1.aggregate
            .total_cmp(&a.1.aggregate)
            .then_with(|| a.0.cmp(&b.0))
    });
    if let Some(k) = cfg.top_k {
        picked.truncate(k);
    }
    picked
}
