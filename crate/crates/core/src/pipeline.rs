//! End-to-end generation and filtering.
//!
//! Fixpoint mode saturates first and filters afterwards. Filtered mode runs
//! the filter inside the loop and feeds back only the interesting facts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::construction::{initial_facts, Construction};
use crate::geometry::{Fact, FactSet};
use crate::metrics::{filter_interesting, score_all, MetricConfig, ScoreCard};
use crate::numeric::{ModelSet, NumericConfig, NumericError, Verdict};
use crate::rules::{
    saturate_with, Budget, DerivationDag, DerivationNode, Engine, Evaluation, GroundSide, Rule,
    SaturationOptions, StopReason,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Fixpoint,
    Filtered,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fixpoint => "fixpoint",
            Mode::Filtered => "filtered",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fixpoint" => Ok(Mode::Fixpoint),
            "filtered" => Ok(Mode::Filtered),
            _ => Err(format!(
                "unknown mode `{s}` (expected fixpoint or filtered)"
            )),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub budget: Budget,
    pub numeric: NumericConfig,
    pub metrics: MetricConfig,
    pub strict_sides: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Degenerate(#[from] NumericError),
    #[error("soundness violation: {fact} (rule {rule}) fails in the model with seed {seed}")]
    Soundness { fact: Fact, rule: String, seed: u64 },
}

/// Why a derived fact was left out of the report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Discard {
    /// Conditional fact that is false in some model although its side
    /// conditions hold.
    EmpiricallyFalse { seed: u64 },
    /// A side condition in the derivation fails in some model.
    ConditionalFailed { seed: u64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DiscardCounts {
    pub tautologies: usize,
    pub degenerate: usize,
    pub empirically_false: usize,
    pub conditional_failed: usize,
}

impl DiscardCounts {
    fn count(&mut self, d: Discard) {
        match d {
            Discard::EmpiricallyFalse { .. } => self.empirically_false += 1,
            Discard::ConditionalFailed { .. } => self.conditional_failed += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactRecord {
    pub fact: Fact,
    pub round: u32,
    pub rule: String,
    pub premises: Vec<Fact>,
    pub conditional: bool,
    /// Numeric side conditions of the derivation, all checked on every model.
    pub side_conditions: Vec<GroundSide>,
    pub verdict: Verdict,
    pub score: ScoreCard,
    pub interesting: bool,
    /// Position in the ranking, from 1.
    pub rank: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub construction: Vec<String>,
    pub construction_digest: String,
    pub rules_digest: String,
    pub mode: Mode,
    pub rounds: u32,
    pub stop_reason: StopReason,
    pub hypotheses: Vec<Fact>,
    /// Surviving derived facts ordered by round, then canonical form.
    pub facts: Vec<FactRecord>,
    pub discarded: DiscardCounts,
    pub config: PipelineConfig,
    pub dag: DerivationDag,
}

impl Report {
    /// Interesting records in rank order.
    pub fn ranking(&self) -> Vec<&FactRecord> {
        let mut out: Vec<&FactRecord> = self.facts.iter().filter(|r| r.rank.is_some()).collect();
        out.sort_by_key(|r| r.rank);
        out
    }

    pub fn record(&self, fact: &Fact) -> Option<&FactRecord> {
        self.facts.iter().find(|r| &r.fact == fact)
    }
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn construction_digest(c: &Construction) -> String {
    sha256_hex(&(c.echo().join("\n") + "\n"))
}

pub fn rules_digest(rules: &[Rule]) -> String {
    sha256_hex(&rules.iter().map(|r| format!("{r}\n")).collect::<String>())
}

/// Numeric check of one derived fact given the side conditions collected
/// over its derivation.
fn screen(
    fact: &Fact,
    node: &DerivationNode,
    sides: &BTreeSet<GroundSide>,
    models: &ModelSet,
) -> Result<Option<Discard>, PipelineError> {
    if node.conditional {
        if let Some((seed, _)) = models.failing_side(sides) {
            return Ok(Some(Discard::ConditionalFailed { seed }));
        }
    }
    match models.verify(fact) {
        Verdict::Holds | Verdict::Degenerate => Ok(None),
        Verdict::Fails { seed } if node.conditional => Ok(Some(Discard::EmpiricallyFalse { seed })),
        Verdict::Fails { seed } => Err(PipelineError::Soundness {
            fact: fact.clone(),
            rule: node.rule.clone(),
            seed,
        }),
    }
}

/// First soundness violation in (round, fact) order, if any.
fn first_violation(results: &[Result<Option<Discard>, PipelineError>]) -> Option<PipelineError> {
    results.iter().find_map(|r| r.as_ref().err().cloned())
}

struct Filtered {
    kept: BTreeSet<Fact>,
    discarded: DiscardCounts,
}

/// Run-time filter over a saturated DAG. A fact whose recorded derivation
/// uses a discarded premise is discarded for the same reason.
fn filter_saturated(dag: &DerivationDag, models: &ModelSet) -> Result<Filtered, PipelineError> {
    let mut order: Vec<(&Fact, &DerivationNode)> = dag.iter().collect();
    order.sort_by(|a, b| (a.1.round, a.0).cmp(&(b.1.round, b.0)));
    let results: Vec<_> = order
        .par_iter()
        .map(|(f, node)| {
            let sides = dag
                .side_conditions_in_ancestry(f)
                .into_iter()
                .cloned()
                .collect();
            screen(f, node, &sides, models)
        })
        .collect();
    if let Some(e) = first_violation(&results) {
        return Err(e);
    }
    let mut discards: BTreeMap<&Fact, Discard> = BTreeMap::new();
    let mut kept = BTreeSet::new();
    let mut counts = DiscardCounts::default();
    for ((f, node), result) in order.iter().zip(results) {
        let inherited = node.premises.iter().find_map(|p| discards.get(p).copied());
        match inherited.or(result.expect("violations returned above")) {
            Some(d) => {
                counts.count(d);
                discards.insert(f, d);
            }
            None => {
                kept.insert((*f).clone());
            }
        }
    }
    Ok(Filtered {
        kept,
        discarded: counts,
    })
}

struct Outcome {
    dag: DerivationDag,
    kept: BTreeSet<Fact>,
    rounds: u32,
    stop_reason: StopReason,
    discarded: DiscardCounts,
}

fn run_fixpoint(
    d0: &FactSet,
    rules: &[Rule],
    cfg: &PipelineConfig,
    models: &ModelSet,
) -> Result<Outcome, PipelineError> {
    let sat = saturate_with(d0, rules, saturation_options(cfg));
    let filtered = filter_saturated(&sat.dag, models)?;
    let mut discarded = filtered.discarded;
    discarded.tautologies = sat.trivial.tautologies;
    discarded.degenerate = sat.trivial.degenerate;
    Ok(Outcome {
        dag: sat.dag,
        kept: filtered.kept,
        rounds: sat.rounds,
        stop_reason: sat.stop_reason,
        discarded,
    })
}

fn run_filtered(
    d0: &FactSet,
    rules: &[Rule],
    cfg: &PipelineConfig,
    models: &ModelSet,
) -> Result<Outcome, PipelineError> {
    let mut engine = Engine::new(d0, rules, saturation_options(cfg));
    let mut discarded = DiscardCounts::default();
    let mut stop_reason = StopReason::Budget;
    let mut rounds = 0;
    for _ in 0..cfg.budget.max_rounds {
        let candidates = engine.derive_round();
        rounds += 1;

        let order: Vec<(&Fact, &DerivationNode)> = candidates.iter().collect();
        let results: Vec<_> = order
            .par_iter()
            .map(|(f, node)| {
                let mut sides: BTreeSet<GroundSide> = node.numeric_sides.iter().cloned().collect();
                for p in &node.premises {
                    sides.extend(
                        engine
                            .dag()
                            .side_conditions_in_ancestry(p)
                            .into_iter()
                            .cloned(),
                    );
                }
                screen(f, node, &sides, models)
            })
            .collect();
        if let Some(e) = first_violation(&results) {
            return Err(e);
        }
        let mut survivors = BTreeMap::new();
        let mut rejected = Vec::new();
        for ((f, node), result) in order.into_iter().zip(results) {
            match result.expect("violations returned above") {
                Some(d) => {
                    discarded.count(d);
                    rejected.push(f.clone());
                }
                None => {
                    survivors.insert(f.clone(), node.clone());
                }
            }
        }

        // score candidates against the current fact list
        let mut dag = engine.dag().clone();
        for (f, node) in &survivors {
            dag.insert(f.clone(), node.clone());
        }
        let pool: Vec<&Fact> = engine
            .dag()
            .iter()
            .map(|(f, _)| f)
            .chain(survivors.keys())
            .collect();
        let scores = score_all(pool, &dag, d0, &cfg.metrics);
        let room = cfg.budget.max_facts.saturating_sub(engine.len());
        let mut accepted = BTreeMap::new();
        for (f, node) in survivors {
            if scores[&f].aggregate >= cfg.metrics.threshold() && accepted.len() < room {
                accepted.insert(f, node);
            } else {
                rejected.push(f);
            }
        }
        engine.reject(rejected);
        if accepted.is_empty() {
            stop_reason = StopReason::Fixpoint;
            break;
        }
        let full = accepted.len() == room;
        engine.commit(accepted);
        if full {
            break;
        }
    }
    let trivial = engine.trivial_counts();
    discarded.tautologies = trivial.tautologies;
    discarded.degenerate = trivial.degenerate;
    let dag = engine.into_dag();
    Ok(Outcome {
        kept: dag.iter().map(|(f, _)| f.clone()).collect(),
        dag,
        rounds,
        stop_reason,
        discarded,
    })
}

fn saturation_options(cfg: &PipelineConfig) -> SaturationOptions {
    SaturationOptions {
        budget: cfg.budget,
        evaluation: Evaluation::SemiNaive,
        strict_sides: cfg.strict_sides,
    }
}

pub fn run_pipeline(
    construction: &Construction,
    rules: &[Rule],
    cfg: &PipelineConfig,
) -> Result<Report, PipelineError> {
    let models = ModelSet::sample(construction, &cfg.numeric)?;
    let d0 = initial_facts(construction);
    let outcome = match cfg.mode {
        Mode::Fixpoint => run_fixpoint(&d0, rules, cfg, &models)?,
        Mode::Filtered => run_filtered(&d0, rules, cfg, &models)?,
    };

    let scores = score_all(&outcome.kept, &outcome.dag, &d0, &cfg.metrics);
    let ranks: BTreeMap<Fact, usize> = filter_interesting(&scores, &cfg.metrics)
        .into_iter()
        .enumerate()
        .map(|(i, (f, _))| (f, i + 1))
        .collect();
    let mut facts: Vec<FactRecord> = outcome
        .kept
        .iter()
        .map(|f| {
            let node = outcome.dag.get(f).expect("kept facts are derived");
            let score = scores[f].clone();
            FactRecord {
                fact: f.clone(),
                round: node.round,
                rule: node.rule.clone(),
                premises: node.premises.clone(),
                conditional: node.conditional,
                side_conditions: outcome
                    .dag
                    .side_conditions_in_ancestry(f)
                    .into_iter()
                    .cloned()
                    .collect(),
                verdict: Verdict::Holds,
                interesting: score.aggregate >= cfg.metrics.threshold(),
                rank: ranks.get(f).copied(),
                score,
            }
        })
        .collect();
    facts.sort_by(|a, b| (a.round, &a.fact).cmp(&(b.round, &b.fact)));

    Ok(Report {
        construction: construction.echo(),
        construction_digest: construction_digest(construction),
        rules_digest: rules_digest(rules),
        mode: cfg.mode,
        rounds: outcome.rounds,
        stop_reason: outcome.stop_reason,
        hypotheses: d0.facts().cloned().collect(),
        facts,
        discarded: outcome.discarded,
        config: cfg.clone(),
        dag: outcome.dag,
    })
}

impl fmt::Display for Discard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Discard::EmpiricallyFalse { seed } => write!(f, "empirically false (seed {seed})"),
            Discard::ConditionalFailed { seed } => write!(f, "side condition fails (seed {seed})"),
        }
    }
}
