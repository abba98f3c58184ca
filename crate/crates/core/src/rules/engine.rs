//! Breadth-first forward chaining to a fixpoint.
//!
//! Round `r` applies every rule to the facts present after round `r - 1`.
//! Conclusions are canonicalized; tautologies, degenerate facts and facts
//! already known are dropped, and the rest are committed together. Patterns
//! match stored facts up to the predicate's argument symmetries.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;

use crate::geometry::{classify, Fact, FactSet, PointId, Predicate, Triviality};
use crate::rules::dag::{DerivationDag, DerivationNode};
use crate::rules::rule::{GroundSide, Pattern, Rule, SideStatus, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_rounds: u32,
    pub max_facts: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_rounds: 10,
            max_facts: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Fixpoint,
    Budget,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Fixpoint => "fixpoint",
            StopReason::Budget => "budget",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Evaluation {
    /// Re-match every rule against all facts each round.
    Naive,
    /// Only bindings that use at least one fact from the previous round.
    #[default]
    SemiNaive,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SaturationOptions {
    pub budget: Budget,
    pub evaluation: Evaluation,
    /// Do not derive facts whose derivation depends on side conditions that
    /// need numeric checking.
    pub strict_sides: bool,
}

/// Distinct trivial conclusions seen during a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrivialCounts {
    pub tautologies: usize,
    pub degenerate: usize,
}

#[derive(Clone, Debug)]
pub struct Saturation {
    pub facts: FactSet,
    pub dag: DerivationDag,
    pub stop_reason: StopReason,
    /// Rounds executed, including the final empty round at a fixpoint.
    pub rounds: u32,
    pub trivial: TrivialCounts,
}

/// Variable name to point.
pub type Binding = BTreeMap<String, PointId>;

#[derive(Default)]
struct Store {
    facts: Vec<Fact>,
    conditional: Vec<bool>,
    generation: Vec<u32>,
    ids: HashMap<Fact, usize>,
    by_pred: [Vec<usize>; 7],
    by_point: HashMap<(Predicate, PointId), Vec<usize>>,
}

impl Store {
    fn insert(&mut self, fact: Fact, generation: u32, conditional: bool) -> bool {
        if self.ids.contains_key(&fact) {
            return false;
        }
        let id = self.facts.len();
        self.by_pred[fact.predicate() as usize].push(id);
        for p in fact.points() {
            self.by_point
                .entry((fact.predicate(), p.clone()))
                .or_default()
                .push(id);
        }
        self.ids.insert(fact.clone(), id);
        self.facts.push(fact);
        self.conditional.push(conditional);
        self.generation.push(generation);
        true
    }

    fn candidates(&self, pattern: &Pattern, binding: &[Option<PointId>]) -> &[usize] {
        let bound = pattern.args.iter().filter_map(|t| match t {
            Term::Const(p) => Some(p),
            Term::Var(v) => binding[*v].as_ref(),
        });
        let mut best: Option<&[usize]> = None;
        for p in bound {
            let list = self
                .by_point
                .get(&(pattern.predicate, p.clone()))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            if best.is_none_or(|b| list.len() < b.len()) {
                best = Some(list);
            }
        }
        best.unwrap_or(&self.by_pred[pattern.predicate as usize])
    }
}

/// Extends `binding` so that `pattern` denotes `fact` up to symmetry. Each
/// distinct extension is returned as the list of newly bound variables.
fn unify(
    pattern: &Pattern,
    fact: &Fact,
    binding: &[Option<PointId>],
) -> Vec<Vec<(usize, PointId)>> {
    let mut out: Vec<Vec<(usize, PointId)>> = Vec::new();
    'perm: for perm in fact.predicate().symmetries() {
        let mut fresh: Vec<(usize, PointId)> = Vec::new();
        for (term, &src) in pattern.args.iter().zip(perm) {
            let value = &fact.args()[src];
            match term {
                Term::Const(c) => {
                    if c != value {
                        continue 'perm;
                    }
                }
                Term::Var(v) => {
                    let current = binding[*v]
                        .as_ref()
                        .or_else(|| fresh.iter().find(|(x, _)| x == v).map(|(_, p)| p));
                    match current {
                        Some(p) if p != value => continue 'perm,
                        Some(_) => {}
                        None => fresh.push((*v, value.clone())),
                    }
                }
            }
        }
        if !out.contains(&fresh) {
            out.push(fresh);
        }
    }
    out
}

fn ground(terms: &[Term], binding: &[Option<PointId>]) -> Vec<PointId> {
    terms
        .iter()
        .map(|t| match t {
            Term::Const(p) => p.clone(),
            Term::Var(v) => binding[*v].clone().expect("range-restricted rule"),
        })
        .collect()
}

/// Callback receiving a complete binding and the chosen premise fact ids.
type Visit<'a> = dyn FnMut(&[Option<PointId>], &[usize]) + 'a;

/// Enumerates complete premise matches of `rule`. When `delta` is
/// `Some((i, start))`, premise `i` may only match facts with id `>= start`.
fn for_each_match(
    store: &Store,
    rule: &Rule,
    delta: Option<(usize, usize)>,
    visit: &mut Visit<'_>,
) {
    let mut order: Vec<usize> = (0..rule.premises.len()).collect();
    if let Some((i, _)) = delta {
        order.retain(|&k| k != i);
        order.insert(0, i);
    }
    let mut binding = vec![None; rule.variables.len()];
    let mut chosen = vec![usize::MAX; rule.premises.len()];

    fn go(
        store: &Store,
        rule: &Rule,
        order: &[usize],
        delta: Option<(usize, usize)>,
        binding: &mut Vec<Option<PointId>>,
        chosen: &mut Vec<usize>,
        visit: &mut Visit<'_>,
    ) {
        let Some((&k, rest)) = order.split_first() else {
            visit(binding, chosen);
            return;
        };
        let pattern = &rule.premises[k];
        let min_id = match delta {
            Some((i, start)) if i == k => start,
            _ => 0,
        };
        for &id in store.candidates(pattern, binding) {
            if id < min_id {
                continue;
            }
            for ext in unify(pattern, &store.facts[id], binding) {
                for (v, p) in &ext {
                    binding[*v] = Some(p.clone());
                }
                chosen[k] = id;
                go(store, rule, rest, delta, binding, chosen, visit);
                for (v, _) in &ext {
                    binding[*v] = None;
                }
            }
        }
    }

    go(store, rule, &order, delta, &mut binding, &mut chosen, visit);
}

/// Grounds side conditions; `None` if one is refuted by names alone.
fn numeric_sides(rule: &Rule, binding: &[Option<PointId>]) -> Option<Vec<GroundSide>> {
    let mut numeric = Vec::new();
    for side in &rule.side_conditions {
        let g = GroundSide {
            kind: side.kind,
            args: ground(&side.args, binding),
        };
        match g.symbolic_status() {
            SideStatus::Violated => return None,
            SideStatus::Satisfied => {}
            SideStatus::Numeric => numeric.push(g),
        }
    }
    numeric.sort();
    numeric.dedup();
    Some(numeric)
}

/// All bindings of `rule` against `facts` that satisfy the premises (up to
/// symmetry) and the side conditions decidable from names. Bindings are
/// deduplicated by canonical conclusion, keeping the least binding.
pub fn match_rule(rule: &Rule, facts: &FactSet) -> Vec<Binding> {
    let mut store = Store::default();
    for (f, g) in facts.iter() {
        store.insert(f.clone(), g, false);
    }
    let mut by_conclusion: BTreeMap<Fact, Binding> = BTreeMap::new();
    for_each_match(&store, rule, None, &mut |binding, _| {
        if numeric_sides(rule, binding).is_none() {
            return;
        }
        let conclusion = Fact::new(
            rule.conclusion.predicate,
            ground(&rule.conclusion.args, binding),
        )
        .expect("conclusion arity checked at parse time");
        let named: Binding = binding
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.clone().map(|p| (rule.variables[i].clone(), p)))
            .collect();
        by_conclusion
            .entry(conclusion)
            .and_modify(|b| {
                if named < *b {
                    *b = named.clone();
                }
            })
            .or_insert(named);
    });
    by_conclusion.into_values().collect()
}

#[derive(Default)]
struct RoundOutput {
    candidates: BTreeMap<Fact, DerivationNode>,
    tautologies: BTreeSet<Fact>,
    degenerate: BTreeSet<Fact>,
}

impl RoundOutput {
    fn offer(&mut self, fact: Fact, node: DerivationNode) {
        match self.candidates.get_mut(&fact) {
            Some(existing) if node.preference_key() < existing.preference_key() => *existing = node,
            Some(_) => {}
            None => {
                self.candidates.insert(fact, node);
            }
        }
    }

    fn merge(mut self, other: RoundOutput) -> RoundOutput {
        for (f, n) in other.candidates {
            self.offer(f, n);
        }
        self.tautologies.extend(other.tautologies);
        self.degenerate.extend(other.degenerate);
        self
    }
}

/// Stateful saturation driver. Each call to [`Engine::derive_round`] proposes
/// the conclusions of one round; the caller decides what to commit.
pub struct Engine<'r> {
    rules: &'r [Rule],
    options: SaturationOptions,
    store: Store,
    dag: DerivationDag,
    rejected: HashSet<Fact>,
    delta_start: usize,
    round: u32,
    tautologies: BTreeSet<Fact>,
    degenerate: BTreeSet<Fact>,
}

impl<'r> Engine<'r> {
    pub fn new(initial: &FactSet, rules: &'r [Rule], options: SaturationOptions) -> Self {
        let mut store = Store::default();
        let mut round = 0;
        for (f, g) in initial.iter() {
            store.insert(f.clone(), g, false);
            round = round.max(g);
        }
        Engine {
            rules,
            options,
            store,
            dag: DerivationDag::new(),
            rejected: HashSet::new(),
            delta_start: 0,
            round,
            tautologies: BTreeSet::new(),
            degenerate: BTreeSet::new(),
        }
    }

    /// Index of the last committed round.
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn len(&self) -> usize {
        self.store.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.facts.is_empty()
    }

    pub fn dag(&self) -> &DerivationDag {
        &self.dag
    }

    pub fn facts(&self) -> FactSet {
        self.store
            .facts
            .iter()
            .zip(&self.store.generation)
            .map(|(f, g)| (f.clone(), *g))
            .collect()
    }

    pub fn trivial_counts(&self) -> TrivialCounts {
        TrivialCounts {
            tautologies: self.tautologies.len(),
            degenerate: self.degenerate.len(),
        }
    }

    fn apply_rule(&self, rule: &Rule, next_round: u32) -> RoundOutput {
        let mut out = RoundOutput::default();
        let store = &self.store;
        let rule_numeric = rule.has_numeric_sides();
        let mut visit = |binding: &[Option<PointId>], chosen: &[usize]| {
            let Some(sides) = numeric_sides(rule, binding) else {
                return;
            };
            let conclusion = Fact::new(
                rule.conclusion.predicate,
                ground(&rule.conclusion.args, binding),
            )
            .expect("conclusion arity checked at parse time");
            match classify(&conclusion) {
                Triviality::Tautology => {
                    out.tautologies.insert(conclusion);
                    return;
                }
                Triviality::Degenerate => {
                    out.degenerate.insert(conclusion);
                    return;
                }
                Triviality::Proper => {}
            }
            if store.ids.contains_key(&conclusion) || self.rejected.contains(&conclusion) {
                return;
            }
            let conditional = (rule_numeric && !sides.is_empty())
                || chosen.iter().any(|&id| store.conditional[id]);
            if conditional && self.options.strict_sides {
                return;
            }
            let node = DerivationNode {
                rule: rule.name.clone(),
                premises: chosen.iter().map(|&id| store.facts[id].clone()).collect(),
                round: next_round,
                numeric_sides: sides,
                conditional,
            };
            out.offer(conclusion, node);
        };
        match self.options.evaluation {
            Evaluation::Naive => for_each_match(store, rule, None, &mut visit),
            Evaluation::SemiNaive => {
                if self.delta_start < store.facts.len() {
                    for i in 0..rule.premises.len() {
                        for_each_match(store, rule, Some((i, self.delta_start)), &mut visit);
                    }
                }
            }
        }
        out
    }

    /// Conclusions of the next round that are new, non-trivial and not
    /// previously rejected, each with its preferred derivation.
    pub fn derive_round(&mut self) -> BTreeMap<Fact, DerivationNode> {
        let next = self.round + 1;
        let out = self
            .rules
            .par_iter()
            .map(|rule| self.apply_rule(rule, next))
            .reduce(RoundOutput::default, RoundOutput::merge);
        self.tautologies.extend(out.tautologies);
        self.degenerate.extend(out.degenerate);
        out.candidates
    }

    /// Commits `accepted` as the next round, in canonical order.
    pub fn commit(&mut self, accepted: BTreeMap<Fact, DerivationNode>) {
        self.round += 1;
        self.delta_start = self.store.facts.len();
        for (fact, mut node) in accepted {
            node.round = self.round;
            if self
                .store
                .insert(fact.clone(), self.round, node.conditional)
            {
                self.dag.insert(fact, node);
            }
        }
    }

    /// Marks facts as permanently discarded; they are never proposed again.
    pub fn reject<I: IntoIterator<Item = Fact>>(&mut self, facts: I) {
        self.rejected.extend(facts);
    }

    pub fn into_dag(self) -> DerivationDag {
        self.dag
    }
}

pub fn saturate(d0: &FactSet, rules: &[Rule], budget: Budget) -> Saturation {
    saturate_with(
        d0,
        rules,
        SaturationOptions {
            budget,
            ..Default::default()
        },
    )
}

pub fn saturate_with(d0: &FactSet, rules: &[Rule], options: SaturationOptions) -> Saturation {
    let mut engine = Engine::new(d0, rules, options);
    let mut stop_reason = StopReason::Budget;
    let mut rounds = 0;
    for _ in 0..options.budget.max_rounds {
        let mut candidates = engine.derive_round();
        rounds += 1;
        if candidates.is_empty() {
            stop_reason = StopReason::Fixpoint;
            break;
        }
        let room = options.budget.max_facts.saturating_sub(engine.len());
        if candidates.len() > room {
            let keep: Vec<Fact> = candidates.keys().take(room).cloned().collect();
            candidates.retain(|f, _| keep.binary_search(f).is_ok());
            engine.commit(candidates);
            break;
        }
        engine.commit(candidates);
    }
    Saturation {
        facts: engine.facts(),
        trivial: engine.trivial_counts(),
        dag: engine.into_dag(),
        stop_reason,
        rounds,
    }
}

/// Number of new facts one more naive round would add to `facts`.
pub fn extra_round_additions(facts: &FactSet, rules: &[Rule], strict_sides: bool) -> usize {
    let mut engine = Engine::new(
        facts,
        rules,
        SaturationOptions {
            evaluation: Evaluation::Naive,
            strict_sides,
            ..Default::default()
        },
    );
    engine.derive_round().len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::rule::parse_rules;

    const MIDLINE: &str =
        "rule midline: midp(M,A,B), midp(N,A,C), non_collinear(A,B,C) => para(M,N,B,C)";

    fn fs(items: &[&str]) -> FactSet {
        items.iter().map(|s| (s.parse().unwrap(), 0)).collect()
    }

    #[test]
    fn midline_binding_is_unique_up_to_symmetry() {
        let rules = parse_rules(MIDLINE).unwrap();
        let bindings = match_rule(&rules[0], &fs(&["midp(M,A,B)", "midp(N,A,C)"]));
        assert_eq!(bindings.len(), 1);
        let b = &bindings[0];
        let got: Vec<(&str, &str)> = b.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        assert_eq!(
            got,
            vec![("A", "A"), ("B", "B"), ("C", "C"), ("M", "M"), ("N", "N")]
        );
    }

    #[test]
    fn no_facts_no_bindings() {
        let rules = parse_rules(MIDLINE).unwrap();
        assert!(match_rule(&rules[0], &FactSet::new()).is_empty());
    }

    #[test]
    fn unmatched_second_premise() {
        let rules =
            parse_rules("rule para-trans: para(A,B,C,D), para(C,D,E,F) => para(A,B,E,F)").unwrap();
        // the self-join binds E,F = A,B, so only a tautological conclusion exists
        let got = match_rule(&rules[0], &fs(&["para(A,B,C,D)"]));
        for b in &got {
            assert_eq!(
                (b["A"].clone(), b["B"].clone()),
                (b["E"].clone(), b["F"].clone()),
                "only the trivial self-join may match"
            );
        }
        let sat = saturate(&fs(&["para(A,B,C,D)"]), &rules, Budget::default());
        assert_eq!(sat.facts.len(), 1);
        assert_eq!(sat.stop_reason, StopReason::Fixpoint);
    }

    #[test]
    fn empty_inputs() {
        let rules = parse_rules(MIDLINE).unwrap();
        let sat = saturate(&FactSet::new(), &rules, Budget::default());
        assert!(sat.facts.is_empty() && sat.dag.is_empty());
        assert_eq!((sat.stop_reason, sat.rounds), (StopReason::Fixpoint, 1));

        let d0 = fs(&["midp(M,A,B)", "midp(N,A,C)"]);
        let sat = saturate(&d0, &[], Budget::default());
        assert_eq!(sat.facts, d0);
        assert_eq!((sat.stop_reason, sat.rounds), (StopReason::Fixpoint, 1));
    }

    #[test]
    fn midline_round_one() {
        let rules = parse_rules(MIDLINE).unwrap();
        let sat = saturate(
            &fs(&["midp(M,A,B)", "midp(N,A,C)"]),
            &rules,
            Budget::default(),
        );
        let para: Fact = "para(M,N,B,C)".parse().unwrap();
        assert_eq!(sat.facts.generation(&para), Some(1));
        let node = sat.dag.get(&para).unwrap();
        assert_eq!(node.rule, "midline");
        assert!(node.conditional);
        assert_eq!(node.numeric_sides.len(), 1);
        assert_eq!(sat.rounds, 2);
    }

    #[test]
    fn strict_sides_drop_conditional_facts() {
        let rules = parse_rules(MIDLINE).unwrap();
        let opts = SaturationOptions {
            strict_sides: true,
            ..Default::default()
        };
        let sat = saturate_with(&fs(&["midp(M,A,B)", "midp(N,A,C)"]), &rules, opts);
        assert_eq!(sat.facts.len(), 2);
    }

    #[test]
    fn conditionality_propagates() {
        let text = format!("{MIDLINE}\nrule pt: para(A,B,C,D), para(C,D,E,F) => para(A,B,E,F)");
        let rules = parse_rules(&text).unwrap();
        let d0 = fs(&["midp(M,A,B)", "midp(N,A,C)", "para(B,C,X,Y)"]);
        let sat = saturate(&d0, &rules, Budget::default());
        let chained: Fact = "para(M,N,X,Y)".parse().unwrap();
        let node = sat.dag.get(&chained).unwrap();
        assert_eq!(node.round, 2);
        assert!(node.conditional && node.numeric_sides.is_empty());
        assert_eq!(sat.dag.side_conditions_in_ancestry(&chained).len(), 1);
    }

    #[test]
    fn budget_stops() {
        let rules =
            parse_rules("rule cm: coll(A,B,C), coll(A,B,D), distinct(A,B) => coll(B,C,D)").unwrap();
        let d0 = fs(&["coll(A,B,C)", "coll(A,B,D)", "coll(A,B,E)"]);
        let sat = saturate(
            &d0,
            &rules,
            Budget {
                max_rounds: 10,
                max_facts: 4,
            },
        );
        assert_eq!(sat.stop_reason, StopReason::Budget);
        assert_eq!(sat.facts.len(), 4);
        let sat = saturate(
            &d0,
            &rules,
            Budget {
                max_rounds: 1,
                max_facts: 100,
            },
        );
        assert_eq!((sat.stop_reason, sat.rounds), (StopReason::Budget, 1));
        let full = saturate(&d0, &rules, Budget::default());
        assert_eq!(full.stop_reason, StopReason::Fixpoint);
        // all ten triples of {A,B,C,D,E}
        assert_eq!(full.facts.len(), 10);
    }

    #[test]
    fn constants_in_patterns() {
        let rules = parse_rules("rule k: coll(X,Y,o) => para(X,Y,X,o)").unwrap();
        let d0: FactSet = [
            ("coll(A,B,o)".parse().unwrap(), 0),
            ("coll(A,B,C)".parse().unwrap(), 0),
        ]
        .into_iter()
        .collect();
        let sat = saturate(&d0, &rules, Budget::default());
        assert!(sat.facts.contains(&"para(A,B,A,o)".parse().unwrap()));
        assert!(!sat.facts.contains(&"para(A,B,A,C)".parse().unwrap()));
    }
}
