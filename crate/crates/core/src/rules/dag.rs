//! Derivation DAG: one recorded derivation per derived fact.

use std::collections::{BTreeMap, BTreeSet};

use crate::geometry::Fact;
use crate::rules::rule::GroundSide;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationNode {
    pub rule: String,
    /// Premise facts in the order of the rule's premise patterns.
    pub premises: Vec<Fact>,
    pub round: u32,
    /// Side conditions that could not be decided from point names.
    pub numeric_sides: Vec<GroundSide>,
    /// True when this node or any ancestor carries numeric side conditions.
    pub conditional: bool,
}

impl DerivationNode {
    /// Preference among derivations of one fact found in the same round:
    /// unconditional first, then by rule name, then by premises.
    pub(crate) fn preference_key(&self) -> (bool, &str, &[Fact]) {
        (self.conditional, &self.rule, &self.premises)
    }
}

/// Hypotheses have no node. Every premise of a round `r` node is either a
/// hypothesis or a node of round `< r`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DerivationDag {
    nodes: BTreeMap<Fact, DerivationNode>,
}

impl DerivationDag {
    pub fn new() -> Self {
        Self::default()
    }

    /// First derivation wins; returns false if the fact already has a node.
    pub fn insert(&mut self, fact: Fact, node: DerivationNode) -> bool {
        match self.nodes.entry(fact) {
            std::collections::btree_map::Entry::Occupied(_) => false,
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(node);
                true
            }
        }
    }

    pub fn get(&self, fact: &Fact) -> Option<&DerivationNode> {
        self.nodes.get(fact)
    }

    pub fn is_derived(&self, fact: &Fact) -> bool {
        self.nodes.contains_key(fact)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Fact, &DerivationNode)> {
        self.nodes.iter()
    }

    /// Every fact reachable from `fact` through premises, excluding `fact`.
    pub fn ancestors<'a>(&'a self, fact: &'a Fact) -> BTreeSet<&'a Fact> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![fact];
        while let Some(f) = stack.pop() {
            if let Some(node) = self.nodes.get(f) {
                for p in &node.premises {
                    if seen.insert(p) {
                        stack.push(p);
                    }
                }
            }
        }
        seen.remove(fact);
        seen
    }

    /// Derived facts in the ancestor closure of `fact`, including itself.
    pub fn derivation_closure<'a>(&'a self, fact: &'a Fact) -> BTreeSet<&'a Fact> {
        let mut closure: BTreeSet<&Fact> = self
            .ancestors(fact)
            .into_iter()
            .filter(|f| self.is_derived(f))
            .collect();
        if self.is_derived(fact) {
            closure.insert(fact);
        }
        closure
    }

    /// Hypotheses reachable from `fact`; a hypothesis is its own leaf.
    pub fn leaf_ancestors<'a>(&'a self, fact: &'a Fact) -> BTreeSet<&'a Fact> {
        if !self.is_derived(fact) {
            return BTreeSet::from([fact]);
        }
        self.ancestors(fact)
            .into_iter()
            .filter(|f| !self.is_derived(f))
            .collect()
    }

    /// Numeric side conditions collected over the derivation of `fact`.
    pub fn side_conditions_in_ancestry(&self, fact: &Fact) -> BTreeSet<&GroundSide> {
        let mut out = BTreeSet::new();
        for f in self.derivation_closure(fact) {
            if let Some(node) = self.nodes.get(f) {
                out.extend(node.numeric_sides.iter());
            }
        }
        out
    }

    /// Proof trace of `fact`: its derived ancestors and itself, ordered by
    /// round and then canonical form.
    pub fn trace<'a>(&'a self, fact: &'a Fact) -> Vec<(&'a Fact, &'a DerivationNode)> {
        let mut steps: Vec<_> = self
            .derivation_closure(fact)
            .into_iter()
            .filter_map(|f| self.nodes.get(f).map(|n| (f, n)))
            .collect();
        steps.sort_by(|a, b| (a.1.round, a.0).cmp(&(b.1.round, b.0)));
        steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Fact {
        s.parse().unwrap()
    }

    fn node(premises: &[&str], round: u32) -> DerivationNode {
        DerivationNode {
            rule: "r".into(),
            premises: premises.iter().map(|s| f(s)).collect(),
            round,
            numeric_sides: vec![],
            conditional: false,
        }
    }

    #[test]
    fn closure_and_leaves() {
        let mut dag = DerivationDag::new();
        dag.insert(f("para(A,B,C,D)"), node(&["midp(M,A,B)", "midp(N,A,C)"], 1));
        dag.insert(f("para(A,B,E,F)"), node(&["midp(P,E,F)", "midp(Q,E,G)"], 1));
        dag.insert(
            f("para(C,D,E,F)"),
            node(&["para(A,B,C,D)", "para(A,B,E,F)"], 2),
        );
        let top = f("para(C,D,E,F)");
        assert_eq!(dag.derivation_closure(&top).len(), 3);
        assert_eq!(dag.leaf_ancestors(&top).len(), 4);
        let hyp = f("midp(M,A,B)");
        assert_eq!(dag.leaf_ancestors(&hyp), BTreeSet::from([&hyp]));
        assert!(dag.derivation_closure(&hyp).is_empty());
        let trace: Vec<String> = dag.trace(&top).iter().map(|(f, _)| f.to_string()).collect();
        assert_eq!(
            trace,
            vec!["para(A,B,C,D)", "para(A,B,E,F)", "para(C,D,E,F)"]
        );
    }

    #[test]
    fn first_derivation_wins() {
        let mut dag = DerivationDag::new();
        assert!(dag.insert(f("coll(A,B,C)"), node(&["coll(A,B,D)"], 1)));
        assert!(!dag.insert(f("coll(A,B,C)"), node(&["coll(A,B,E)"], 2)));
        assert_eq!(dag.get(&f("coll(A,B,C)")).unwrap().round, 1);
    }
}
