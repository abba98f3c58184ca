//! Points, predicates and canonical ground facts.
//!
//! Every [`Fact`] is stored in canonical form: the lexicographically least
//! member of its predicate's symmetry orbit. Two facts are equal exactly when
//! they state the same geometric relation up to argument symmetry.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("malformed fact: {predicate} expects {expected} arguments, got {got}")]
    Arity {
        predicate: Predicate,
        expected: usize,
        got: usize,
    },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("invalid point name `{0}`")]
    InvalidPointName(String),
    #[error("cannot parse fact `{0}`")]
    Syntax(String),
}

/// A named point. Names are case-sensitive and compared lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointId(Arc<str>);

impl PointId {
    pub fn new(name: &str) -> Result<Self, GeometryError> {
        if is_identifier(name) {
            Ok(PointId(Arc::from(name)))
        } else {
            Err(GeometryError::InvalidPointName(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `[A-Za-z][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The closed predicate vocabulary. Variant order is alphabetical so that the
/// derived `Ord` on facts matches the order of their textual forms' names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    Coll,
    Cong,
    Cyclic,
    Eqangle,
    Midp,
    Para,
    Perp,
}

impl Predicate {
    pub const ALL: [Predicate; 7] = [
        Predicate::Coll,
        Predicate::Cong,
        Predicate::Cyclic,
        Predicate::Eqangle,
        Predicate::Midp,
        Predicate::Para,
        Predicate::Perp,
    ];

    pub fn arity(self) -> usize {
        match self {
            Predicate::Coll | Predicate::Midp => 3,
            Predicate::Cong | Predicate::Cyclic | Predicate::Para | Predicate::Perp => 4,
            Predicate::Eqangle => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Predicate::Coll => "coll",
            Predicate::Cong => "cong",
            Predicate::Cyclic => "cyclic",
            Predicate::Eqangle => "eqangle",
            Predicate::Midp => "midp",
            Predicate::Para => "para",
            Predicate::Perp => "perp",
        }
    }

    /// Argument permutations that leave the stated relation unchanged.
    /// Entry `p` maps a fact `args` to the equivalent `[args[p[0]], args[p[1]], ...]`.
    /// The identity is always first.
    pub fn symmetries(self) -> &'static [Vec<usize>] {
        static TABLE: OnceLock<Vec<Vec<Vec<usize>>>> = OnceLock::new();
        let table = TABLE.get_or_init(|| {
            Predicate::ALL
                .iter()
                .map(|p| build_symmetries(*p))
                .collect()
        });
        &table[self as usize]
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !prefix.contains(&i) {
                prefix.push(i);
                go(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, &mut out);
    out
}

/// Lay out a sequence of two-point lines, each possibly flipped.
fn lines_with_flips(lines: &[[usize; 2]]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0..(1u32 << lines.len()) {
        let mut perm = Vec::with_capacity(lines.len() * 2);
        for (i, [a, b]) in lines.iter().enumerate() {
            if mask & (1 << i) == 0 {
                perm.extend([*a, *b]);
            } else {
                perm.extend([*b, *a]);
            }
        }
        out.push(perm);
    }
    out
}

fn build_symmetries(p: Predicate) -> Vec<Vec<usize>> {
    match p {
        Predicate::Coll => permutations(3),
        Predicate::Cyclic => permutations(4),
        Predicate::Midp => vec![vec![0, 1, 2], vec![0, 2, 1]],
        Predicate::Para | Predicate::Perp | Predicate::Cong => {
            let mut out = lines_with_flips(&[[0, 1], [2, 3]]);
            out.extend(lines_with_flips(&[[2, 3], [0, 1]]));
            out
        }
        Predicate::Eqangle => {
            let (l0, l1, l2, l3) = ([0, 1], [2, 3], [4, 5], [6, 7]);
            [
                [l0, l1, l2, l3],
                [l2, l3, l0, l1],
                [l1, l0, l3, l2],
                [l3, l2, l1, l0],
            ]
            .iter()
            .flat_map(|variant| lines_with_flips(variant))
            .collect()
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Predicate {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Predicate::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| GeometryError::UnknownPredicate(s.to_string()))
    }
}

/// A ground atom in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    predicate: Predicate,
    args: Vec<PointId>,
}

impl Fact {
    /// Builds the canonical representative of `predicate(args...)`.
    pub fn new(predicate: Predicate, args: Vec<PointId>) -> Result<Self, GeometryError> {
        canonicalize(predicate, args)
    }

    /// Convenience constructor from point names; panics on bad input.
    /// Intended for tests and literals.
    pub fn of(predicate: Predicate, names: &[&str]) -> Self {
        let args = names
            .iter()
            .map(|n| PointId::new(n).expect("point name"))
            .collect();
        Fact::new(predicate, args).expect("well-formed fact")
    }

    pub fn predicate(&self) -> Predicate {
        self.predicate
    }

    pub fn args(&self) -> &[PointId] {
        &self.args
    }

    /// Distinct points mentioned by the fact.
    pub fn points(&self) -> BTreeSet<&PointId> {
        self.args.iter().collect()
    }

    /// Every argument arrangement equivalent to this fact (with repeats when
    /// the fact has repeated points).
    pub fn orbit(&self) -> impl Iterator<Item = Vec<&PointId>> + '_ {
        self.predicate
            .symmetries()
            .iter()
            .map(move |perm| perm.iter().map(|&i| &self.args[i]).collect())
    }

    pub fn rename(&self, map: &BTreeMap<PointId, PointId>) -> Fact {
        let args = self
            .args
            .iter()
            .map(|p| map.get(p).cloned().unwrap_or_else(|| p.clone()))
            .collect();
        Fact::new(self.predicate, args).expect("renaming preserves arity")
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(a.as_str())?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Fact {
    type Err = GeometryError;

    /// Parses `pred(P1,...,Pn)`; whitespace around tokens is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let syntax = || GeometryError::Syntax(s.to_string());
        let open = s.find('(').ok_or_else(syntax)?;
        let body = s[open + 1..].strip_suffix(')').ok_or_else(syntax)?;
        let predicate: Predicate = s[..open].trim().parse()?;
        let args = body
            .split(',')
            .map(|a| PointId::new(a.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        Fact::new(predicate, args)
    }
}

fn sorted_pair(a: PointId, b: PointId) -> [PointId; 2] {
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Returns the unique representative of the fact's symmetry class.
pub fn canonicalize(predicate: Predicate, mut args: Vec<PointId>) -> Result<Fact, GeometryError> {
    if args.len() != predicate.arity() {
        return Err(GeometryError::Arity {
            predicate,
            expected: predicate.arity(),
            got: args.len(),
        });
    }
    match predicate {
        Predicate::Coll | Predicate::Cyclic => args.sort(),
        Predicate::Midp => {
            if args[1] > args[2] {
                args.swap(1, 2);
            }
        }
        Predicate::Para | Predicate::Perp | Predicate::Cong => {
            let mut it = args.into_iter();
            let mut take = || it.next().expect("arity checked");
            let s1 = sorted_pair(take(), take());
            let s2 = sorted_pair(take(), take());
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            args = lo.into_iter().chain(hi).collect();
        }
        Predicate::Eqangle => {
            let mut it = args.into_iter();
            let mut line = || {
                let a = it.next().expect("arity checked");
                let b = it.next().expect("arity checked");
                sorted_pair(a, b)
            };
            let l = [line(), line(), line(), line()];
            let variants = [[0, 1, 2, 3], [2, 3, 0, 1], [1, 0, 3, 2], [3, 2, 1, 0]];
            let best = variants
                .iter()
                .map(|v| [&l[v[0]], &l[v[1]], &l[v[2]], &l[v[3]]])
                .min()
                .expect("nonempty");
            args = best.iter().flat_map(|seg| seg.iter().cloned()).collect();
        }
    }
    Ok(Fact { predicate, args })
}

/// Three-way verdict on whether a fact carries geometric content.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Triviality {
    Proper,
    /// Holds for every point assignment.
    Tautology,
    /// Repeated points make the statement meaningless or unsatisfiable for
    /// distinct points.
    Degenerate,
}

pub fn classify(fact: &Fact) -> Triviality {
    let a = &fact.args;
    match fact.predicate {
        Predicate::Coll => {
            if a[0] == a[1] || a[1] == a[2] || a[0] == a[2] {
                Triviality::Tautology
            } else {
                Triviality::Proper
            }
        }
        Predicate::Cyclic => {
            let distinct: BTreeSet<_> = a.iter().collect();
            if distinct.len() < 4 {
                Triviality::Degenerate
            } else {
                Triviality::Proper
            }
        }
        Predicate::Midp => {
            if a[1] == a[2] {
                if a[0] == a[1] {
                    Triviality::Tautology
                } else {
                    Triviality::Degenerate
                }
            } else if a[0] == a[1] || a[0] == a[2] {
                Triviality::Degenerate
            } else {
                Triviality::Proper
            }
        }
        Predicate::Cong => {
            let zero1 = a[0] == a[1];
            let zero2 = a[2] == a[3];
            match (zero1, zero2) {
                (true, true) => Triviality::Tautology,
                (true, false) | (false, true) => Triviality::Degenerate,
                _ if a[0..2] == a[2..4] => Triviality::Tautology,
                _ => Triviality::Proper,
            }
        }
        Predicate::Para | Predicate::Perp => {
            if a[0] == a[1] || a[2] == a[3] {
                Triviality::Degenerate
            } else if a[0..2] == a[2..4] {
                // a line is parallel to itself but never perpendicular to itself
                if fact.predicate == Predicate::Para {
                    Triviality::Tautology
                } else {
                    Triviality::Degenerate
                }
            } else {
                Triviality::Proper
            }
        }
        Predicate::Eqangle => {
            if a.chunks(2).any(|seg| seg[0] == seg[1]) {
                Triviality::Degenerate
            } else if a[0..4] == a[4..8] || (a[0..2] == a[2..4] && a[4..6] == a[6..8]) {
                Triviality::Tautology
            } else {
                Triviality::Proper
            }
        }
    }
}

pub fn is_tautology(fact: &Fact) -> bool {
    classify(fact) == Triviality::Tautology
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Symbol {
    Predicate(Predicate),
    Point(PointId),
}

/// Symbols of a fact: the predicate plus one entry per argument position.
#[derive(Clone, Debug)]
pub struct FactSymbols {
    pub multiset: Vec<Symbol>,
    pub distinct: BTreeSet<Symbol>,
}

pub fn fact_symbols(fact: &Fact) -> FactSymbols {
    let multiset: Vec<Symbol> = std::iter::once(Symbol::Predicate(fact.predicate))
        .chain(fact.args.iter().cloned().map(Symbol::Point))
        .collect();
    let distinct = multiset.iter().cloned().collect();
    FactSymbols { multiset, distinct }
}

/// Canonical facts tagged with the round in which they entered.
/// Hypotheses carry generation 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactSet {
    facts: BTreeMap<Fact, u32>,
}

impl FactSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts unless already present; returns whether it was new.
    pub fn insert(&mut self, fact: Fact, generation: u32) -> bool {
        match self.facts.entry(fact) {
            std::collections::btree_map::Entry::Occupied(_) => false,
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(generation);
                true
            }
        }
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains_key(fact)
    }

    pub fn generation(&self, fact: &Fact) -> Option<u32> {
        self.facts.get(fact).copied()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Facts in canonical order with their generation.
    pub fn iter(&self) -> impl Iterator<Item = (&Fact, u32)> {
        self.facts.iter().map(|(f, g)| (f, *g))
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.keys()
    }

    pub fn hypotheses(&self) -> impl Iterator<Item = &Fact> {
        self.iter().filter(|(_, g)| *g == 0).map(|(f, _)| f)
    }

    pub fn derived(&self) -> impl Iterator<Item = &Fact> {
        self.iter().filter(|(_, g)| *g > 0).map(|(f, _)| f)
    }

    /// Facts that entered at exactly `generation`.
    pub fn at_generation(&self, generation: u32) -> impl Iterator<Item = &Fact> {
        self.iter()
            .filter(move |(_, g)| *g == generation)
            .map(|(f, _)| f)
    }

    pub fn is_subset(&self, other: &FactSet) -> bool {
        self.facts().all(|f| other.contains(f))
    }
}

impl FromIterator<(Fact, u32)> for FactSet {
    fn from_iter<T: IntoIterator<Item = (Fact, u32)>>(iter: T) -> Self {
        let mut set = FactSet::new();
        for (f, g) in iter {
            set.insert(f, g);
        }
        set
    }
}
