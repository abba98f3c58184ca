//! Random coordinate models of a construction and numeric fact evaluation.
//!
//! Free points are drawn from `[-1, 1]^2`, semi-free points on their locus,
//! and determined points are computed from their defining step. A sample is
//! rejected and redrawn when two points nearly coincide or an intersected
//! pair of lines is nearly parallel. All tolerances are relative to the
//! squared diameter of the point set, so verdicts do not change under
//! similarity transformations.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::construction::{Construction, StepKind};
use crate::geometry::{Fact, PointId, Predicate};
use crate::rules::{GroundSide, SideKind};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MODELS: usize = 5;
pub const MAX_ATTEMPTS: usize = 100;
/// Minimum pairwise distance, relative to the diameter.
pub const MIN_SEPARATION: f64 = 1e-3;
/// Minimum |sin| of the angle between intersected lines.
pub const MIN_SIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumericError {
    #[error("construction is degenerate under seed {seed}: no valid model in {attempts} attempts")]
    Degenerate { seed: u64, attempts: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

/// Circumcenter of a triangle, `None` when the vertices are collinear.
pub fn circumcenter(a: Vec2, b: Vec2, c: Vec2) -> Option<Vec2> {
    let (ab, ac) = (b - a, c - a);
    let d = 2.0 * ab.cross(ac);
    if d == 0.0 {
        return None;
    }
    let (m, n) = (ab.norm2(), ac.norm2());
    let off = Vec2::new((ac.y * m - ab.y * n) / d, (ab.x * n - ac.x * m) / d);
    Some(a + off)
}

fn sin_between(u: Vec2, v: Vec2) -> f64 {
    u.cross(v) / (u.norm2() * v.norm2()).sqrt()
}

/// NaN (a zero-length direction) counts as too flat.
fn too_flat(sin: f64) -> bool {
    sin.is_nan() || sin.abs() < MIN_SIN
}

/// Plane coordinates for every point of a construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateModel {
    coords: BTreeMap<PointId, Vec2>,
    seed: u64,
    scale: f64,
}

impl CoordinateModel {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Squared diameter of the point set.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn get(&self, p: &PointId) -> Option<Vec2> {
        self.coords.get(p).copied()
    }

    pub fn coords(&self) -> &BTreeMap<PointId, Vec2> {
        &self.coords
    }

    fn at(&self, p: &PointId) -> Vec2 {
        match self.coords.get(p) {
            Some(v) => *v,
            None => panic!("point {p} is not part of this model"),
        }
    }
}

fn squared_diameter(points: &[Vec2]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((*a - *b).norm2());
        }
    }
    best
}

/// One sampling attempt; `None` if the draw is degenerate.
fn try_sample(c: &Construction, rng: &mut ChaCha8Rng) -> Option<BTreeMap<PointId, Vec2>> {
    let mut coords: BTreeMap<PointId, Vec2> = BTreeMap::new();
    let mut order = Vec::with_capacity(c.steps().len());
    for step in c.steps() {
        let at = |p: &PointId| coords[p];
        let v = match &step.kind {
            StepKind::FreePoint => Vec2::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)),
            StepKind::OnLine { a, b } => {
                let t: f64 = rng.gen_range(-1.0..=2.0);
                at(a) + t * (at(b) - at(a))
            }
            StepKind::OnCircle { center, through } => {
                let r = (at(through) - at(center)).norm2().sqrt();
                let theta: f64 = rng.gen_range(0.0..TAU);
                at(center) + r * Vec2::new(theta.cos(), theta.sin())
            }
            StepKind::Midpoint { a, b } => 0.5 * (at(a) + at(b)),
            StepKind::Intersect { a, b, c: pc, d } => {
                let (u, w) = (at(b) - at(a), at(d) - at(pc));
                if too_flat(sin_between(u, w)) {
                    return None;
                }
                let t = (at(pc) - at(a)).cross(w) / u.cross(w);
                at(a) + t * u
            }
            StepKind::Foot { from, a, b } => {
                let u = at(b) - at(a);
                let t = (at(from) - at(a)).dot(u) / u.norm2();
                at(a) + t * u
            }
            StepKind::Circumcenter { a, b, c: pc } => {
                let (pa, pb, pcc) = (at(a), at(b), at(pc));
                if too_flat(sin_between(pb - pa, pcc - pa)) {
                    return None;
                }
                circumcenter(pa, pb, pcc)?
            }
        };
        if !v.is_finite() {
            return None;
        }
        coords.insert(step.point.clone(), v);
        order.push(v);
    }
    let scale = squared_diameter(&order);
    let floor = MIN_SEPARATION * MIN_SEPARATION * scale;
    if scale.is_nan() || scale <= 0.0 {
        return None;
    }
    for (i, a) in order.iter().enumerate() {
        for b in &order[i + 1..] {
            if (*a - *b).norm2() < floor {
                return None;
            }
        }
    }
    Some(coords)
}

/// Samples a non-degenerate model; deterministic in `seed`.
pub fn instantiate(c: &Construction, seed: u64) -> Result<CoordinateModel, NumericError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(coords) = try_sample(c, &mut rng) {
            let pts: Vec<Vec2> = coords.values().copied().collect();
            return Ok(CoordinateModel {
                scale: squared_diameter(&pts),
                coords,
                seed,
            });
        }
    }
    Err(NumericError::Degenerate {
        seed,
        attempts: MAX_ATTEMPTS,
    })
}

/// Directed angle from line `u` to line `v` as (sin, cos).
fn directed(u: Vec2, v: Vec2) -> (f64, f64) {
    let n = (u.norm2() * v.norm2()).sqrt();
    (u.cross(v) / n, u.dot(v) / n)
}

/// Whether `fact` holds in `m` up to the relative tolerance `tol`.
///
/// Panics if the fact mentions a point absent from the model.
pub fn eval_fact(m: &CoordinateModel, fact: &Fact, tol: f64) -> bool {
    let p: Vec<Vec2> = fact.args().iter().map(|a| m.at(a)).collect();
    let s = m.scale;
    let s2 = s * s;
    match fact.predicate() {
        Predicate::Coll => (p[1] - p[0]).cross(p[2] - p[0]).powi(2) <= tol * s2,
        Predicate::Para => (p[1] - p[0]).cross(p[3] - p[2]).powi(2) <= tol * s2,
        Predicate::Perp => (p[1] - p[0]).dot(p[3] - p[2]).powi(2) <= tol * s2,
        Predicate::Midp => {
            let e = 2.0 * p[0] - (p[1] + p[2]);
            e.x * e.x <= tol * s && e.y * e.y <= tol * s
        }
        Predicate::Cong => ((p[1] - p[0]).norm2() - (p[3] - p[2]).norm2()).abs() <= tol * s,
        Predicate::Cyclic => {
            // use the best-conditioned triple for the circumcenter
            let triples = [[0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 3, 1], [1, 2, 3, 0]];
            let [i, j, k, l] = *triples
                .iter()
                .max_by(|x, y| {
                    let area = |t: &[usize; 4]| (p[t[1]] - p[t[0]]).cross(p[t[2]] - p[t[0]]).abs();
                    area(x).total_cmp(&area(y))
                })
                .expect("four triples");
            if (p[j] - p[i]).cross(p[k] - p[i]).powi(2) <= tol * s2 {
                return false;
            }
            match circumcenter(p[i], p[j], p[k]) {
                Some(o) => ((p[l] - o).norm2() - (p[i] - o).norm2()).abs() <= tol * s,
                None => false,
            }
        }
        Predicate::Eqangle => {
            let (s1, c1) = directed(p[1] - p[0], p[3] - p[2]);
            let (s2, c2) = directed(p[5] - p[4], p[7] - p[6]);
            (s1 * c2 - c1 * s2).abs() <= tol
        }
    }
}

/// Numeric truth of a side condition in `m`.
pub fn eval_side(m: &CoordinateModel, side: &GroundSide, tol: f64) -> bool {
    let p: Vec<Vec2> = side.args.iter().map(|a| m.at(a)).collect();
    let s = m.scale;
    match side.kind {
        SideKind::Distinct => (p[1] - p[0]).norm2() > tol * s,
        SideKind::NonCollinear => (p[1] - p[0]).cross(p[2] - p[0]).powi(2) > tol * s * s,
        SideKind::DistinctLines => {
            let u = p[1] - p[0];
            let parallel = u.cross(p[3] - p[2]).powi(2) <= tol * s * s;
            let through = u.cross(p[2] - p[0]).powi(2) <= tol * s * s;
            !(parallel && through)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Holds,
    /// False in the model sampled from `seed`.
    Fails {
        seed: u64,
    },
    /// Fewer models than requested could be sampled.
    Degenerate,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// Settings for numeric checking.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericConfig {
    pub models: usize,
    pub tol: f64,
    pub master_seed: u64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            models: DEFAULT_MODELS,
            tol: DEFAULT_TOL,
            master_seed: 0,
        }
    }
}

/// Seed of the `index`-th model drawn under `master_seed`.
pub fn model_seed(master_seed: u64, index: usize) -> u64 {
    master_seed.wrapping_add(index as u64)
}

/// A fixed family of models reused for every fact of one run.
#[derive(Clone, Debug)]
pub struct ModelSet {
    models: Vec<CoordinateModel>,
    tol: f64,
}

impl ModelSet {
    pub fn sample(c: &Construction, cfg: &NumericConfig) -> Result<ModelSet, NumericError> {
        let models = (0..cfg.models)
            .into_par_iter()
            .map(|i| instantiate(c, model_seed(cfg.master_seed, i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ModelSet {
            models,
            tol: cfg.tol,
        })
    }

    pub fn models(&self) -> &[CoordinateModel] {
        &self.models
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Holds iff the fact is true in every model; otherwise the first
    /// falsifying seed.
    pub fn verify(&self, fact: &Fact) -> Verdict {
        match self.models.iter().find(|m| !eval_fact(m, fact, self.tol)) {
            Some(m) => Verdict::Fails { seed: m.seed },
            None => Verdict::Holds,
        }
    }

    /// First model in which some side condition fails.
    pub fn failing_side<'a, I>(&self, sides: I) -> Option<(u64, GroundSide)>
    where
        I: IntoIterator<Item = &'a GroundSide>,
    {
        let sides: Vec<&GroundSide> = sides.into_iter().collect();
        self.models.iter().find_map(|m| {
            sides
                .iter()
                .find(|s| !eval_side(m, s, self.tol))
                .map(|s| (m.seed, (*s).clone()))
        })
    }
}

pub fn verify(fact: &Fact, c: &Construction, n_models: usize) -> Verdict {
    verify_with(
        fact,
        c,
        &NumericConfig {
            models: n_models,
            ..Default::default()
        },
    )
}

pub fn verify_with(fact: &Fact, c: &Construction, cfg: &NumericConfig) -> Verdict {
    match ModelSet::sample(c, cfg) {
        Ok(models) => models.verify(fact),
        Err(_) => Verdict::Degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::parse_construction;

    fn f(s: &str) -> Fact {
        s.parse().unwrap()
    }

    fn pid(s: &str) -> PointId {
        PointId::new(s).unwrap()
    }

    #[test]
    fn midpoint_is_exact() {
        let c = parse_construction("point A B\nmidpoint M A B").unwrap();
        let m = instantiate(&c, 1).unwrap();
        let (a, b, mid) = (m.at(&pid("A")), m.at(&pid("B")), m.at(&pid("M")));
        assert_eq!(mid, 0.5 * (a + b));
        assert_eq!(m.seed(), 1);
    }

    #[test]
    fn deterministic_in_seed() {
        let c = parse_construction(include_str!("../examples/pappus.gc")).unwrap();
        assert_eq!(instantiate(&c, 7).unwrap(), instantiate(&c, 7).unwrap());
        assert_ne!(instantiate(&c, 7).unwrap(), instantiate(&c, 8).unwrap());
    }

    #[test]
    fn pappus_intersection_lies_on_both_lines() {
        let c = parse_construction(include_str!("../examples/pappus.gc")).unwrap();
        let m = instantiate(&c, 1).unwrap();
        let at = |n: &str| m.at(&pid(n));
        let scale = m.scale();
        assert!((at("G") - at("A")).cross(at("E") - at("A")).abs() <= 1e-12 * scale);
        assert!((at("G") - at("B")).cross(at("D") - at("B")).abs() <= 1e-12 * scale);
    }

    #[test]
    fn parallel_intersection_is_degenerate() {
        let c = parse_construction("point A B\non_line C A B\non_line D A B\nintersect P A B C D")
            .unwrap();
        assert_eq!(
            instantiate(&c, 3),
            Err(NumericError::Degenerate {
                seed: 3,
                attempts: MAX_ATTEMPTS
            })
        );
        assert_eq!(verify(&f("coll(A,B,C)"), &c, 5), Verdict::Degenerate);
    }

    #[test]
    fn collinear_circumcenter_is_degenerate() {
        let c = parse_construction("point A B\non_line C A B\ncircumcenter O A B C").unwrap();
        assert!(instantiate(&c, 0).is_err());
    }

    #[test]
    fn model_respects_spacing_floor() {
        let c = parse_construction(include_str!("../examples/pappus.gc")).unwrap();
        for seed in 0..20 {
            let m = instantiate(&c, seed).unwrap();
            let pts: Vec<Vec2> = m.coords().values().copied().collect();
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    assert!((*a - *b).norm2().sqrt() >= MIN_SEPARATION * m.scale().sqrt());
                }
            }
        }
    }

    #[test]
    fn eval_examples() {
        let c = parse_construction("point A B C\nmidpoint M A B\nmidpoint N A C").unwrap();
        let m = instantiate(&c, 11).unwrap();
        assert!(eval_fact(&m, &f("para(M,N,B,C)"), DEFAULT_TOL));
        assert!(eval_fact(&m, &f("cong(A,B,A,B)"), DEFAULT_TOL));
        assert!(eval_fact(&m, &f("midp(M,A,B)"), DEFAULT_TOL));
        assert!(eval_fact(&m, &f("cong(A,M,B,M)"), DEFAULT_TOL));
        assert!(!eval_fact(&m, &f("coll(A,B,C)"), DEFAULT_TOL));
        assert!(!eval_fact(&m, &f("perp(M,N,B,C)"), DEFAULT_TOL));
        assert!(!eval_fact(&m, &f("midp(N,A,B)"), DEFAULT_TOL));
    }

    #[test]
    fn cyclic_and_eqangle_on_circle() {
        let c = parse_construction("point A B C\ncircumcenter O A B C\non_circle D O A").unwrap();
        for seed in 0..10 {
            let m = instantiate(&c, seed).unwrap();
            assert!(eval_fact(&m, &f("cyclic(A,B,C,D)"), DEFAULT_TOL));
            assert!(eval_fact(&m, &f("eqangle(C,A,C,B,D,A,D,B)"), DEFAULT_TOL));
            assert!(!eval_fact(&m, &f("cyclic(A,B,C,O)"), DEFAULT_TOL));
            assert!(!eval_fact(&m, &f("eqangle(C,A,C,B,O,A,O,B)"), DEFAULT_TOL));
        }
    }

    #[test]
    fn foot_is_perpendicular() {
        let c = parse_construction("point A B P\nfoot F P A B").unwrap();
        let m = instantiate(&c, 5).unwrap();
        assert!(eval_fact(&m, &f("perp(P,F,A,B)"), DEFAULT_TOL));
        assert!(eval_fact(&m, &f("coll(F,A,B)"), DEFAULT_TOL));
    }

    #[test]
    fn verify_verdicts() {
        let mid = parse_construction("point A B C\nmidpoint M A B\nmidpoint N A C").unwrap();
        assert_eq!(verify(&f("para(M,N,B,C)"), &mid, 5), Verdict::Holds);
        let pappus = parse_construction(include_str!("../examples/pappus.gc")).unwrap();
        assert_eq!(
            verify(&f("coll(A,B,D)"), &pappus, 5),
            Verdict::Fails { seed: 0 }
        );
        assert_eq!(verify(&f("coll(G,H,I)"), &pappus, 100), Verdict::Holds);
    }

    #[test]
    fn side_conditions() {
        let c = parse_construction("point A B C\non_line D A B").unwrap();
        let m = instantiate(&c, 2).unwrap();
        let side = |kind, names: &[&str]| GroundSide {
            kind,
            args: names.iter().map(|n| pid(n)).collect(),
        };
        assert!(eval_side(
            &m,
            &side(SideKind::NonCollinear, &["A", "B", "C"]),
            DEFAULT_TOL
        ));
        assert!(!eval_side(
            &m,
            &side(SideKind::NonCollinear, &["A", "B", "D"]),
            DEFAULT_TOL
        ));
        assert!(!eval_side(
            &m,
            &side(SideKind::DistinctLines, &["A", "B", "D", "A"]),
            DEFAULT_TOL
        ));
        assert!(eval_side(
            &m,
            &side(SideKind::DistinctLines, &["A", "B", "A", "C"]),
            DEFAULT_TOL
        ));
        assert!(eval_side(
            &m,
            &side(SideKind::Distinct, &["A", "D"]),
            DEFAULT_TOL
        ));
    }

    #[test]
    fn similarity_invariance() {
        let c = parse_construction("point A B C\nmidpoint M A B\nmidpoint N A C").unwrap();
        let m = instantiate(&c, 4).unwrap();
        let mut scaled = m.clone();
        for v in scaled.coords.values_mut() {
            *v = 1e4 * Vec2::new(0.6 * v.x - 0.8 * v.y + 3.0, 0.8 * v.x + 0.6 * v.y - 2.0);
        }
        scaled.scale = squared_diameter(&scaled.coords.values().copied().collect::<Vec<_>>());
        for s in [
            "para(M,N,B,C)",
            "coll(A,B,C)",
            "cong(A,M,B,M)",
            "perp(A,B,M,N)",
        ] {
            assert_eq!(
                eval_fact(&m, &f(s), DEFAULT_TOL),
                eval_fact(&scaled, &f(s), DEFAULT_TOL),
                "{s}"
            );
        }
    }
}
