//! Construction scripts (`.gc`) and the hypothesis facts they induce.
//!
//! ```text
//! point A B D E
//! on_line C A B
//! intersect G A E B D
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::geometry::{is_identifier, Fact, FactSet, PointId, Predicate};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: point `{name}` is undefined")]
    Undefined {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("line {line}, column {column}: point `{name}` is already defined")]
    Redefined {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("line {line}, column {column}: `{keyword}` expects {expected} points, got {got}")]
    Arity {
        line: usize,
        column: usize,
        keyword: String,
        expected: String,
        got: usize,
    },
    #[error("line {line}, column {column}: point `{name}` appears twice in one step")]
    RepeatedArgument {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("a construction needs at least two free points, found {0}")]
    TooFewFreePoints(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepKind {
    FreePoint,
    /// Semi-free: somewhere on line `a b`.
    OnLine {
        a: PointId,
        b: PointId,
    },
    /// Semi-free: on the circle centred at `center` through `through`.
    OnCircle {
        center: PointId,
        through: PointId,
    },
    Midpoint {
        a: PointId,
        b: PointId,
    },
    /// Intersection of line `a b` with line `c d`.
    Intersect {
        a: PointId,
        b: PointId,
        c: PointId,
        d: PointId,
    },
    /// Foot of the perpendicular from `from` onto line `a b`.
    Foot {
        from: PointId,
        a: PointId,
        b: PointId,
    },
    Circumcenter {
        a: PointId,
        b: PointId,
        c: PointId,
    },
}

impl StepKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            StepKind::FreePoint => "point",
            StepKind::OnLine { .. } => "on_line",
            StepKind::OnCircle { .. } => "on_circle",
            StepKind::Midpoint { .. } => "midpoint",
            StepKind::Intersect { .. } => "intersect",
            StepKind::Foot { .. } => "foot",
            StepKind::Circumcenter { .. } => "circumcenter",
        }
    }

    /// Previously defined points this step depends on, in script order.
    pub fn dependencies(&self) -> Vec<&PointId> {
        match self {
            StepKind::FreePoint => vec![],
            StepKind::OnLine { a, b } | StepKind::Midpoint { a, b } => vec![a, b],
            StepKind::OnCircle { center, through } => vec![center, through],
            StepKind::Intersect { a, b, c, d } => vec![a, b, c, d],
            StepKind::Foot { from, a, b } => vec![from, a, b],
            StepKind::Circumcenter { a, b, c } => vec![a, b, c],
        }
    }

    fn from_keyword(keyword: &str, args: &[PointId]) -> Option<StepKind> {
        let a = |i: usize| args[i].clone();
        Some(match keyword {
            "on_line" => StepKind::OnLine { a: a(0), b: a(1) },
            "on_circle" => StepKind::OnCircle {
                center: a(0),
                through: a(1),
            },
            "midpoint" => StepKind::Midpoint { a: a(0), b: a(1) },
            "intersect" => StepKind::Intersect {
                a: a(0),
                b: a(1),
                c: a(2),
                d: a(3),
            },
            "foot" => StepKind::Foot {
                from: a(0),
                a: a(1),
                b: a(2),
            },
            "circumcenter" => StepKind::Circumcenter {
                a: a(0),
                b: a(1),
                c: a(2),
            },
            _ => return None,
        })
    }
}

/// Number of point tokens after the keyword, including the defined point.
fn keyword_arity(keyword: &str) -> Option<usize> {
    match keyword {
        "on_line" | "on_circle" | "midpoint" => Some(3),
        "intersect" => Some(5),
        "foot" | "circumcenter" => Some(4),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionStep {
    /// The point this step defines.
    pub point: PointId,
    pub kind: StepKind,
}

impl fmt::Display for ConstructionStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind.keyword(), self.point)?;
        for d in self.kind.dependencies() {
            write!(f, " {d}")?;
        }
        Ok(())
    }
}

/// A validated, well-founded sequence of construction steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Construction {
    steps: Vec<ConstructionStep>,
}

impl Construction {
    /// Validates a step list built programmatically.
    pub fn from_steps(steps: Vec<ConstructionStep>) -> Result<Self, ConstructionError> {
        let mut defined = BTreeSet::new();
        for (i, step) in steps.iter().enumerate() {
            let line = i + 1;
            let deps = step.kind.dependencies();
            let mut seen = BTreeSet::new();
            for d in &deps {
                if !defined.contains(*d) {
                    return Err(ConstructionError::Undefined {
                        line,
                        column: 1,
                        name: d.to_string(),
                    });
                }
                if !seen.insert(*d) {
                    return Err(ConstructionError::RepeatedArgument {
                        line,
                        column: 1,
                        name: d.to_string(),
                    });
                }
            }
            if !defined.insert(step.point.clone()) {
                return Err(ConstructionError::Redefined {
                    line,
                    column: 1,
                    name: step.point.to_string(),
                });
            }
        }
        let c = Construction { steps };
        c.check_free_points()?;
        Ok(c)
    }

    fn check_free_points(&self) -> Result<(), ConstructionError> {
        let free = self.free_point_count();
        if free < 2 {
            return Err(ConstructionError::TooFewFreePoints(free));
        }
        Ok(())
    }

    pub fn steps(&self) -> &[ConstructionStep] {
        &self.steps
    }

    /// Points in definition order.
    pub fn points(&self) -> impl Iterator<Item = &PointId> {
        self.steps.iter().map(|s| &s.point)
    }

    pub fn free_point_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.kind == StepKind::FreePoint)
            .count()
    }

    /// One script line per step.
    pub fn echo(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.to_string()).collect()
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    tokens
}

pub fn parse_construction(text: &str) -> Result<Construction, ConstructionError> {
    let mut steps = Vec::new();
    let mut defined: BTreeSet<PointId> = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        let Some((head, rest)) = tokens.split_first() else {
            continue;
        };

        let mut names = Vec::with_capacity(rest.len());
        for t in rest {
            if !is_identifier(t.text) {
                return Err(ConstructionError::Syntax {
                    line,
                    column: t.column,
                    message: format!("`{}` is not a valid point name", t.text),
                });
            }
            names.push(PointId::new(t.text).expect("checked identifier"));
        }

        if head.text == "point" {
            if names.is_empty() {
                return Err(ConstructionError::Arity {
                    line,
                    column: head.column,
                    keyword: "point".into(),
                    expected: "at least 1".into(),
                    got: 0,
                });
            }
            for (name, t) in names.into_iter().zip(rest) {
                if !defined.insert(name.clone()) {
                    return Err(ConstructionError::Redefined {
                        line,
                        column: t.column,
                        name: name.to_string(),
                    });
                }
                steps.push(ConstructionStep {
                    point: name,
                    kind: StepKind::FreePoint,
                });
            }
            continue;
        }

        let Some(arity) = keyword_arity(head.text) else {
            return Err(ConstructionError::Syntax {
                line,
                column: head.column,
                message: format!("unknown statement `{}`", head.text),
            });
        };
        if names.len() != arity {
            return Err(ConstructionError::Arity {
                line,
                column: head.column,
                keyword: head.text.to_string(),
                expected: arity.to_string(),
                got: names.len(),
            });
        }

        let mut seen = BTreeSet::new();
        for (name, t) in names[1..].iter().zip(&rest[1..]) {
            if !defined.contains(name) {
                return Err(ConstructionError::Undefined {
                    line,
                    column: t.column,
                    name: name.to_string(),
                });
            }
            if !seen.insert(name) {
                return Err(ConstructionError::RepeatedArgument {
                    line,
                    column: t.column,
                    name: name.to_string(),
                });
            }
        }
        if !defined.insert(names[0].clone()) {
            return Err(ConstructionError::Redefined {
                line,
                column: rest[0].column,
                name: names[0].to_string(),
            });
        }
        let kind = StepKind::from_keyword(head.text, &names[1..]).expect("keyword has arity");
        steps.push(ConstructionStep {
            point: names[0].clone(),
            kind,
        });
    }

    let c = Construction { steps };
    c.check_free_points()?;
    Ok(c)
}

/// Facts emitted by one construction step, canonical.
pub fn step_facts(step: &ConstructionStep) -> Vec<Fact> {
    use Predicate::*;
    let p = step.point.clone();
    let fact = |pred, args: Vec<&PointId>| {
        Fact::new(pred, args.into_iter().cloned().collect()).expect("step arity matches predicate")
    };
    match &step.kind {
        StepKind::FreePoint => vec![],
        StepKind::OnLine { a, b } => vec![fact(Coll, vec![&p, a, b])],
        StepKind::OnCircle { center, through } => {
            vec![fact(Cong, vec![center, &p, center, through])]
        }
        StepKind::Midpoint { a, b } => vec![
            fact(Midp, vec![&p, a, b]),
            fact(Coll, vec![&p, a, b]),
            fact(Cong, vec![&p, a, &p, b]),
        ],
        StepKind::Intersect { a, b, c, d } => {
            vec![fact(Coll, vec![&p, a, b]), fact(Coll, vec![&p, c, d])]
        }
        StepKind::Foot { from, a, b } => {
            vec![fact(Coll, vec![&p, a, b]), fact(Perp, vec![from, &p, a, b])]
        }
        StepKind::Circumcenter { a, b, c } => {
            vec![
                fact(Cong, vec![&p, a, &p, b]),
                fact(Cong, vec![&p, b, &p, c]),
            ]
        }
    }
}

/// The hypothesis set D0: every step's facts at generation 0.
pub fn initial_facts(c: &Construction) -> FactSet {
    c.steps()
        .iter()
        .flat_map(step_facts)
        .map(|f| (f, 0))
        .collect()
}
