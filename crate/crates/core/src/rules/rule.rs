//! Rule files (`.gr`).
//!
//! ```text
//! # comment
//! rule midline: midp(M,A,B), midp(N,A,C), non_collinear(A,B,C) => para(M,N,B,C)
//! ```
//!
//! Arguments starting with an uppercase letter are variables; arguments
//! starting with a lowercase letter name a fixed point.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::geometry::{is_identifier, PointId, Predicate};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: `{name}` expects {expected} arguments, got {got}")]
    Arity {
        line: usize,
        column: usize,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: duplicate rule name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("rule `{rule}`: variable {variable} is not bound by any premise")]
    Unbound { rule: String, variable: String },
    #[error("rule `{rule}` has no premises")]
    NoPremises { rule: String },
}

/// A pattern argument. Variables are numbered per rule.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    Const(PointId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub predicate: Predicate,
    pub args: Vec<Term>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SideKind {
    Distinct,
    NonCollinear,
    DistinctLines,
}

impl SideKind {
    pub fn name(self) -> &'static str {
        match self {
            SideKind::Distinct => "distinct",
            SideKind::NonCollinear => "non_collinear",
            SideKind::DistinctLines => "distinct_lines",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            SideKind::Distinct => 2,
            SideKind::NonCollinear => 3,
            SideKind::DistinctLines => 4,
        }
    }

    fn from_name(s: &str) -> Option<SideKind> {
        [
            SideKind::Distinct,
            SideKind::NonCollinear,
            SideKind::DistinctLines,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideCondition {
    pub kind: SideKind,
    pub args: Vec<Term>,
}

/// A side condition instantiated with points.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundSide {
    pub kind: SideKind,
    pub args: Vec<PointId>,
}

/// What can be said about a ground side condition from names alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SideStatus {
    Satisfied,
    Violated,
    /// Needs coordinates.
    Numeric,
}

impl GroundSide {
    /// Distinct names denote distinct points, so `distinct` is always decided;
    /// the other conditions are only refuted by repeated names.
    pub fn symbolic_status(&self) -> SideStatus {
        let a = &self.args;
        match self.kind {
            SideKind::Distinct => {
                if a[0] != a[1] {
                    SideStatus::Satisfied
                } else {
                    SideStatus::Violated
                }
            }
            SideKind::NonCollinear => {
                if a[0] == a[1] || a[1] == a[2] || a[0] == a[2] {
                    SideStatus::Violated
                } else {
                    SideStatus::Numeric
                }
            }
            SideKind::DistinctLines => {
                let l1: BTreeSet<_> = a[0..2].iter().collect();
                let l2: BTreeSet<_> = a[2..4].iter().collect();
                if l1.len() < 2 || l2.len() < 2 || l1 == l2 {
                    SideStatus::Violated
                } else {
                    SideStatus::Numeric
                }
            }
        }
    }
}

impl fmt::Display for GroundSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<&str> = self.args.iter().map(|p| p.as_str()).collect();
        write!(f, "{}({})", self.kind.name(), args.join(","))
    }
}

impl fmt::Debug for GroundSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    /// Variable names, indexed by `Term::Var`.
    pub variables: Vec<String>,
    pub premises: Vec<Pattern>,
    pub side_conditions: Vec<SideCondition>,
    pub conclusion: Pattern,
}

impl Rule {
    fn render_terms(&self, terms: &[Term]) -> String {
        terms
            .iter()
            .map(|t| match t {
                Term::Var(v) => self.variables[*v].clone(),
                Term::Const(p) => p.to_string(),
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Whether any side condition may need numeric checking.
    pub fn has_numeric_sides(&self) -> bool {
        self.side_conditions
            .iter()
            .any(|s| s.kind != SideKind::Distinct)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: ", self.name)?;
        let mut items: Vec<String> = self
            .premises
            .iter()
            .map(|p| format!("{}({})", p.predicate, self.render_terms(&p.args)))
            .collect();
        items.extend(
            self.side_conditions
                .iter()
                .map(|s| format!("{}({})", s.kind.name(), self.render_terms(&s.args))),
        );
        write!(
            f,
            "{} => {}({})",
            items.join(", "),
            self.conclusion.predicate,
            self.render_terms(&self.conclusion.args)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Arrow,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, RuleError> {
    let mut out = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let content = raw.split('#').next().unwrap_or("");
        let chars: Vec<(usize, char)> = content.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            let column = pos + 1;
            let single = match c {
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                ':' => Some(Tok::Colon),
                _ => None,
            };
            if let Some(tok) = single {
                out.push(Spanned { tok, line, column });
                i += 1;
            } else if c.is_whitespace() {
                i += 1;
            } else if c == '=' && chars.get(i + 1).map(|x| x.1) == Some('>') {
                out.push(Spanned {
                    tok: Tok::Arrow,
                    line,
                    column,
                });
                i += 2;
            } else if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                let start = i;
                while i < chars.len()
                    && (chars[i].1.is_ascii_alphanumeric()
                        || chars[i].1 == '_'
                        || chars[i].1 == '-')
                {
                    i += 1;
                }
                let end = chars.get(i).map(|x| x.0).unwrap_or(content.len());
                out.push(Spanned {
                    tok: Tok::Ident(content[chars[start].0..end].to_string()),
                    line,
                    column,
                });
            } else {
                return Err(RuleError::Syntax {
                    line,
                    column,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    last_line: usize,
}

/// An atom as written, before variables are numbered.
struct RawAtom {
    name: String,
    args: Vec<(String, usize, usize)>,
    line: usize,
    column: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn error_here(&self, message: impl Into<String>) -> RuleError {
        let (line, column) = match self.peek() {
            Some(t) => (t.line, t.column),
            None => (self.last_line, 1),
        };
        RuleError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Spanned, RuleError> {
        match self.peek() {
            Some(t) if t.tok == want => {
                let t = t.clone();
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize), RuleError> {
        match self.peek() {
            Some(Spanned {
                tok: Tok::Ident(s),
                line,
                column,
            }) => {
                let r = (s.clone(), *line, *column);
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }

    fn atom(&mut self) -> Result<RawAtom, RuleError> {
        let (name, line, column) = self.ident("an atom")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.ident("an argument")?];
        while self.peek().map(|t| &t.tok) == Some(&Tok::Comma) {
            self.pos += 1;
            args.push(self.ident("an argument")?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(RawAtom {
            name,
            args,
            line,
            column,
        })
    }
}

#[derive(Default)]
struct VarTable {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl VarTable {
    fn term(&mut self, (arg, line, column): &(String, usize, usize)) -> Result<Term, RuleError> {
        if !is_identifier(arg) {
            return Err(RuleError::Syntax {
                line: *line,
                column: *column,
                message: format!("`{arg}` is not a valid variable or point name"),
            });
        }
        if arg.starts_with(|c: char| c.is_ascii_uppercase()) {
            let next = self.names.len();
            let id = *self.index.entry(arg.clone()).or_insert(next);
            if id == next {
                self.names.push(arg.clone());
            }
            Ok(Term::Var(id))
        } else {
            Ok(Term::Const(PointId::new(arg).expect("checked identifier")))
        }
    }

    fn lookup(&self, (arg, _, _): &(String, usize, usize)) -> Option<Term> {
        if arg.starts_with(|c: char| c.is_ascii_uppercase()) {
            self.index.get(arg).map(|&i| Term::Var(i))
        } else {
            PointId::new(arg).ok().map(Term::Const)
        }
    }
}

fn check_arity(atom: &RawAtom, expected: usize) -> Result<(), RuleError> {
    if atom.args.len() != expected {
        return Err(RuleError::Arity {
            line: atom.line,
            column: atom.column,
            name: atom.name.clone(),
            expected,
            got: atom.args.len(),
        });
    }
    Ok(())
}

/// Parses a rule file. Names must be unique and every variable used in a
/// conclusion or side condition must be bound by a premise.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, RuleError> {
    let toks = lex(text)?;
    let last_line = toks.last().map(|t| t.line).unwrap_or(1);
    let mut p = Parser {
        toks,
        pos: 0,
        last_line,
    };
    let mut rules: Vec<Rule> = Vec::new();
    let mut names = BTreeSet::new();

    while p.peek().is_some() {
        let (kw, line, column) = p.ident("`rule`")?;
        if kw != "rule" {
            return Err(RuleError::Syntax {
                line,
                column,
                message: format!("expected `rule`, found `{kw}`"),
            });
        }
        let (name, name_line, _) = p.ident("a rule name")?;
        p.expect(Tok::Colon, "`:`")?;

        let mut body = vec![p.atom()?];
        loop {
            match p.peek().map(|t| &t.tok) {
                Some(Tok::Comma) => {
                    p.pos += 1;
                    body.push(p.atom()?);
                }
                Some(Tok::Arrow) => {
                    p.pos += 1;
                    break;
                }
                _ => return Err(p.error_here("expected `,` or `=>`")),
            }
        }
        let head = p.atom()?;

        if !names.insert(name.clone()) {
            return Err(RuleError::DuplicateName {
                line: name_line,
                name,
            });
        }

        let mut vars = VarTable::default();
        let mut premises = Vec::new();
        let mut sides_raw = Vec::new();
        for atom in body {
            if let Some(kind) = SideKind::from_name(&atom.name) {
                check_arity(&atom, kind.arity())?;
                sides_raw.push((kind, atom));
            } else {
                let predicate: Predicate = atom.name.parse().map_err(|_| RuleError::Syntax {
                    line: atom.line,
                    column: atom.column,
                    message: format!("unknown predicate `{}`", atom.name),
                })?;
                check_arity(&atom, predicate.arity())?;
                let args = atom
                    .args
                    .iter()
                    .map(|a| vars.term(a))
                    .collect::<Result<_, _>>()?;
                premises.push(Pattern { predicate, args });
            }
        }
        if premises.is_empty() {
            return Err(RuleError::NoPremises { rule: name });
        }

        let bind =
            |vars: &VarTable, args: &[(String, usize, usize)]| -> Result<Vec<Term>, RuleError> {
                args.iter()
                    .map(|a| {
                        if !is_identifier(&a.0) {
                            return Err(RuleError::Syntax {
                                line: a.1,
                                column: a.2,
                                message: format!("`{}` is not a valid variable or point name", a.0),
                            });
                        }
                        vars.lookup(a).ok_or_else(|| RuleError::Unbound {
                            rule: name.clone(),
                            variable: a.0.clone(),
                        })
                    })
                    .collect()
            };

        let side_conditions = sides_raw
            .into_iter()
            .map(|(kind, atom)| {
                Ok(SideCondition {
                    kind,
                    args: bind(&vars, &atom.args)?,
                })
            })
            .collect::<Result<Vec<_>, RuleError>>()?;

        let predicate: Predicate = head.name.parse().map_err(|_| RuleError::Syntax {
            line: head.line,
            column: head.column,
            message: format!("unknown predicate `{}`", head.name),
        })?;
        check_arity(&head, predicate.arity())?;
        let conclusion = Pattern {
            predicate,
            args: bind(&vars, &head.args)?,
        };

        rules.push(Rule {
            name,
            variables: vars.names,
            premises,
            side_conditions,
            conclusion,
        });
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midline_rule() {
        let rules = parse_rules(
            "rule midline: midp(M,A,B), midp(N,A,C), non_collinear(A,B,C) => para(M,N,B,C)",
        )
        .unwrap();
        assert_eq!(rules.len(), 1);
        let r = &rules[0];
        assert_eq!(r.name, "midline");
        assert_eq!(r.premises.len(), 2);
        assert_eq!(r.side_conditions.len(), 1);
        assert_eq!(r.variables, vec!["M", "A", "B", "N", "C"]);
        assert_eq!(r.conclusion.predicate, Predicate::Para);
        assert!(r.has_numeric_sides());
    }

    #[test]
    fn unbound_conclusion_variable() {
        let err = parse_rules("rule bad: midp(M,A,B) => para(M,N,A,B)").unwrap_err();
        assert_eq!(
            err,
            RuleError::Unbound {
                rule: "bad".into(),
                variable: "N".into()
            }
        );
    }

    #[test]
    fn unbound_side_variable() {
        let err = parse_rules("rule bad: midp(M,A,B), distinct(A,Q) => coll(M,A,B)").unwrap_err();
        assert!(matches!(err, RuleError::Unbound { .. }));
    }

    #[test]
    fn duplicate_names() {
        let text = "rule a: coll(A,B,C) => coll(B,A,C)\nrule a: coll(A,B,C) => coll(C,B,A)\n";
        assert_eq!(
            parse_rules(text).unwrap_err(),
            RuleError::DuplicateName {
                line: 2,
                name: "a".into()
            }
        );
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(
            parse_rules("rule x coll(A,B,C) => coll(A,B,C)").unwrap_err(),
            RuleError::Syntax { line: 1, .. }
        ));
        assert!(matches!(
            parse_rules("rule x: coll(A,B) => coll(A,B,A)").unwrap_err(),
            RuleError::Arity {
                expected: 3,
                got: 2,
                ..
            }
        ));
        assert!(matches!(
            parse_rules("rule x: foo(A,B) => coll(A,B,A)").unwrap_err(),
            RuleError::Syntax { .. }
        ));
        assert!(matches!(
            parse_rules("rule x: distinct(A,B) => coll(A,B,A)").unwrap_err(),
            RuleError::NoPremises { .. }
        ));
        assert!(matches!(
            parse_rules("rule x: coll(A,B,C) => coll(A,B,C) ;").unwrap_err(),
            RuleError::Syntax { column: 36, .. }
        ));
    }

    #[test]
    fn multiline_rules_and_constants() {
        let text =
            "# header\nrule c: coll(A,B,C),\n   coll(A,B,o)\n   => coll(B,C,o)  # trailing\n";
        let rules = parse_rules(text).unwrap();
        assert_eq!(
            rules[0].premises[1].args[2],
            Term::Const(PointId::new("o").unwrap())
        );
        assert_eq!(
            rules[0].to_string(),
            "rule c: coll(A,B,C), coll(A,B,o) => coll(B,C,o)"
        );
    }

    #[test]
    fn symbolic_side_status() {
        let g = |kind, names: &[&str]| GroundSide {
            kind,
            args: names.iter().map(|n| PointId::new(n).unwrap()).collect(),
        };
        assert_eq!(
            g(SideKind::Distinct, &["A", "B"]).symbolic_status(),
            SideStatus::Satisfied
        );
        assert_eq!(
            g(SideKind::Distinct, &["A", "A"]).symbolic_status(),
            SideStatus::Violated
        );
        assert_eq!(
            g(SideKind::NonCollinear, &["A", "B", "A"]).symbolic_status(),
            SideStatus::Violated
        );
        assert_eq!(
            g(SideKind::NonCollinear, &["A", "B", "C"]).symbolic_status(),
            SideStatus::Numeric
        );
        assert_eq!(
            g(SideKind::DistinctLines, &["A", "B", "B", "A"]).symbolic_status(),
            SideStatus::Violated
        );
        assert_eq!(
            g(SideKind::DistinctLines, &["A", "B", "A", "C"]).symbolic_status(),
            SideStatus::Numeric
        );
    }
}
