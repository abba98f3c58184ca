//! Rule files, forward chaining and derivation recording.

pub mod dag;
pub mod engine;
pub mod rule;

pub use dag::{DerivationDag, DerivationNode};
pub use engine::{
    extra_round_additions, match_rule, saturate, saturate_with, Binding, Budget, Engine,
    Evaluation, Saturation, SaturationOptions, StopReason, TrivialCounts,
};
pub use rule::{
    parse_rules, GroundSide, Pattern, Rule, RuleError, SideCondition, SideKind, SideStatus, Term,
};

/// The bundled default rule set (`rules/gddm-default.gr`).
pub const DEFAULT_RULES: &str = include_str!("../../rules/gddm-default.gr");
