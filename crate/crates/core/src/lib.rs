//! Forward-chaining geometric theorem finder.
//!
//! A construction script yields hypothesis facts; a rule set is applied
//! breadth-first until no new fact appears; derived facts are checked on
//! random coordinate models and ranked by interestingness metrics.

pub mod construction;
pub mod geometry;
pub mod metrics;
pub mod numeric;
pub mod pipeline;
pub mod report;
pub mod rules;

pub use construction::{
    initial_facts, parse_construction, Construction, ConstructionError, ConstructionStep, StepKind,
};
pub use geometry::{
    canonicalize, classify, fact_symbols, is_tautology, Fact, FactSet, PointId, Predicate,
    Triviality,
};
