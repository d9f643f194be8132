//! Explicit-state checking of safety and liveness properties.

mod engine;
mod property;
mod suite;
mod templates;
mod trace;
mod verdict;

pub use engine::{
    explore, find_bounded, find_fair_lasso, find_reachable, is_tick, BudgetExceeded,
    ExplicitGraph, Fairness, Path,
};
pub use property::{
    parse_properties, Goal, Origin, PropExpr, Property, PropertyError, PropertyKind, RuleAtom,
};
pub use suite::{prepare, prepare_shared, run_suite, CheckResult, SuiteOptions};
pub use templates::{apply_verdicts, instantiate_properties};
pub use trace::{Trace, TraceStep};
pub use verdict::{check, Outcome, Verdict, DEFAULT_BUDGET};
