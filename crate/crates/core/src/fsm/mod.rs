//! Finite-state model of a bound rule set.

mod build;
mod compress;
mod expr;
mod system;

pub use build::{
    compile, lag_name, param_name, saved_name, select_attributes, shadow_name, CompileOptions,
    FsmError,
};
pub use compress::{compress, regions, ValueMap};
pub use expr::{Expr, Grids, VarId, FALSE, TRUE};
pub use system::{
    Command, CommandTag, Label, LatchKind, ShadowLatch, StateVar, TransitionSystem, VarRole, TICK,
};
