//! Latency-aware verification of trigger-action automation rules.
//!
//! Rules are written in a small line-oriented language, bound against a
//! device capability catalog and a deployment description, compiled into a
//! guarded-command transition system, sliced along rule dependencies,
//! compressed, and model-checked for safety and liveness properties. The
//! seven rule-interaction threat patterns are detected syntactically and
//! then confirmed or refuted by the checker.

pub mod ir;
pub mod error;
pub mod fsm;
pub mod interaction;
pub mod loader;
pub mod checker;
pub mod slicer;
pub mod par;
pub mod pipeline;
pub mod report;
pub mod smv;

pub use error::LoadError;
