//! Channel and connection structure, dependency edges, and syntactic threat
//! detection.

mod deps;
mod model;
mod threats;

pub use deps::{build_expression_deps, build_rule_deps};
pub use model::{
    Affect, ChannelDecl, ConnectionDecl, DependencyEdge, Direction, ExprEdge, OfflinePolicy, Via,
};
pub use threats::{
    can_reach, can_satisfy, detect_threats, ChannelWitness, ThreatCandidate, ThreatKind,
    ThreatStatus, Witness,
};
