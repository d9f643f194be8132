//! Front end: rule text, capability catalog and deployment files, and the
//! binding step that resolves names and splits latencies.

mod bind;
mod catalog;
mod deployment;
mod dsl;

pub use bind::{bind, BoundRuleSet, ParamDecl};
pub use catalog::{
    builtin_catalog, load_capabilities, AttrType, AttributeSpec, Capability, CapabilityCatalog,
    CommandSpec,
};
pub use deployment::{
    default_channel_kind, load_deployment, AffectSpec, ChannelSpec, ConnectionSpec, Deployment,
    DeviceSpec, DirectionSpec, PreferenceSpec,
};
pub(crate) use dsl::{clock_minutes, lex, Tok};
pub use dsl::{
    parse_assignment, parse_duration, parse_predicate, parse_rules, parse_rules_with, InitAssign,
    RuleSet, DEFAULT_STEP_SECONDS,
};
