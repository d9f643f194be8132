use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ir::{AttrKind, Assignment, Value};

/// How an action moves a channel attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Raise,
    Lower,
    Set(Value),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affect {
    /// Bound assignment shape (`heater.switch := on`) whose effect this is.
    pub pattern: Assignment,
    pub direction: Direction,
}

impl Affect {
    /// True when a write of `value` to `target` matches the pattern.
    pub fn matches(&self, target: &str, value: Option<Value>) -> bool {
        self.pattern.target == target && value.is_some() && self.pattern.const_value() == value
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelDecl {
    pub attribute: String,
    pub kind: AttrKind,
    /// Steps before a tardy channel starts moving; unused for immediate ones.
    pub latency: u32,
    pub affects: Vec<Affect>,
    /// Whether the environment also moves the attribute while no cause is
    /// active. False models a closed room that only the listed actions change.
    pub ambient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OfflinePolicy {
    #[serde(rename = "disable", alias = "DisableRules")]
    DisableRules,
    #[serde(rename = "last", alias = "LastMeasurement")]
    LastMeasurement,
}

impl fmt::Display for OfflinePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OfflinePolicy::DisableRules => "disable",
            OfflinePolicy::LastMeasurement => "last",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionDecl {
    pub parent: String,
    pub children: Vec<String>,
    pub policy: OfflinePolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "via", content = "name", rename_all = "lowercase")]
pub enum Via {
    Direct,
    Channel(String),
    Connection(String),
}

/// `source` writes something a predicate of `sink` depends on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub source: String,
    pub sink: String,
    pub via: Via,
    /// Attribute and predicate text of the expression edge, or the sub-rule
    /// link, that produced this edge.
    pub justification: String,
}

/// Expression dependency: predicate `predicate` (owned by `owner`) reads
/// `attribute`, which some other rule can change.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExprEdge {
    pub attribute: String,
    pub predicate: String,
    pub owner: String,
}
