//! Rule model: attributes, predicates, assignments, latency-sensitive rules,
//! and the timer split that turns latencies and extended actions into
//! plain sub-rules.

mod domain;
mod normalize;
mod predicate;
mod sibling;

pub use domain::{representatives, Domain};
pub use normalize::{normalize_latency, Normalized};
pub use predicate::{Atom, CmpOp, Flavor, Literal, Operand, PredExpr, Predicate};
pub use normalize::{extended_timer, t2a_timer};
pub use sibling::{
    conflicting, sibling_conditions, sibling_rules, Scope, ValuationSpace, ENUMERATION_LIMIT,
};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Encoded attribute value. Bools are 0/1, enums are label indices, ints are
/// their raw value.
pub type Value = i32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("enum domain must be non-empty with distinct labels")]
    BadEnum,
    #[error("int domain has min {min} > max {max}")]
    BadRange { min: i64, max: i64 },
    #[error("attribute `{0}`: tardy kind requires an int domain")]
    TardyNotInt(String),
    #[error("rule `{rule}`: extended action on `{target}` has zero duration")]
    ZeroDuration { rule: String, target: String },
    #[error("rule `{rule}`: extended terminal targets `{terminal}`, expected `{target}`")]
    TerminalTarget {
        rule: String,
        target: String,
        terminal: String,
    },
    #[error("analysis limit: enumeration over `{attr}` exceeds {limit} joint assignments")]
    AnalysisLimit { attr: String, limit: usize },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subject {
    Device(String),
    Cyber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Immediate,
    Tardy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDecl {
    pub name: String,
    pub subject: Subject,
    pub kind: AttrKind,
    pub domain: Domain,
}

impl AttributeDecl {
    pub fn new(
        name: impl Into<String>,
        subject: Subject,
        kind: AttrKind,
        domain: Domain,
    ) -> Result<Self, IrError> {
        let name = name.into();
        domain.validate()?;
        if kind == AttrKind::Tardy && !matches!(domain, Domain::Int { .. }) {
            return Err(IrError::TardyNotInt(name));
        }
        Ok(AttributeDecl {
            name,
            subject,
            kind,
            domain,
        })
    }

    pub fn device(&self) -> Option<&str> {
        match &self.subject {
            Subject::Device(d) => Some(d),
            Subject::Cyber => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectId {
    pub name: String,
    pub capabilities: Vec<String>,
}

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssignValue {
    Operand(Operand),
    /// Value the target held when the enclosing extended action started.
    Restore,
}

impl fmt::Display for AssignValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssignValue::Operand(op) => write!(f, "{op}"),
            AssignValue::Restore => f.write_str("restore"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extended {
    pub duration: u32,
    pub terminal: Box<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub target: String,
    pub value: AssignValue,
    pub extended: Option<Extended>,
}

impl Assignment {
    pub fn new(target: impl Into<String>, value: Operand) -> Self {
        Assignment {
            target: target.into(),
            value: AssignValue::Operand(value),
            extended: None,
        }
    }

    pub fn with_extended(mut self, duration: u32, terminal: Option<Assignment>) -> Self {
        let terminal = terminal.unwrap_or_else(|| Assignment {
            target: self.target.clone(),
            value: AssignValue::Restore,
            extended: None,
        });
        self.extended = Some(Extended {
            duration,
            terminal: Box::new(terminal),
        });
        self
    }

    /// Constant value written, when statically known.
    pub fn const_value(&self) -> Option<Value> {
        match &self.value {
            AssignValue::Operand(Operand::Value(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn plain(&self) -> Assignment {
        Assignment {
            target: self.target.clone(),
            value: self.value.clone(),
            extended: None,
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} := {}", self.target, self.value)?;
        if let Some(ext) = &self.extended {
            write!(f, " for {} then {}", ext.duration, ext.terminal)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trigger {
    Pred(Predicate),
    /// Fires when the named timer reaches zero.
    Timeout(String),
}

impl Trigger {
    pub fn predicate(&self) -> Option<&Predicate> {
        match self {
            Trigger::Pred(p) => Some(p),
            Trigger::Timeout(_) => None,
        }
    }

    pub fn canonical(&self) -> String {
        match self {
            Trigger::Pred(p) => p.canonical(),
            Trigger::Timeout(t) => format!("timeout({t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimerArm {
    pub timer: String,
    pub steps: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimerRole {
    T2A,
    Extended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimerVar {
    pub id: String,
    pub owner: String,
    pub timeout: u32,
    pub role: TimerRole,
    /// Attribute whose value is saved on arming, for terminals that restore it.
    pub saves: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleOrigin {
    User,
    Arm { parent: String },
    Timeout { parent: String },
    ExtendedEnd { parent: String, index: usize },
}

impl RuleOrigin {
    /// Id of the user-level rule this rule was derived from.
    pub fn parent<'a>(&'a self, own: &'a str) -> &'a str {
        match self {
            RuleOrigin::User => own,
            RuleOrigin::Arm { parent }
            | RuleOrigin::Timeout { parent }
            | RuleOrigin::ExtendedEnd { parent, .. } => parent,
        }
    }
}

/// Latency-sensitive trigger/condition/action rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub trigger: Trigger,
    pub trigger_conditions: Vec<Predicate>,
    pub action_conditions: Vec<Predicate>,
    pub latency: u32,
    pub actions: Vec<Assignment>,
    pub arms: Vec<TimerArm>,
    pub origin: RuleOrigin,
    pub span: Option<Span>,
}

impl Rule {
    pub fn new(id: impl Into<String>, trigger: Predicate, actions: Vec<Assignment>) -> Self {
        Rule {
            id: id.into(),
            trigger: Trigger::Pred(trigger),
            trigger_conditions: Vec::new(),
            action_conditions: Vec::new(),
            latency: 0,
            actions,
            arms: Vec::new(),
            origin: RuleOrigin::User,
            span: None,
        }
    }

    pub fn conditions(&self) -> impl Iterator<Item = &Predicate> {
        self.trigger_conditions
            .iter()
            .chain(self.action_conditions.iter())
    }

    /// Attributes appearing in the trigger or any condition.
    pub fn reads(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let Some(p) = self.trigger.predicate() {
            out.extend(p.attributes().map(str::to_owned));
        }
        for c in self.conditions() {
            out.extend(c.attributes().map(str::to_owned));
        }
        out
    }

    /// Attributes assigned by any action, including extended terminals.
    pub fn writes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in &self.actions {
            out.insert(a.target.clone());
            if let Some(ext) = &a.extended {
                out.insert(ext.terminal.target.clone());
            }
        }
        out
    }

    /// Timers read (timeout trigger) or armed by this rule.
    pub fn timers(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.arms.iter().map(|a| a.timer.clone()).collect();
        if let Trigger::Timeout(t) = &self.trigger {
            out.insert(t.clone());
        }
        out
    }

    pub fn has_extended(&self) -> bool {
        self.actions.iter().any(|a| a.extended.is_some())
    }

    /// Every attribute mentioned, plus parameter names.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let Some(p) = self.trigger.predicate() {
            out.extend(p.params().map(str::to_owned));
        }
        for c in self.conditions() {
            out.extend(c.params().map(str::to_owned));
        }
        for a in &self.actions {
            if let AssignValue::Operand(Operand::Param(p)) = &a.value {
                out.insert(p.clone());
            }
        }
        out
    }
}
