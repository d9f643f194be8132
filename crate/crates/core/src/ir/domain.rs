use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{IrError, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Bool,
    Enum(Vec<String>),
    Int {
        min: i32,
        max: i32,
        unit: Option<String>,
    },
}

impl Domain {
    pub fn int(min: i32, max: i32) -> Self {
        Domain::Int {
            min,
            max,
            unit: None,
        }
    }

    pub fn enumeration<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Domain::Enum(labels.into_iter().map(Into::into).collect())
    }

    pub fn validate(&self) -> Result<(), IrError> {
        match self {
            Domain::Bool => Ok(()),
            Domain::Enum(labels) => {
                let distinct: BTreeSet<&String> = labels.iter().collect();
                if labels.is_empty() || distinct.len() != labels.len() {
                    Err(IrError::BadEnum)
                } else {
                    Ok(())
                }
            }
            Domain::Int { min, max, .. } => {
                if min > max {
                    Err(IrError::BadRange {
                        min: *min as i64,
                        max: *max as i64,
                    })
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn lo(&self) -> Value {
        match self {
            Domain::Int { min, .. } => *min,
            _ => 0,
        }
    }

    pub fn hi(&self) -> Value {
        match self {
            Domain::Bool => 1,
            Domain::Enum(labels) => labels.len() as Value - 1,
            Domain::Int { max, .. } => *max,
        }
    }

    pub fn contains(&self, v: Value) -> bool {
        v >= self.lo() && v <= self.hi()
    }

    pub fn size(&self) -> u64 {
        (self.hi() as i64 - self.lo() as i64 + 1) as u64
    }

    pub fn is_int(&self) -> bool {
        matches!(self, Domain::Int { .. })
    }

    pub fn values(&self) -> impl Iterator<Item = Value> {
        self.lo()..=self.hi()
    }

    /// Decodes a label (`on`, `true`, an enum label) into its value.
    pub fn parse_label(&self, label: &str) -> Option<Value> {
        match self {
            Domain::Bool => match label {
                "true" | "on" | "yes" => Some(1),
                "false" | "off" | "no" => Some(0),
                _ => None,
            },
            Domain::Enum(labels) => labels.iter().position(|l| l == label).map(|i| i as Value),
            Domain::Int { .. } => None,
        }
    }

    pub fn label(&self, v: Value) -> String {
        match self {
            Domain::Bool => if v != 0 { "true" } else { "false" }.to_owned(),
            Domain::Enum(labels) => labels
                .get(v as usize)
                .cloned()
                .unwrap_or_else(|| format!("#{v}")),
            Domain::Int { .. } => v.to_string(),
        }
    }

    /// The value meaning "powered off", if the domain has one.
    pub fn off_value(&self) -> Option<Value> {
        match self {
            Domain::Bool => Some(0),
            Domain::Enum(_) => self.parse_label("off"),
            Domain::Int { .. } => None,
        }
    }

    pub fn on_value(&self) -> Option<Value> {
        match self {
            Domain::Bool => Some(1),
            Domain::Enum(_) => self.parse_label("on"),
            Domain::Int { .. } => None,
        }
    }
}

/// One representative value per region an int domain splits into around the
/// given cut values: every in-domain cut, plus one point from each non-empty
/// open interval between consecutive cuts (and below the first / above the
/// last). Non-int domains return every value.
pub fn representatives(domain: &Domain, cuts: &BTreeSet<Value>) -> Vec<Value> {
    let Domain::Int { min, max, .. } = *domain else {
        return domain.values().collect();
    };
    let cuts: Vec<Value> = cuts
        .iter()
        .copied()
        .filter(|c| *c >= min && *c <= max)
        .collect();
    if cuts.is_empty() {
        return vec![min];
    }
    let mut out = Vec::with_capacity(cuts.len() * 2 + 1);
    if cuts[0] > min {
        out.push(min);
    }
    for (i, &c) in cuts.iter().enumerate() {
        out.push(c);
        let next = cuts.get(i + 1).copied().unwrap_or(max.saturating_add(1));
        if (next as i64) - (c as i64) > 1 {
            out.push(c + 1);
        }
    }
    out
}
