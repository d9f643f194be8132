//! Deployment file: device instances, cyber attributes, connections,
//! channels and user preferences.
//!
//! ```json
//! {"devices": {"heater": ["switch"], "insideTemp": ["temperatureMeasurement"]},
//!  "cyber": [{"name": "time", "type": "int", "range": [0, 1439]}],
//!  "connections": [{"parent": "outlet", "children": ["hub"], "policy": "last"}],
//!  "channels": [{"attribute": "insideTemp.temperature",
//!                "affects": [{"action": "heater.switch := on", "direction": "raise"}]}],
//!  "preferences": {"threshold": 25, "comfort": {"range": [20, 28]}}}
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::catalog::AttributeSpec;
use crate::error::LoadError;
use crate::interaction::OfflinePolicy;
use crate::ir::AttrKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceSpec {
    Caps(Vec<String>),
    Full { capabilities: Vec<String> },
}

impl DeviceSpec {
    pub fn capabilities(&self) -> &[String] {
        match self {
            DeviceSpec::Caps(c) | DeviceSpec::Full { capabilities: c } => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionSpec {
    pub parent: String,
    pub children: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<OfflinePolicy>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DirectionSpec {
    Named(String),
    Set { set: serde_json::Value },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffectSpec {
    pub action: String,
    pub direction: DirectionSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub attribute: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<AttrKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<u32>,
    #[serde(default)]
    pub affects: Vec<AffectSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PreferenceSpec {
    Range { range: [i32; 2] },
    Value(serde_json::Value),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Deployment {
    /// Seconds per model step; durations in rule text are rounded up to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_seconds: Option<u32>,
    #[serde(default)]
    pub devices: BTreeMap<String, DeviceSpec>,
    #[serde(default)]
    pub cyber: Vec<AttributeSpec>,
    #[serde(default)]
    pub connections: Vec<ConnectionSpec>,
    #[serde(default)]
    pub channels: Vec<ChannelSpec>,
    #[serde(default)]
    pub preferences: BTreeMap<String, PreferenceSpec>,
}

impl Deployment {
    pub fn parse(text: &str) -> Result<Self, LoadError> {
        let d: Deployment =
            serde_json::from_str(text).map_err(|e| LoadError::Deployment(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    /// Structural checks that need no catalog: connection shape and acyclicity.
    pub fn validate(&self) -> Result<(), LoadError> {
        let mut parent_of: BTreeMap<&str, &str> = BTreeMap::new();
        for c in &self.connections {
            for dev in std::iter::once(&c.parent).chain(&c.children) {
                if !self.devices.contains_key(dev) {
                    return Err(LoadError::Deployment(format!(
                        "connection names unknown device `{dev}`"
                    )));
                }
            }
            if c.children.contains(&c.parent) {
                return Err(LoadError::Deployment(format!(
                    "`{}` is listed as its own child",
                    c.parent
                )));
            }
            for child in &c.children {
                if let Some(prev) = parent_of.insert(child, &c.parent) {
                    if prev != c.parent {
                        return Err(LoadError::Deployment(format!(
                            "`{child}` has two parents, `{prev}` and `{}`",
                            c.parent
                        )));
                    }
                }
            }
        }
        for start in parent_of.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = *start;
            while let Some(p) = parent_of.get(cur) {
                if !seen.insert(cur) {
                    return Err(LoadError::Deployment(format!(
                        "connection cycle through `{cur}`"
                    )));
                }
                cur = p;
            }
        }
        if self.step_seconds == Some(0) {
            return Err(LoadError::Deployment("step_seconds must be positive".into()));
        }
        Ok(())
    }

    /// Parent device of `device`, if connected.
    pub fn parent_of(&self, device: &str) -> Option<&str> {
        self.connections
            .iter()
            .find(|c| c.children.iter().any(|ch| ch == device))
            .map(|c| c.parent.as_str())
    }
}

pub fn load_deployment(path: &Path) -> Result<Deployment, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })?;
    let d: Deployment = serde_json::from_str(&text).map_err(|source| LoadError::Json {
        path: path.to_owned(),
        source,
    })?;
    d.validate()?;
    Ok(d)
}

/// Kind and latency given to well-known channel attributes when the
/// deployment leaves them out.
pub fn default_channel_kind(attr_name: &str) -> Option<(AttrKind, u32)> {
    match attr_name {
        "temperature" | "humidity" => Some((AttrKind::Tardy, 1)),
        "illuminance" | "voltage" | "water" | "motion" | "presence" => {
            Some((AttrKind::Immediate, 0))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_document() {
        let d = Deployment::parse(
            r#"{"devices": {"outlet": ["switch"], "hub": {"capabilities": []},
                            "insideTemp": ["temperatureMeasurement"]},
                "connections": [{"parent": "outlet", "children": ["hub"], "policy": "last"},
                                {"parent": "hub", "children": ["insideTemp"]}],
                "channels": [{"attribute": "insideTemp.temperature",
                              "affects": [{"action": "heater := on", "direction": "raise"},
                                          {"action": "ac := on", "direction": {"set": 18}}]}],
                "preferences": {"t": 25, "r": {"range": [20, 28]}}}"#,
        )
        .unwrap();
        assert_eq!(d.parent_of("insideTemp"), Some("hub"));
        assert_eq!(d.connections[0].policy, Some(OfflinePolicy::LastMeasurement));
        assert!(matches!(d.preferences["r"], PreferenceSpec::Range { range: [20, 28] }));
        assert!(matches!(d.channels[0].affects[1].direction, DirectionSpec::Set { .. }));
    }

    #[test]
    fn connection_cycle_rejected() {
        let r = Deployment::parse(
            r#"{"devices": {"a": [], "b": []},
                "connections": [{"parent": "a", "children": ["b"]},
                                {"parent": "b", "children": ["a"]}]}"#,
        );
        assert!(r.unwrap_err().to_string().contains("cycle"));
    }

    #[test]
    fn two_parents_rejected() {
        let r = Deployment::parse(
            r#"{"devices": {"a": [], "b": [], "c": []},
                "connections": [{"parent": "a", "children": ["c"]},
                                {"parent": "b", "children": ["c"]}]}"#,
        );
        assert!(r.unwrap_err().to_string().contains("two parents"));
    }

    #[test]
    fn self_child_rejected() {
        let r = Deployment::parse(
            r#"{"devices": {"a": []}, "connections": [{"parent": "a", "children": ["a"]}]}"#,
        );
        assert!(r.is_err());
    }
}
