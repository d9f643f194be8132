//! Device capability catalog.
//!
//! ```json
//! [{"name": "switch",
//!   "attributes": [{"name": "switch", "type": "enum", "values": ["off", "on"]}],
//!   "commands": [{"name": "on", "attribute": "switch", "value": "on"}]}]
//! ```
//!
//! A top-level object `{"capabilities": [...]}` is accepted too.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::LoadError;
use crate::ir::{AttrKind, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    Bool,
    Int,
    Enum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: AttrType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[i32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<AttrKind>,
}

impl AttributeSpec {
    pub fn domain(&self) -> Result<Domain, String> {
        let d = match self.ty {
            AttrType::Bool => Domain::Bool,
            AttrType::Enum => {
                let values = self
                    .values
                    .clone()
                    .ok_or_else(|| format!("enum attribute `{}` has no values", self.name))?;
                Domain::Enum(values)
            }
            AttrType::Int => {
                let [min, max] = self
                    .range
                    .ok_or_else(|| format!("int attribute `{}` has no range", self.name))?;
                Domain::Int {
                    min,
                    max,
                    unit: self.unit.clone(),
                }
            }
        };
        d.validate().map_err(|e| format!("attribute `{}`: {e}", self.name))?;
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandSpec {
    pub name: String,
    pub attribute: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capability {
    pub name: String,
    #[serde(default)]
    pub attributes: Vec<AttributeSpec>,
    #[serde(default)]
    pub commands: Vec<CommandSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CapabilityCatalog {
    pub capabilities: BTreeMap<String, Capability>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CatalogFile {
    List(Vec<Capability>),
    Wrapped { capabilities: Vec<Capability> },
}

impl CatalogFile {
    fn into_list(self) -> Vec<Capability> {
        match self {
            CatalogFile::List(l) => l,
            CatalogFile::Wrapped { capabilities } => capabilities,
        }
    }
}

impl CapabilityCatalog {
    pub fn from_list(caps: Vec<Capability>) -> Result<Self, LoadError> {
        let mut out = BTreeMap::new();
        for cap in caps {
            let mut names = BTreeMap::new();
            for a in &cap.attributes {
                let d = a
                    .domain()
                    .map_err(|m| LoadError::Catalog(format!("`{}`: {m}", cap.name)))?;
                if names.insert(a.name.clone(), d).is_some() {
                    return Err(LoadError::Catalog(format!(
                        "`{}`: duplicate attribute `{}`",
                        cap.name, a.name
                    )));
                }
            }
            for c in &cap.commands {
                let Some(d) = names.get(&c.attribute) else {
                    return Err(LoadError::Catalog(format!(
                        "`{}`: command `{}` targets unknown attribute `{}`",
                        cap.name, c.name, c.attribute
                    )));
                };
                if json_value(d, &c.value).is_none() {
                    return Err(LoadError::Catalog(format!(
                        "`{}`: command `{}` value {} is outside the domain of `{}`",
                        cap.name, c.name, c.value, c.attribute
                    )));
                }
            }
            let name = cap.name.clone();
            if out.insert(name.clone(), cap).is_some() {
                return Err(LoadError::Catalog(format!("duplicate capability `{name}`")));
            }
        }
        Ok(CapabilityCatalog { capabilities: out })
    }

    pub fn parse(text: &str) -> Result<Self, LoadError> {
        let file: CatalogFile =
            serde_json::from_str(text).map_err(|e| LoadError::Catalog(e.to_string()))?;
        Self::from_list(file.into_list())
    }

    pub fn get(&self, name: &str) -> Option<&Capability> {
        self.capabilities.get(name)
    }
}

/// Decodes a JSON scalar in a domain: labels as strings, numbers for ints,
/// booleans for bools.
pub(crate) fn json_value(d: &Domain, v: &serde_json::Value) -> Option<i32> {
    match v {
        serde_json::Value::String(s) => d.parse_label(s).or_else(|| {
            s.parse::<i32>()
                .ok()
                .filter(|n| d.is_int() && d.contains(*n))
        }),
        serde_json::Value::Bool(b) => matches!(d, Domain::Bool).then_some(*b as i32),
        serde_json::Value::Number(n) => {
            let n = i32::try_from(n.as_i64()?).ok()?;
            (d.is_int() && d.contains(n)).then_some(n)
        }
        _ => None,
    }
}

pub fn load_capabilities(path: &Path) -> Result<CapabilityCatalog, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })?;
    let file: CatalogFile = serde_json::from_str(&text).map_err(|source| LoadError::Json {
        path: path.to_owned(),
        source,
    })?;
    CapabilityCatalog::from_list(file.into_list())
}

/// Capabilities most fixtures rely on.
pub fn builtin_catalog() -> CapabilityCatalog {
    let text = include_str!("builtin_caps.json");
    CapabilityCatalog::parse(text).expect("bundled catalog is valid")
}
