//! Dependency-based model slicing.
//!
//! Rules joined by a rule-dependency edge end up in the same slicer, closed
//! under both directions until nothing changes; rules no edge touches share
//! one remainder slicer.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::checker::Property;
use crate::fsm::{compile, CompileOptions, FsmError};
use crate::interaction::DependencyEdge;
use crate::loader::BoundRuleSet;

pub const REMAINDER: &str = "R";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slicer {
    pub id: String,
    /// Normalized rule ids, sorted.
    pub rules: Vec<String>,
    /// Dependency edges inside the slicer.
    pub edges: Vec<DependencyEdge>,
}

impl Slicer {
    pub fn is_remainder(&self) -> bool {
        self.id == REMAINDER
    }

    pub fn rule_set(&self) -> BTreeSet<String> {
        self.rules.iter().cloned().collect()
    }

    pub fn contains(&self, rule: &str) -> bool {
        self.rules.binary_search_by(|r| r.as_str().cmp(rule)).is_ok()
    }
}

/// Partitions the normalized rules of `brs` along `edges`.
pub fn slice(brs: &BoundRuleSet, edges: &BTreeSet<DependencyEdge>) -> Vec<Slicer> {
    let ids: Vec<&str> = brs.rules.iter().map(|r| r.id.as_str()).collect();
    let pos: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, r)| (*r, i)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let n = p[c];
            p[c] = r;
            c = n;
        }
        r
    }
    let mut touched = vec![false; ids.len()];
    for e in edges {
        let (Some(&a), Some(&b)) = (pos.get(e.source.as_str()), pos.get(e.sink.as_str())) else {
            continue;
        };
        touched[a] = true;
        touched[b] = true;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut rest: Vec<String> = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        if touched[i] {
            groups.entry(find(&mut parent, i)).or_default().push((*id).to_owned());
        } else {
            rest.push((*id).to_owned());
        }
    }
    let mut members: Vec<Vec<String>> = groups.into_values().collect();
    for m in &mut members {
        m.sort();
    }
    members.sort();
    let mut out: Vec<Slicer> = members
        .into_iter()
        .enumerate()
        .map(|(k, rules)| {
            let edges = edges
                .iter()
                .filter(|e| rules.binary_search(&e.source).is_ok())
                .cloned()
                .collect();
            Slicer {
                id: format!("S{}", k + 1),
                rules,
                edges,
            }
        })
        .collect();
    if !rest.is_empty() {
        rest.sort();
        out.push(Slicer {
            id: REMAINDER.to_owned(),
            rules: rest,
            edges: Vec::new(),
        });
    }
    out
}

/// Rules whose behaviour can change what a property observes: writers of its
/// attributes, rules moving them through a channel, rules switching power
/// above their devices, and rules it names.
pub fn influencers(brs: &BoundRuleSet, prop: &Property) -> BTreeSet<String> {
    let mut out = prop.rules();
    for a in prop.attributes() {
        let mut watched = vec![a.clone()];
        if let Some(dev) = brs.device_of(&a) {
            for (p, _) in brs.ancestors(dev) {
                if let Some(pa) = brs.power_attr(&p) {
                    watched.push(pa.to_owned());
                }
            }
        }
        for r in &brs.rules {
            let writes = r.writes();
            let hits_channel = brs.channel(&a).is_some_and(|ch| {
                r.actions
                    .iter()
                    .any(|x| ch.affects.iter().any(|af| af.matches(&x.target, x.const_value())))
            });
            if hits_channel || watched.iter().any(|w| writes.contains(w)) {
                out.insert(r.id.clone());
            }
        }
    }
    out
}

/// Index of the slicer that owns `prop`, or a diagnostic when the rules that
/// influence it lie in different slicers.
pub fn route(brs: &BoundRuleSet, slicers: &[Slicer], prop: &Property) -> Result<usize, String> {
    let inf = influencers(brs, prop);
    let owners: BTreeSet<usize> = inf
        .iter()
        .filter_map(|r| slicers.iter().position(|s| s.contains(r)))
        .collect();
    match owners.len() {
        1 => Ok(*owners.iter().next().unwrap()),
        0 => {
            // only the environment moves these attributes; any slicer that
            // reads one of them sees the same behaviour
            let attrs = prop.attributes();
            let reader = slicers.iter().position(|s| {
                s.rules.iter().any(|r| {
                    brs.rule(r)
                        .is_some_and(|r| r.reads().iter().any(|a| attrs.contains(a)))
                })
            });
            reader.or(if slicers.is_empty() { None } else { Some(0) }).ok_or_else(|| {
                "no rules to check against".to_owned()
            })
        }
        _ => Err(format!(
            "property spans slicers {}; rerun with --monolithic",
            owners
                .iter()
                .map(|&i| slicers[i].id.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )),
    }
}

/// Slicers holding a part of any of the user rules `rules`, and the rule set
/// they span. Remainder rules share no edges, so only the named ones are
/// taken from it.
pub fn group(brs: &BoundRuleSet, slicers: &[Slicer], rules: &[String]) -> (Vec<usize>, BTreeSet<String>) {
    let parts: BTreeSet<String> = rules
        .iter()
        .flat_map(|r| brs.parts_of(r).map(|p| p.id.clone()))
        .collect();
    let mut ids = Vec::new();
    let mut set = BTreeSet::new();
    for (k, s) in slicers.iter().enumerate() {
        let mine: Vec<&String> = s.rules.iter().filter(|r| parts.contains(*r)).collect();
        if mine.is_empty() {
            continue;
        }
        ids.push(k);
        if s.is_remainder() {
            set.extend(mine.into_iter().cloned());
        } else {
            set.extend(s.rules.iter().cloned());
        }
    }
    (ids, set)
}

/// Where a bound property is checked: a label and the rules to model. Threat
/// properties run on their candidate's group; user properties on their
/// owning slicer.
pub fn scope(
    brs: &BoundRuleSet,
    slicers: &[Slicer],
    prop: &Property,
) -> Result<(String, BTreeSet<String>), String> {
    let crate::checker::Origin::Threat { rules, .. } = &prop.origin else {
        let k = route(brs, slicers, prop)?;
        return Ok((slicers[k].id.clone(), slicers[k].rule_set()));
    };
    let (ids, set) = group(brs, slicers, rules);
    let outside: BTreeSet<&str> = influencers(brs, prop)
        .iter()
        .filter(|r| !set.contains(*r))
        .filter_map(|r| slicers.iter().find(|s| s.contains(r)).map(|s| s.id.as_str()))
        .collect();
    if !outside.is_empty() {
        return Err(format!(
            "property spans slicers {} outside its candidate's; rerun with --monolithic",
            outside.into_iter().collect::<Vec<_>>().join(", ")
        ));
    }
    let label: Vec<&str> = ids.iter().map(|&k| slicers[k].id.as_str()).collect();
    Ok((label.join("+"), set))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub rules: Vec<String>,
    pub vars: Vec<String>,
    pub edges: Vec<DependencyEdge>,
}

/// Slicer members, projected model vars and edge justifications.
pub fn manifest(brs: &BoundRuleSet, slicers: &[Slicer]) -> Result<Vec<ManifestEntry>, FsmError> {
    slicers
        .iter()
        .map(|s| {
            let ts = compile(
                brs,
                &CompileOptions {
                    rules: Some(s.rule_set()),
                    compress: true,
                    ..Default::default()
                },
            )?;
            Ok(ManifestEntry {
                id: s.id.clone(),
                rules: s.rules.clone(),
                vars: ts.names(),
                edges: s.edges.clone(),
            })
        })
        .collect()
}
