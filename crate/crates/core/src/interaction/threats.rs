use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::deps::all_writes;
use super::Direction;
use crate::ir::{
    conflicting, sibling_conditions, sibling_rules, AttrKind, Assignment, IrError, Operand,
    PredExpr, Predicate, Rule, Scope, ValuationSpace, Value,
};
use crate::loader::BoundRuleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThreatKind {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
}

impl ThreatKind {
    pub const ALL: [ThreatKind; 7] = [
        ThreatKind::T1,
        ThreatKind::T2,
        ThreatKind::T3,
        ThreatKind::T4,
        ThreatKind::T5,
        ThreatKind::T6,
        ThreatKind::T7,
    ];

    /// Kinds whose formula does not distinguish the two rules.
    pub fn symmetric(self) -> bool {
        matches!(self, ThreatKind::T2 | ThreatKind::T3 | ThreatKind::T4)
    }

    pub fn describe(self) -> &'static str {
        match self {
            ThreatKind::T1 => "can activate",
            ThreatKind::T2 => "duplicates the action of",
            ThreatKind::T3 => "races with",
            ThreatKind::T4 => "is overridden by",
            ThreatKind::T5 => "has its action in progress broken by",
            ThreatKind::T6 => "has its condition blocked by",
            ThreatKind::T7 => "disables the execution of",
        }
    }
}

impl fmt::Display for ThreatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelWitness {
    pub attribute: String,
    pub kind: AttrKind,
    pub latency: u32,
    pub direction: Direction,
}

/// The rule elements a candidate was matched on.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_i: Option<Assignment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_j: Option<Assignment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_i: Option<Predicate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_j: Option<Predicate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelWitness>,
    /// Device switched off (T7, and T5 power-off stops).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "property", rename_all = "lowercase")]
pub enum ThreatStatus {
    Syntactic,
    Confirmed(String),
    Refuted(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreatCandidate {
    pub id: String,
    pub kind: ThreatKind,
    pub rule_i: String,
    pub rule_j: String,
    pub witness: Witness,
    pub status: ThreatStatus,
}

impl ThreatCandidate {
    fn new(kind: ThreatKind, i: &str, j: &str, witness: Witness) -> Self {
        ThreatCandidate {
            id: format!("{kind}:{i}:{j}"),
            kind,
            rule_i: i.to_owned(),
            rule_j: j.to_owned(),
            witness,
            status: ThreatStatus::Syntactic,
        }
    }
}

fn conditions(r: &Rule) -> Vec<Predicate> {
    r.conditions().cloned().collect()
}

fn trigger(r: &Rule) -> Option<&Predicate> {
    r.trigger.predicate()
}

/// Some valuation with `attr = value` satisfies `pred`.
pub fn can_satisfy(
    pred: &Predicate,
    attr: &str,
    value: Value,
    scope: &dyn Scope,
) -> Result<bool, IrError> {
    let extra = BTreeMap::from([(attr.to_owned(), [value].into())]);
    let space = ValuationSpace::new(&[pred], &extra, scope)?;
    Ok(space.any(|look| {
        let pinned = |n: &str| if n == attr { Some(value) } else { look(n) };
        pred.eval(&pinned) == Some(true)
    }))
}

/// Moving `attr` in `dir` can make `pred` go from false to true.
pub fn can_reach(
    pred: &Predicate,
    attr: &str,
    dir: Direction,
    scope: &dyn Scope,
) -> Result<bool, IrError> {
    let (up, down) = match dir {
        Direction::Set(v) => return can_satisfy(pred, attr, v, scope),
        Direction::Raise => (true, false),
        Direction::Lower => (false, true),
    };
    let space = ValuationSpace::new(&[pred], &BTreeMap::new(), scope)?;
    let Some(vals) = space.values_of(attr) else {
        return Ok(false);
    };
    let vals = vals.to_vec();
    Ok(space.any(|look| {
        let truth: Vec<bool> = vals
            .iter()
            .map(|&x| pred.eval(&|n: &str| if n == attr { Some(x) } else { look(n) }) == Some(true))
            .collect();
        (0..truth.len()).any(|a| {
            (a + 1..truth.len()).any(|b| {
                (up && !truth[a] && truth[b]) || (down && truth[a] && !truth[b])
            })
        })
    }))
}

fn negate(p: &Predicate) -> Predicate {
    Predicate::state(PredExpr::Not(Box::new(p.expr.clone())))
}

/// How writing `value` to `target` can make `pred` true: directly, or
/// through a channel the write affects.
fn activation(
    brs: &BoundRuleSet,
    target: &str,
    value: Value,
    pred: &Predicate,
) -> Result<Option<Option<ChannelWitness>>, IrError> {
    let reads: Vec<&str> = pred.attributes().collect();
    if reads.contains(&target) && can_satisfy(pred, target, value, brs)? {
        return Ok(Some(None));
    }
    for ch in &brs.channels {
        if !reads.contains(&ch.attribute.as_str()) {
            continue;
        }
        for af in &ch.affects {
            if af.matches(target, Some(value)) && can_reach(pred, &ch.attribute, af.direction, brs)? {
                return Ok(Some(Some(ChannelWitness {
                    attribute: ch.attribute.clone(),
                    kind: ch.kind,
                    latency: ch.latency,
                    direction: af.direction,
                })));
            }
        }
    }
    Ok(None)
}

fn written(target: &str, v: Option<Value>) -> Assignment {
    match v {
        Some(v) => Assignment::new(target, Operand::Value(v)),
        None => Assignment {
            target: target.to_owned(),
            value: crate::ir::AssignValue::Restore,
            extended: None,
        },
    }
}

/// Devices at or below `device` in the connection forest.
fn below(brs: &BoundRuleSet, device: &str) -> Vec<String> {
    brs.devices
        .keys()
        .filter(|d| brs.ancestors(d).iter().any(|(p, _)| p == device))
        .cloned()
        .collect()
}

/// Syntactic T1–T7 matching over every ordered pair of user rules.
pub fn detect_threats(brs: &BoundRuleSet) -> Result<Vec<ThreatCandidate>, IrError> {
    let rules = &brs.source;
    let mut out = Vec::new();
    let mut cond_sib = BTreeMap::new();
    for ri in rules {
        for rj in rules {
            if ri.id == rj.id {
                continue;
            }
            let key = if ri.id < rj.id {
                (ri.id.clone(), rj.id.clone())
            } else {
                (rj.id.clone(), ri.id.clone())
            };
            let sib_c = match cond_sib.get(&key) {
                Some(v) => *v,
                None => {
                    let v = sibling_conditions(&conditions(ri), &conditions(rj), brs)?;
                    cond_sib.insert(key, v);
                    v
                }
            };
            pair(brs, ri, rj, sib_c, &mut out)?;
        }
    }
    out.sort_by(|a, b| (a.kind, &a.rule_i, &a.rule_j).cmp(&(b.kind, &b.rule_i, &b.rule_j)));
    out.dedup_by(|a, b| a.id == b.id);
    Ok(out)
}

fn pair(
    brs: &BoundRuleSet,
    ri: &Rule,
    rj: &Rule,
    sib_c: bool,
    out: &mut Vec<ThreatCandidate>,
) -> Result<(), IrError> {
    let (i, j) = (ri.id.as_str(), rj.id.as_str());

    // T1
    if sib_c {
        if let Some(tj) = trigger(rj) {
            'found: for (target, v) in all_writes(ri) {
                let Some(v) = v else { continue };
                if let Some(channel) = activation(brs, &target, v, tj)? {
                    out.push(ThreatCandidate::new(
                        ThreatKind::T1,
                        i,
                        j,
                        Witness {
                            a_i: Some(written(&target, Some(v))),
                            t_j: Some(tj.clone()),
                            channel,
                            ..Witness::default()
                        },
                    ));
                    break 'found;
                }
            }
        }
    }

    // T2, T3: same trigger; oriented by id so each unordered pair is seen once
    if i < j && sibling_rules(ri, rj, brs)? {
        if let Some((ai, aj)) = first_pair(ri, rj, |a, b| a.target == b.target && a.value == b.value) {
            out.push(ThreatCandidate::new(
                ThreatKind::T2,
                i,
                j,
                Witness {
                    a_i: Some(ai),
                    a_j: Some(aj),
                    ..Witness::default()
                },
            ));
        }
        if ri.latency == rj.latency {
            if let Some((ai, aj)) = first_pair(ri, rj, conflicting) {
                out.push(ThreatCandidate::new(
                    ThreatKind::T3,
                    i,
                    j,
                    Witness {
                        a_i: Some(ai),
                        a_j: Some(aj),
                        ..Witness::default()
                    },
                ));
            }
        }
    }

    // T4: i executes first, j later overrides it
    let earlier = ri.latency < rj.latency;
    if sib_c && earlier {
        if let Some((ai, aj)) = first_pair(ri, rj, conflicting) {
            out.push(ThreatCandidate::new(
                ThreatKind::T4,
                i,
                j,
                Witness {
                    a_i: Some(ai),
                    a_j: Some(aj),
                    t_j: None,
                    ..Witness::default()
                },
            ));
        }
    }

    // T5
    't5: for ai in &ri.actions {
        if ai.extended.is_none() {
            continue;
        }
        let Some(progress) = ai.const_value() else { continue };
        let device = brs.device_of(&ai.target).map(str::to_owned);
        let mut powers: Vec<(String, String)> = Vec::new();
        if let Some(d) = &device {
            let mut chain = vec![d.clone()];
            chain.extend(brs.ancestors(d).into_iter().map(|(p, _)| p));
            for dev in chain {
                if let Some(p) = brs.power_attr(&dev) {
                    if p != ai.target {
                        powers.push((p.to_owned(), dev));
                    }
                }
            }
        }
        for (target, v) in all_writes(rj) {
            let stop = target == ai.target && v != Some(progress);
            let power = powers.iter().find(|(p, _)| {
                *p == target && v.is_some() && v == brs.attributes[p].domain.off_value()
            });
            if stop || power.is_some() {
                out.push(ThreatCandidate::new(
                    ThreatKind::T5,
                    i,
                    j,
                    Witness {
                        a_i: Some(ai.clone()),
                        a_j: Some(written(&target, v)),
                        parent: power.map(|(_, d)| d.clone()),
                        ..Witness::default()
                    },
                ));
                break 't5;
            }
        }
    }

    // T6
    't6: for c in &ri.action_conditions {
        let not_c = negate(c);
        for (target, v) in all_writes(rj) {
            let Some(v) = v else { continue };
            if let Some(channel) = activation(brs, &target, v, &not_c)? {
                out.push(ThreatCandidate::new(
                    ThreatKind::T6,
                    i,
                    j,
                    Witness {
                        a_j: Some(written(&target, Some(v))),
                        c_i: Some(c.clone()),
                        channel,
                        ..Witness::default()
                    },
                ));
                break 't6;
            }
        }
    }

    // T7
    let used = brs.devices_used(rj);
    't7: for (target, v) in all_writes(ri) {
        let Some(d) = brs.device_of(&target) else { continue };
        if brs.power_attr(d) != Some(target.as_str()) {
            continue;
        }
        if v.is_none() || v != brs.attributes[&target].domain.off_value() {
            continue;
        }
        let children = below(brs, d);
        if children.iter().any(|c| used.contains(c)) {
            out.push(ThreatCandidate::new(
                ThreatKind::T7,
                i,
                j,
                Witness {
                    a_i: Some(written(&target, v)),
                    parent: Some(d.to_owned()),
                    ..Witness::default()
                },
            ));
            break 't7;
        }
    }
    Ok(())
}

fn first_pair(
    ri: &Rule,
    rj: &Rule,
    rel: impl Fn(&Assignment, &Assignment) -> bool,
) -> Option<(Assignment, Assignment)> {
    for a in &ri.actions {
        for b in &rj.actions {
            if rel(&a.plain(), &b.plain()) {
                return Some((a.clone(), b.clone()));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loader::{bind, builtin_catalog, parse_rules, Deployment};

    fn bound(rules: &str) -> BoundRuleSet {
        let dep = Deployment::parse(
            r#"{"devices": {"light": ["switch"], "motion": ["motionSensor"], "fan": ["switch"],
                            "co2": ["carbonDioxideMeasurement"], "button": ["contactSensor"]},
                "cyber": [{"name": "time", "type": "int", "range": [0, 1439]}]}"#,
        )
        .unwrap();
        bind(&parse_rules(rules).unwrap(), &dep, &builtin_catalog()).unwrap()
    }

    fn kinds(c: &[ThreatCandidate]) -> Vec<(ThreatKind, &str, &str)> {
        c.iter().map(|c| (c.kind, c.rule_i.as_str(), c.rule_j.as_str())).collect()
    }

    #[test]
    fn motion_light_latency_pair_is_t4() {
        let b = bound("rule on: when motion = active then light := on\n\
                       rule off: when motion = active then light := off after 1m");
        let c = detect_threats(&b).unwrap();
        assert_eq!(kinds(&c), [(ThreatKind::T4, "on", "off")]);
    }

    #[test]
    fn fan_rules_break_each_other() {
        let b = bound("rule f1: when co2 > 1000 then fan := on for 15m\n\
                       rule f2: when time = 12pm then fan := on for 15m");
        let c = detect_threats(&b).unwrap();
        assert_eq!(kinds(&c), [(ThreatKind::T5, "f1", "f2"), (ThreatKind::T5, "f2", "f1")]);
        assert_eq!(c[0].witness.a_j.as_ref().unwrap().value, crate::ir::AssignValue::Restore);
    }

    #[test]
    fn single_rule_has_no_candidates() {
        let b = bound("rule a: when motion = active then light := on");
        assert!(detect_threats(&b).unwrap().is_empty());
    }

    #[test]
    fn same_trigger_same_action_is_t2() {
        let b = bound("rule a: when motion = active then light := on\n\
                       rule b: when motion = active then light := on");
        assert_eq!(kinds(&detect_threats(&b).unwrap()), [(ThreatKind::T2, "a", "b")]);
    }

    #[test]
    fn same_trigger_conflict_is_t3() {
        let b = bound("rule a: when motion = active then light := on\n\
                       rule b: when motion = active then light := off");
        assert_eq!(kinds(&detect_threats(&b).unwrap()), [(ThreatKind::T3, "a", "b")]);
    }

    #[test]
    fn direct_activation_and_blocking() {
        let b = bound("rule a: when button = open then light := on\n\
                       rule b: when light = on then fan := on\n\
                       rule c: when motion = active if light = off then fan := off");
        let c = detect_threats(&b).unwrap();
        let k = kinds(&c);
        assert!(k.contains(&(ThreatKind::T1, "a", "b")));
        assert!(k.contains(&(ThreatKind::T6, "c", "a")));
        // b's trigger is a light = on edge; c writes nothing it reads
        assert!(!k.iter().any(|x| x.0 == ThreatKind::T1 && x.1 == "c"));
    }

    #[test]
    fn exclusive_conditions_suppress_t4() {
        let b = bound("rule a: when motion = active if time >= 8pm then light := on\n\
                       rule b: when motion = active if time < 6am then light := off after 2");
        assert!(detect_threats(&b).unwrap().is_empty());
    }
}
