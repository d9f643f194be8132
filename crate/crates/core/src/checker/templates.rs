//! Properties that confirm or refute threat candidates.

use super::property::{Origin, PropExpr, Property, PropertyKind, RuleAtom};
use super::suite::CheckResult;
use crate::interaction::{ThreatCandidate, ThreatKind, ThreatStatus};
use crate::ir::{AttrKind, CmpOp, Operand, PredExpr, RuleOrigin, Value};
use crate::loader::BoundRuleSet;

fn exec(brs: &BoundRuleSet, r: &str) -> String {
    brs.exec_rule(r).map_or_else(|| r.to_owned(), |x| x.id.clone())
}

/// Part of `r` that consumes its trigger.
fn first(brs: &BoundRuleSet, r: &str) -> String {
    brs.parts_of(r)
        .find(|p| matches!(p.origin, RuleOrigin::Arm { .. }))
        .map_or_else(|| exec(brs, r), |p| p.id.clone())
}

fn fired(r: String) -> PropExpr {
    PropExpr::Rule(RuleAtom::Fired, r)
}

fn is(attr: &str, v: Value) -> PropExpr {
    PropExpr::Atom {
        attr: attr.to_owned(),
        op: CmpOp::Eq,
        value: Operand::Value(v),
    }
}

/// `fired(r)`, or the state its constant actions leave behind.
fn done(brs: &BoundRuleSet, r: &str) -> PropExpr {
    let effect: Vec<PropExpr> = brs
        .source_rule(r)
        .map(|r| {
            r.actions
                .iter()
                .filter_map(|a| a.const_value().map(|v| is(&a.target, v)))
                .collect()
        })
        .unwrap_or_default();
    if effect.is_empty() {
        fired(exec(brs, r))
    } else {
        PropExpr::Or(vec![fired(exec(brs, r)), PropExpr::And(effect)])
    }
}

fn trigger(brs: &BoundRuleSet, r: &str) -> Option<PredExpr> {
    brs.source_rule(r)?.trigger.predicate().map(|p| p.expr.clone())
}

fn conditions(brs: &BoundRuleSet, r: &str) -> Vec<PropExpr> {
    brs.source_rule(r)
        .map(|r| r.conditions().map(|c| PropExpr::Pred(c.expr.clone())).collect())
        .unwrap_or_default()
}

fn prop(c: &ThreatCandidate, suffix: &str, kind: PropertyKind) -> Property {
    Property {
        id: format!("{}/{suffix}", c.id),
        kind,
        origin: Origin::Threat {
            kind: c.kind,
            candidate: c.id.clone(),
            rules: vec![c.rule_i.clone(), c.rule_j.clone()],
        },
    }
}

/// True when the candidate's property holding means the threat is real.
fn confirmed_by_holding(c: &ThreatCandidate) -> bool {
    c.kind == ThreatKind::T1
        && c.witness
            .channel
            .as_ref()
            .is_some_and(|ch| ch.kind == AttrKind::Tardy)
}

pub fn instantiate_properties(brs: &BoundRuleSet, candidates: &[ThreatCandidate]) -> Vec<Property> {
    let mut out = Vec::new();
    for c in candidates {
        let (i, j) = (c.rule_i.as_str(), c.rule_j.as_str());
        match c.kind {
            ThreatKind::T1 => {
                if confirmed_by_holding(c) {
                    out.push(prop(
                        c,
                        "leadsto",
                        PropertyKind::LeadsTo {
                            p: fired(exec(brs, i)),
                            q: done(brs, j),
                        },
                    ));
                } else {
                    out.push(prop(
                        c,
                        "reach",
                        PropertyKind::Safety {
                            bad: PropExpr::And(vec![
                                PropExpr::Rule(RuleAtom::FiredTick, exec(brs, i)),
                                fired(first(brs, j)),
                            ]),
                        },
                    ));
                }
            }
            ThreatKind::T2 => {}
            ThreatKind::T3 => {
                let (ei, ej) = (exec(brs, i), exec(brs, j));
                let both = |a: &str, b: &str| {
                    PropExpr::And(vec![
                        PropExpr::Rule(RuleAtom::FiredTick, a.to_owned()),
                        fired(b.to_owned()),
                    ])
                };
                out.push(prop(
                    c,
                    "reach",
                    PropertyKind::Safety {
                        bad: PropExpr::Or(vec![both(&ei, &ej), both(&ej, &ei)]),
                    },
                ));
            }
            ThreatKind::T4 => {
                let Some(t_i) = trigger(brs, i) else { continue };
                out.push(prop(
                    c,
                    "reach",
                    PropertyKind::Safety {
                        bad: PropExpr::And(vec![PropExpr::Pred(t_i.clone()), fired(exec(brs, j))]),
                    },
                ));
                if let Some(v) = c.witness.a_i.as_ref().and_then(|a| a.const_value().map(|v| (a, v))) {
                    let mut p = vec![PropExpr::Pred(t_i)];
                    p.extend(conditions(brs, i));
                    out.push(prop(
                        c,
                        "leadsto",
                        PropertyKind::LeadsTo {
                            p: PropExpr::And(p),
                            q: is(&v.0.target, v.1),
                        },
                    ));
                }
            }
            ThreatKind::T5 => {
                let Some(a_i) = &c.witness.a_i else { continue };
                let Some(src) = brs.source_rule(i) else { continue };
                let Some((k, ext)) = src
                    .actions
                    .iter()
                    .enumerate()
                    .find(|(_, a)| a.target == a_i.target && a.extended.is_some())
                    .map(|(k, a)| (k, a.extended.as_ref().unwrap()))
                else {
                    continue;
                };
                let end = format!("{i}/end{k}");
                out.push(prop(
                    c,
                    "leadsto",
                    PropertyKind::LeadsTo {
                        p: fired(exec(brs, i)),
                        q: fired(end),
                    },
                ));
                if let Some(v) = a_i.const_value() {
                    out.push(prop(
                        c,
                        "absence",
                        PropertyKind::BoundedAbsence {
                            p: fired(exec(brs, i)),
                            window: ext.duration,
                            forbidden: PropExpr::not(is(&a_i.target, v)),
                        },
                    ));
                }
            }
            ThreatKind::T6 => {
                let Some(c_i) = &c.witness.c_i else { continue };
                let f = first(brs, i);
                let e = exec(brs, i);
                let start = if f != e {
                    fired(f)
                } else {
                    PropExpr::Rule(RuleAtom::Pending, f)
                };
                out.push(prop(
                    c,
                    "leadsto",
                    PropertyKind::LeadsTo {
                        p: PropExpr::And(vec![start, PropExpr::Pred(c_i.expr.clone())]),
                        q: fired(e),
                    },
                ));
            }
            ThreatKind::T7 => {
                let Some(d) = &c.witness.parent else { continue };
                let Some(power) = brs.power_attr(d) else { continue };
                let Some(off) = brs.attributes[power].domain.off_value() else { continue };
                let policy = brs
                    .source_rule(j)
                    .map(|r| brs.devices_used(r))
                    .unwrap_or_default()
                    .iter()
                    .flat_map(|dev| brs.ancestors(dev))
                    .find(|(p, _)| p == d)
                    .map(|(_, pol)| pol);
                let bad = match policy {
                    Some(crate::interaction::OfflinePolicy::DisableRules) => PropExpr::And(vec![
                        is(power, off),
                        PropExpr::Rule(RuleAtom::Pending, first(brs, j)),
                    ]),
                    _ => is(power, off),
                };
                out.push(prop(c, "reach", PropertyKind::Safety { bad }));
            }
        }
    }
    out
}

/// Sets candidate statuses from the verdicts of their properties. A
/// violation decides a candidate even when a sibling property was rejected;
/// otherwise any rejection leaves it syntactic.
pub fn apply_verdicts(candidates: &mut [ThreatCandidate], results: &[CheckResult]) {
    for c in candidates.iter_mut() {
        let mine: Vec<&CheckResult> = results
            .iter()
            .filter(|r| matches!(&r.origin, Origin::Threat { candidate, .. } if *candidate == c.id))
            .collect();
        let violated = mine.iter().find(|r| r.verdict.is_violated());
        let holding = confirmed_by_holding(c);
        c.status = match violated {
            Some(r) if holding => ThreatStatus::Refuted(r.property.clone()),
            Some(r) => ThreatStatus::Confirmed(r.property.clone()),
            None if mine.is_empty() || mine.iter().any(|r| r.verdict.is_rejected()) => continue,
            None if holding => ThreatStatus::Confirmed(mine[0].property.clone()),
            None => ThreatStatus::Refuted(mine[0].property.clone()),
        };
    }
}
