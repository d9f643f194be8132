use std::collections::BTreeSet;

use super::{DependencyEdge, ExprEdge, Via};
use crate::ir::{AssignValue, Rule, Trigger};
use crate::loader::BoundRuleSet;

/// Predicates of a rule with their display text (trigger first).
fn predicates(r: &Rule) -> Vec<(String, BTreeSet<String>)> {
    let mut out = Vec::new();
    if let Trigger::Pred(p) = &r.trigger {
        out.push((p.to_string(), p.attributes().map(str::to_owned).collect()));
    }
    for c in r.conditions() {
        out.push((c.to_string(), c.attributes().map(str::to_owned).collect()));
    }
    out
}

/// Channel attributes a rule's writes move.
fn channel_writes(brs: &BoundRuleSet, r: &Rule) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for a in r.actions.iter() {
        for ch in &brs.channels {
            if ch.affects.iter().any(|af| af.matches(&a.target, a.const_value())) {
                out.insert(ch.attribute.clone());
            }
        }
    }
    out
}

/// Power attributes of devices above `r`'s devices, with the parent device.
fn connection_reads(brs: &BoundRuleSet, r: &Rule) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for dev in brs.devices_used(r) {
        for (p, _) in brs.ancestors(&dev) {
            if let Some(pa) = brs.power_attr(&p) {
                out.push((pa.to_owned(), p));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn writes_attr(brs: &BoundRuleSet, r: &Rule, attr: &str) -> bool {
    r.writes().contains(attr) || channel_writes(brs, r).contains(attr)
}

/// Stage one: every (attribute, predicate) pair where the predicate reads an
/// attribute that some rule can change, directly or through a channel.
pub fn build_expression_deps(brs: &BoundRuleSet) -> BTreeSet<ExprEdge> {
    let mut writable: BTreeSet<String> = BTreeSet::new();
    for r in &brs.rules {
        writable.extend(r.writes());
        writable.extend(channel_writes(brs, r));
    }
    let mut out = BTreeSet::new();
    for r in &brs.rules {
        for (text, attrs) in predicates(r) {
            for a in attrs.intersection(&writable) {
                out.insert(ExprEdge {
                    attribute: a.clone(),
                    predicate: text.clone(),
                    owner: r.id.clone(),
                });
            }
        }
    }
    out
}

/// Stage two: rule edges from writers of each expression edge's attribute to
/// the predicate's owner, plus sub-rule links and connection edges.
pub fn build_rule_deps(brs: &BoundRuleSet, ee: &BTreeSet<ExprEdge>) -> BTreeSet<DependencyEdge> {
    let mut out = BTreeSet::new();
    for e in ee {
        for rs in &brs.rules {
            if rs.writes().contains(&e.attribute) && rs.id != e.owner {
                out.insert(DependencyEdge {
                    source: rs.id.clone(),
                    sink: e.owner.clone(),
                    via: Via::Direct,
                    justification: format!("writes {} read by `{}`", e.attribute, e.predicate),
                });
            }
            if channel_writes(brs, rs).contains(&e.attribute) {
                out.insert(DependencyEdge {
                    source: rs.id.clone(),
                    sink: e.owner.clone(),
                    via: Via::Channel(e.attribute.clone()),
                    justification: format!("moves {} read by `{}`", e.attribute, e.predicate),
                });
            }
        }
    }
    for (a, b) in &brs.links {
        out.insert(DependencyEdge {
            source: a.clone(),
            sink: b.clone(),
            via: Via::Direct,
            justification: "sub-rule link".to_owned(),
        });
    }
    for r in &brs.rules {
        for (power, parent) in connection_reads(brs, r) {
            for rs in &brs.rules {
                if rs.id != r.id && writes_attr(brs, rs, &power) {
                    out.insert(DependencyEdge {
                        source: rs.id.clone(),
                        sink: r.id.clone(),
                        via: Via::Connection(parent.clone()),
                        justification: format!("writes {power}, which powers a device `{}` uses", r.id),
                    });
                }
            }
        }
    }
    out
}

/// Attribute writes of a rule including extended terminals with constant
/// values; restoring terminals are reported with `None`.
pub(crate) fn all_writes(r: &Rule) -> Vec<(String, Option<i32>)> {
    let mut out = Vec::new();
    for a in &r.actions {
        out.push((a.target.clone(), a.const_value()));
        if let Some(ext) = &a.extended {
            let v = match &ext.terminal.value {
                AssignValue::Restore => None,
                _ => ext.terminal.const_value(),
            };
            out.push((ext.terminal.target.clone(), v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loader::{bind, builtin_catalog, parse_rules, Deployment};

    fn home(rules: &str) -> BoundRuleSet {
        let dep = Deployment::parse(
            r#"{"devices": {"heater": ["switch"], "window": ["windowShade"], "light": ["switch"],
                            "motion": ["motionSensor"], "presence": ["presenceSensor"],
                            "temp": ["temperatureMeasurement"], "outlet": ["switch"], "hub": ["switch"]},
                "connections": [{"parent": "outlet", "children": ["hub"]},
                                {"parent": "hub", "children": ["temp"]}],
                "channels": [{"attribute": "temp",
                              "affects": [{"action": "heater := on", "direction": "raise"},
                                          {"action": "window := open", "direction": "lower"}]}]}"#,
        )
        .unwrap();
        bind(&parse_rules(rules).unwrap(), &dep, &builtin_catalog()).unwrap()
    }

    const THREE: &str = "rule on: when presence = present then heater := on\n\
                         rule win: when temp > 28 then window := open\n\
                         rule off: when temp > 20 then heater := off";

    #[test]
    fn heater_window_expression_edges() {
        let b = home(THREE);
        let ee: Vec<(String, String)> = build_expression_deps(&b)
            .into_iter()
            .map(|e| (e.attribute, e.predicate))
            .collect();
        assert_eq!(
            ee,
            [
                ("temp.temperature".to_owned(), "temp.temperature > 20".to_owned()),
                ("temp.temperature".to_owned(), "temp.temperature > 28".to_owned()),
            ]
        );
    }

    #[test]
    fn heater_to_window_via_channel() {
        let b = home(THREE);
        let er = build_rule_deps(&b, &build_expression_deps(&b));
        assert!(er.iter().any(|e| e.source == "on"
            && e.sink == "win"
            && e.via == Via::Channel("temp.temperature".into())));
        // the window lowers temperature, which the heater-off rule reads
        assert!(er.iter().any(|e| e.source == "win" && e.sink == "off"));
        for e in &er {
            assert!(!e.justification.is_empty());
        }
    }

    #[test]
    fn disjoint_rules_have_no_edges() {
        let b = home("rule a: when motion = active then light := on\n\
                      rule b: when presence = present then heater := on");
        let ee = build_expression_deps(&b);
        assert!(ee.is_empty());
        assert!(build_rule_deps(&b, &ee).is_empty());
    }

    #[test]
    fn timer_split_link() {
        let b = home("rule a: when motion = active then light := on after 3");
        let er = build_rule_deps(&b, &build_expression_deps(&b));
        let e: Vec<_> = er.iter().map(|e| (e.source.as_str(), e.sink.as_str(), &e.via)).collect();
        assert_eq!(e, [("a/arm", "a/timeout", &Via::Direct)]);
    }

    #[test]
    fn power_off_reaches_child_users() {
        let b = home("rule r5: when temp > 25 then outlet := off\n\
                      rule r4: when temp > 29 then heater := off");
        let er = build_rule_deps(&b, &build_expression_deps(&b));
        assert!(er
            .iter()
            .any(|e| e.source == "r5" && e.sink == "r4" && e.via == Via::Connection("outlet".into())));
    }
}
