use serde::{Deserialize, Serialize};

use super::{AssignValue, IrError, Rule, RuleOrigin, TimerArm, TimerRole, TimerVar, Trigger};

/// Output of [`normalize_latency`]: the sub-rules, the timers they share, and
/// the cyber-connection links between sub-rules (arming rule → timeout rule).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Normalized {
    pub rules: Vec<Rule>,
    pub timers: Vec<TimerVar>,
    pub links: Vec<(String, String)>,
}

pub fn t2a_timer(rule: &str) -> String {
    format!("tau.{rule}")
}

pub fn extended_timer(rule: &str, index: usize) -> String {
    format!("tau_e.{rule}.{index}")
}

/// Splits trigger-to-action latency and extended actions into timer
/// sub-rules. A rule with latency `l > 0` becomes an arming rule
/// `(t, C_t) → τ := l` and a timeout rule `(τ = 0) → (C_a, A)`; each extended
/// action `a^e` for `l^e` steps additionally arms `τ^e := l^e` alongside `a^e`
/// and gets an end rule `(τ^e = 0) → a^e'`.
pub fn normalize_latency(rule: &Rule) -> Result<Normalized, IrError> {
    for a in &rule.actions {
        if let Some(ext) = &a.extended {
            if ext.duration == 0 {
                return Err(IrError::ZeroDuration {
                    rule: rule.id.clone(),
                    target: a.target.clone(),
                });
            }
            if ext.terminal.target != a.target {
                return Err(IrError::TerminalTarget {
                    rule: rule.id.clone(),
                    target: a.target.clone(),
                    terminal: ext.terminal.target.clone(),
                });
            }
        }
    }
    if rule.latency == 0 && !rule.has_extended() {
        return Ok(Normalized {
            rules: vec![rule.clone()],
            ..Normalized::default()
        });
    }

    let parent = rule.origin.parent(&rule.id).to_owned();
    let mut out = Normalized::default();
    let exec_id = if rule.latency > 0 {
        format!("{}/timeout", rule.id)
    } else {
        rule.id.clone()
    };

    let mut exec = Rule {
        id: exec_id.clone(),
        trigger: rule.trigger.clone(),
        trigger_conditions: rule.trigger_conditions.clone(),
        action_conditions: rule.action_conditions.clone(),
        latency: 0,
        actions: rule.actions.iter().map(|a| a.plain()).collect(),
        arms: rule.arms.clone(),
        origin: rule.origin.clone(),
        span: rule.span,
    };

    if rule.latency > 0 {
        let timer = t2a_timer(&rule.id);
        let arm_id = format!("{}/arm", rule.id);
        out.rules.push(Rule {
            id: arm_id.clone(),
            trigger: rule.trigger.clone(),
            trigger_conditions: rule.trigger_conditions.clone(),
            action_conditions: Vec::new(),
            latency: 0,
            actions: Vec::new(),
            arms: vec![TimerArm {
                timer: timer.clone(),
                steps: rule.latency,
            }],
            origin: RuleOrigin::Arm {
                parent: parent.clone(),
            },
            span: rule.span,
        });
        out.timers.push(TimerVar {
            id: timer.clone(),
            owner: arm_id.clone(),
            timeout: rule.latency,
            role: TimerRole::T2A,
            saves: None,
        });
        out.links.push((arm_id, exec_id.clone()));
        exec.trigger = Trigger::Timeout(timer);
        exec.trigger_conditions = Vec::new();
        exec.origin = RuleOrigin::Timeout {
            parent: parent.clone(),
        };
    }

    let mut ends = Vec::new();
    for (k, a) in rule.actions.iter().enumerate() {
        let Some(ext) = &a.extended else { continue };
        let timer = extended_timer(&rule.id, k);
        let end_id = format!("{}/end{k}", rule.id);
        exec.arms.push(TimerArm {
            timer: timer.clone(),
            steps: ext.duration,
        });
        let saves = matches!(ext.terminal.value, AssignValue::Restore).then(|| a.target.clone());
        out.timers.push(TimerVar {
            id: timer.clone(),
            owner: exec_id.clone(),
            timeout: ext.duration,
            role: TimerRole::Extended,
            saves,
        });
        out.links.push((exec_id.clone(), end_id.clone()));
        ends.push(Rule {
            id: end_id,
            trigger: Trigger::Timeout(timer),
            trigger_conditions: Vec::new(),
            action_conditions: Vec::new(),
            latency: 0,
            actions: vec![ext.terminal.plain()],
            arms: Vec::new(),
            origin: RuleOrigin::ExtendedEnd {
                parent: parent.clone(),
                index: k,
            },
            span: rule.span,
        });
    }
    out.rules.push(exec);
    out.rules.extend(ends);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::ir::{Assignment, CmpOp, Operand, Predicate};

    fn on() -> Operand {
        Operand::Value(1)
    }

    fn off() -> Operand {
        Operand::Value(0)
    }

    #[test]
    fn zero_latency_is_identity() {
        let r = Rule::new(
            "r",
            Predicate::atom("motion", CmpOp::Eq, 1),
            vec![Assignment::new("light", on())],
        );
        let n = normalize_latency(&r).unwrap();
        assert_eq!(n.rules, vec![r]);
        assert!(n.timers.is_empty() && n.links.is_empty());
    }

    #[test]
    fn t2a_latency_splits_into_arm_and_timeout() {
        // when user leaves, after 10 minutes turn the curling iron off
        let mut r = Rule::new(
            "iron",
            Predicate::atom("presence", CmpOp::Eq, 1),
            vec![Assignment::new("iron", off())],
        );
        r.latency = 10;
        let n = normalize_latency(&r).unwrap();
        assert_eq!(n.rules.len(), 2);
        let arm = &n.rules[0];
        let timeout = &n.rules[1];
        assert_eq!(arm.id, "iron/arm");
        assert!(arm.actions.is_empty());
        assert_eq!(arm.arms, vec![TimerArm { timer: "tau.iron".into(), steps: 10 }]);
        assert_eq!(timeout.trigger, Trigger::Timeout("tau.iron".into()));
        assert_eq!(timeout.actions, vec![Assignment::new("iron", off())]);
        assert_eq!(n.links, vec![("iron/arm".into(), "iron/timeout".into())]);
        assert_eq!(n.timers[0].timeout, 10);
    }

    #[test]
    fn extended_action_gets_end_rule() {
        // turn on fan for 15 minutes
        let r = Rule::new(
            "fan",
            Predicate::atom("co2", CmpOp::Gt, 1000),
            vec![Assignment::new("fan", on()).with_extended(15, Some(Assignment::new("fan", off())))],
        );
        let n = normalize_latency(&r).unwrap();
        assert_eq!(n.rules.len(), 2);
        assert_eq!(n.rules[0].actions, vec![Assignment::new("fan", on())]);
        assert_eq!(n.rules[0].arms[0].steps, 15);
        assert_eq!(n.rules[1].actions, vec![Assignment::new("fan", off())]);
        assert_eq!(n.rules[1].trigger, Trigger::Timeout("tau_e.fan.0".into()));
        assert_eq!(n.timers[0].saves, None);
    }

    #[test]
    fn default_terminal_restores() {
        let r = Rule::new(
            "fan",
            Predicate::atom("co2", CmpOp::Gt, 1000),
            vec![Assignment::new("fan", on()).with_extended(5, None)],
        );
        let n = normalize_latency(&r).unwrap();
        assert_eq!(n.rules[1].actions[0].value, AssignValue::Restore);
        assert_eq!(n.timers[0].saves.as_deref(), Some("fan"));
    }

    #[test]
    fn zero_duration_is_malformed() {
        let r = Rule::new(
            "bad",
            Predicate::atom("x", CmpOp::Eq, 1),
            vec![Assignment::new("fan", on()).with_extended(0, None)],
        );
        assert!(matches!(normalize_latency(&r), Err(IrError::ZeroDuration { .. })));
    }

    #[test]
    fn latency_and_extended_yield_three_rules_and_is_idempotent() {
        let mut r = Rule::new(
            "both",
            Predicate::atom("x", CmpOp::Eq, 1),
            vec![Assignment::new("fan", on()).with_extended(3, None)],
        );
        r.latency = 2;
        let n = normalize_latency(&r).unwrap();
        let ids: Vec<_> = n.rules.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["both/arm", "both/timeout", "both/end0"]);
        for sub in &n.rules {
            assert_eq!(normalize_latency(sub).unwrap().rules, vec![sub.clone()]);
        }
        // footprint: input attributes plus exactly the created timers
        let mut attrs_in: BTreeSet<String> = r.reads();
        attrs_in.extend(r.writes());
        let mut attrs_out = BTreeSet::new();
        let mut timers_out = BTreeSet::new();
        for sub in &n.rules {
            attrs_out.extend(sub.reads());
            attrs_out.extend(sub.writes());
            timers_out.extend(sub.timers());
        }
        assert_eq!(attrs_in, attrs_out);
        let created: BTreeSet<String> = n.timers.iter().map(|t| t.id.clone()).collect();
        assert_eq!(timers_out, created);
    }
}
