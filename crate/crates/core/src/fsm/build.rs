use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::compress;
use super::expr::{Expr, VarId, TRUE};
use super::system::{Command, CommandTag, ShadowLatch, StateVar, TransitionSystem, VarRole};
use crate::interaction::{Direction, OfflinePolicy};
use crate::ir::{AssignValue, AttrKind, CmpOp, Domain, Operand, PredExpr, Rule, Trigger, Value};
use crate::loader::BoundRuleSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FsmError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("unbound literal `{0}` in rule `{1}`")]
    Unbound(String, String),
}

#[derive(Debug, Clone, Default)]
pub struct CompileOptions {
    /// Normalized rule ids to model; all rules when `None`.
    pub rules: Option<BTreeSet<String>>,
    /// Attributes to include even if no modelled rule touches them.
    pub extra_attributes: BTreeSet<String>,
    /// Additional region cuts per var name (property constants).
    pub extra_cuts: BTreeMap<String, BTreeSet<Value>>,
    pub compress: bool,
}

/// Builds the transition system for `brs` (or the selected rules of it).
pub fn compile(brs: &BoundRuleSet, opts: &CompileOptions) -> Result<TransitionSystem, FsmError> {
    if let Some(sel) = &opts.rules {
        for id in sel {
            if brs.rule(id).is_none() {
                return Err(FsmError::UnknownRule(id.clone()));
            }
        }
    }
    for a in &opts.extra_attributes {
        if !brs.attributes.contains_key(a) {
            return Err(FsmError::UnknownAttribute(a.clone()));
        }
    }
    let rules: Vec<&Rule> = brs
        .rules
        .iter()
        .filter(|r| opts.rules.as_ref().is_none_or(|s| s.contains(&r.id)))
        .collect();
    let mut b = Builder {
        brs,
        rules,
        vars: Vec::new(),
        init: Vec::new(),
        by_name: BTreeMap::new(),
        commands: Vec::new(),
        shadows: Vec::new(),
        pending: BTreeMap::new(),
    };
    b.declare(&opts.extra_attributes);
    b.rule_commands()?;
    b.env_commands();
    b.timer_commands();
    b.channels();
    b.connections();

    let mut ts = TransitionSystem::new(b.vars, b.init);
    ts.commands = b.commands;
    ts.shadows = b.shadows;
    ts.pending = b.pending;
    ts.rules = b.rules.iter().map(|r| r.id.clone()).collect();
    ts.reindex();
    if opts.compress {
        Ok(compress::compress(&ts, &opts.extra_cuts))
    } else {
        compress::set_grids(&mut ts, &opts.extra_cuts);
        Ok(ts)
    }
}

pub fn shadow_name(rule: &str) -> String {
    format!("phi.{rule}")
}

pub fn saved_name(timer: &str) -> String {
    format!("saved.{timer}")
}

pub fn param_name(param: &str) -> String {
    format!("param.{param}")
}

pub fn lag_name(attr: &str) -> String {
    format!("lag.{attr}")
}

/// Attributes the model needs for `rules`: everything they read or write,
/// what channels on those attributes depend on, and the power attributes of
/// every device above one in use.
pub fn select_attributes(
    brs: &BoundRuleSet,
    rules: &[&Rule],
    extra: &BTreeSet<String>,
) -> BTreeSet<String> {
    let mut s: BTreeSet<String> = extra.clone();
    for r in rules {
        s.extend(r.reads());
        s.extend(r.writes());
    }
    loop {
        let before = s.len();
        for ch in &brs.channels {
            if s.contains(&ch.attribute) {
                s.extend(ch.affects.iter().map(|af| af.pattern.target.clone()));
            }
        }
        for a in s.clone() {
            if let Some(dev) = brs.device_of(&a) {
                for (p, _) in brs.ancestors(dev) {
                    if let Some(pa) = brs.power_attr(&p) {
                        s.insert(pa.to_owned());
                    }
                }
            }
        }
        if s.len() == before {
            return s;
        }
    }
}

struct Builder<'a> {
    brs: &'a BoundRuleSet,
    rules: Vec<&'a Rule>,
    vars: Vec<StateVar>,
    init: Vec<Vec<Value>>,
    by_name: BTreeMap<String, VarId>,
    commands: Vec<Command>,
    shadows: Vec<ShadowLatch>,
    pending: BTreeMap<String, Expr>,
}

impl Builder<'_> {
    fn push(&mut self, var: StateVar, init: Vec<Value>) -> VarId {
        let id = self.vars.len();
        self.by_name.insert(var.name.clone(), id);
        self.vars.push(var);
        self.init.push(init);
        id
    }

    fn v(&self, name: &str) -> VarId {
        self.by_name[name]
    }

    fn declare(&mut self, extra: &BTreeSet<String>) {
        let brs = self.brs;
        for a in select_attributes(brs, &self.rules, extra) {
            let d = &brs.attributes[&a];
            self.push(
                StateVar {
                    name: a.clone(),
                    role: VarRole::Attribute(a.clone()),
                    lo: d.domain.lo(),
                    hi: d.domain.hi(),
                    domain: Some(d.domain.clone()),
                },
                vec![brs.init[&a]],
            );
        }
        let params: BTreeSet<String> = self.rules.iter().flat_map(|r| r.params()).collect();
        for p in params {
            let decl = &brs.params[&p];
            self.push(
                StateVar {
                    name: param_name(&p),
                    role: VarRole::Param(p.clone()),
                    lo: decl.lo,
                    hi: decl.hi,
                    domain: Some(Domain::int(decl.lo, decl.hi)),
                },
                decl.values(),
            );
        }
        let ids: BTreeSet<&str> = self.rules.iter().map(|r| r.id.as_str()).collect();
        for t in &brs.timers {
            if !ids.contains(t.owner.as_str()) {
                continue;
            }
            self.push(
                StateVar {
                    name: t.id.clone(),
                    role: VarRole::Timer(t.id.clone()),
                    lo: -1,
                    hi: t.timeout as Value,
                    domain: None,
                },
                vec![-1],
            );
            if let Some(attr) = &t.saves {
                let d = &brs.attributes[attr].domain;
                self.push(
                    StateVar {
                        name: saved_name(&t.id),
                        role: VarRole::Saved(t.id.clone()),
                        lo: d.lo(),
                        hi: d.hi(),
                        domain: Some(d.clone()),
                    },
                    vec![d.lo()],
                );
            }
        }
        for r in self.rules.clone() {
            if matches!(r.trigger, Trigger::Pred(_)) {
                self.push(
                    StateVar {
                        name: shadow_name(&r.id),
                        role: VarRole::Shadow(r.id.clone()),
                        lo: 0,
                        hi: 1,
                        domain: None,
                    },
                    vec![0],
                );
            }
        }
        for ch in &brs.channels {
            if ch.kind == AttrKind::Tardy
                && ch.latency > 1
                && self.by_name.contains_key(&ch.attribute)
                && !ch.affects.is_empty()
            {
                self.push(
                    StateVar {
                        name: lag_name(&ch.attribute),
                        role: VarRole::Lag(ch.attribute.clone()),
                        lo: 0,
                        hi: ch.latency as Value - 1,
                        domain: None,
                    },
                    vec![0],
                );
            }
        }
    }

    fn pred(&self, e: &PredExpr, rule: &str) -> Result<Expr, FsmError> {
        Ok(match e {
            PredExpr::Atom(a) => {
                let x = *self
                    .by_name
                    .get(&a.attr)
                    .ok_or_else(|| FsmError::UnknownAttribute(a.attr.clone()))?;
                let rhs = match &a.rhs {
                    Operand::Value(v) => Expr::Val(x, *v),
                    Operand::Param(p) => Expr::Var(self.v(&param_name(p))),
                    Operand::Lit(l) => {
                        return Err(FsmError::Unbound(format!("{l:?}"), rule.to_owned()))
                    }
                };
                Expr::cmp(a.op, Expr::Var(x), rhs)
            }
            PredExpr::And(xs) => Expr::and(
                xs.iter()
                    .map(|x| self.pred(x, rule))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            PredExpr::Or(xs) => Expr::or(
                xs.iter()
                    .map(|x| self.pred(x, rule))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            PredExpr::Not(x) => Expr::not(self.pred(x, rule)?),
        })
    }

    fn rule_commands(&mut self) -> Result<(), FsmError> {
        for r in self.rules.clone() {
            let (edge, consume) = match &r.trigger {
                Trigger::Pred(p) => {
                    let t = self.pred(&p.expr, &r.id)?;
                    let phi = self.v(&shadow_name(&r.id));
                    self.shadows.push(ShadowLatch {
                        var: phi,
                        rule: r.id.clone(),
                        trigger: t.clone(),
                    });
                    (Expr::and([t, Expr::not(Expr::Var(phi))]), (phi, TRUE))
                }
                Trigger::Timeout(tm) => {
                    let tv = self.v(tm);
                    (Expr::eq(Expr::Var(tv), Expr::Const(0)), (tv, Expr::Const(-1)))
                }
            };
            self.pending.insert(r.id.clone(), edge.clone());
            let cond = Expr::and(
                r.conditions()
                    .map(|c| self.pred(&c.expr, &r.id))
                    .collect::<Result<Vec<_>, _>>()?,
            );
            let busy = Expr::or(r.arms.iter().map(|a| {
                Expr::cmp(CmpOp::Ne, Expr::Var(self.v(&a.timer)), Expr::Const(-1))
            }));

            let mut fire = Command {
                id: r.id.clone(),
                rule: Some(r.id.clone()),
                tag: CommandTag::UserRule,
                fires: true,
                guard: Expr::and([edge.clone(), cond.clone(), Expr::not(busy.clone())]),
                updates: vec![consume.clone()],
            };
            for a in &r.actions {
                let x = self.v(&a.target);
                let val = match &a.value {
                    AssignValue::Operand(Operand::Value(v)) => Expr::Val(x, *v),
                    AssignValue::Operand(Operand::Param(p)) => Expr::Var(self.v(&param_name(p))),
                    AssignValue::Operand(Operand::Lit(l)) => {
                        return Err(FsmError::Unbound(format!("{l:?}"), r.id.clone()))
                    }
                    AssignValue::Restore => {
                        let Trigger::Timeout(t) = &r.trigger else {
                            unreachable!("restore only in end rules")
                        };
                        let sv = self.v(&saved_name(t));
                        let lo = self.vars[sv].lo;
                        fire.set(sv, Expr::Val(sv, lo));
                        Expr::Var(sv)
                    }
                };
                fire.set(x, val);
            }
            for arm in &r.arms {
                let tv = self.v(&arm.timer);
                fire.set(tv, Expr::Const(arm.steps as Value));
                let timer = self.brs.timers.iter().find(|t| t.id == arm.timer);
                if let Some(attr) = timer.and_then(|t| t.saves.as_ref()) {
                    let sv = self.v(&saved_name(&arm.timer));
                    fire.set(sv, Expr::Var(self.v(attr)));
                }
            }
            self.commands.push(fire);

            if !(cond.is_true() && busy.is_false()) {
                self.commands.push(Command {
                    id: format!("{}/skip", r.id),
                    rule: Some(r.id.clone()),
                    tag: CommandTag::UserRule,
                    fires: false,
                    guard: Expr::and([edge, Expr::or([Expr::not(cond), busy])]),
                    updates: vec![consume],
                });
            }
        }
        Ok(())
    }

    fn env_commands(&mut self) {
        let written: BTreeSet<String> = self.rules.iter().flat_map(|r| r.writes()).collect();
        for (v, var) in self.vars.clone().into_iter().enumerate() {
            let VarRole::Attribute(a) = &var.role else { continue };
            if written.contains(a) {
                continue;
            }
            if self.brs.channel(a).is_some_and(|c| !c.ambient) {
                continue;
            }
            let domain = var.domain.as_ref().expect("attribute domain");
            let mut push = |id: String, e: Expr| {
                self.commands.push(Command {
                    id,
                    rule: None,
                    tag: CommandTag::EnvInput,
                    fires: true,
                    guard: TRUE,
                    updates: vec![(v, e)],
                })
            };
            if domain.is_int() {
                push(format!("env:{a}+"), Expr::Sum(vec![Expr::Var(v), Expr::Const(1)]));
                push(format!("env:{a}-"), Expr::Sum(vec![Expr::Var(v), Expr::Const(-1)]));
            } else {
                for x in domain.values() {
                    push(format!("env:{a}={}", domain.label(x)), Expr::Val(v, x));
                }
            }
        }
    }

    fn timer_commands(&mut self) {
        for (v, var) in self.vars.clone().into_iter().enumerate() {
            if let VarRole::Timer(t) = &var.role {
                self.commands.push(Command {
                    id: format!("tick:{t}"),
                    rule: None,
                    tag: CommandTag::TimerTick,
                    fires: true,
                    guard: Expr::cmp(CmpOp::Gt, Expr::Var(v), Expr::Const(0)),
                    updates: vec![(v, Expr::Sum(vec![Expr::Var(v), Expr::Const(-1)]))],
                });
            }
        }
    }

    fn channels(&mut self) {
        let brs = self.brs;
        for ch in &brs.channels {
            let Some(&x) = self.by_name.get(&ch.attribute) else { continue };
            let mut causes: Vec<(Expr, Direction)> = Vec::new();
            for af in &ch.affects {
                let (Some(&t), Some(val)) =
                    (self.by_name.get(&af.pattern.target), af.pattern.const_value())
                else {
                    continue;
                };
                causes.push((Expr::is(t, val), af.direction));
                if ch.kind == AttrKind::Immediate {
                    let effect = match af.direction {
                        Direction::Raise => Expr::Step(x, true),
                        Direction::Lower => Expr::Step(x, false),
                        Direction::Set(w) => Expr::Val(x, w),
                    };
                    for c in &mut self.commands {
                        let hits = c
                            .updates
                            .iter()
                            .any(|(v, e)| *v == t && *e == Expr::Val(t, val));
                        if hits && !c.writes(x) {
                            c.updates.push((x, effect.clone()));
                        }
                    }
                }
            }
            if ch.kind != AttrKind::Tardy || causes.is_empty() {
                continue;
            }
            let any_active = Expr::or(causes.iter().map(|(a, _)| a.clone()));
            for c in &mut self.commands {
                if c.tag == CommandTag::EnvInput && c.writes(x) {
                    c.guard = Expr::and([c.guard.clone(), Expr::not(any_active.clone())]);
                }
            }
            let net = Expr::Sum(
                causes
                    .iter()
                    .map(|(active, dir)| {
                        let d = match dir {
                            Direction::Raise => Expr::Const(1),
                            Direction::Lower => Expr::Const(-1),
                            Direction::Set(w) => Expr::ite(
                                Expr::cmp(CmpOp::Lt, Expr::Var(x), Expr::Val(x, *w)),
                                Expr::Const(1),
                                Expr::ite(
                                    Expr::cmp(CmpOp::Gt, Expr::Var(x), Expr::Val(x, *w)),
                                    Expr::Const(-1),
                                    Expr::Const(0),
                                ),
                            ),
                        };
                        Expr::ite(active.clone(), d, Expr::Const(0))
                    })
                    .collect(),
            );
            let moving = Expr::cmp(CmpOp::Ne, net.clone(), Expr::Const(0));
            let step = Expr::ite(
                Expr::cmp(CmpOp::Gt, net.clone(), Expr::Const(0)),
                Expr::Step(x, true),
                Expr::Step(x, false),
            );
            let mut cmd = Command {
                id: format!("drift:{}", ch.attribute),
                rule: None,
                tag: CommandTag::ChannelDrift,
                fires: true,
                guard: moving.clone(),
                updates: Vec::new(),
            };
            match self.by_name.get(&lag_name(&ch.attribute)) {
                None => cmd.updates.push((x, step)),
                Some(&lag) => {
                    let top = ch.latency as Value - 1;
                    let ready = Expr::eq(Expr::Var(lag), Expr::Const(top));
                    cmd.guard = Expr::or([
                        moving.clone(),
                        Expr::cmp(CmpOp::Ne, Expr::Var(lag), Expr::Const(0)),
                    ]);
                    cmd.updates.push((
                        x,
                        Expr::ite(Expr::and([moving.clone(), ready.clone()]), step, Expr::Var(x)),
                    ));
                    cmd.updates.push((
                        lag,
                        Expr::ite(
                            moving,
                            Expr::ite(
                                ready,
                                Expr::Const(top),
                                Expr::Sum(vec![Expr::Var(lag), Expr::Const(1)]),
                            ),
                            Expr::Const(0),
                        ),
                    ));
                }
            }
            self.commands.push(cmd);
        }
    }

    /// Power guard for device `dev`: every ancestor under `policy` is on.
    fn powered(&self, dev: &str, policy: OfflinePolicy) -> Expr {
        let brs = self.brs;
        Expr::and(brs.ancestors(dev).into_iter().filter_map(|(p, pol)| {
            if pol != policy {
                return None;
            }
            let pa = brs.power_attr(&p)?;
            let pv = *self.by_name.get(pa)?;
            let on = self.vars[pv].domain.as_ref()?.on_value()?;
            Some(Expr::is(pv, on))
        }))
    }

    fn connections(&mut self) {
        let brs = self.brs;
        if brs.connections.is_empty() {
            return;
        }
        let rules: BTreeMap<&str, &Rule> = self.rules.iter().map(|r| (r.id.as_str(), *r)).collect();
        let mut guards: Vec<Expr> = Vec::with_capacity(self.commands.len());
        for c in &self.commands {
            let g = match c.tag {
                CommandTag::UserRule => {
                    let r = rules[c.rule.as_deref().expect("rule command")];
                    Expr::and(
                        brs.devices_used(r)
                            .iter()
                            .map(|d| self.powered(d, OfflinePolicy::DisableRules)),
                    )
                }
                CommandTag::EnvInput | CommandTag::ChannelDrift => {
                    Expr::and(c.updates.iter().filter_map(|(v, _)| {
                        let VarRole::Attribute(a) = &self.vars[*v].role else { return None };
                        let dev = brs.device_of(a)?;
                        Some(self.powered(dev, OfflinePolicy::LastMeasurement))
                    }))
                }
                CommandTag::TimerTick => TRUE,
            };
            guards.push(g);
        }
        for (c, g) in self.commands.iter_mut().zip(guards) {
            if !g.is_true() {
                c.guard = Expr::and([c.guard.clone(), g]);
            }
        }
    }
}
