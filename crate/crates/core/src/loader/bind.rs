use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::catalog::{json_value, CapabilityCatalog};
use super::deployment::{default_channel_kind, Deployment, DirectionSpec, PreferenceSpec};
use super::dsl::{parse_assignment, RuleSet};
use crate::error::LoadError;
use crate::interaction::{Affect, ChannelDecl, ConnectionDecl, Direction, OfflinePolicy};
use crate::ir::{
    normalize_latency, AssignValue, Assignment, AttrKind, AttributeDecl, CmpOp, Domain, IrError,
    Literal, Operand, Predicate, Rule, Scope, Span, Subject, TimerVar, Trigger, Value,
};

/// Range-valued preference, frozen to one value per run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamDecl {
    pub lo: Value,
    pub hi: Value,
    /// Attribute the parameter is compared with or assigned to.
    pub attribute: String,
}

impl ParamDecl {
    pub fn values(&self) -> Vec<Value> {
        (self.lo..=self.hi).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundRuleSet {
    /// User-level rules with names and constants resolved.
    pub source: Vec<Rule>,
    /// `source` after the timer split.
    pub rules: Vec<Rule>,
    pub attributes: BTreeMap<String, AttributeDecl>,
    pub timers: Vec<TimerVar>,
    /// Cyber-connection links between sub-rules (arming → timeout, exec → end).
    pub links: Vec<(String, String)>,
    pub init: BTreeMap<String, Value>,
    pub params: BTreeMap<String, ParamDecl>,
    pub channels: Vec<ChannelDecl>,
    pub connections: Vec<ConnectionDecl>,
    /// Device name → its attributes, in capability order.
    pub devices: BTreeMap<String, Vec<String>>,
    pub step_seconds: u32,
    pub warnings: Vec<String>,
}

impl Scope for BoundRuleSet {
    fn domain(&self, attr: &str) -> Option<&Domain> {
        self.attributes.get(attr).map(|a| &a.domain)
    }

    fn param_values(&self, param: &str) -> Option<Vec<Value>> {
        self.params.get(param).map(ParamDecl::values)
    }
}

impl BoundRuleSet {
    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn source_rule(&self, id: &str) -> Option<&Rule> {
        self.source.iter().find(|r| r.id == id)
    }

    /// Normalized rules derived from user rule `id`.
    pub fn parts_of<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.origin.parent(&r.id) == id)
    }

    /// The part of user rule `id` that performs its actions.
    pub fn exec_rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().filter(|r| r.origin.parent(&r.id) == id).find(|r| {
            matches!(
                r.origin,
                crate::ir::RuleOrigin::User | crate::ir::RuleOrigin::Timeout { .. }
            )
        })
    }

    /// Attributes no rule action ever writes; the environment drives them.
    pub fn env_driven(&self, attr: &str) -> bool {
        !self.rules.iter().any(|r| r.writes().contains(attr))
    }

    pub fn device_of(&self, attr: &str) -> Option<&str> {
        self.attributes.get(attr).and_then(|a| a.device())
    }

    /// First on/off attribute of a device; switching it off takes the
    /// device and everything connected below it offline.
    pub fn power_attr(&self, device: &str) -> Option<&str> {
        self.devices.get(device)?.iter().map(String::as_str).find(|a| {
            let d = &self.attributes[*a].domain;
            d.on_value().is_some() && d.off_value().is_some()
        })
    }

    pub fn parent_of(&self, device: &str) -> Option<(&str, OfflinePolicy)> {
        self.connections
            .iter()
            .find(|c| c.children.iter().any(|ch| ch == device))
            .map(|c| (c.parent.as_str(), c.policy))
    }

    /// Transitive parents, nearest first.
    pub fn ancestors(&self, device: &str) -> Vec<(String, OfflinePolicy)> {
        let mut out: Vec<(String, OfflinePolicy)> = Vec::new();
        let mut cur = device.to_owned();
        while let Some((p, pol)) = self.parent_of(&cur) {
            if out.iter().any(|(d, _)| d == p) {
                break;
            }
            out.push((p.to_owned(), pol));
            cur = p.to_owned();
        }
        out
    }

    /// Devices whose attributes `rule` reads or writes.
    pub fn devices_used(&self, rule: &Rule) -> BTreeSet<String> {
        rule.reads()
            .iter()
            .chain(rule.writes().iter())
            .filter_map(|a| self.device_of(a).map(str::to_owned))
            .collect()
    }

    pub fn channel(&self, attr: &str) -> Option<&ChannelDecl> {
        self.channels.iter().find(|c| c.attribute == attr)
    }

    /// Replaces every connection's policy (CLI override).
    pub fn set_policy(&mut self, policy: OfflinePolicy) {
        for c in &mut self.connections {
            c.policy = policy;
        }
    }
}

struct Binder<'a> {
    attributes: BTreeMap<String, AttributeDecl>,
    devices: BTreeMap<String, Vec<String>>,
    dep: &'a Deployment,
    params: BTreeMap<String, ParamDecl>,
}

pub fn bind(
    rs: &RuleSet,
    dep: &Deployment,
    cat: &CapabilityCatalog,
) -> Result<BoundRuleSet, LoadError> {
    dep.validate()?;
    let mut attributes = BTreeMap::new();
    let mut devices = BTreeMap::new();
    for (dev, spec) in &dep.devices {
        let mut names = Vec::new();
        for cap_name in spec.capabilities() {
            let cap = cat.get(cap_name).ok_or_else(|| {
                LoadError::Deployment(format!("device `{dev}` uses unknown capability `{cap_name}`"))
            })?;
            for a in &cap.attributes {
                let name = format!("{dev}.{}", a.name);
                if attributes.contains_key(&name) {
                    return Err(LoadError::Deployment(format!(
                        "device `{dev}` declares attribute `{}` twice",
                        a.name
                    )));
                }
                let domain = a.domain().map_err(LoadError::Catalog)?;
                let kind = a.kind.unwrap_or(AttrKind::Immediate);
                let decl = AttributeDecl::new(&name, Subject::Device(dev.clone()), kind, domain)
                    .map_err(|source| LoadError::Ir { source, span: None })?;
                attributes.insert(name.clone(), decl);
                names.push(name);
            }
        }
        devices.insert(dev.clone(), names);
    }
    for a in &dep.cyber {
        if attributes.contains_key(&a.name) || devices.contains_key(&a.name) {
            return Err(LoadError::Deployment(format!("cyber attribute `{}` clashes", a.name)));
        }
        let domain = a.domain().map_err(LoadError::Deployment)?;
        let decl = AttributeDecl::new(
            &a.name,
            Subject::Cyber,
            a.kind.unwrap_or(AttrKind::Immediate),
            domain,
        )
        .map_err(|source| LoadError::Ir { source, span: None })?;
        attributes.insert(a.name.clone(), decl);
    }

    let mut b = Binder {
        attributes,
        devices,
        dep,
        params: BTreeMap::new(),
    };
    let mut warnings = Vec::new();

    let mut channels = Vec::new();
    for ch in &dep.channels {
        channels.push(b.channel(ch)?);
    }
    for ch in &channels {
        b.attributes.get_mut(&ch.attribute).unwrap().kind = ch.kind;
    }

    let mut source = Vec::new();
    for r in &rs.rules {
        source.push(b.rule(r)?);
    }

    let mut rules = Vec::new();
    let mut timers = Vec::new();
    let mut links = Vec::new();
    for r in &source {
        let n = normalize_latency(r).map_err(|source| LoadError::Ir {
            source,
            span: r.span,
        })?;
        rules.extend(n.rules);
        timers.extend(n.timers);
        links.extend(n.links);
    }
    let extended: usize = source
        .iter()
        .map(|r| r.actions.iter().filter(|a| a.extended.is_some()).count())
        .sum();
    let delayed = source.iter().filter(|r| r.latency > 0).count();
    debug_assert_eq!(rules.len(), source.len() + delayed + extended);

    let mut init: BTreeMap<String, Value> = b
        .attributes
        .iter()
        .map(|(n, a)| (n.clone(), default_init(&a.domain)))
        .collect();
    let mut assigned = BTreeSet::new();
    for i in &rs.init {
        let target = b.resolve(&i.target, i.span)?;
        if !assigned.insert(target.clone()) {
            return Err(LoadError::Invalid {
                message: format!("`{target}` initialized twice"),
                span: i.span,
            });
        }
        let v = match b.operand(&target, &i.value, i.span)? {
            Operand::Value(v) => v,
            _ => {
                return Err(LoadError::TypeMismatch {
                    message: format!("initial value of `{target}` must be a constant"),
                    span: i.span,
                })
            }
        };
        init.insert(target, v);
    }

    let connections = dep
        .connections
        .iter()
        .map(|c| ConnectionDecl {
            parent: c.parent.clone(),
            children: c.children.clone(),
            policy: c.policy.unwrap_or(OfflinePolicy::DisableRules),
        })
        .collect::<Vec<_>>();
    let out = BoundRuleSet {
        source,
        rules,
        attributes: b.attributes,
        timers,
        links,
        init,
        params: b.params,
        channels,
        connections,
        devices: b.devices,
        step_seconds: dep.step_seconds.unwrap_or(super::DEFAULT_STEP_SECONDS),
        warnings: Vec::new(),
    };
    for c in &out.connections {
        if out.power_attr(&c.parent).is_none() {
            warnings.push(format!(
                "connection parent `{}` has no on/off attribute; it never goes offline",
                c.parent
            ));
        }
    }
    Ok(BoundRuleSet { warnings, ..out })
}

/// `off` / first label / false / minimum.
fn default_init(d: &Domain) -> Value {
    d.off_value().unwrap_or(d.lo())
}

impl Binder<'_> {
    fn resolve(&self, name: &str, span: Option<Span>) -> Result<String, LoadError> {
        if self.attributes.contains_key(name) {
            return Ok(name.to_owned());
        }
        if let Some(attrs) = self.devices.get(name) {
            if attrs.len() == 1 {
                return Ok(attrs[0].clone());
            }
            return Err(LoadError::Invalid {
                message: format!(
                    "device `{name}` has {} attributes; name one as `{name}.ATTR`",
                    attrs.len()
                ),
                span,
            });
        }
        Err(LoadError::Unresolved {
            name: name.to_owned(),
            span,
        })
    }

    fn domain(&self, attr: &str) -> &Domain {
        &self.attributes[attr].domain
    }

    /// Resolves a literal against `attr`'s domain, substituting preferences.
    fn operand(&mut self, attr: &str, op: &Operand, span: Option<Span>) -> Result<Operand, LoadError> {
        let d = self.domain(attr).clone();
        match op {
            Operand::Value(_) | Operand::Param(_) => Ok(op.clone()),
            Operand::Lit(Literal::Number(n)) => {
                if !d.is_int() {
                    return Err(LoadError::TypeMismatch {
                        message: format!("`{attr}` is not numeric but is compared with {n}"),
                        span,
                    });
                }
                match i32::try_from(*n).ok().filter(|v| d.contains(*v)) {
                    Some(v) => Ok(Operand::Value(v)),
                    None => Err(LoadError::OutOfDomain {
                        attr: attr.to_owned(),
                        value: n.to_string(),
                        span,
                    }),
                }
            }
            Operand::Lit(Literal::Ident(s)) => {
                if let Some(v) = d.parse_label(s) {
                    return Ok(Operand::Value(v));
                }
                if let Some(pref) = self.dep.preferences.get(s) {
                    return self.preference(attr, s, pref, span);
                }
                if self.attributes.contains_key(s) || self.devices.contains_key(s) {
                    return Err(LoadError::TypeMismatch {
                        message: format!("`{attr}` compared with attribute `{s}`; use a constant"),
                        span,
                    });
                }
                match d {
                    Domain::Int { .. } => Err(LoadError::Unresolved {
                        name: s.clone(),
                        span,
                    }),
                    _ => Err(LoadError::OutOfDomain {
                        attr: attr.to_owned(),
                        value: s.clone(),
                        span,
                    }),
                }
            }
        }
    }

    fn preference(
        &mut self,
        attr: &str,
        name: &str,
        pref: &PreferenceSpec,
        span: Option<Span>,
    ) -> Result<Operand, LoadError> {
        let d = self.domain(attr).clone();
        match pref {
            PreferenceSpec::Value(v) => json_value(&d, v).map(Operand::Value).ok_or_else(|| {
                LoadError::OutOfDomain {
                    attr: attr.to_owned(),
                    value: format!("{name} = {v}"),
                    span,
                }
            }),
            PreferenceSpec::Range { range: [lo, hi] } => {
                if !d.is_int() || lo > hi || !d.contains(*lo) || !d.contains(*hi) {
                    return Err(LoadError::OutOfDomain {
                        attr: attr.to_owned(),
                        value: format!("{name} in [{lo}, {hi}]"),
                        span,
                    });
                }
                if let Some(prev) = self.params.get(name) {
                    if prev.attribute != attr {
                        return Err(LoadError::Invalid {
                            message: format!(
                                "preference `{name}` is used with both `{}` and `{attr}`",
                                prev.attribute
                            ),
                            span,
                        });
                    }
                }
                self.params.insert(
                    name.to_owned(),
                    ParamDecl {
                        lo: *lo,
                        hi: *hi,
                        attribute: attr.to_owned(),
                    },
                );
                Ok(Operand::Param(name.to_owned()))
            }
        }
    }

    fn predicate(&mut self, p: &Predicate, span: Option<Span>) -> Result<Predicate, LoadError> {
        let mut p = p.clone();
        let mut err = None;
        p.expr.atoms_mut(&mut |a| {
            if err.is_some() {
                return;
            }
            let res = (|| {
                a.attr = self.resolve(&a.attr, span)?;
                if !self.domain(&a.attr).is_int() && !matches!(a.op, CmpOp::Eq | CmpOp::Ne) {
                    return Err(LoadError::TypeMismatch {
                        message: format!("`{}` is not ordered; only = and != apply", a.attr),
                        span,
                    });
                }
                a.rhs = self.operand(&a.attr, &a.rhs, span)?;
                Ok(())
            })();
            if let Err(e) = res {
                err = Some(e);
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(p),
        }
    }

    fn assignment(&mut self, a: &Assignment, span: Option<Span>) -> Result<Assignment, LoadError> {
        let target = self.resolve(&a.target, span)?;
        let value = match &a.value {
            AssignValue::Operand(op) => AssignValue::Operand(self.operand(&target, op, span)?),
            AssignValue::Restore => AssignValue::Restore,
        };
        let extended = match &a.extended {
            Some(ext) => {
                let mut ext = ext.clone();
                ext.terminal = Box::new(self.assignment(&ext.terminal, span)?);
                Some(ext)
            }
            None => None,
        };
        Ok(Assignment {
            target,
            value,
            extended,
        })
    }

    fn rule(&mut self, r: &Rule) -> Result<Rule, LoadError> {
        let span = r.span;
        let mut out = r.clone();
        out.trigger = match &r.trigger {
            Trigger::Pred(p) => Trigger::Pred(self.predicate(p, span)?),
            Trigger::Timeout(t) => Trigger::Timeout(t.clone()),
        };
        out.trigger_conditions = r
            .trigger_conditions
            .iter()
            .map(|c| self.predicate(c, span))
            .collect::<Result<_, _>>()?;
        out.action_conditions = r
            .action_conditions
            .iter()
            .map(|c| self.predicate(c, span))
            .collect::<Result<_, _>>()?;
        out.actions = r
            .actions
            .iter()
            .map(|a| self.assignment(a, span))
            .collect::<Result<_, _>>()?;
        if out.actions.is_empty() {
            return Err(LoadError::Invalid {
                message: format!("rule `{}` has no actions", r.id),
                span,
            });
        }
        Ok(out)
    }

    fn channel(&mut self, ch: &super::deployment::ChannelSpec) -> Result<ChannelDecl, LoadError> {
        let attribute = self.resolve(&ch.attribute, None)?;
        let decl = &self.attributes[&attribute];
        let base = attribute.rsplit('.').next().unwrap_or(&attribute);
        let default = default_channel_kind(base);
        let kind = ch
            .kind
            .or(default.map(|d| d.0))
            .unwrap_or(decl.kind);
        if kind == AttrKind::Tardy && !decl.domain.is_int() {
            return Err(LoadError::Ir {
                source: IrError::TardyNotInt(attribute),
                span: None,
            });
        }
        let latency = match kind {
            AttrKind::Tardy => ch.latency.unwrap_or(1),
            AttrKind::Immediate => 0,
        };
        if kind == AttrKind::Tardy && latency == 0 {
            return Err(LoadError::Deployment(format!(
                "tardy channel `{attribute}` needs latency >= 1"
            )));
        }
        let mut affects = Vec::new();
        for af in &ch.affects {
            let parsed = parse_assignment(&af.action).map_err(|e| {
                LoadError::Deployment(format!("channel `{attribute}` affect `{}`: {e}", af.action))
            })?;
            let pattern = self.assignment(&parsed, None)?;
            if pattern.const_value().is_none() {
                return Err(LoadError::Deployment(format!(
                    "channel `{attribute}` affect `{}` must write a constant",
                    af.action
                )));
            }
            let direction = match &af.direction {
                DirectionSpec::Named(s) if s == "raise" => Direction::Raise,
                DirectionSpec::Named(s) if s == "lower" => Direction::Lower,
                DirectionSpec::Named(s) => {
                    return Err(LoadError::Deployment(format!(
                        "unknown channel direction `{s}`"
                    )))
                }
                DirectionSpec::Set { set } => {
                    let d = &self.attributes[&attribute].domain;
                    Direction::Set(json_value(d, set).ok_or_else(|| LoadError::OutOfDomain {
                        attr: attribute.clone(),
                        value: set.to_string(),
                        span: None,
                    })?)
                }
            };
            affects.push(Affect { pattern, direction });
        }
        Ok(ChannelDecl {
            attribute,
            kind,
            latency,
            affects,
            ambient: ch.ambient.unwrap_or(true),
        })
    }
}
