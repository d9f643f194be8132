//! Property language.
//!
//! One property per line:
//!
//! ```text
//! never S1: iron = on and presence = not_present
//! always S2: valve = closed
//! leadsto L1: heater = on -> heater = off
//! eventually L4: oven.cooking = done
//! absence F4: fired(f1) within 15m forbid fan = off
//! ```
//!
//! Besides attribute comparisons, atoms may be `fired(r)` (r acted on the
//! step into this state), `firedtick(r)` (r acted since the last clock tick),
//! `pending(r)`, `processed(r)` and `true`/`false`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::LoadError;
use crate::fsm::{Expr, LatchKind, TransitionSystem};
use crate::interaction::ThreatKind;
use crate::ir::{CmpOp, Literal, Operand, PredExpr, RuleOrigin, Span, Value};
use crate::loader::{clock_minutes, lex, parse_duration, BoundRuleSet, Tok};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleAtom {
    Fired,
    FiredTick,
    Pending,
    Processed,
}

impl RuleAtom {
    fn keyword(self) -> &'static str {
        match self {
            RuleAtom::Fired => "fired",
            RuleAtom::FiredTick => "firedtick",
            RuleAtom::Pending => "pending",
            RuleAtom::Processed => "processed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropExpr {
    Const(bool),
    /// Attribute comparison; the operand is a literal until bound.
    Atom {
        attr: String,
        op: CmpOp,
        value: Operand,
    },
    Rule(RuleAtom, String),
    /// A bound rule predicate reused verbatim (threat templates).
    Pred(PredExpr),
    Not(Box<PropExpr>),
    And(Vec<PropExpr>),
    Or(Vec<PropExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropertyKind {
    Safety { bad: PropExpr },
    LeadsTo { p: PropExpr, q: PropExpr },
    Eventually { q: PropExpr },
    BoundedAbsence { p: PropExpr, window: u32, forbidden: PropExpr },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "snake_case")]
pub enum Origin {
    User,
    Threat {
        kind: ThreatKind,
        candidate: String,
        /// User rules of the candidate; the check covers their slicers.
        rules: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property {
    pub id: String,
    pub kind: PropertyKind,
    pub origin: Origin,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PropertyError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("`{attr}` cannot take value `{value}`")]
    BadValue { attr: String, value: String },
    #[error("rule `{0}` is not part of the checked model")]
    RuleNotModelled(String),
}

/// Compiled form of a property over one transition system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    Safety(Expr),
    LeadsTo(Expr, Expr),
    Eventually(Expr),
    BoundedAbsence(Expr, u32, Expr),
}

impl PropExpr {
    #[allow(clippy::should_implement_trait)]
    pub fn not(e: PropExpr) -> PropExpr {
        PropExpr::Not(Box::new(e))
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a PropExpr)) {
        f(self);
        match self {
            PropExpr::Not(x) => x.walk(f),
            PropExpr::And(xs) | PropExpr::Or(xs) => xs.iter().for_each(|x| x.walk(f)),
            _ => {}
        }
    }

    /// Resolves attribute names and literal values, and maps user rule ids
    /// to the sub-rule each atom is about.
    pub fn bind(&self, brs: &BoundRuleSet) -> Result<PropExpr, PropertyError> {
        Ok(match self {
            PropExpr::Atom { attr, op, value } => {
                let attr = resolve_attr(brs, attr)?;
                let d = &brs.attributes[&attr].domain;
                let v = match value {
                    Operand::Value(v) => Some(*v),
                    Operand::Lit(Literal::Number(n)) if d.is_int() => {
                        i32::try_from(*n).ok().filter(|v| d.contains(*v))
                    }
                    Operand::Lit(Literal::Ident(s)) => d.parse_label(s),
                    _ => None,
                };
                let Some(v) = v else {
                    return Err(PropertyError::BadValue {
                        attr,
                        value: value.to_string(),
                    });
                };
                PropExpr::Atom {
                    attr,
                    op: *op,
                    value: Operand::Value(v),
                }
            }
            PropExpr::Rule(kind, r) => PropExpr::Rule(*kind, resolve_rule(brs, *kind, r)?),
            PropExpr::Not(x) => PropExpr::not(x.bind(brs)?),
            PropExpr::And(xs) => {
                PropExpr::And(xs.iter().map(|x| x.bind(brs)).collect::<Result<_, _>>()?)
            }
            PropExpr::Or(xs) => {
                PropExpr::Or(xs.iter().map(|x| x.bind(brs)).collect::<Result<_, _>>()?)
            }
            e => e.clone(),
        })
    }

    pub fn attributes(&self, out: &mut BTreeSet<String>) {
        self.walk(&mut |e| match e {
            PropExpr::Atom { attr, .. } => {
                out.insert(attr.clone());
            }
            PropExpr::Pred(p) => out.extend(p.atoms().iter().map(|a| a.attr.clone())),
            _ => {}
        });
    }

    pub fn rules(&self, out: &mut BTreeSet<String>) {
        self.walk(&mut |e| {
            if let PropExpr::Rule(_, r) = e {
                out.insert(r.clone());
            }
        });
    }

    fn cuts(&self, out: &mut BTreeMap<String, BTreeSet<Value>>) {
        self.walk(&mut |e| match e {
            PropExpr::Atom {
                attr,
                value: Operand::Value(v),
                ..
            } => {
                out.entry(attr.clone()).or_default().insert(*v);
            }
            PropExpr::Pred(p) => {
                for a in p.atoms() {
                    if let Operand::Value(v) = a.rhs {
                        out.entry(a.attr.clone()).or_default().insert(v);
                    }
                }
            }
            _ => {}
        });
    }

    fn latches(&self, out: &mut BTreeSet<(LatchKind, String)>) {
        self.walk(&mut |e| {
            if let PropExpr::Rule(kind, r) = e {
                let k = match kind {
                    RuleAtom::Fired => LatchKind::Fired,
                    RuleAtom::FiredTick => LatchKind::FiredTick,
                    RuleAtom::Processed => LatchKind::Processed,
                    RuleAtom::Pending => return,
                };
                out.insert((k, r.clone()));
            }
        });
    }

    /// Guard expression over `ts`, which must already carry the latches.
    pub fn compile(&self, ts: &TransitionSystem) -> Result<Expr, PropertyError> {
        let var = |a: &str| ts.var(a).ok_or_else(|| PropertyError::UnknownAttribute(a.to_owned()));
        let code = |a: &str, v: Value| ts.value_maps.get(a).map_or(v, |m| m.code(v));
        Ok(match self {
            PropExpr::Const(b) => Expr::Const(*b as Value),
            PropExpr::Atom { attr, op, value } => {
                let x = var(attr)?;
                let Operand::Value(v) = value else {
                    return Err(PropertyError::BadValue {
                        attr: attr.clone(),
                        value: value.to_string(),
                    });
                };
                Expr::cmp(*op, Expr::Var(x), Expr::Val(x, code(attr, *v)))
            }
            PropExpr::Pred(p) => compile_pred(p, ts)?,
            PropExpr::Rule(RuleAtom::Pending, r) => ts
                .pending
                .get(r)
                .cloned()
                .ok_or_else(|| PropertyError::RuleNotModelled(r.clone()))?,
            PropExpr::Rule(kind, r) => {
                let k = match kind {
                    RuleAtom::Fired => LatchKind::Fired,
                    RuleAtom::FiredTick => LatchKind::FiredTick,
                    _ => LatchKind::Processed,
                };
                Expr::Var(
                    ts.latch_var(k, r)
                        .ok_or_else(|| PropertyError::RuleNotModelled(r.clone()))?,
                )
            }
            PropExpr::Not(x) => Expr::not(x.compile(ts)?),
            PropExpr::And(xs) => Expr::and(xs.iter().map(|x| x.compile(ts)).collect::<Result<Vec<_>, _>>()?),
            PropExpr::Or(xs) => Expr::or(xs.iter().map(|x| x.compile(ts)).collect::<Result<Vec<_>, _>>()?),
        })
    }
}

fn compile_pred(p: &PredExpr, ts: &TransitionSystem) -> Result<Expr, PropertyError> {
    Ok(match p {
        PredExpr::Atom(a) => {
            let x = ts
                .var(&a.attr)
                .ok_or_else(|| PropertyError::UnknownAttribute(a.attr.clone()))?;
            let rhs = match &a.rhs {
                Operand::Value(v) => {
                    Expr::Val(x, ts.value_maps.get(&a.attr).map_or(*v, |m| m.code(*v)))
                }
                Operand::Param(name) => Expr::Var(
                    ts.var(&crate::fsm::param_name(name))
                        .ok_or_else(|| PropertyError::UnknownAttribute(name.clone()))?,
                ),
                Operand::Lit(l) => {
                    return Err(PropertyError::BadValue {
                        attr: a.attr.clone(),
                        value: format!("{l:?}"),
                    })
                }
            };
            Expr::cmp(a.op, Expr::Var(x), rhs)
        }
        PredExpr::And(xs) => Expr::and(xs.iter().map(|x| compile_pred(x, ts)).collect::<Result<Vec<_>, _>>()?),
        PredExpr::Or(xs) => Expr::or(xs.iter().map(|x| compile_pred(x, ts)).collect::<Result<Vec<_>, _>>()?),
        PredExpr::Not(x) => Expr::not(compile_pred(x, ts)?),
    })
}

fn resolve_attr(brs: &BoundRuleSet, name: &str) -> Result<String, PropertyError> {
    if brs.attributes.contains_key(name) {
        return Ok(name.to_owned());
    }
    match brs.devices.get(name) {
        Some(attrs) if attrs.len() == 1 => Ok(attrs[0].clone()),
        _ => Err(PropertyError::UnknownAttribute(name.to_owned())),
    }
}

/// `fired`/`firedtick` of a user rule mean its acting part; `pending` and
/// `processed` mean the part that consumes its trigger.
fn resolve_rule(brs: &BoundRuleSet, kind: RuleAtom, r: &str) -> Result<String, PropertyError> {
    if brs.rule(r).is_some() && brs.source_rule(r).is_none() {
        return Ok(r.to_owned());
    }
    if brs.source_rule(r).is_none() {
        return Err(PropertyError::UnknownRule(r.to_owned()));
    }
    let part = match kind {
        RuleAtom::Fired | RuleAtom::FiredTick => brs.exec_rule(r),
        RuleAtom::Pending | RuleAtom::Processed => brs
            .parts_of(r)
            .find(|p| matches!(p.origin, RuleOrigin::Arm { .. }))
            .or_else(|| brs.exec_rule(r)),
    };
    part.map(|p| p.id.clone())
        .ok_or_else(|| PropertyError::UnknownRule(r.to_owned()))
}

impl PropertyKind {
    fn exprs(&self) -> Vec<&PropExpr> {
        match self {
            PropertyKind::Safety { bad } => vec![bad],
            PropertyKind::LeadsTo { p, q } => vec![p, q],
            PropertyKind::Eventually { q } => vec![q],
            PropertyKind::BoundedAbsence { p, forbidden, .. } => vec![p, forbidden],
        }
    }

    fn try_map(
        &self,
        f: &mut impl FnMut(&PropExpr) -> Result<PropExpr, PropertyError>,
    ) -> Result<PropertyKind, PropertyError> {
        Ok(match self {
            PropertyKind::Safety { bad } => PropertyKind::Safety { bad: f(bad)? },
            PropertyKind::LeadsTo { p, q } => PropertyKind::LeadsTo { p: f(p)?, q: f(q)? },
            PropertyKind::Eventually { q } => PropertyKind::Eventually { q: f(q)? },
            PropertyKind::BoundedAbsence { p, window, forbidden } => PropertyKind::BoundedAbsence {
                p: f(p)?,
                window: *window,
                forbidden: f(forbidden)?,
            },
        })
    }
}

impl Property {
    pub fn bind(&self, brs: &BoundRuleSet) -> Result<Property, PropertyError> {
        Ok(Property {
            id: self.id.clone(),
            kind: self.kind.try_map(&mut |e| e.bind(brs))?,
            origin: self.origin.clone(),
        })
    }

    pub fn attributes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.kind.exprs() {
            e.attributes(&mut out);
        }
        out
    }

    /// Normalized rules the property names.
    pub fn rules(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.kind.exprs() {
            e.rules(&mut out);
        }
        out
    }

    /// Constants compared against, per attribute.
    pub fn cuts(&self) -> BTreeMap<String, BTreeSet<Value>> {
        let mut out = BTreeMap::new();
        for e in self.kind.exprs() {
            e.cuts(&mut out);
        }
        out
    }

    pub fn latches(&self) -> Vec<(LatchKind, String)> {
        let mut out = BTreeSet::new();
        for e in self.kind.exprs() {
            e.latches(&mut out);
        }
        out.into_iter().collect()
    }

    pub fn compile(&self, ts: &TransitionSystem) -> Result<Goal, PropertyError> {
        Ok(match &self.kind {
            PropertyKind::Safety { bad } => Goal::Safety(bad.compile(ts)?),
            PropertyKind::LeadsTo { p, q } => Goal::LeadsTo(p.compile(ts)?, q.compile(ts)?),
            PropertyKind::Eventually { q } => Goal::Eventually(q.compile(ts)?),
            PropertyKind::BoundedAbsence { p, window, forbidden } => {
                Goal::BoundedAbsence(p.compile(ts)?, *window, forbidden.compile(ts)?)
            }
        })
    }
}

/// Parses a property file. Durations use `step_seconds` per step.
pub fn parse_properties(text: &str, step_seconds: u32) -> Result<Vec<Property>, LoadError> {
    let mut out: Vec<Property> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let toks = lex(line, n + 1)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = PropParser {
            toks,
            pos: 0,
            line: n + 1,
            eol: line.chars().count() + 1,
            step_seconds,
        };
        let prop = p.property()?;
        if out.iter().any(|q| q.id == prop.id) {
            return Err(LoadError::Invalid {
                message: format!("duplicate property id `{}`", prop.id),
                span: Some(Span { line: n + 1, column: 1 }),
            });
        }
        out.push(prop);
    }
    Ok(out)
}

struct PropParser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    eol: usize,
    step_seconds: u32,
}

impl PropParser {
    fn error(&self, message: impl Into<String>) -> LoadError {
        let column = self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.eol);
        LoadError::Syntax {
            span: Span {
                line: self.line,
                column,
            },
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.peek().cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), LoadError> {
        if self.peek() == Some(tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {tok}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LoadError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn property(&mut self) -> Result<Property, LoadError> {
        let kind = self.ident("a property kind")?;
        let id = self.ident("a property id")?;
        self.expect(&Tok::Colon)?;
        let kind = match kind.as_str() {
            "never" => PropertyKind::Safety { bad: self.or_expr()? },
            "always" | "invariant" => PropertyKind::Safety {
                bad: PropExpr::not(self.or_expr()?),
            },
            "leadsto" => {
                let p = self.or_expr()?;
                self.expect(&Tok::Arrow)?;
                PropertyKind::LeadsTo { p, q: self.or_expr()? }
            }
            "eventually" => PropertyKind::Eventually { q: self.or_expr()? },
            "absence" => {
                let p = self.or_expr()?;
                if !self.eat_word("within") {
                    return Err(self.error("expected `within`"));
                }
                let window = match self.bump() {
                    Some(Tok::Number(n, unit)) => {
                        parse_duration(&format!("{n}{}", unit.unwrap_or_default()), self.step_seconds)?
                    }
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("expected a duration"));
                    }
                };
                if !self.eat_word("forbid") {
                    return Err(self.error("expected `forbid`"));
                }
                PropertyKind::BoundedAbsence {
                    p,
                    window,
                    forbidden: self.or_expr()?,
                }
            }
            other => {
                self.pos = 0;
                return Err(self.error(format!("unknown property kind `{other}`")));
            }
        };
        if self.pos < self.toks.len() {
            return Err(self.error(format!("expected end of line, found {}", self.toks[self.pos].0)));
        }
        Ok(Property {
            id,
            kind,
            origin: Origin::User,
        })
    }

    fn or_expr(&mut self) -> Result<PropExpr, LoadError> {
        let mut parts = vec![self.and_expr()?];
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            parts.push(self.and_expr()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PropExpr::Or(parts)
        })
    }

    fn and_expr(&mut self) -> Result<PropExpr, LoadError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PropExpr::And(parts)
        })
    }

    fn unary(&mut self) -> Result<PropExpr, LoadError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.bump();
                Ok(PropExpr::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.or_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<PropExpr, LoadError> {
        let name = self.ident("an attribute or rule atom")?;
        let rule_atom = [
            RuleAtom::Fired,
            RuleAtom::FiredTick,
            RuleAtom::Pending,
            RuleAtom::Processed,
        ]
        .into_iter()
        .find(|k| k.keyword() == name);
        match (name.as_str(), rule_atom) {
            ("true", _) => return Ok(PropExpr::Const(true)),
            ("false", _) => return Ok(PropExpr::Const(false)),
            (_, Some(k)) if self.peek() == Some(&Tok::LParen) => {
                self.bump();
                let r = self.ident("a rule id")?;
                self.expect(&Tok::RParen)?;
                return Ok(PropExpr::Rule(k, r));
            }
            _ => {}
        }
        let op = match self.bump() {
            Some(Tok::Cmp(op)) => op,
            _ => {
                self.pos -= 1;
                return Err(self.error("expected a comparison operator"));
            }
        };
        let value = match self.bump() {
            Some(Tok::Ident(s)) => Literal::Ident(s),
            Some(Tok::Number(n, unit)) => Literal::Number(clock_minutes(n, unit.as_deref())),
            _ => {
                self.pos -= 1;
                return Err(self.error("expected a value"));
            }
        };
        Ok(PropExpr::Atom {
            attr: name,
            op,
            value: Operand::Lit(value),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        let ps = parse_properties(
            "never S1: iron = on and presence = not_present\n\
             # comment\n\
             always S2: valve = closed\n\
             leadsto L1: heater = on -> heater = off\n\
             eventually L4: oven = done\n\
             absence F4: fired(f1) within 15m forbid fan = off",
            60,
        )
        .unwrap();
        assert_eq!(ps.len(), 5);
        assert!(matches!(ps[1].kind, PropertyKind::Safety { bad: PropExpr::Not(_) }));
        let PropertyKind::BoundedAbsence { window, p, .. } = &ps[4].kind else { panic!() };
        assert_eq!(*window, 15);
        assert_eq!(*p, PropExpr::Rule(RuleAtom::Fired, "f1".into()));
    }

    #[test]
    fn syntax_errors_carry_location() {
        let e = parse_properties("leadsto L1: heater = on heater = off", 60).unwrap_err();
        assert_eq!(e.span(), Some(Span { line: 1, column: 25 }));
        assert!(parse_properties("bogus X: true", 60).is_err());
        assert!(parse_properties("never A: true\nnever A: false", 60).is_err());
    }
}
