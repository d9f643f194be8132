use std::fmt;

use serde::{Deserialize, Serialize};

use super::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn eval<T: Ord>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// Operator with swapped operands (`a < b` ⇔ `b > a`).
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Unbound literal as written in rule text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Literal {
    Number(i64),
    Ident(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operand {
    Lit(Literal),
    Value(Value),
    /// Preference constant declared as a range; resolved per model run.
    Param(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Lit(Literal::Number(n)) => write!(f, "{n}"),
            Operand::Lit(Literal::Ident(s)) => f.write_str(s),
            Operand::Value(v) => write!(f, "{v}"),
            Operand::Param(p) => write!(f, "${p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub attr: String,
    pub op: CmpOp,
    pub rhs: Operand,
}

impl Atom {
    pub fn new(attr: impl Into<String>, op: CmpOp, rhs: Operand) -> Self {
        Atom {
            attr: attr.into(),
            op,
            rhs,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.attr, self.op.symbol(), self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredExpr {
    Atom(Atom),
    And(Vec<PredExpr>),
    Or(Vec<PredExpr>),
    Not(Box<PredExpr>),
}

impl PredExpr {
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            PredExpr::Atom(a) => out.push(a),
            PredExpr::And(xs) | PredExpr::Or(xs) => xs.iter().for_each(|x| x.collect_atoms(out)),
            PredExpr::Not(x) => x.collect_atoms(out),
        }
    }

    pub fn atoms_mut(&mut self, f: &mut impl FnMut(&mut Atom)) {
        match self {
            PredExpr::Atom(a) => f(a),
            PredExpr::And(xs) | PredExpr::Or(xs) => xs.iter_mut().for_each(|x| x.atoms_mut(f)),
            PredExpr::Not(x) => x.atoms_mut(f),
        }
    }

    /// Evaluates under `lookup`, which resolves attribute and parameter
    /// names. `None` when a name or an unbound literal is encountered.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<Value>) -> Option<bool> {
        Some(match self {
            PredExpr::Atom(a) => {
                let lhs = lookup(&a.attr)?;
                let rhs = match &a.rhs {
                    Operand::Value(v) => *v,
                    Operand::Param(p) => lookup(p)?,
                    Operand::Lit(_) => return None,
                };
                a.op.eval(lhs, rhs)
            }
            PredExpr::And(xs) => {
                for x in xs {
                    if !x.eval(lookup)? {
                        return Some(false);
                    }
                }
                true
            }
            PredExpr::Or(xs) => {
                for x in xs {
                    if x.eval(lookup)? {
                        return Some(true);
                    }
                }
                false
            }
            PredExpr::Not(x) => !x.eval(lookup)?,
        })
    }

    /// Negation normal form with flattened, sorted, de-duplicated operands.
    fn normalized(&self, negated: bool) -> Norm {
        match self {
            PredExpr::Atom(a) => {
                let op = if negated { a.op.negate() } else { a.op };
                Norm::Atom(format!("{} {} {}", a.attr, op.symbol(), canonical_operand(&a.rhs)))
            }
            PredExpr::Not(x) => x.normalized(!negated),
            PredExpr::And(xs) | PredExpr::Or(xs) => {
                let conj = matches!(self, PredExpr::And(_)) != negated;
                let mut parts = Vec::new();
                for x in xs {
                    match x.normalized(negated) {
                        Norm::And(inner) if conj => parts.extend(inner),
                        Norm::Or(inner) if !conj => parts.extend(inner),
                        other => parts.push(other),
                    }
                }
                parts.sort();
                parts.dedup();
                if parts.len() == 1 {
                    parts.pop().unwrap()
                } else if conj {
                    Norm::And(parts)
                } else {
                    Norm::Or(parts)
                }
            }
        }
    }
}

fn canonical_operand(op: &Operand) -> String {
    match op {
        Operand::Lit(Literal::Number(n)) => n.to_string(),
        Operand::Lit(Literal::Ident(s)) => s.clone(),
        Operand::Value(v) => v.to_string(),
        Operand::Param(p) => format!("${p}"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Norm {
    Atom(String),
    And(Vec<Norm>),
    Or(Vec<Norm>),
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Atom(s) => f.write_str(s),
            Norm::And(xs) | Norm::Or(xs) => {
                let sep = if matches!(self, Norm::And(_)) { " && " } else { " || " };
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for PredExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredExpr::Atom(a) => write!(f, "{a}"),
            PredExpr::Not(x) => write!(f, "!({x})"),
            PredExpr::And(xs) | PredExpr::Or(xs) => {
                let sep = if matches!(self, PredExpr::And(_)) { " && " } else { " || " };
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    /// Instantaneous signal over a single attribute atom.
    Event,
    State,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub expr: PredExpr,
    pub flavor: Flavor,
}

impl Predicate {
    pub fn state(expr: PredExpr) -> Self {
        Predicate {
            expr,
            flavor: Flavor::State,
        }
    }

    /// Trigger predicate: single atoms are events, compounds are state changes.
    pub fn trigger(expr: PredExpr) -> Self {
        let flavor = if matches!(expr, PredExpr::Atom(_)) {
            Flavor::Event
        } else {
            Flavor::State
        };
        Predicate { expr, flavor }
    }

    pub fn atom(attr: &str, op: CmpOp, v: Value) -> Self {
        Predicate::trigger(PredExpr::Atom(Atom::new(attr, op, Operand::Value(v))))
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.expr.atoms().into_iter().map(|a| a.attr.as_str())
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.expr.atoms().into_iter().filter_map(|a| match &a.rhs {
            Operand::Param(p) => Some(p.as_str()),
            _ => None,
        })
    }

    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<Value>) -> Option<bool> {
        self.expr.eval(lookup)
    }

    /// Syntactic normal form used for trigger identity.
    pub fn canonical(&self) -> String {
        self.expr.normalized(false).to_string()
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}
