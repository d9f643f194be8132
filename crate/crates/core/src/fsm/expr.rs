use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ir::{CmpOp, Value};

pub type VarId = usize;

/// Guard and update expressions over state vectors. Booleans are 0/1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Const(Value),
    Var(VarId),
    /// Constant written in the value space of a var; compression rewrites it
    /// to that var's code.
    Val(VarId, Value),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    Sum(Vec<Expr>),
    Sign(Box<Expr>),
    /// Representative of the grid region above (`true`) or below the one the
    /// var's current value lies in.
    Step(VarId, bool),
}

pub const TRUE: Expr = Expr::Const(1);
pub const FALSE: Expr = Expr::Const(0);

/// Per-var grid of representative values used by [`Expr::Step`]; an empty
/// grid means unit steps.
pub type Grids = [Vec<Value>];

impl Expr {
    pub fn var(v: VarId) -> Expr {
        Expr::Var(v)
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::cmp(CmpOp::Eq, a, b)
    }

    /// `var = value` with `value` in the var's own value space.
    pub fn is(v: VarId, value: Value) -> Expr {
        Expr::cmp(CmpOp::Eq, Expr::Var(v), Expr::Val(v, value))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const((c == 0) as Value),
            Expr::Not(inner) => *inner,
            e => Expr::Not(Box::new(e)),
        }
    }

    pub fn and(parts: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Expr::Const(0) => return FALSE,
                Expr::Const(_) => {}
                Expr::And(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => TRUE,
            1 => out.pop().unwrap(),
            _ => Expr::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Expr::Const(0) => {}
                Expr::Const(_) => return TRUE,
                Expr::Or(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => FALSE,
            1 => out.pop().unwrap(),
            _ => Expr::Or(out),
        }
    }

    pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
        match c {
            Expr::Const(0) => e,
            Expr::Const(_) => t,
            c => Expr::Ite(Box::new(c), Box::new(t), Box::new(e)),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Const(c) if *c != 0)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Expr::Const(0))
    }

    pub fn eval(&self, s: &[Value], grids: &Grids) -> Value {
        match self {
            Expr::Const(c) | Expr::Val(_, c) => *c,
            Expr::Var(v) => s[*v],
            Expr::Not(e) => (e.eval(s, grids) == 0) as Value,
            Expr::And(xs) => xs.iter().all(|x| x.eval(s, grids) != 0) as Value,
            Expr::Or(xs) => xs.iter().any(|x| x.eval(s, grids) != 0) as Value,
            Expr::Cmp(op, a, b) => op.eval(a.eval(s, grids), b.eval(s, grids)) as Value,
            Expr::Ite(c, t, e) => {
                if c.eval(s, grids) != 0 {
                    t.eval(s, grids)
                } else {
                    e.eval(s, grids)
                }
            }
            Expr::Sum(xs) => xs.iter().map(|x| x.eval(s, grids)).sum(),
            Expr::Sign(e) => e.eval(s, grids).signum(),
            Expr::Step(v, up) => {
                let x = s[*v];
                let grid = &grids[*v];
                if grid.is_empty() {
                    return if *up { x + 1 } else { x - 1 };
                }
                let i = grid.partition_point(|g| *g <= x);
                if *up {
                    grid.get(i).copied().unwrap_or(x)
                } else if i >= 2 {
                    grid[i - 2]
                } else {
                    x
                }
            }
        }
    }

    pub fn holds(&self, s: &[Value], grids: &Grids) -> bool {
        self.eval(s, grids) != 0
    }

    pub fn vars(&self, out: &mut Vec<VarId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) | Expr::Val(v, _) | Expr::Step(v, _) => out.push(*v),
            Expr::Not(e) | Expr::Sign(e) => e.vars(out),
            Expr::And(xs) | Expr::Or(xs) | Expr::Sum(xs) => xs.iter().for_each(|x| x.vars(out)),
            Expr::Cmp(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Expr::Ite(c, t, e) => {
                c.vars(out);
                t.vars(out);
                e.vars(out);
            }
        }
    }

    /// Rewrites every node bottom-up.
    pub fn map(&self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let e = match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Val(..) | Expr::Step(..) => self.clone(),
            Expr::Not(e) => Expr::Not(Box::new(e.map(f))),
            Expr::Sign(e) => Expr::Sign(Box::new(e.map(f))),
            Expr::And(xs) => Expr::And(xs.iter().map(|x| x.map(f)).collect()),
            Expr::Or(xs) => Expr::Or(xs.iter().map(|x| x.map(f)).collect()),
            Expr::Sum(xs) => Expr::Sum(xs.iter().map(|x| x.map(f)).collect()),
            Expr::Cmp(op, a, b) => Expr::Cmp(*op, Box::new(a.map(f)), Box::new(b.map(f))),
            Expr::Ite(c, t, e) => Expr::Ite(Box::new(c.map(f)), Box::new(t.map(f)), Box::new(e.map(f))),
        };
        f(e)
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { e: self, names }
    }
}

pub struct ExprDisplay<'a> {
    e: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.names;
        let sub = |e: &'_ Expr| ExprDisplay { e, names: n }.to_string();
        match self.e {
            Expr::Const(c) | Expr::Val(_, c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(&n[*v]),
            Expr::Not(e) => write!(f, "!{}", sub(e)),
            Expr::And(xs) | Expr::Or(xs) | Expr::Sum(xs) => {
                let sep = match self.e {
                    Expr::And(_) => " & ",
                    Expr::Or(_) => " | ",
                    _ => " + ",
                };
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{}", sub(x))?;
                }
                f.write_str(")")
            }
            Expr::Cmp(op, a, b) => write!(f, "{} {} {}", sub(a), op.symbol(), sub(b)),
            Expr::Ite(c, t, e) => write!(f, "({} ? {} : {})", sub(c), sub(t), sub(e)),
            Expr::Sign(e) => write!(f, "sign({})", sub(e)),
            Expr::Step(v, up) => write!(f, "{}({})", if *up { "next" } else { "prev" }, n[*v]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smart_constructors_fold() {
        assert_eq!(Expr::and([TRUE, TRUE]), TRUE);
        assert_eq!(Expr::and([TRUE, FALSE, Expr::Var(0)]), FALSE);
        assert_eq!(Expr::or([FALSE, Expr::Var(1)]), Expr::Var(1));
        assert_eq!(Expr::not(Expr::not(Expr::Var(2))), Expr::Var(2));
    }

    #[test]
    fn step_follows_grid() {
        let grids = vec![vec![0, 25, 26, 28, 29], vec![]];
        let up = Expr::Step(0, true);
        let down = Expr::Step(0, false);
        assert_eq!(up.eval(&[20, 0], &grids), 25);
        assert_eq!(up.eval(&[29, 0], &grids), 29);
        assert_eq!(down.eval(&[27, 0], &grids), 25);
        assert_eq!(down.eval(&[24, 0], &grids), 24);
        assert_eq!(Expr::Step(1, true).eval(&[0, 4], &grids), 5);
    }

    #[test]
    fn arithmetic_and_sign() {
        let e = Expr::Sign(Box::new(Expr::Sum(vec![Expr::Const(3), Expr::Var(0)])));
        assert_eq!(e.eval(&[-5], &[vec![]]), -1);
        assert_eq!(e.eval(&[-3], &[vec![]]), 0);
    }
}
