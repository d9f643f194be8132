//! Value-class compression of integer vars.
//!
//! Int vars that are compared or assigned to each other form a class. Every
//! constant the model compares a class against splits its domain into
//! regions; values inside one region are indistinguishable to every guard, so
//! each var is re-encoded as the index of its region.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::expr::{Expr, VarId};
use super::system::{TransitionSystem, VarRole};
use crate::ir::{representatives, Domain, Value};

/// Code `i` stands for the region starting at `reps[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueMap {
    pub reps: Vec<Value>,
}

impl ValueMap {
    pub fn code(&self, x: Value) -> Value {
        (self.reps.partition_point(|r| *r <= x).max(1) - 1) as Value
    }

    pub fn decode(&self, code: Value) -> Value {
        self.reps[code as usize]
    }
}

fn compressible(ts: &TransitionSystem, v: VarId) -> bool {
    let var = &ts.vars[v];
    matches!(
        var.role,
        VarRole::Attribute(_) | VarRole::Param(_) | VarRole::Saved(_)
    ) && matches!(var.domain, Some(Domain::Int { .. }))
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let n = self.0[c];
            self.0[c] = r;
            c = n;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Vars whose value an expression passes through unchanged.
fn value_vars(e: &Expr, out: &mut Vec<VarId>) {
    match e {
        Expr::Var(v) | Expr::Step(v, _) => out.push(*v),
        Expr::Ite(_, t, f) => {
            value_vars(t, out);
            value_vars(f, out);
        }
        Expr::Sum(xs) => xs.iter().for_each(|x| value_vars(x, out)),
        _ => {}
    }
}

fn collect(e: &Expr, uf: &mut UnionFind, consts: &mut Vec<(VarId, Value)>) {
    match e {
        Expr::Val(v, c) => consts.push((*v, *c)),
        Expr::Cmp(_, a, b) => {
            let mut vs = Vec::new();
            value_vars(a, &mut vs);
            value_vars(b, &mut vs);
            for w in vs.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        _ => {}
    }
    match e {
        Expr::Not(x) | Expr::Sign(x) => collect(x, uf, consts),
        Expr::And(xs) | Expr::Or(xs) | Expr::Sum(xs) => {
            xs.iter().for_each(|x| collect(x, uf, consts))
        }
        Expr::Cmp(_, a, b) => {
            collect(a, uf, consts);
            collect(b, uf, consts);
        }
        Expr::Ite(c, t, f) => {
            collect(c, uf, consts);
            collect(t, uf, consts);
            collect(f, uf, consts);
        }
        _ => {}
    }
}

/// Region representatives per compressible var. `extra` adds cut values by
/// var name (property constants).
pub fn regions(
    ts: &TransitionSystem,
    extra: &BTreeMap<String, BTreeSet<Value>>,
) -> BTreeMap<VarId, Vec<Value>> {
    let n = ts.vars.len();
    let mut uf = UnionFind((0..n).collect());
    let mut consts = Vec::new();
    let mut exprs: Vec<&Expr> = Vec::new();
    for c in &ts.commands {
        exprs.push(&c.guard);
        for (v, e) in &c.updates {
            exprs.push(e);
            let mut vs = Vec::new();
            value_vars(e, &mut vs);
            for w in vs {
                uf.union(*v, w);
            }
        }
    }
    exprs.extend(ts.shadows.iter().map(|s| &s.trigger));
    exprs.extend(ts.pending.values());
    for e in exprs {
        collect(e, &mut uf, &mut consts);
    }

    let mut cuts: BTreeMap<usize, BTreeSet<Value>> = BTreeMap::new();
    for (v, c) in consts {
        cuts.entry(uf.find(v)).or_default().insert(c);
    }
    for v in 0..n {
        let root = uf.find(v);
        let set = cuts.entry(root).or_default();
        set.extend(ts.init[v].iter().copied());
        if let Some(x) = extra.get(&ts.vars[v].name) {
            set.extend(x.iter().copied());
        }
    }
    let mut out = BTreeMap::new();
    for v in 0..n {
        if !compressible(ts, v) {
            continue;
        }
        let domain = ts.vars[v].domain.as_ref().expect("compressible var has a domain");
        out.insert(v, representatives(domain, &cuts[&uf.find(v)]));
    }
    out
}

/// Sets the raw model's step grids so drift moves region by region.
pub fn set_grids(ts: &mut TransitionSystem, extra: &BTreeMap<String, BTreeSet<Value>>) {
    for (v, reps) in regions(ts, extra) {
        ts.grids[v] = reps;
    }
}

/// Re-encodes every compressible var as its region index.
pub fn compress(
    ts: &TransitionSystem,
    extra: &BTreeMap<String, BTreeSet<Value>>,
) -> TransitionSystem {
    let maps: BTreeMap<VarId, ValueMap> = regions(ts, extra)
        .into_iter()
        .map(|(v, reps)| (v, ValueMap { reps }))
        .collect();
    let mut out = ts.clone();
    let mut rewrite = |e: Expr| match e {
        Expr::Val(v, c) => match maps.get(&v) {
            Some(m) => Expr::Val(v, m.code(c)),
            None => Expr::Val(v, c),
        },
        e => e,
    };
    for c in &mut out.commands {
        c.guard = c.guard.map(&mut rewrite);
        for (_, e) in &mut c.updates {
            *e = e.map(&mut rewrite);
        }
    }
    for s in &mut out.shadows {
        s.trigger = s.trigger.map(&mut rewrite);
    }
    for e in out.pending.values_mut() {
        *e = e.map(&mut rewrite);
    }
    for (v, m) in &maps {
        let var = &mut out.vars[*v];
        var.lo = 0;
        var.hi = m.reps.len() as Value - 1;
        let mut codes: Vec<Value> = out.init[*v].iter().map(|x| m.code(*x)).collect();
        codes.dedup();
        out.init[*v] = codes;
        if m.reps.len() == 1 {
            out.warnings
                .push(format!("{} is never compared; it collapses to one value", var.name));
        }
        out.value_maps.insert(var.name.clone(), m.clone());
    }
    for g in &mut out.grids {
        g.clear();
    }
    out.compressed = true;
    out.reindex();
    out
}
