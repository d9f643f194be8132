use std::collections::{BTreeMap, BTreeSet};

use super::{representatives, Assignment, Domain, IrError, Operand, Predicate, Rule, Value};

/// Joint assignments beyond this are refused instead of enumerated.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

/// Name resolution for analyses that enumerate attribute values.
pub trait Scope {
    fn domain(&self, attr: &str) -> Option<&Domain>;
    /// Candidate values of a range-valued preference constant.
    fn param_values(&self, param: &str) -> Option<Vec<Value>>;
}

/// Same target attribute (names are subject-qualified) with different values.
pub fn conflicting(a: &Assignment, b: &Assignment) -> bool {
    a.target == b.target && a.value != b.value
}

/// True when some joint valuation satisfies every predicate in both sets.
pub fn sibling_conditions(
    ci: &[Predicate],
    cj: &[Predicate],
    scope: &dyn Scope,
) -> Result<bool, IrError> {
    let preds: Vec<&Predicate> = ci.iter().chain(cj).collect();
    let space = ValuationSpace::new(&preds, &BTreeMap::new(), scope)?;
    Ok(space.any(|look| preds.iter().all(|p| p.eval(look) == Some(true))))
}

/// Syntactically identical triggers and mutually non-exclusive conditions.
pub fn sibling_rules(ri: &Rule, rj: &Rule, scope: &dyn Scope) -> Result<bool, IrError> {
    if ri.trigger.canonical() != rj.trigger.canonical() {
        return Ok(false);
    }
    let ci: Vec<Predicate> = ri.conditions().cloned().collect();
    let cj: Vec<Predicate> = rj.conditions().cloned().collect();
    sibling_conditions(&ci, &cj, scope)
}

/// Finite set of representative valuations for the names a group of
/// predicates mentions. Int attributes are reduced to one value per region
/// between the constants compared against them.
pub struct ValuationSpace {
    vars: Vec<(String, Vec<Value>)>,
}

impl ValuationSpace {
    /// `extra_cuts` adds values (e.g. an assignment being tested) to an
    /// attribute's region split.
    pub fn new(
        preds: &[&Predicate],
        extra_cuts: &BTreeMap<String, BTreeSet<Value>>,
        scope: &dyn Scope,
    ) -> Result<Self, IrError> {
        let mut cuts: BTreeMap<String, BTreeSet<Value>> = BTreeMap::new();
        let mut params: BTreeSet<String> = BTreeSet::new();
        for p in preds {
            for a in p.expr.atoms() {
                let entry = cuts.entry(a.attr.clone()).or_default();
                match &a.rhs {
                    Operand::Value(v) => {
                        entry.insert(*v);
                    }
                    Operand::Param(name) => {
                        let vals = scope
                            .param_values(name)
                            .ok_or_else(|| IrError::UnknownParameter(name.clone()))?;
                        entry.extend(vals);
                        params.insert(name.clone());
                    }
                    Operand::Lit(_) => {}
                }
            }
        }
        for (attr, extra) in extra_cuts {
            cuts.entry(attr.clone()).or_default().extend(extra.iter().copied());
        }
        let mut vars = Vec::new();
        for (attr, c) in cuts {
            let domain = scope
                .domain(&attr)
                .ok_or_else(|| IrError::UnknownAttribute(attr.clone()))?;
            vars.push((attr, representatives(domain, &c)));
        }
        for p in params {
            let vals = scope.param_values(&p).unwrap_or_default();
            vars.push((p, vals));
        }
        let mut total: usize = 1;
        for (name, vals) in &vars {
            total = total.saturating_mul(vals.len().max(1));
            if total > ENUMERATION_LIMIT {
                let widest = vars
                    .iter()
                    .max_by_key(|(_, v)| v.len())
                    .map(|(n, _)| n.clone())
                    .unwrap_or_else(|| name.clone());
                return Err(IrError::AnalysisLimit {
                    attr: widest,
                    limit: ENUMERATION_LIMIT,
                });
            }
        }
        Ok(ValuationSpace { vars })
    }

    pub fn values_of(&self, name: &str) -> Option<&[Value]> {
        self.vars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Calls `f` on each joint valuation until it returns true.
    pub fn any(&self, mut f: impl FnMut(&dyn Fn(&str) -> Option<Value>) -> bool) -> bool {
        if self.vars.iter().any(|(_, v)| v.is_empty()) {
            return false;
        }
        let mut idx = vec![0usize; self.vars.len()];
        loop {
            let current: BTreeMap<&str, Value> = self
                .vars
                .iter()
                .zip(&idx)
                .map(|((n, vals), &i)| (n.as_str(), vals[i]))
                .collect();
            let look = |n: &str| current.get(n).copied();
            if f(&look) {
                return true;
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return false;
                }
                idx[k] += 1;
                if idx[k] < self.vars[k].1.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}
