//! Runs a batch of properties, each on the slicer that owns it.

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::property::{Goal, Origin, Property};
use super::verdict::{check, Verdict, DEFAULT_BUDGET};
use crate::fsm::{compile, CompileOptions, TransitionSystem};
use crate::loader::BoundRuleSet;
use crate::slicer::{scope, Slicer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteOptions {
    pub budget: usize,
    /// Check every property against the whole rule set.
    pub monolithic: bool,
    pub compress: bool,
    pub jobs: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            budget: DEFAULT_BUDGET,
            monolithic: false,
            compress: true,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub property: String,
    pub origin: Origin,
    /// Slicer id, or `all` for monolithic runs.
    pub slicer: String,
    pub verdict: Verdict,
    pub explored: usize,
    #[serde(skip)]
    pub elapsed: Duration,
    /// Counterexample rendered as a table, when violated.
    #[serde(skip)]
    pub table: Option<String>,
}

/// Model and goal for `prop` over the rules in `rules` (all when `None`).
pub fn prepare(
    brs: &BoundRuleSet,
    prop: &Property,
    rules: Option<BTreeSet<String>>,
    compress: bool,
) -> Result<(TransitionSystem, Goal), String> {
    let bound = prop.bind(brs).map_err(|e| e.to_string())?;
    let ts = compile(
        brs,
        &CompileOptions {
            rules,
            extra_attributes: bound.attributes(),
            extra_cuts: bound.cuts(),
            compress,
        },
    )
    .map_err(|e| e.to_string())?;
    let ts = ts.with_latches(&bound.latches());
    let goal = bound.compile(&ts).map_err(|e| e.to_string())?;
    Ok((ts, goal))
}

pub type SharedGoals = Vec<(String, Result<Goal, String>)>;

/// One model for several properties: the union of their attributes, cuts
/// and latches. Properties that fail to bind or compile carry their error.
pub fn prepare_shared(
    brs: &BoundRuleSet,
    props: &[&Property],
    rules: Option<BTreeSet<String>>,
    compress: bool,
) -> Result<(TransitionSystem, SharedGoals), String> {
    let bound: Vec<Result<Property, String>> =
        props.iter().map(|p| p.bind(brs).map_err(|e| e.to_string())).collect();
    let mut opts = CompileOptions {
        rules,
        compress,
        ..Default::default()
    };
    let mut latches = BTreeSet::new();
    for b in bound.iter().flatten() {
        opts.extra_attributes.extend(b.attributes());
        for (k, v) in b.cuts() {
            opts.extra_cuts.entry(k).or_default().extend(v);
        }
        latches.extend(b.latches());
    }
    let ts = compile(brs, &opts).map_err(|e| e.to_string())?;
    let ts = ts.with_latches(&latches.into_iter().collect::<Vec<_>>());
    let goals = props
        .iter()
        .zip(bound)
        .map(|(p, b)| {
            let g = b.and_then(|b| b.compile(&ts).map_err(|e| e.to_string()));
            (p.id.clone(), g)
        })
        .collect();
    Ok((ts, goals))
}

fn run_one(brs: &BoundRuleSet, slicers: &[Slicer], prop: &Property, opts: &SuiteOptions) -> CheckResult {
    let (slicer, rules) = if opts.monolithic || slicers.is_empty() {
        (Ok("all".to_owned()), None)
    } else {
        match prop.bind(brs) {
            Err(e) => (Err(e.to_string()), None),
            Ok(b) => match scope(brs, slicers, &b) {
                Ok((id, rules)) => (Ok(id), Some(rules)),
                Err(e) => (Err(e), None),
            },
        }
    };
    let mut res = CheckResult {
        property: prop.id.clone(),
        origin: prop.origin.clone(),
        slicer: slicer.clone().unwrap_or_else(|_| "-".to_owned()),
        verdict: Verdict::Holds,
        explored: 0,
        elapsed: Duration::ZERO,
        table: None,
    };
    let prepared = slicer.and_then(|_| prepare(brs, prop, rules, opts.compress));
    match prepared {
        Err(e) => res.verdict = Verdict::Rejected(e),
        Ok((ts, goal)) => {
            let o = check(&ts, &goal, opts.budget);
            res.table = o.verdict.trace().map(|t| t.table(&ts));
            res.verdict = o.verdict;
            res.explored = o.explored;
            res.elapsed = o.elapsed;
        }
    }
    res
}

/// Checks every property; results come back in input order.
pub fn run_suite(
    brs: &BoundRuleSet,
    slicers: &[Slicer],
    props: &[Property],
    opts: &SuiteOptions,
) -> Vec<CheckResult> {
    crate::par::map(props, opts.jobs, |p| run_one(brs, slicers, p, opts))
}
