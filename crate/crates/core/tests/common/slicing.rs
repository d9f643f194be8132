//! Sliced verdicts against monolithic brute force on random rule sets.

use std::collections::BTreeSet;

use super::gen::{bool_model, rng};
use super::oracle;
use rand::Rng;
use tapcheck::checker::{instantiate_properties, prepare, run_suite, SuiteOptions, Verdict};
use tapcheck::interaction::detect_threats;
use tapcheck::pipeline::Loaded;

/// Every normalized rule sits in exactly one slicer, every dependency edge
/// stays inside one, and remainder rules touch no edge.
pub fn invariants(l: &Loaded) -> Result<(), String> {
    let all: Vec<&str> = l.brs.rules.iter().map(|r| r.id.as_str()).collect();
    let mut seen = BTreeSet::new();
    for s in &l.slicers {
        for r in &s.rules {
            if !seen.insert(r.as_str()) {
                return Err(format!("{r} in two slicers"));
            }
        }
    }
    if seen != all.iter().copied().collect() {
        return Err("slicers do not cover the rule set".into());
    }
    for e in &l.edges {
        let home = |r: &str| l.slicers.iter().position(|s| s.contains(r));
        if home(&e.source) != home(&e.sink) {
            return Err(format!("edge {} -> {} crosses slicers", e.source, e.sink));
        }
        if let Some(k) = home(&e.source) {
            if l.slicers[k].is_remainder() {
                return Err(format!("remainder rule {} has an edge", e.source));
            }
        }
    }
    Ok(())
}

#[derive(Default)]
pub struct Tally {
    pub models: usize,
    pub checked: usize,
    pub violated: usize,
    pub rejected: usize,
}

pub fn compare(seed: u64, t: &mut Tally) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.random_range(8..=15);
    let m = bool_model(&mut r, n);
    let (l, props) = super::model(&m);
    invariants(&l).map_err(|e| format!("seed {seed}: {e}"))?;
    // user properties plus every threat template property
    let cands = detect_threats(&l.brs).map_err(|e| e.to_string())?;
    let mut props = props;
    props.extend(instantiate_properties(&l.brs, &cands));
    let sliced = run_suite(&l.brs, &l.slicers, &props, &SuiteOptions::default());
    t.models += 1;
    for (p, res) in props.iter().zip(&sliced) {
        let v = match &res.verdict {
            Verdict::Rejected(_) => {
                t.rejected += 1;
                continue;
            }
            v => v.is_violated(),
        };
        let (ts, goal) = prepare(&l.brs, p, None, false)?;
        let want = oracle::violated(&ts, &goal, 5_000_000);
        if v != want {
            return Err(format!(
                "seed {seed} {} [{}]: sliced {} monolithic violated={want}\n{}{}",
                p.id,
                res.slicer,
                res.verdict.word(),
                m.rules,
                m.props
            ));
        }
        t.checked += 1;
        t.violated += want as usize;
    }
    Ok(())
}
