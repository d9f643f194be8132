#![allow(dead_code)]

pub mod compression;
pub mod external;
pub mod gen;
pub mod liveness;
pub mod oracle;
pub mod perf;
pub mod scenarios;
pub mod slicing;

use std::path::PathBuf;

use tapcheck::checker::{parse_properties, Property};
use tapcheck::loader::{builtin_catalog, Deployment};
use tapcheck::pipeline::{load, load_text, Inputs, Loaded};

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_inputs(name: &str) -> Inputs {
    let d = fixture_dir(name);
    let props = d.join("props.txt");
    Inputs {
        rules: d.join("rules.tap"),
        deploy: Some(d.join("deploy.json")),
        props: props.exists().then_some(props),
        ..Default::default()
    }
}

pub fn fixture(name: &str) -> Loaded {
    load(&fixture_inputs(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fixture_props(name: &str, l: &Loaded) -> Vec<Property> {
    let p = fixture_dir(name).join("props.txt");
    tapcheck::pipeline::load_properties(&p, &l.brs).unwrap()
}

/// Loads a generated model and its properties.
pub fn model(m: &gen::Model) -> (Loaded, Vec<Property>) {
    let dep = Deployment::parse(&m.deploy).unwrap();
    let l = load_text(&m.rules, &dep, &builtin_catalog(), None)
        .unwrap_or_else(|e| panic!("{e}\n{}", m.rules));
    let step = dep.step_seconds.unwrap_or(60);
    let props = parse_properties(&m.props, step).unwrap();
    (l, props)
}

use std::collections::BTreeSet;

use tapcheck::checker::{prepare, CheckResult, Goal, Trace};
use tapcheck::fsm::{TransitionSystem, TICK};
use tapcheck::ir::Value;

/// Rebuilds the model a result was checked on.
pub fn rebuild(l: &Loaded, p: &Property, res: &CheckResult) -> Result<(TransitionSystem, Goal), String> {
    let rules = if res.slicer == "all" {
        None
    } else {
        let b = p.bind(&l.brs).map_err(|e| e.to_string())?;
        let (label, rules) = tapcheck::slicer::scope(&l.brs, &l.slicers, &b)?;
        assert_eq!(label, res.slicer, "{}", p.id);
        Some(rules)
    };
    prepare(&l.brs, p, rules, true)
}

fn vectors(ts: &TransitionSystem, t: &Trace) -> Vec<Vec<Value>> {
    t.steps
        .iter()
        .map(|s| ts.vars.iter().map(|v| s.state[&v.name]).collect())
        .collect()
}

/// The trace replays, violates the goal, and (for lassos) its loop is fair
/// and takes the tick.
pub fn witnesses(ts: &TransitionSystem, goal: &Goal, t: &Trace) -> Result<(), String> {
    t.replay(ts)?;
    let st = vectors(ts, t);
    let at = |e: &tapcheck::fsm::Expr, k: usize| e.holds(&st[k], &ts.grids);
    let n = st.len();
    let suffix_free = |q: &tapcheck::fsm::Expr, from: usize| (from..n).all(|k| !at(q, k));
    let ok = match goal {
        Goal::Safety(bad) => at(bad, n - 1),
        Goal::LeadsTo(p, q) => {
            let ls = t.loop_start.ok_or("leadsto trace without a loop")?;
            (0..n).any(|i| at(p, i) && suffix_free(q, i.min(ls)))
        }
        Goal::Eventually(q) => t.loop_start.is_some() && suffix_free(q, 0),
        Goal::BoundedAbsence(p, w, f) => (0..n).any(|i| {
            at(p, i)
                && (i..n).any(|j| {
                    let ticks = t.steps[i + 1..=j].iter().filter(|s| s.command == "tick").count();
                    at(f, j) && (ticks as u32) < *w
                })
        }),
    };
    if !ok {
        return Err("trace does not violate the goal".into());
    }
    if let Some(ls) = t.loop_start {
        let taken: BTreeSet<&str> = t.steps[ls + 1..].iter().map(|s| s.command.as_str()).collect();
        if !taken.contains(ts.label_name(TICK)) {
            return Err("loop never ticks".into());
        }
        let mut always: Option<BTreeSet<String>> = None;
        let mut out = Vec::new();
        for s in &st[ls..n - 1] {
            ts.successors(s, &mut out);
            let en: BTreeSet<String> = out
                .iter()
                .filter(|(l, _)| ts.is_fair(*l))
                .map(|(l, _)| ts.label_name(*l).to_owned())
                .collect();
            always = Some(match always {
                None => en,
                Some(a) => a.intersection(&en).cloned().collect(),
            });
        }
        if let Some(missing) = always.unwrap_or_default().iter().find(|l| !taken.contains(l.as_str())) {
            return Err(format!("loop starves `{missing}`"));
        }
    }
    Ok(())
}

/// Every violated result's trace witnesses its property.
pub fn check_traces(l: &Loaded, props: &[Property], results: &[CheckResult]) -> Result<usize, String> {
    let mut n = 0;
    for (p, r) in props.iter().zip(results) {
        assert_eq!(p.id, r.property);
        if let Some(t) = r.verdict.trace() {
            let (ts, goal) = rebuild(l, p, r)?;
            witnesses(&ts, &goal, t).map_err(|e| format!("{}: {e}", p.id))?;
            n += 1;
        }
    }
    Ok(n)
}
