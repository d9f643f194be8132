//! Threat fixtures with their expected candidate statuses.

use std::time::{Duration, Instant};

use tapcheck::checker::{instantiate_properties, SuiteOptions};
use tapcheck::interaction::{detect_threats, ThreatStatus};
use tapcheck::pipeline::run_threats;

/// (fixture, candidate, expected status word)
pub const EXPECTED: &[(&str, &str, &str)] = &[
    ("curling_iron", "T4:r2:r1", "confirmed"),
    ("heater_window", "T1:on:win", "refuted"),
    ("heater_window_swapped", "T1:on:win", "confirmed"),
    ("same_trigger", "T2:a:b", "syntactic"),
    ("conflict", "T3:a:b", "confirmed"),
    ("action_condition", "T6:a:b", "confirmed"),
    ("dual_fan", "T5:f1:f2", "confirmed"),
    ("outlet_hub", "T7:r5:r4", "confirmed"),
    ("light_chain", "T1:a:b", "confirmed"),
];

pub fn word(s: &ThreatStatus) -> &'static str {
    match s {
        ThreatStatus::Syntactic => "syntactic",
        ThreatStatus::Confirmed(_) => "confirmed",
        ThreatStatus::Refuted(_) => "refuted",
    }
}

/// Runs one fixture's threat analysis; checks the expected candidate's
/// status and that every counterexample witnesses its property.
pub fn threat_fixture(name: &str, cand: &str, want: &str) -> Result<Duration, String> {
    let t0 = Instant::now();
    let l = super::fixture(name);
    let run = run_threats(&l, &SuiteOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    let c = run
        .candidates
        .iter()
        .find(|c| c.id == cand)
        .ok_or_else(|| format!("{name}: no {cand} among {:?}", run.candidates.iter().map(|c| &c.id).collect::<Vec<_>>()))?;
    if word(&c.status) != want {
        return Err(format!("{name}: {cand} is {:?}, want {want}", c.status));
    }
    let props = instantiate_properties(&l.brs, &detect_threats(&l.brs).unwrap());
    super::check_traces(&l, &props, &run.results).map_err(|e| format!("{name}: {e}"))?;
    let own: Vec<_> = run.results.iter().filter(|r| r.origin_rules_include(cand)).collect();
    if (want == "syntactic") != own.is_empty() {
        return Err(format!("{name}: {cand} has {} properties", own.len()));
    }
    if own.iter().any(|r| r.verdict.is_rejected()) {
        return Err(format!("{name}: {cand} has a rejected property"));
    }
    Ok(elapsed)
}

trait OriginExt {
    fn origin_rules_include(&self, cand: &str) -> bool;
}

impl OriginExt for tapcheck::checker::CheckResult {
    fn origin_rules_include(&self, cand: &str) -> bool {
        matches!(&self.origin, tapcheck::checker::Origin::Threat { candidate, .. } if candidate == cand)
    }
}

/// Heater thresholds in both orders: (T1 leadsto verdict with off below
/// the window, L1 and L2 verdicts with them swapped).
pub fn heater_orderings() -> (String, Vec<(String, &'static str)>) {
    let l = super::fixture("heater_window");
    let run = run_threats(&l, &SuiteOptions::default()).unwrap();
    let t1 = run
        .results
        .iter()
        .find(|r| r.property.starts_with("T1:on:win/"))
        .map(|r| r.verdict.word().to_owned())
        .unwrap_or_else(|| "missing".to_owned());
    (t1, check_fixture("heater_window_swapped"))
}

/// User properties of a fixture with their verdict words; traces checked.
pub fn check_fixture(name: &str) -> Vec<(String, &'static str)> {
    let l = super::fixture(name);
    let props = super::fixture_props(name, &l);
    let res = tapcheck::checker::run_suite(&l.brs, &l.slicers, &props, &SuiteOptions::default());
    super::check_traces(&l, &props, &res).unwrap();
    res.iter().map(|r| (r.property.clone(), r.verdict.word())).collect()
}

pub const ALL: &[&str] = &[
    "action_condition",
    "conflict",
    "curling_iron",
    "dual_fan",
    "heater_window",
    "heater_window_swapped",
    "light_chain",
    "outlet_hub",
    "oven",
    "same_trigger",
    "two_cluster",
];

/// Every violated result on every fixture, threat and user properties,
/// sliced and monolithic: (violated, witnessed).
pub fn all_traces() -> Result<(usize, usize), String> {
    let mut violated = 0;
    let mut ok = 0;
    for name in ALL {
        let l = super::fixture(name);
        let mut props = instantiate_properties(&l.brs, &detect_threats(&l.brs).unwrap());
        if super::fixture_dir(name).join("props.txt").exists() {
            props.extend(super::fixture_props(name, &l));
        }
        for monolithic in [false, true] {
            let opts = SuiteOptions { monolithic, ..Default::default() };
            let res = tapcheck::checker::run_suite(&l.brs, &l.slicers, &props, &opts);
            violated += res.iter().filter(|r| r.verdict.is_violated()).count();
            ok += super::check_traces(&l, &props, &res).map_err(|e| format!("{name}: {e}"))?;
        }
    }
    Ok((violated, ok))
}
