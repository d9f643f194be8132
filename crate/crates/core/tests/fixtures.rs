mod common;

use std::process::Command;
use std::time::Duration;

use common::scenarios::{all_traces, check_fixture, heater_orderings, threat_fixture, EXPECTED};
use tapcheck::checker::{instantiate_properties, run_suite, SuiteOptions, Verdict};
use tapcheck::interaction::detect_threats;

#[test]
fn fixture_statuses_and_traces() {
    for (name, cand, want) in EXPECTED {
        let t = threat_fixture(name, cand, want).unwrap();
        assert!(t < Duration::from_secs(1), "{name} took {t:?}");
    }
}

#[test]
fn heater_threshold_orderings() {
    let (t1, swapped) = heater_orderings();
    // off at 20 before the window at 28: the window is never reached
    assert_eq!(t1, "violated");
    // swapped: the window opens and the heater is never turned off
    assert_eq!(swapped, [("L1".to_owned(), "holds"), ("L2".to_owned(), "violated")]);
}

#[test]
fn every_counterexample_witnesses_its_property() {
    let (violated, ok) = all_traces().unwrap();
    assert!(violated > 10);
    assert_eq!(violated, ok);
}

#[test]
fn user_properties_on_fixtures() {
    assert_eq!(check_fixture("curling_iron"), [("S1".to_owned(), "violated")]);
    assert_eq!(check_fixture("oven"), [("L4".to_owned(), "holds")]);
    assert_eq!(check_fixture("outlet_hub"), [("L1".to_owned(), "violated")]);
}

#[test]
fn verdicts_agree_with_brute_force() {
    for name in ["curling_iron", "heater_window", "heater_window_swapped", "dual_fan", "outlet_hub", "oven", "light_chain"] {
        let l = common::fixture(name);
        let mut props = instantiate_properties(&l.brs, &detect_threats(&l.brs).unwrap());
        if common::fixture_dir(name).join("props.txt").exists() {
            props.extend(common::fixture_props(name, &l));
        }
        let res = run_suite(&l.brs, &l.slicers, &props, &SuiteOptions { monolithic: true, ..Default::default() });
        // co2 x time has ~7M concrete values; dual_fan is enumerated compressed
        let concrete = name != "dual_fan";
        for (p, r) in props.iter().zip(&res) {
            let (ts, goal) = tapcheck::checker::prepare(&l.brs, p, None, !concrete).unwrap();
            let want = common::oracle::violated(&ts, &goal, 3_000_000);
            assert!(!matches!(r.verdict, Verdict::Rejected(_)), "{name} {}", p.id);
            assert_eq!(r.verdict.is_violated(), want, "{name} {}", p.id);
        }
    }
}

fn tapcheck(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tapcheck")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr),
    )
}

fn fx(name: &str, file: &str) -> String {
    common::fixture_dir(name).join(file).display().to_string()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let run = |sub: &str, name: &str, extra: &[&str]| {
        let rules = fx(name, "rules.tap");
        let deploy = fx(name, "deploy.json");
        let mut a = vec![sub, "--rules", &rules, "--deploy", &deploy, "--out", &out];
        a.extend_from_slice(extra);
        tapcheck(&a).0
    };
    assert_eq!(run("threats", "curling_iron", &[]), 2);
    let props = fx("curling_iron", "props.txt");
    assert_eq!(run("check", "curling_iron", &["--props", &props]), 2);
    let props = fx("oven", "props.txt");
    assert_eq!(run("check", "oven", &["--props", &props]), 0);
    // dual fan: the absence property spans two slicers
    let props = fx("dual_fan", "props.txt");
    assert_eq!(run("check", "dual_fan", &["--props", &props]), 3);
    assert_eq!(run("check", "dual_fan", &["--props", &props, "--monolithic"]), 2);
    assert!(dir.path().join("results.json").exists());
    assert!(dir.path().join("traces").read_dir().unwrap().next().is_some());

    let bad = dir.path().join("bad.tap");
    std::fs::write(&bad, "rule x: when then\n").unwrap();
    let (code, msg) = tapcheck(&["threats", "--rules", bad.to_str().unwrap(), "--out", &out]);
    assert_eq!(code, 1, "{msg}");
    let empty = dir.path().join("empty.tap");
    std::fs::write(&empty, "# nothing\n").unwrap();
    assert_eq!(tapcheck(&["threats", "--rules", empty.to_str().unwrap(), "--out", &out]).0, 0);

    let unknown = dir.path().join("unknown.txt");
    std::fs::write(&unknown, "never U: nosuch = on\n").unwrap();
    assert_eq!(run("check", "oven", &["--props", unknown.to_str().unwrap()]), 3);
}

#[test]
fn cli_slice_and_smv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let rules = fx("two_cluster", "rules.tap");
    let deploy = fx("two_cluster", "deploy.json");
    let props = fx("two_cluster", "props.txt");
    let (code, _) = tapcheck(&["slice", "--rules", &rules, "--deploy", &deploy, "--out", &out]);
    assert_eq!(code, 0);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("slices.json")).unwrap()).unwrap();
    assert_eq!(m.as_array().unwrap().len(), 2);
    let (code, _) = tapcheck(&["emit-smv", "--rules", &rules, "--deploy", &deploy, "--props", &props, "--out", &out]);
    assert_eq!(code, 0);
    let s1 = std::fs::read_to_string(dir.path().join("S1.smv")).unwrap();
    assert!(s1.contains("MODULE main") && s1.contains("LTLSPEC"));
}
