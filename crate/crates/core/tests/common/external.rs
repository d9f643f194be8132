//! Cross-check through an external symbolic checker, when installed.

use std::path::PathBuf;
use std::process::Command;

use tapcheck::checker::{run_suite, PropertyKind, SuiteOptions};
use tapcheck::pipeline::smv_models;

/// The external symbolic checker, when installed.
pub fn nusmv() -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .flat_map(|d| ["NuSMV", "nuXmv"].map(|n| d.join(n)))
        .find(|p| p.is_file())
}

/// Runs the external checker on each fixture's monolithic model and compares
/// its spec results with the built-in verdicts. `None` when not installed.
pub fn cross_check(names: &[&str]) -> Option<Result<usize, String>> {
    let bin = nusmv()?;
    let dir = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for name in names {
        let l = super::fixture(name);
        let props = super::fixture_props(name, &l);
        let ours = run_suite(&l.brs, &l.slicers, &props, &SuiteOptions { monolithic: true, ..Default::default() });
        let out = smv_models(&l, &props, true, true);
        let text = match &out.models[0].1 {
            Ok(t) => t.clone(),
            Err(e) => return Some(Err(format!("{name}: {e}"))),
        };
        let file = dir.path().join(format!("{name}.smv"));
        std::fs::write(&file, text).unwrap();
        let run = Command::new(&bin).arg(&file).output().unwrap();
        let log = String::from_utf8_lossy(&run.stdout).into_owned();
        // result lines in spec order: "-- specification ... is true|false"
        let theirs: Vec<bool> = log
            .lines()
            .filter(|l| l.starts_with("-- specification") || l.starts_with("-- invariant"))
            .map(|l| l.trim_end().ends_with("is true"))
            .collect();
        // bounded absence has no spec line
        let checked: Vec<bool> = props
            .iter()
            .zip(&ours)
            .filter(|(p, _)| !matches!(p.kind, PropertyKind::BoundedAbsence { .. }))
            .map(|(_, r)| !r.verdict.is_violated())
            .collect();
        if theirs.len() != checked.len() || theirs != checked {
            return Some(Err(format!("{name}: external {theirs:?} built-in {checked:?}\n{log}")));
        }
        compared += theirs.len();
    }
    Some(Ok(compared))
}
