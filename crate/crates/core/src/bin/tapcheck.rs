use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tapcheck::checker::{CheckResult, SuiteOptions, DEFAULT_BUDGET};
use tapcheck::interaction::{OfflinePolicy, ThreatCandidate};
use tapcheck::pipeline::{self, Inputs, Loaded};
use tapcheck::report::{summary_line, write_json, write_timings, write_traces};
use tapcheck::slicer::manifest;

#[derive(Parser)]
#[command(name = "tapcheck", version, about = "Check trigger-action rules for interaction threats")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Detect interaction threats and confirm or refute each one.
    Threats(Common),
    /// Check the properties in --props.
    Check(Common),
    /// Write the slicer manifest.
    Slice(Common),
    /// Write one SMV model per slicer.
    EmitSmv(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Disable,
    Last,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    rules: PathBuf,
    /// Capability catalog (JSON); the builtin catalog when omitted.
    #[arg(long)]
    caps: Option<PathBuf>,
    #[arg(long)]
    deploy: Option<PathBuf>,
    #[arg(long)]
    props: Option<PathBuf>,
    /// Offline policy for every connection, overriding the deployment.
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    /// Check against the whole rule set instead of per slicer.
    #[arg(long)]
    monolithic: bool,
    /// Maximum states explored per property.
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(usize))]
    budget: usize,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn inputs(&self) -> Inputs {
        Inputs {
            rules: self.rules.clone(),
            caps: self.caps.clone(),
            deploy: self.deploy.clone(),
            props: self.props.clone(),
            policy: self.policy.map(|p| match p {
                Policy::Disable => OfflinePolicy::DisableRules,
                Policy::Last => OfflinePolicy::LastMeasurement,
            }),
        }
    }

    fn suite(&self) -> SuiteOptions {
        SuiteOptions {
            budget: self.budget.max(1),
            monolithic: self.monolithic,
            compress: true,
            jobs: self.jobs.unwrap_or_else(tapcheck::par::default_jobs).max(1),
        }
    }
}

#[derive(Serialize)]
struct ThreatReport<'a> {
    candidates: &'a [ThreatCandidate],
    results: &'a [CheckResult],
}

#[derive(Serialize)]
struct CheckReport<'a> {
    results: &'a [CheckResult],
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn prepare_out(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))
}

fn print_results(results: &[CheckResult]) {
    for r in results {
        println!("{}", summary_line(r));
    }
}

fn load(c: &Common) -> Result<Loaded, ExitCode> {
    let l = pipeline::load(&c.inputs()).map_err(fail)?;
    for w in &l.brs.warnings {
        eprintln!("warning: {w}");
    }
    prepare_out(&c.out).map_err(fail)?;
    Ok(l)
}

fn threats(c: &Common) -> Result<ExitCode, ExitCode> {
    let l = load(c)?;
    let run = pipeline::run_threats(&l, &c.suite()).map_err(fail)?;
    write_json(
        &c.out.join("threats.json"),
        &ThreatReport {
            candidates: &run.candidates,
            results: &run.results,
        },
    )
    .map_err(fail)?;
    write_traces(&c.out, &run.results).map_err(fail)?;
    write_timings(&c.out.join("timings.json"), &run.results).map_err(fail)?;
    for cand in &run.candidates {
        let status = serde_json::to_value(&cand.status)
            .ok()
            .and_then(|v| v["status"].as_str().map(str::to_owned))
            .unwrap_or_default();
        println!("{:<10} {}  {}", status, cand.id, cand.kind.describe());
    }
    print_results(&run.results);
    Ok(if run.candidates.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn check(c: &Common) -> Result<ExitCode, ExitCode> {
    let l = load(c)?;
    let Some(path) = &c.props else {
        return Err(fail("check needs --props"));
    };
    let props = pipeline::load_properties(path, &l.brs).map_err(fail)?;
    let results = pipeline::run_check(&l, &props, &c.suite());
    write_json(&c.out.join("results.json"), &CheckReport { results: &results }).map_err(fail)?;
    write_traces(&c.out, &results).map_err(fail)?;
    write_timings(&c.out.join("timings.json"), &results).map_err(fail)?;
    print_results(&results);
    Ok(if results.iter().any(|r| r.verdict.is_rejected()) {
        ExitCode::from(3)
    } else if results.iter().any(|r| r.verdict.is_violated()) {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn slice_cmd(c: &Common) -> Result<ExitCode, ExitCode> {
    let l = load(c)?;
    let m = manifest(&l.brs, &l.slicers).map_err(fail)?;
    write_json(&c.out.join("slices.json"), &m).map_err(fail)?;
    for e in &m {
        println!("{}: {} rules, {} vars", e.id, e.rules.len(), e.vars.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn emit_smv(c: &Common) -> Result<ExitCode, ExitCode> {
    let l = load(c)?;
    let props = match &c.props {
        Some(p) => pipeline::load_properties(p, &l.brs).map_err(fail)?,
        None => Vec::new(),
    };
    let out = pipeline::smv_models(&l, &props, c.monolithic, true);
    for w in &out.warnings {
        eprintln!("warning: {w}; rerun with --monolithic to include it");
    }
    for (id, text) in &out.models {
        let text = text.as_ref().map_err(fail)?;
        let path = c.out.join(format!("{id}.smv"));
        fs::write(&path, text).map_err(fail)?;
        println!("{}", path.display());
    }
    if !c.monolithic {
        let m = manifest(&l.brs, &l.slicers).map_err(fail)?;
        write_json(&c.out.join("slices.json"), &m).map_err(fail)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Threats(c) => threats(c),
        Cmd::Check(c) => check(c),
        Cmd::Slice(c) => slice_cmd(c),
        Cmd::EmitSmv(c) => emit_smv(c),
    };
    r.unwrap_or_else(|code| code)
}
