//! File loading and the end-to-end runs behind the CLI subcommands.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::checker::{
    apply_verdicts, instantiate_properties, parse_properties, prepare_shared, run_suite,
    CheckResult, Property, SuiteOptions,
};
use crate::error::LoadError;
use crate::interaction::{
    build_expression_deps, build_rule_deps, detect_threats, DependencyEdge, OfflinePolicy,
    ThreatCandidate,
};
use crate::loader::{
    bind, builtin_catalog, load_capabilities, load_deployment, parse_rules_with, BoundRuleSet,
    Deployment, DEFAULT_STEP_SECONDS,
};
use crate::slicer::{route, slice, Slicer};
use crate::smv::emit_smv;

#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub rules: PathBuf,
    /// Builtin catalog when absent.
    pub caps: Option<PathBuf>,
    pub deploy: Option<PathBuf>,
    pub props: Option<PathBuf>,
    /// Overrides every connection's policy.
    pub policy: Option<OfflinePolicy>,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub brs: BoundRuleSet,
    pub edges: BTreeSet<DependencyEdge>,
    pub slicers: Vec<Slicer>,
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Binds rules from text, for callers that already hold the inputs.
pub fn load_text(
    rules: &str,
    dep: &Deployment,
    caps: &crate::loader::CapabilityCatalog,
    policy: Option<OfflinePolicy>,
) -> Result<Loaded, LoadError> {
    let step = dep.step_seconds.unwrap_or(DEFAULT_STEP_SECONDS);
    let rs = parse_rules_with(rules, step)?;
    let mut brs = bind(&rs, dep, caps)?;
    if let Some(p) = policy {
        brs.set_policy(p);
    }
    let edges = build_rule_deps(&brs, &build_expression_deps(&brs));
    let slicers = slice(&brs, &edges);
    Ok(Loaded {
        brs,
        edges,
        slicers,
    })
}

pub fn load(inputs: &Inputs) -> Result<Loaded, LoadError> {
    let caps = match &inputs.caps {
        Some(p) => load_capabilities(p)?,
        None => builtin_catalog(),
    };
    let dep = match &inputs.deploy {
        Some(p) => load_deployment(p)?,
        None => Deployment::default(),
    };
    load_text(&read(&inputs.rules)?, &dep, &caps, inputs.policy)
}

pub fn load_properties(path: &Path, brs: &BoundRuleSet) -> Result<Vec<Property>, LoadError> {
    parse_properties(&read(path)?, brs.step_seconds)
}

pub struct ThreatRun {
    pub candidates: Vec<ThreatCandidate>,
    pub results: Vec<CheckResult>,
}

/// Detects candidates and decides each with its template properties.
pub fn run_threats(l: &Loaded, opts: &SuiteOptions) -> Result<ThreatRun, LoadError> {
    let mut candidates =
        detect_threats(&l.brs).map_err(|source| LoadError::Ir { source, span: None })?;
    let props = instantiate_properties(&l.brs, &candidates);
    let results = run_suite(&l.brs, &l.slicers, &props, opts);
    apply_verdicts(&mut candidates, &results);
    Ok(ThreatRun {
        candidates,
        results,
    })
}

pub fn run_check(l: &Loaded, props: &[Property], opts: &SuiteOptions) -> Vec<CheckResult> {
    run_suite(&l.brs, &l.slicers, props, opts)
}

pub struct SmvOutput {
    pub models: Vec<(String, Result<String, String>)>,
    /// Properties left out because they could not be routed.
    pub warnings: Vec<String>,
}

type Group<'a> = (String, Option<BTreeSet<String>>, Vec<&'a Property>);

/// SMV text per slicer (or one `all` model), with the properties routed to
/// it.
pub fn smv_models(l: &Loaded, props: &[Property], monolithic: bool, compress: bool) -> SmvOutput {
    let mut warnings = Vec::new();
    let groups: Vec<Group> = if monolithic {
        vec![("all".to_owned(), None, props.iter().collect())]
    } else {
        let mut g: Vec<Group> = l
            .slicers
            .iter()
            .map(|s| (s.id.clone(), Some(s.rule_set()), Vec::new()))
            .collect();
        for p in props {
            let routed = p
                .bind(&l.brs)
                .map_err(|e| e.to_string())
                .and_then(|b| route(&l.brs, &l.slicers, &b));
            match routed {
                Ok(k) => g[k].2.push(p),
                Err(e) => warnings.push(format!("property {} not emitted: {e}", p.id)),
            }
        }
        g
    };
    let models = groups
        .into_iter()
        .map(|(id, rules, ps)| {
            let text = prepare_shared(&l.brs, &ps, rules, compress).map(|(ts, goals)| {
                let mut ok = Vec::new();
                let mut notes = String::new();
                for (pid, g) in goals {
                    match g {
                        Ok(g) => ok.push((pid, g)),
                        Err(e) => notes.push_str(&format!("-- property {pid} skipped: {e}\n")),
                    }
                }
                notes + &emit_smv(&ts, &ok)
            });
            (id, text)
        })
        .collect();
    SmvOutput { models, warnings }
}
