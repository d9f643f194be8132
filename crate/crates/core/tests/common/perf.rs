//! State counts on the two-cluster set.

use std::time::{Duration, Instant};

use tapcheck::checker::{run_suite, SuiteOptions};
use tapcheck::par::default_jobs;

pub struct Reduction {
    pub sliced: usize,
    pub monolithic: usize,
    pub elapsed: Duration,
    pub same_verdicts: bool,
    pub words: Vec<String>,
}

/// Sliced + compressed against monolithic concrete exploration on the
/// two-cluster set.
pub fn two_cluster() -> Reduction {
    let t0 = Instant::now();
    let l = super::fixture("two_cluster");
    let props = super::fixture_props("two_cluster", &l);
    let fast = run_suite(&l.brs, &l.slicers, &props, &SuiteOptions::default());
    let slow = run_suite(
        &l.brs,
        &l.slicers,
        &props,
        &SuiteOptions {
            monolithic: true,
            compress: false,
            budget: 50_000_000,
            jobs: default_jobs(),
        },
    );
    let words = fast
        .iter()
        .zip(&slow)
        .map(|(a, b)| format!("{} {}/{} {}/{}", a.property, a.verdict.word(), b.verdict.word(), a.explored, b.explored))
        .collect();
    Reduction {
        words,
        sliced: fast.iter().map(|r| r.explored).sum(),
        monolithic: slow.iter().map(|r| r.explored).sum(),
        elapsed: t0.elapsed(),
        same_verdicts: fast.len() == slow.len()
            && fast.iter().zip(&slow).all(|(a, b)| {
                !a.verdict.is_rejected() && a.verdict.word() == b.verdict.word()
            }),
    }
}
