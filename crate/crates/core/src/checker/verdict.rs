use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::engine::{explore, find_bounded, find_fair_lasso, find_reachable, BudgetExceeded, Fairness, Path};
use super::property::Goal;
use super::trace::Trace;
use crate::fsm::{Label, TransitionSystem, TICK};

pub const DEFAULT_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", content = "detail", rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated(Trace),
    Rejected(String),
}

impl Verdict {
    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated(_))
    }

    pub fn is_rejected(&self) -> bool {
        matches!(self, Verdict::Rejected(_))
    }

    pub fn word(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated(_) => "violated",
            Verdict::Rejected(_) => "rejected",
        }
    }

    pub fn trace(&self) -> Option<&Trace> {
        match self {
            Verdict::Violated(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub explored: usize,
    pub elapsed: Duration,
}

fn budget_rejection(b: BudgetExceeded) -> Verdict {
    Verdict::Rejected(format!("budget exceeded after {} states", b.0))
}

fn to_trace(ts: &TransitionSystem, states: &[Vec<crate::ir::Value>], path: &Path) -> Trace {
    let snaps: Vec<_> = path.states.iter().map(|&i| states[i as usize].clone()).collect();
    let cmds: Vec<String> = path.labels.iter().map(|&l| ts.label_name(l).to_owned()).collect();
    Trace::new(ts, &snaps, &cmds, path.loop_start)
}

/// Decides one compiled property on `ts`.
pub fn check(ts: &TransitionSystem, goal: &Goal, budget: usize) -> Outcome {
    let t0 = Instant::now();
    let (verdict, explored) = match goal {
        Goal::Safety(bad) => match find_reachable(ts, bad, budget) {
            Ok((Some((states, labels)), n)) => {
                let cmds: Vec<String> = labels.iter().map(|&l| ts.label_name(l).to_owned()).collect();
                (Verdict::Violated(Trace::new(ts, &states, &cmds, None)), n)
            }
            Ok((None, n)) => (Verdict::Holds, n),
            Err(b) => (budget_rejection(b), b.0),
        },
        Goal::LeadsTo(..) | Goal::Eventually(_) | Goal::BoundedAbsence(..) => {
            match explore(ts, budget) {
                Err(b) => (budget_rejection(b), b.0),
                Ok(g) => {
                    let n = g.len();
                    let path = match goal {
                        Goal::BoundedAbsence(p, window, f) => find_bounded(
                            &g.succ,
                            &g.initial,
                            &g.mask(p, ts),
                            &g.mask(f, ts),
                            *window,
                            TICK,
                        ),
                        _ => {
                            let (p, q) = match goal {
                                Goal::LeadsTo(p, q) => (g.mask(p, ts), g.mask(q, ts)),
                                Goal::Eventually(q) => {
                                    let mut p = vec![false; n];
                                    for &i in &g.initial {
                                        p[i as usize] = true;
                                    }
                                    (p, g.mask(q, ts))
                                }
                                _ => unreachable!(),
                            };
                            let fair = |l: Label| ts.is_fair(l);
                            find_fair_lasso(
                                &g.succ,
                                &g.initial,
                                &p,
                                &q,
                                &Fairness {
                                    fair: &fair,
                                    progress: Some(TICK),
                                },
                            )
                        }
                    };
                    match path {
                        Some(p) => (Verdict::Violated(to_trace(ts, &g.states, &p)), n),
                        None => (Verdict::Holds, n),
                    }
                }
            }
        }
    };
    Outcome {
        verdict,
        explored,
        elapsed: t0.elapsed(),
    }
}
