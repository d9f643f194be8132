use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::fsm::{TransitionSystem, VarRole};
use crate::ir::Value;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub index: usize,
    /// Command that led into this state; `init` for the first one.
    pub command: String,
    pub state: BTreeMap<String, Value>,
}

/// Counterexample. For lassos the last state equals the state at
/// `loop_start`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loop_start: Option<usize>,
}

impl Trace {
    pub fn new(
        ts: &TransitionSystem,
        states: &[Vec<Value>],
        commands: &[String],
        loop_start: Option<usize>,
    ) -> Trace {
        let steps = states
            .iter()
            .enumerate()
            .map(|(k, s)| TraceStep {
                index: k,
                command: if k == 0 {
                    "init".to_owned()
                } else {
                    commands[k - 1].clone()
                },
                state: ts
                    .vars
                    .iter()
                    .zip(s)
                    .map(|(v, x)| (v.name.clone(), *x))
                    .collect(),
            })
            .collect();
        Trace { steps, loop_start }
    }

    fn vector(ts: &TransitionSystem, m: &BTreeMap<String, Value>) -> Result<Vec<Value>, String> {
        ts.vars
            .iter()
            .map(|v| {
                m.get(&v.name)
                    .copied()
                    .ok_or_else(|| format!("trace state lacks `{}`", v.name))
            })
            .collect()
    }

    /// Re-runs the command sequence from the first state and checks every
    /// snapshot, and the loop closure for lassos.
    pub fn replay(&self, ts: &TransitionSystem) -> Result<(), String> {
        let first = self.steps.first().ok_or("empty trace")?;
        let mut cur = Self::vector(ts, &first.state)?;
        if !ts.initial_states().contains(&cur) {
            return Err("first state is not initial".into());
        }
        let mut out = Vec::new();
        for step in &self.steps[1..] {
            let want = Self::vector(ts, &step.state)?;
            ts.successors(&cur, &mut out);
            let ok = out
                .iter()
                .any(|(l, n)| ts.label_name(*l) == step.command && *n == want);
            if !ok {
                return Err(format!(
                    "step {}: `{}` does not lead to the recorded state",
                    step.index, step.command
                ));
            }
            cur = want;
        }
        if let Some(ls) = self.loop_start {
            let start = &self.steps.get(ls).ok_or("loop start out of range")?.state;
            if *start != self.steps.last().unwrap().state || ls + 1 >= self.steps.len() {
                return Err("loop does not close".into());
            }
        }
        Ok(())
    }

    /// Aligned text table; value labels decoded where the model has them.
    pub fn table(&self, ts: &TransitionSystem) -> String {
        let shown: Vec<usize> = ts
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| !matches!(v.role, VarRole::Shadow(_)))
            .map(|(i, _)| i)
            .collect();
        let render = |i: usize, x: Value| -> String {
            let v = &ts.vars[i];
            if let Some(m) = ts.value_maps.get(&v.name) {
                let lo = m.decode(x);
                let hi = m
                    .reps
                    .get(x as usize + 1)
                    .map(|n| n - 1)
                    .unwrap_or(v.domain.as_ref().map_or(lo, |d| d.hi()));
                return if lo == hi {
                    lo.to_string()
                } else {
                    format!("{lo}..{hi}")
                };
            }
            match &v.domain {
                Some(d) if !d.is_int() => d.label(x),
                _ => x.to_string(),
            }
        };
        let mut header = vec!["#".to_owned(), "command".to_owned()];
        header.extend(shown.iter().map(|&i| ts.vars[i].name.clone()));
        let mut rows = vec![header];
        for step in &self.steps {
            let mark = if Some(step.index) == self.loop_start { "*" } else { "" };
            let mut row = vec![format!("{}{mark}", step.index), step.command.clone()];
            for &i in &shown {
                row.push(render(i, step.state[&ts.vars[i].name]));
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in rows {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}
