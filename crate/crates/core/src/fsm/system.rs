use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::compress::ValueMap;
use super::expr::{Expr, VarId};
use crate::ir::{Domain, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LatchKind {
    /// The rule fired on the step that entered this state.
    Fired,
    /// The rule fired at some point since the last clock tick.
    FiredTick,
    /// The rule fired or was skipped on the step that entered this state.
    Processed,
}

impl LatchKind {
    pub fn prefix(self) -> &'static str {
        match self {
            LatchKind::Fired => "fired",
            LatchKind::FiredTick => "tick_fired",
            LatchKind::Processed => "processed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", content = "of", rename_all = "lowercase")]
pub enum VarRole {
    Attribute(String),
    /// Per-rule trigger latch: set when the rule consumes its trigger, cleared
    /// once the trigger predicate turns false.
    Shadow(String),
    Timer(String),
    Saved(String),
    Param(String),
    Lag(String),
    Latch(LatchKind, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateVar {
    pub name: String,
    pub role: VarRole,
    pub lo: Value,
    pub hi: Value,
    /// Source domain for attribute, parameter and saved vars.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandTag {
    UserRule,
    ChannelDrift,
    TimerTick,
    EnvInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Command {
    pub id: String,
    /// Normalized rule this command belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    pub tag: CommandTag,
    /// False for the skip command that consumes a trigger without acting.
    pub fires: bool,
    pub guard: Expr,
    pub updates: Vec<(VarId, Expr)>,
}

impl Command {
    /// Sets `var := e`, replacing an earlier update of the same var.
    pub fn set(&mut self, var: VarId, e: Expr) {
        if let Some(u) = self.updates.iter_mut().find(|(v, _)| *v == var) {
            u.1 = e;
        } else {
            self.updates.push((var, e));
        }
    }

    pub fn writes(&self, var: VarId) -> bool {
        self.updates.iter().any(|(v, _)| *v == var)
    }
}

/// Edge label: index of a rule or env command, or the synchronous clock tick.
pub type Label = u32;
pub const TICK: Label = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadowLatch {
    pub var: VarId,
    pub rule: String,
    pub trigger: Expr,
}

/// Explicit-state transition system over bounded integer vars.
///
/// A step is either one enabled rule command (rules take priority over
/// everything else), one environment input, or the tick, which fires all
/// enabled timer and drift commands at once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionSystem {
    pub vars: Vec<StateVar>,
    /// Candidate initial values per var; the initial states are their product.
    pub init: Vec<Vec<Value>>,
    pub commands: Vec<Command>,
    pub shadows: Vec<ShadowLatch>,
    /// Per normalized rule: its trigger is live and not yet consumed.
    pub pending: BTreeMap<String, Expr>,
    pub grids: Vec<Vec<Value>>,
    pub compressed: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub value_maps: BTreeMap<String, ValueMap>,
    pub warnings: Vec<String>,
    /// Normalized rule ids modelled here.
    pub rules: Vec<String>,
    #[serde(skip)]
    index: Index,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Index {
    rule_cmds: Vec<usize>,
    env_cmds: Vec<usize>,
    tick_cmds: Vec<usize>,
    /// Latch vars each command sets.
    cmd_latches: Vec<Vec<VarId>>,
    latches: Vec<(VarId, LatchKind)>,
}

impl TransitionSystem {
    pub(crate) fn new(vars: Vec<StateVar>, init: Vec<Vec<Value>>) -> Self {
        let n = vars.len();
        let mut ts = TransitionSystem {
            vars,
            init,
            commands: Vec::new(),
            shadows: Vec::new(),
            pending: BTreeMap::new(),
            grids: vec![Vec::new(); n],
            compressed: false,
            value_maps: BTreeMap::new(),
            warnings: Vec::new(),
            rules: Vec::new(),
            index: Index::default(),
        };
        ts.reindex();
        ts
    }

    pub(crate) fn reindex(&mut self) {
        let mut ix = Index::default();
        for (i, c) in self.commands.iter().enumerate() {
            match c.tag {
                CommandTag::UserRule => ix.rule_cmds.push(i),
                CommandTag::EnvInput => ix.env_cmds.push(i),
                CommandTag::TimerTick | CommandTag::ChannelDrift => ix.tick_cmds.push(i),
            }
        }
        ix.cmd_latches = vec![Vec::new(); self.commands.len()];
        for (v, var) in self.vars.iter().enumerate() {
            if let VarRole::Latch(kind, rule) = &var.role {
                ix.latches.push((v, *kind));
                for (i, c) in self.commands.iter().enumerate() {
                    if c.rule.as_deref() == Some(rule.as_str())
                        && (c.fires || *kind == LatchKind::Processed)
                    {
                        ix.cmd_latches[i].push(v);
                    }
                }
            }
        }
        self.index = ix;
    }

    pub fn rule_commands(&self) -> &[usize] {
        &self.index.rule_cmds
    }

    pub fn env_commands(&self) -> &[usize] {
        &self.index.env_cmds
    }

    /// Commands applied together on a clock tick, in application order.
    pub fn tick_commands(&self) -> &[usize] {
        &self.index.tick_cmds
    }

    /// Latch vars set by command `c`.
    pub fn command_latches(&self, c: usize) -> &[VarId] {
        &self.index.cmd_latches[c]
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn latch_var(&self, kind: LatchKind, rule: &str) -> Option<VarId> {
        self.vars
            .iter()
            .position(|v| matches!(&v.role, VarRole::Latch(k, r) if *k == kind && r == rule))
    }

    /// Copy with extra latch vars for the given (kind, normalized rule) pairs.
    pub fn with_latches(&self, wanted: &[(LatchKind, String)]) -> TransitionSystem {
        let mut ts = self.clone();
        for (kind, rule) in wanted {
            if ts.latch_var(*kind, rule).is_some() {
                continue;
            }
            ts.vars.push(StateVar {
                name: format!("{}.{rule}", kind.prefix()),
                role: VarRole::Latch(*kind, rule.clone()),
                lo: 0,
                hi: 1,
                domain: None,
            });
            ts.init.push(vec![0]);
            ts.grids.push(Vec::new());
        }
        ts.reindex();
        ts
    }

    pub fn initial_states(&self) -> Vec<Vec<Value>> {
        let mut out: Vec<Vec<Value>> = vec![Vec::with_capacity(self.vars.len())];
        for cands in &self.init {
            let mut next = Vec::with_capacity(out.len() * cands.len());
            for s in &out {
                for &c in cands {
                    let mut t = s.clone();
                    t.push(c);
                    next.push(t);
                }
            }
            out = next;
        }
        for s in &mut out {
            for sh in &self.shadows {
                s[sh.var] = sh.trigger.eval(s, &self.grids).min(1);
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn is_fair(&self, label: Label) -> bool {
        label == TICK || self.commands[label as usize].tag == CommandTag::UserRule
    }

    pub fn label_name(&self, label: Label) -> &str {
        if label == TICK {
            "tick"
        } else {
            &self.commands[label as usize].id
        }
    }

    /// Fair labels: every rule command, then the tick.
    pub fn fair_labels(&self) -> Vec<Label> {
        let mut out: Vec<Label> = self.index.rule_cmds.iter().map(|&c| c as Label).collect();
        out.push(TICK);
        out
    }

    /// Successor states of `s` with their labels, appended to `out`.
    pub fn successors(&self, s: &[Value], out: &mut Vec<(Label, Vec<Value>)>) {
        out.clear();
        for &c in &self.index.rule_cmds {
            if self.commands[c].guard.holds(s, &self.grids) {
                out.push((c as Label, self.apply(s, c)));
            }
        }
        if !out.is_empty() {
            return;
        }
        for &c in &self.index.env_cmds {
            let cmd = &self.commands[c];
            if !cmd.guard.holds(s, &self.grids) {
                continue;
            }
            // an input that changes nothing is not a move
            let n = self.apply(s, c);
            if cmd.updates.iter().any(|(v, _)| n[*v] != s[*v]) {
                out.push((c as Label, n));
            }
        }
        out.push((TICK, self.tick(s)));
    }

    fn apply(&self, s: &[Value], c: usize) -> Vec<Value> {
        let mut n = s.to_vec();
        for (v, e) in &self.commands[c].updates {
            n[*v] = self.clamp(*v, e.eval(s, &self.grids));
        }
        self.post(&mut n, Some(c));
        n
    }

    fn tick(&self, s: &[Value]) -> Vec<Value> {
        let mut n = s.to_vec();
        for &c in &self.index.tick_cmds {
            let cmd = &self.commands[c];
            if cmd.guard.holds(s, &self.grids) {
                for (v, e) in &cmd.updates {
                    n[*v] = self.clamp(*v, e.eval(s, &self.grids));
                }
            }
        }
        self.post(&mut n, None);
        n
    }

    fn clamp(&self, v: VarId, x: Value) -> Value {
        x.clamp(self.vars[v].lo, self.vars[v].hi)
    }

    fn post(&self, n: &mut [Value], cmd: Option<usize>) {
        for &(v, kind) in &self.index.latches {
            if kind != LatchKind::FiredTick || cmd.is_none() {
                n[v] = 0;
            }
        }
        if let Some(c) = cmd {
            for &v in &self.index.cmd_latches[c] {
                n[v] = 1;
            }
        }
        for sh in &self.shadows {
            if n[sh.var] != 0 && !sh.trigger.holds(n, &self.grids) {
                n[sh.var] = 0;
            }
        }
    }

    pub fn command_count(&self) -> usize {
        self.commands.len()
    }

    /// Human-readable listing of vars, initial values and commands.
    pub fn dump(&self) -> String {
        let names = self.names();
        let mut out = String::new();
        for (i, v) in self.vars.iter().enumerate() {
            let _ = writeln!(
                out,
                "var {} : {}..{} init {:?}",
                v.name, v.lo, v.hi, self.init[i]
            );
        }
        for c in &self.commands {
            let _ = write!(out, "{} [{:?}] {} ->", c.id, c.tag, c.guard.display(&names));
            for (v, e) in &c.updates {
                let _ = write!(out, " {} := {};", names[*v], e.display(&names));
            }
            out.push('\n');
        }
        out
    }
}
