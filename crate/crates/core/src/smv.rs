//! NuSMV text for a transition system and its properties.
//!
//! Every var becomes an integer range. An extra `act` var records the label
//! of the step that entered the state so fairness can be written as
//! justice constraints. Bounded-absence properties have no LTL form here and
//! are listed as comments.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::checker::Goal;
use crate::fsm::{Expr, TransitionSystem, VarId, VarRole};

fn ident(raw: &str, taken: &mut BTreeSet<String>) -> String {
    let mut s: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if !s.starts_with(|c: char| c.is_ascii_alphabetic()) {
        s.insert_str(0, "v_");
    }
    let base = s.clone();
    let mut k = 1;
    while !taken.insert(s.clone()) {
        k += 1;
        s = format!("{base}_{k}");
    }
    s
}

struct Printer<'a> {
    ts: &'a TransitionSystem,
    names: Vec<String>,
}

impl Printer<'_> {
    fn int(&self, e: &Expr) -> String {
        match e {
            Expr::Const(c) | Expr::Val(_, c) => c.to_string(),
            Expr::Var(v) => self.names[*v].clone(),
            Expr::Not(_) | Expr::And(_) | Expr::Or(_) | Expr::Cmp(..) => {
                format!("(case {} : 1; TRUE : 0; esac)", self.bool(e))
            }
            Expr::Sum(xs) => {
                if xs.is_empty() {
                    return "0".into();
                }
                let parts: Vec<String> = xs.iter().map(|x| self.int(x)).collect();
                format!("({})", parts.join(" + "))
            }
            Expr::Ite(c, t, f) => format!(
                "(case {} : {}; TRUE : {}; esac)",
                self.bool(c),
                self.int(t),
                self.int(f)
            ),
            Expr::Sign(x) => {
                let x = self.int(x);
                format!("(case {x} > 0 : 1; {x} < 0 : -1; TRUE : 0; esac)")
            }
            Expr::Step(v, up) => self.step(*v, *up),
        }
    }

    fn step(&self, v: VarId, up: bool) -> String {
        let x = &self.names[v];
        let grid = &self.ts.grids[v];
        if grid.is_empty() {
            return format!("({x} {} 1)", if up { "+" } else { "-" });
        }
        let mut out = String::from("(case");
        for (i, g) in grid.iter().enumerate() {
            let val = if up {
                g.to_string()
            } else if i >= 2 {
                grid[i - 2].to_string()
            } else {
                x.clone()
            };
            let _ = write!(out, " {x} < {g} : {val};");
        }
        let top = if up || grid.len() < 2 {
            x.clone()
        } else {
            grid[grid.len() - 2].to_string()
        };
        let _ = write!(out, " TRUE : {top}; esac)");
        out
    }

    fn bool(&self, e: &Expr) -> String {
        match e {
            Expr::Const(c) => if *c != 0 { "TRUE" } else { "FALSE" }.into(),
            Expr::Not(x) => format!("!{}", self.bool(x)),
            Expr::And(xs) | Expr::Or(xs) => {
                let sep = if matches!(e, Expr::And(_)) { " & " } else { " | " };
                let parts: Vec<String> = xs.iter().map(|x| self.bool(x)).collect();
                format!("({})", parts.join(sep))
            }
            Expr::Cmp(op, a, b) => format!("({} {} {})", self.int(a), op.symbol(), self.int(b)),
            _ => format!("({} != 0)", self.int(e)),
        }
    }

    fn clamp(&self, v: VarId, e: &Expr) -> Expr {
        let (lo, hi) = (self.ts.vars[v].lo, self.ts.vars[v].hi);
        match e {
            Expr::Const(c) | Expr::Val(_, c) if (lo..=hi).contains(c) => e.clone(),
            Expr::Var(w) if self.ts.vars[*w].lo >= lo && self.ts.vars[*w].hi <= hi => e.clone(),
            _ => {
                use crate::ir::CmpOp;
                Expr::ite(
                    Expr::cmp(CmpOp::Lt, e.clone(), Expr::Const(lo)),
                    Expr::Const(lo),
                    Expr::ite(
                        Expr::cmp(CmpOp::Gt, e.clone(), Expr::Const(hi)),
                        Expr::Const(hi),
                        e.clone(),
                    ),
                )
            }
        }
    }

    /// Post-state value of every var, as expressions over the pre-state,
    /// for the rule or env command `cmd`, or the tick when `None`.
    fn post(&self, cmd: Option<usize>) -> Vec<Expr> {
        let ts = self.ts;
        let mut n: Vec<Expr> = (0..ts.vars.len()).map(Expr::Var).collect();
        match cmd {
            Some(c) => {
                for (v, e) in &ts.commands[c].updates {
                    n[*v] = self.clamp(*v, e);
                }
            }
            None => {
                for &c in ts.tick_commands() {
                    let cmd = &ts.commands[c];
                    for (v, e) in &cmd.updates {
                        n[*v] = Expr::ite(cmd.guard.clone(), self.clamp(*v, e), n[*v].clone());
                    }
                }
            }
        }
        let set: Vec<VarId> = cmd.map(|c| ts.command_latches(c).to_vec()).unwrap_or_default();
        for (v, var) in ts.vars.iter().enumerate() {
            if let VarRole::Latch(kind, _) = &var.role {
                if set.contains(&v) {
                    n[v] = Expr::Const(1);
                } else if *kind != crate::fsm::LatchKind::FiredTick || cmd.is_none() {
                    n[v] = Expr::Const(0);
                }
            }
        }
        let pre = n.clone();
        for sh in &ts.shadows {
            let trig = sh.trigger.map(&mut |e| match e {
                Expr::Var(v) => pre[v].clone(),
                e => e,
            });
            n[sh.var] = Expr::and([
                Expr::cmp(crate::ir::CmpOp::Ne, pre[sh.var].clone(), Expr::Const(0)),
                trig,
            ]);
        }
        n
    }
}

/// Renders `ts` with the given named goals.
pub fn emit_smv(ts: &TransitionSystem, goals: &[(String, Goal)]) -> String {
    let mut taken: BTreeSet<String> = ["act", "tick", "init"].iter().map(|s| s.to_string()).collect();
    let names: Vec<String> = ts.vars.iter().map(|v| ident(&v.name, &mut taken)).collect();
    let labels: Vec<String> = (0..ts.commands.len()).map(|c| format!("c{c}")).collect();
    let p = Printer { ts, names };
    let mut out = String::new();
    out.push_str("MODULE main\n");
    for (c, cmd) in ts.commands.iter().enumerate() {
        let _ = writeln!(out, "-- {} = {}", labels[c], cmd.id);
    }
    out.push_str("VAR\n");
    for (i, v) in ts.vars.iter().enumerate() {
        let note = match &v.domain {
            Some(d) if !d.is_int() && !ts.compressed => {
                let ls: Vec<String> = (v.lo..=v.hi).map(|x| format!("{x}={}", d.label(x))).collect();
                format!(" -- {}", ls.join(" "))
            }
            _ => String::new(),
        };
        let _ = writeln!(out, "  {} : {}..{};{note}", p.names[i], v.lo, v.hi);
    }
    let mut acts = vec!["init".to_owned()];
    acts.extend(labels.iter().cloned());
    acts.push("tick".into());
    let _ = writeln!(out, "  act : {{{}}};", acts.join(", "));

    out.push_str("INIT\n  act = init");
    for (i, cands) in ts.init.iter().enumerate() {
        if ts.shadows.iter().any(|s| s.var == i) {
            continue;
        }
        let vals: Vec<String> = cands.iter().map(|c| c.to_string()).collect();
        let _ = write!(out, "\n  & {} in {{{}}}", p.names[i], vals.join(", "));
    }
    for sh in &ts.shadows {
        let _ = write!(out, "\n  & {} = {}", p.names[sh.var], p.int(&sh.trigger));
    }
    out.push('\n');

    let any_rule = Expr::or(ts.rule_commands().iter().map(|&c| ts.commands[c].guard.clone()));
    let step = |label: &str, guard: Expr, post: &[Expr]| -> String {
        let mut s = format!("(next(act) = {label} & {}", p.bool(&guard));
        for (v, e) in post.iter().enumerate() {
            let _ = write!(s, "\n     & next({}) = {}", p.names[v], p.int(e));
        }
        s.push(')');
        s
    };
    let mut alts = Vec::new();
    for &c in ts.rule_commands() {
        alts.push(step(&labels[c], ts.commands[c].guard.clone(), &p.post(Some(c))));
    }
    for &c in ts.env_commands() {
        let cmd = &ts.commands[c];
        let changes = Expr::or(cmd.updates.iter().map(|(v, e)| {
            Expr::cmp(crate::ir::CmpOp::Ne, p.clamp(*v, e), Expr::Var(*v))
        }));
        let g = Expr::and([Expr::not(any_rule.clone()), cmd.guard.clone(), changes]);
        alts.push(step(&labels[c], g, &p.post(Some(c))));
    }
    alts.push(step("tick", Expr::not(any_rule.clone()), &p.post(None)));
    let _ = writeln!(out, "TRANS\n  {}", alts.join("\n  | "));

    for &c in ts.rule_commands() {
        let _ = writeln!(
            out,
            "JUSTICE !{} | act = {}",
            p.bool(&ts.commands[c].guard),
            labels[c]
        );
    }
    out.push_str("JUSTICE act = tick\n");

    let mut spec_names = taken.clone();
    for (id, goal) in goals {
        let name = ident(id, &mut spec_names);
        let _ = writeln!(out, "-- property {id}");
        match goal {
            Goal::Safety(bad) => {
                let _ = writeln!(out, "INVARSPEC NAME {name} := !{}", p.bool(bad));
            }
            Goal::LeadsTo(a, b) => {
                let _ = writeln!(out, "LTLSPEC NAME {name} := G ({} -> F {})", p.bool(a), p.bool(b));
            }
            Goal::Eventually(b) => {
                let _ = writeln!(out, "LTLSPEC NAME {name} := F {}", p.bool(b));
            }
            Goal::BoundedAbsence(..) => {
                let _ = writeln!(out, "-- bounded absence is checked by the explicit engine only");
            }
        }
    }
    out
}
