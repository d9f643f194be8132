//! Seeded random rule sets, properties and plain graphs.

use rand::prelude::*;
use rand::seq::IndexedRandom;
use rand_chacha::ChaCha8Rng;

use tapcheck::fsm::{Label, TICK};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Model {
    pub rules: String,
    pub deploy: String,
    pub props: String,
}

fn cmp(r: &mut ChaCha8Rng) -> &'static str {
    [">", "<", "=", ">=", "<="].choose(r).unwrap()
}

/// At most four Int attributes: one or two environment inputs (one of them
/// possibly 0..2000) and up to two written only by rules. Rules only write
/// attributes ranked after the one they trigger on, so rule chains end.
pub fn int_model(r: &mut ChaCha8Rng) -> Model {
    let big = *[20, 200, 1000, 2000].choose(r).unwrap();
    let mut vars: Vec<(String, i32, bool)> = vec![("x0".into(), big, true)];
    if big <= 200 && r.random_bool(0.5) {
        vars.push(("x1".into(), r.random_range(2..=8), true));
    }
    let written = r.random_range(1..=2);
    for k in 0..written {
        vars.push((format!("w{k}"), *[3, 50, 2000].choose(r).unwrap(), false));
    }
    let cyber: Vec<String> = vars
        .iter()
        .map(|(n, hi, _)| format!(r#"{{"name": "{n}", "type": "int", "range": [0, {hi}]}}"#))
        .collect();
    let deploy = format!(r#"{{"step_seconds": 60, "cyber": [{}]}}"#, cyber.join(", "));

    let mut rules = String::new();
    let nrules = r.random_range(2..=5).max(written);
    for i in 0..nrules {
        // the first rules write each rule-owned attribute once
        let w = if i < written {
            vars.len() - written + i
        } else {
            vars.len() - written + r.random_range(0..written)
        };
        let t = r.random_range(0..w);
        let (tn, thi, _) = &vars[t];
        let (wn, whi, _) = &vars[w];
        let mut line = format!("rule r{i}: when {tn} {} {}", cmp(r), r.random_range(0..=*thi));
        if r.random_bool(0.3) {
            let c = &vars[r.random_range(0..vars.len())];
            line += &format!(" if {} {} {}", c.0, cmp(r), r.random_range(0..=c.1));
        }
        line += &format!(" then {wn} := {}", r.random_range(0..=*whi));
        if r.random_bool(0.25) {
            line += &format!(" after {}", r.random_range(1..=2));
        }
        rules += &line;
        rules.push('\n');
    }

    let atom = |r: &mut ChaCha8Rng| {
        let (n, hi, _) = &vars[r.random_range(0..vars.len())];
        format!("{n} {} {}", cmp(r), r.random_range(0..=*hi))
    };
    let props = format!(
        "never P1: {} and {}\nleadsto P2: {} -> {}\neventually P3: {}\n",
        atom(r),
        atom(r),
        atom(r),
        atom(r),
        atom(r)
    );
    Model {
        rules,
        deploy,
        props,
    }
}

/// Rule set of 8..=15 rules over Bool attributes: inputs `i*` moved by the
/// environment and outputs `o*` written by rules. Outputs are ranked and a
/// rule triggered by an output only writes later outputs.
pub fn bool_model(r: &mut ChaCha8Rng, nrules: usize) -> Model {
    let ninputs = r.random_range(3..=5);
    let nout = r.random_range(5..=8);
    let mut cyber = Vec::new();
    for k in 0..ninputs {
        cyber.push(format!(r#"{{"name": "i{k}", "type": "bool"}}"#));
    }
    for k in 0..nout {
        cyber.push(format!(r#"{{"name": "o{k}", "type": "bool"}}"#));
    }
    let deploy = format!(r#"{{"step_seconds": 60, "cyber": [{}]}}"#, cyber.join(", "));
    let tf = |r: &mut ChaCha8Rng| if r.random_bool(0.5) { "true" } else { "false" };
    let mut rules = String::new();
    for i in 0..nrules {
        // trigger on an input or an output; write a later output
        let (trig, lo) = if r.random_bool(0.6) {
            (format!("i{}", r.random_range(0..ninputs)), 0)
        } else {
            let k = r.random_range(0..nout - 1);
            (format!("o{k}"), k + 1)
        };
        let w = r.random_range(lo..nout);
        let mut line = format!("rule r{i}: when {trig} = {} ", tf(r));
        if r.random_bool(0.25) {
            line += &format!("if i{} = {} ", r.random_range(0..ninputs), tf(r));
        }
        line += &format!("then o{w} := {}", tf(r));
        if r.random_bool(0.2) {
            line += " after 1";
        }
        rules += &line;
        rules.push('\n');
    }
    let atom = |r: &mut ChaCha8Rng| {
        if r.random_bool(0.15) {
            return format!("fired(r{})", r.random_range(0..nrules));
        }
        let name = if r.random_bool(0.4) {
            format!("i{}", r.random_range(0..ninputs))
        } else {
            format!("o{}", r.random_range(0..nout))
        };
        format!("{name} = {}", tf(r))
    };
    let mut props = String::new();
    for k in 0..6 {
        props += &match r.random_range(0..3) {
            0 => format!("never P{k}: {} and {}\n", atom(r), atom(r)),
            1 => format!("leadsto P{k}: {} -> {}\n", atom(r), atom(r)),
            _ => format!("eventually P{k}: {}\n", atom(r)),
        };
    }
    Model {
        rules,
        deploy,
        props,
    }
}

/// Random labelled graph with `n` states. Labels below 4 are weakly fair,
/// 10..13 unfair, plus the tick.
pub struct RandomGraph {
    pub succ: Vec<Vec<(Label, u32)>>,
    pub initial: Vec<u32>,
    pub p: Vec<bool>,
    pub q: Vec<bool>,
    pub progress: Option<Label>,
}

pub fn is_fair(l: Label) -> bool {
    l < 4 || l == TICK
}

pub fn random_graph(r: &mut ChaCha8Rng) -> RandomGraph {
    let n = *[1usize, 2, 5, 20, 100, 400, 1000].choose(r).unwrap();
    let n = r.random_range(1..=n);
    let labels: [Label; 9] = [0, 1, 2, 3, 10, 11, 12, TICK, TICK];
    let dead = r.random_range(0.0..0.1);
    let mut succ = vec![Vec::new(); n];
    for edges in succ.iter_mut() {
        if r.random_bool(dead) {
            continue;
        }
        let deg = r.random_range(1..=3);
        for _ in 0..deg {
            // mostly local edges so cycles are common
            let v = if r.random_bool(0.7) {
                r.random_range(0..n)
            } else {
                r.random_range(0..n.min(8))
            };
            edges.push((*labels.choose(r).unwrap(), v as u32));
        }
        edges.sort_unstable();
        edges.dedup();
    }
    let pq = r.random_range(0.05..0.6);
    let qq = r.random_range(0.0..0.5);
    RandomGraph {
        succ,
        initial: (0..r.random_range(1..=2).min(n) as u32).collect(),
        p: (0..n).map(|_| r.random_bool(pq)).collect(),
        q: (0..n).map(|_| r.random_bool(qq)).collect(),
        progress: if r.random_bool(0.7) { Some(TICK) } else { None },
    }
}
