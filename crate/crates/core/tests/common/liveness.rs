//! Fair-lasso search against the product oracle on random graphs.

use super::gen::{is_fair, random_graph, rng};
use super::oracle::lasso_exists;
use tapcheck::checker::{find_fair_lasso, Fairness, Path};
use tapcheck::fsm::Label;

/// The returned lasso is a real path: starts initial, follows edges, hits a
/// `p` state, avoids `q` after it, and its loop is fair.
fn validate(g: &super::gen::RandomGraph, path: &Path) -> Result<(), String> {
    let st = &path.states;
    let labels = &path.labels;
    if !g.initial.contains(&st[0]) {
        return Err("does not start in an initial state".into());
    }
    if labels.len() + 1 != st.len() {
        return Err(format!("{} labels for {} states", labels.len(), st.len()));
    }
    for (k, l) in labels.iter().enumerate() {
        if !g.succ[st[k] as usize].contains(&(*l, st[k + 1])) {
            return Err(format!("step {k} is not an edge"));
        }
    }
    let ls = path.loop_start.ok_or("no loop")?;
    let last = *st.last().unwrap();
    if st[ls] != last {
        return Err("loop does not close".into());
    }
    // some p state after which q never shows up
    let ok = (0..st.len()).any(|i| g.p[st[i] as usize] && st[i.min(ls)..].iter().all(|&s| !g.q[s as usize]));
    if !ok {
        return Err("no p state with a q-free suffix".into());
    }
    let cyc_states = &st[ls..st.len() - 1];
    let cyc_labels: Vec<Label> = labels[ls..].to_vec();
    let fair: Vec<Label> = g.succ.iter().flatten().map(|e| e.0).filter(|&l| is_fair(l)).collect();
    for l in fair {
        let always = cyc_states.iter().all(|&s| g.succ[s as usize].iter().any(|e| e.0 == l));
        if always && !cyc_labels.contains(&l) {
            return Err(format!("label {l} enabled throughout the loop but never taken"));
        }
    }
    if let Some(pl) = g.progress {
        if !cyc_labels.contains(&pl) {
            return Err("loop makes no progress".into());
        }
    }
    Ok(())
}

pub fn compare(seed: u64) -> Result<bool, String> {
    let mut r = rng(seed);
    let g = random_graph(&mut r);
    let fair = |l: Label| is_fair(l);
    let want = lasso_exists(&g.succ, &g.initial, &g.p, &g.q, &fair, g.progress);
    let fz = Fairness {
        fair: &fair,
        progress: g.progress,
    };
    let got = find_fair_lasso(&g.succ, &g.initial, &g.p, &g.q, &fz);
    if got.is_some() != want {
        return Err(format!("seed {seed}: engine {} oracle {want}", got.is_some()));
    }
    if let Some(path) = got {
        validate(&g, &path).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(want)
}
