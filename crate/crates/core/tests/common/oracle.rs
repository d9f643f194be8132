//! Brute-force deciders used as ground truth. They share nothing with the
//! engine beyond the transition relation itself.

use std::collections::{HashMap, HashSet};

use tapcheck::checker::Goal;
use tapcheck::fsm::{Expr, Label, TransitionSystem, TICK};

pub struct Graph {
    pub states: Vec<Vec<i32>>,
    pub initial: Vec<u32>,
    pub succ: Vec<Vec<(Label, u32)>>,
}

impl Graph {
    pub fn mask(&self, e: &Expr, ts: &TransitionSystem) -> Vec<bool> {
        self.states.iter().map(|s| e.holds(s, &ts.grids)).collect()
    }
}

/// Depth-first enumeration of every reachable state. Panics past `limit`.
pub fn enumerate(ts: &TransitionSystem, limit: usize) -> Graph {
    let mut ids: HashMap<Vec<i32>, u32> = HashMap::new();
    let mut g = Graph {
        states: Vec::new(),
        initial: Vec::new(),
        succ: Vec::new(),
    };
    let mut stack = Vec::new();
    for s in ts.initial_states() {
        let id = *ids.entry(s.clone()).or_insert_with(|| {
            g.states.push(s.clone());
            g.succ.push(Vec::new());
            stack.push(g.states.len() as u32 - 1);
            g.states.len() as u32 - 1
        });
        g.initial.push(id);
    }
    let mut buf = Vec::new();
    while let Some(u) = stack.pop() {
        ts.successors(&g.states[u as usize].clone(), &mut buf);
        let mut edges = Vec::new();
        for (l, n) in buf.drain(..) {
            let id = match ids.get(&n) {
                Some(&id) => id,
                None => {
                    assert!(g.states.len() < limit, "oracle limit {limit} exceeded");
                    let id = g.states.len() as u32;
                    ids.insert(n.clone(), id);
                    g.states.push(n);
                    g.succ.push(Vec::new());
                    stack.push(id);
                    id
                }
            };
            edges.push((l, id));
        }
        g.succ[u as usize] = edges;
    }
    g
}

/// Weakly fair lasso existence through the product with a degeneralized
/// Büchi automaton for `F(p ∧ G ¬q)` plus one justice set per fair label,
/// searched with nested depth-first search.
pub fn lasso_exists(
    succ: &[Vec<(Label, u32)>],
    initial: &[u32],
    p: &[bool],
    q: &[bool],
    fair: &dyn Fn(Label) -> bool,
    progress: Option<Label>,
) -> bool {
    // justice sets: one per fair label seen anywhere, then progress
    let mut labels: Vec<Label> = succ.iter().flatten().map(|e| e.0).filter(|l| fair(*l)).collect();
    labels.sort_unstable();
    labels.dedup();
    let k = labels.len() + progress.is_some() as usize;
    // transition (u, l) meets set i?
    let meets = |i: usize, u: u32, l: Label| -> bool {
        if i < labels.len() {
            let want = labels[i];
            l == want || !succ[u as usize].iter().any(|e| e.0 == want)
        } else {
            Some(l) == progress
        }
    };
    // product node: (state, committed, counter); counter == k marks acceptance
    type Node = (u32, bool, usize);
    let next = |(u, committed, c): Node| -> Vec<Node> {
        let mut out = Vec::new();
        for &(l, v) in &succ[u as usize] {
            if committed {
                if q[v as usize] {
                    continue;
                }
                let base = if c == k { 0 } else { c };
                let c2 = if k > 0 && meets(base, u, l) { base + 1 } else { base };
                out.push((v, true, if k == 0 { k } else { c2 }));
            } else {
                out.push((v, false, 0));
                if p[v as usize] && !q[v as usize] {
                    out.push((v, true, 0));
                }
            }
        }
        out
    };
    let accepting = |(_, committed, c): Node| committed && c == k;

    let mut roots: Vec<Node> = Vec::new();
    for &i in initial {
        roots.push((i, false, 0));
        if p[i as usize] && !q[i as usize] {
            roots.push((i, true, 0));
        }
    }
    let mut outer: HashSet<Node> = HashSet::new();
    let mut inner: HashSet<Node> = HashSet::new();
    for r in roots {
        if !outer.insert(r) {
            continue;
        }
        // iterative post-order DFS
        let mut stack: Vec<(Node, Vec<Node>, usize)> = vec![(r, next(r), 0)];
        while let Some(top) = stack.last_mut() {
            if top.2 < top.1.len() {
                let n = top.1[top.2];
                top.2 += 1;
                if outer.insert(n) {
                    let succs = next(n);
                    stack.push((n, succs, 0));
                }
                continue;
            }
            let (done, _, _) = stack.pop().unwrap();
            if accepting(done) && inner_reaches(done, &next, &mut inner) {
                return true;
            }
        }
    }
    false
}

fn inner_reaches<N>(seed: (u32, bool, usize), next: &N, seen: &mut HashSet<(u32, bool, usize)>) -> bool
where
    N: Fn((u32, bool, usize)) -> Vec<(u32, bool, usize)>,
{
    let mut stack = vec![seed];
    while let Some(u) = stack.pop() {
        for v in next(u) {
            if v == seed {
                return true;
            }
            if seen.insert(v) {
                stack.push(v);
            }
        }
    }
    false
}

/// A `forbidden` state within fewer than `window` progress steps of some
/// reachable `p`-state.
pub fn bounded_violated(
    succ: &[Vec<(Label, u32)>],
    initial: &[u32],
    p: &[bool],
    forbidden: &[bool],
    window: u32,
    progress: Label,
) -> bool {
    let n = succ.len();
    let mut reach = vec![false; n];
    let mut stack: Vec<u32> = initial.to_vec();
    for &i in initial {
        reach[i as usize] = true;
    }
    while let Some(u) = stack.pop() {
        for &(_, v) in &succ[u as usize] {
            if !reach[v as usize] {
                reach[v as usize] = true;
                stack.push(v);
            }
        }
    }
    // layered search over (state, progress steps used)
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut work: Vec<(u32, u32)> = (0..n as u32)
        .filter(|&u| reach[u as usize] && p[u as usize])
        .map(|u| (u, 0))
        .collect();
    while let Some((u, d)) = work.pop() {
        if d >= window || !seen.insert((u, d)) {
            continue;
        }
        if forbidden[u as usize] {
            return true;
        }
        for &(l, v) in &succ[u as usize] {
            work.push((v, d + (l == progress) as u32));
        }
    }
    false
}

/// Brute-force decision: `true` when the goal is violated.
pub fn violated(ts: &TransitionSystem, goal: &Goal, limit: usize) -> bool {
    let g = enumerate(ts, limit);
    let fair = |l: Label| ts.is_fair(l);
    match goal {
        Goal::Safety(bad) => g.states.iter().any(|s| bad.holds(s, &ts.grids)),
        Goal::LeadsTo(p, q) => lasso_exists(&g.succ, &g.initial, &g.mask(p, ts), &g.mask(q, ts), &fair, Some(TICK)),
        Goal::Eventually(q) => {
            let mut p = vec![false; g.states.len()];
            for &i in &g.initial {
                p[i as usize] = true;
            }
            lasso_exists(&g.succ, &g.initial, &p, &g.mask(q, ts), &fair, Some(TICK))
        }
        Goal::BoundedAbsence(p, w, f) => {
            bounded_violated(&g.succ, &g.initial, &g.mask(p, ts), &g.mask(f, ts), *w, TICK)
        }
    }
}
