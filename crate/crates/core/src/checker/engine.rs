//! Explicit-state search: reachability, fair lassos, bounded absence.

use std::collections::{HashMap, VecDeque};

use crate::fsm::{Expr, Label, TransitionSystem, TICK};
use crate::ir::Value;

/// Path through a graph: `labels[k]` leads from `states[k]` to `states[k+1]`.
/// A lasso's last state equals `states[loop_start]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub states: Vec<u32>,
    pub labels: Vec<Label>,
    pub loop_start: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExceeded(pub usize);

/// Reachable part of a transition system with a BFS spanning tree.
#[derive(Debug, Clone, Default)]
pub struct ExplicitGraph {
    pub states: Vec<Vec<Value>>,
    pub initial: Vec<u32>,
    pub succ: Vec<Vec<(Label, u32)>>,
}

impl ExplicitGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn mask(&self, e: &Expr, ts: &TransitionSystem) -> Vec<bool> {
        self.states.iter().map(|s| e.holds(s, &ts.grids)).collect()
    }
}

pub fn explore(ts: &TransitionSystem, budget: usize) -> Result<ExplicitGraph, BudgetExceeded> {
    let mut g = ExplicitGraph::default();
    let mut index: HashMap<Vec<Value>, u32> = HashMap::new();
    let mut intern = |g: &mut ExplicitGraph, s: Vec<Value>| -> Result<(u32, bool), BudgetExceeded> {
        if let Some(&i) = index.get(&s) {
            return Ok((i, false));
        }
        if g.states.len() >= budget {
            return Err(BudgetExceeded(g.states.len()));
        }
        let i = g.states.len() as u32;
        index.insert(s.clone(), i);
        g.states.push(s);
        g.succ.push(Vec::new());
        Ok((i, true))
    };
    for s in ts.initial_states() {
        let (i, _) = intern(&mut g, s)?;
        g.initial.push(i);
    }
    let mut out = Vec::new();
    let mut k = 0;
    while k < g.states.len() {
        ts.successors(&g.states[k], &mut out);
        let mut edges = Vec::with_capacity(out.len());
        for (l, n) in out.drain(..) {
            let (j, _) = intern(&mut g, n)?;
            edges.push((l, j));
        }
        g.succ[k] = edges;
        k += 1;
    }
    Ok(g)
}

/// States and labels along a path from an initial state.
pub type Prefix = (Vec<Vec<Value>>, Vec<Label>);

/// Breadth-first search for a reachable `bad` state, exploring on the fly.
/// Returns the shortest path to one, if any, and the number of states seen.
pub fn find_reachable(
    ts: &TransitionSystem,
    bad: &Expr,
    budget: usize,
) -> Result<(Option<Prefix>, usize), BudgetExceeded> {
    let mut states: Vec<Vec<Value>> = Vec::new();
    let mut parent: Vec<Option<(u32, Label)>> = Vec::new();
    let mut index: HashMap<Vec<Value>, u32> = HashMap::new();
    let path_to = |states: &[Vec<Value>], parent: &[Option<(u32, Label)>], mut i: u32| {
        let mut ss = vec![states[i as usize].clone()];
        let mut ls = Vec::new();
        while let Some((p, l)) = parent[i as usize] {
            ss.push(states[p as usize].clone());
            ls.push(l);
            i = p;
        }
        ss.reverse();
        ls.reverse();
        (ss, ls)
    };
    for s in ts.initial_states() {
        if index.contains_key(&s) {
            continue;
        }
        let i = states.len() as u32;
        index.insert(s.clone(), i);
        let hit = bad.holds(&s, &ts.grids);
        states.push(s);
        parent.push(None);
        if hit {
            return Ok((Some(path_to(&states, &parent, i)), states.len()));
        }
    }
    let mut out = Vec::new();
    let mut k = 0;
    while k < states.len() {
        ts.successors(&states[k], &mut out);
        for (l, n) in out.drain(..) {
            if index.contains_key(&n) {
                continue;
            }
            if states.len() >= budget {
                return Err(BudgetExceeded(states.len()));
            }
            let i = states.len() as u32;
            index.insert(n.clone(), i);
            let hit = bad.holds(&n, &ts.grids);
            states.push(n);
            parent.push(Some((k as u32, l)));
            if hit {
                return Ok((Some(path_to(&states, &parent, i)), states.len()));
            }
        }
        k += 1;
    }
    Ok((None, states.len()))
}

/// BFS from `sources` over edges allowed by `keep`, stopping at the first
/// node in `target`. Returns the path (source first).
fn bfs_path(
    succ: &[Vec<(Label, u32)>],
    sources: &[u32],
    keep: &dyn Fn(u32) -> bool,
    target: &dyn Fn(u32) -> bool,
) -> Option<Path> {
    let mut parent: HashMap<u32, Option<(u32, Label)>> = HashMap::new();
    let mut queue = VecDeque::new();
    for &s in sources {
        if keep(s) && parent.insert(s, None).is_none() {
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        if target(u) {
            let mut states = vec![u];
            let mut labels = Vec::new();
            let mut c = u;
            while let Some(Some((p, l))) = parent.get(&c) {
                states.push(*p);
                labels.push(*l);
                c = *p;
            }
            states.reverse();
            labels.reverse();
            return Some(Path {
                states,
                labels,
                loop_start: None,
            });
        }
        for &(l, v) in &succ[u as usize] {
            if keep(v) && !parent.contains_key(&v) {
                parent.insert(v, Some((u, l)));
                queue.push_back(v);
            }
        }
    }
    None
}

/// Strongly connected components of the subgraph induced by `keep`
/// (iterative Tarjan). Returns a component id per node (`u32::MAX` outside).
fn sccs(succ: &[Vec<(Label, u32)>], keep: &[bool]) -> (Vec<u32>, u32) {
    let n = succ.len();
    const NONE: u32 = u32::MAX;
    let mut index = vec![NONE; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![NONE; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0u32;
    let mut ncomp = 0u32;
    let mut call: Vec<(u32, usize)> = Vec::new();
    for root in 0..n as u32 {
        if !keep[root as usize] || index[root as usize] != NONE {
            continue;
        }
        call.push((root, 0));
        index[root as usize] = next_index;
        low[root as usize] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        while let Some(&mut (u, ref mut ei)) = call.last_mut() {
            let edges = &succ[u as usize];
            if *ei < edges.len() {
                let v = edges[*ei].1;
                *ei += 1;
                if !keep[v as usize] {
                    continue;
                }
                if index[v as usize] == NONE {
                    index[v as usize] = next_index;
                    low[v as usize] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v as usize] = true;
                    call.push((v, 0));
                } else if on_stack[v as usize] {
                    low[u as usize] = low[u as usize].min(index[v as usize]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p as usize] = low[p as usize].min(low[u as usize]);
                }
                if low[u as usize] == index[u as usize] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w as usize] = false;
                        comp[w as usize] = ncomp;
                        if w == u {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    (comp, ncomp)
}

/// Which labels are weakly fair, and which label (if any) every fair cycle
/// must take.
pub struct Fairness<'a> {
    pub fair: &'a dyn Fn(Label) -> bool,
    pub progress: Option<Label>,
}

/// Looks for a reachable `p`-state from which some fair cycle is reachable
/// without ever visiting a `q`-state. Returns the lasso through it.
///
/// A cycle is fair when every fair label enabled in all of its states is
/// taken on it, and the progress label (if any) is taken on it.
pub fn find_fair_lasso(
    succ: &[Vec<(Label, u32)>],
    initial: &[u32],
    p: &[bool],
    q: &[bool],
    fairness: &Fairness,
) -> Option<Path> {
    let n = succ.len();
    // reachable set
    let mut reach = vec![false; n];
    let mut queue: VecDeque<u32> = VecDeque::new();
    for &i in initial {
        if !reach[i as usize] {
            reach[i as usize] = true;
            queue.push_back(i);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &(_, v) in &succ[u as usize] {
            if !reach[v as usize] {
                reach[v as usize] = true;
                queue.push_back(v);
            }
        }
    }
    let keep: Vec<bool> = (0..n).map(|i| reach[i] && !q[i]).collect();
    let (comp, ncomp) = sccs(succ, &keep);

    // per component: fair labels enabled everywhere, labels taken inside
    let mut size = vec![0usize; ncomp as usize];
    let mut enabled_all: Vec<Option<Vec<Label>>> = vec![None; ncomp as usize];
    let mut internal: Vec<Vec<Label>> = vec![Vec::new(); ncomp as usize];
    for u in 0..n {
        let c = comp[u];
        if c == u32::MAX {
            continue;
        }
        size[c as usize] += 1;
        let mut en: Vec<Label> = succ[u]
            .iter()
            .map(|e| e.0)
            .filter(|l| (fairness.fair)(*l))
            .collect();
        en.sort_unstable();
        en.dedup();
        let slot = &mut enabled_all[c as usize];
        *slot = Some(match slot.take() {
            None => en,
            Some(prev) => prev.into_iter().filter(|l| en.binary_search(l).is_ok()).collect(),
        });
        for &(l, v) in &succ[u] {
            if comp[v as usize] == c {
                internal[c as usize].push(l);
            }
        }
    }
    let fair_comp: Vec<bool> = (0..ncomp as usize)
        .map(|c| {
            let mut inside = internal[c].clone();
            inside.sort_unstable();
            inside.dedup();
            !inside.is_empty()
                && enabled_all[c]
                    .as_ref()
                    .is_none_or(|en| en.iter().all(|l| inside.binary_search(l).is_ok()))
                && fairness
                    .progress
                    .is_none_or(|pl| inside.binary_search(&pl).is_ok())
        })
        .collect();
    let in_fair = |u: u32| {
        let c = comp[u as usize];
        c != u32::MAX && fair_comp[c as usize]
    };
    if !(0..n as u32).any(in_fair) {
        return None;
    }

    // states (outside q) that can reach a fair component within ¬q
    let mut pred: Vec<Vec<u32>> = vec![Vec::new(); n];
    for u in 0..n {
        if keep[u] {
            for &(_, v) in &succ[u] {
                if keep[v as usize] {
                    pred[v as usize].push(u as u32);
                }
            }
        }
    }
    let mut good = vec![false; n];
    let mut queue: VecDeque<u32> = VecDeque::new();
    for u in 0..n as u32 {
        if in_fair(u) {
            good[u as usize] = true;
            queue.push_back(u);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in &pred[v as usize] {
            if !good[u as usize] {
                good[u as usize] = true;
                queue.push_back(u);
            }
        }
    }

    let prefix = bfs_path(succ, initial, &|_| true, &|u| p[u as usize] && good[u as usize])?;
    let start = *prefix.states.last().unwrap();
    let to_comp = bfs_path(succ, &[start], &|u| keep[u as usize], &|u| in_fair(u))
        .expect("good state reaches a fair component");
    let entry = *to_comp.states.last().unwrap();
    let c = comp[entry as usize];
    let inside = |u: u32| comp[u as usize] == c;

    // edges the cycle must take, and states it must visit: a fair label
    // not enabled everywhere in the component is excused only where the
    // loop passes a state without it
    let mut required: Vec<(u32, Option<(Label, u32)>)> = Vec::new();
    let mut wanted: Vec<Label> = enabled_all[c as usize].clone().unwrap_or_default();
    if let Some(pl) = fairness.progress {
        wanted.push(pl);
    }
    wanted.sort_unstable();
    wanted.dedup();
    let members: Vec<u32> = (0..n as u32).filter(|&u| inside(u)).collect();
    let mut seen_fair: Vec<Label> = members
        .iter()
        .flat_map(|&u| succ[u as usize].iter().map(|e| e.0))
        .filter(|l| (fairness.fair)(*l))
        .collect();
    seen_fair.sort_unstable();
    seen_fair.dedup();
    for l in seen_fair {
        if wanted.binary_search(&l).is_ok() {
            continue;
        }
        let u = *members
            .iter()
            .find(|&&u| !succ[u as usize].iter().any(|e| e.0 == l))
            .expect("label disabled somewhere in the component");
        required.push((u, None));
    }
    for l in wanted {
        let e = members
            .iter()
            .find_map(|&u| {
                succ[u as usize]
                    .iter()
                    .find(|&&(el, v)| el == l && inside(v))
                    .map(|&(_, v)| (u, Some((l, v))))
            })
            .expect("fair component takes every wanted label");
        required.push(e);
    }
    if required.iter().all(|r| r.1.is_none()) {
        let &(l, v) = succ[entry as usize]
            .iter()
            .find(|&&(_, v)| inside(v))
            .expect("nontrivial component");
        required.push((entry, Some((l, v))));
    }

    let mut states = prefix.states.clone();
    let mut labels = prefix.labels.clone();
    states.extend_from_slice(&to_comp.states[1..]);
    labels.extend_from_slice(&to_comp.labels);
    let loop_start = states.len() - 1;
    let mut cur = entry;
    for (u, edge) in required {
        let hop = bfs_path(succ, &[cur], &|x| inside(x), &|x| x == u).expect("strongly connected");
        states.extend_from_slice(&hop.states[1..]);
        labels.extend_from_slice(&hop.labels);
        cur = u;
        if let Some((l, v)) = edge {
            states.push(v);
            labels.push(l);
            cur = v;
        }
    }
    let back = bfs_path(succ, &[cur], &|x| inside(x), &|x| x == entry).expect("strongly connected");
    states.extend_from_slice(&back.states[1..]);
    labels.extend_from_slice(&back.labels);
    Some(Path {
        states,
        labels,
        loop_start: Some(loop_start),
    })
}

/// Shortest reachable path from a `p`-state to a `forbidden` state that
/// takes fewer than `window` progress steps after `p`.
pub fn find_bounded(
    succ: &[Vec<(Label, u32)>],
    initial: &[u32],
    p: &[bool],
    forbidden: &[bool],
    window: u32,
    progress: Label,
) -> Option<Path> {
    let n = succ.len();
    let mut dist = vec![u32::MAX; n];
    let mut parent: Vec<Option<(u32, Label)>> = vec![None; n];
    let mut deque: VecDeque<u32> = VecDeque::new();
    // all reachable p-states start at distance 0
    let mut reach = vec![false; n];
    let mut queue: VecDeque<u32> = initial.iter().copied().collect();
    for &i in initial {
        reach[i as usize] = true;
    }
    while let Some(u) = queue.pop_front() {
        if p[u as usize] {
            dist[u as usize] = 0;
            deque.push_back(u);
        }
        for &(_, v) in &succ[u as usize] {
            if !reach[v as usize] {
                reach[v as usize] = true;
                queue.push_back(v);
            }
        }
    }
    let mut done = vec![false; n];
    let mut hit = None;
    while let Some(u) = deque.pop_front() {
        if done[u as usize] {
            continue;
        }
        done[u as usize] = true;
        let d = dist[u as usize];
        if d >= window {
            continue;
        }
        if forbidden[u as usize] {
            hit = Some(u);
            break;
        }
        for &(l, v) in &succ[u as usize] {
            let w = (l == progress) as u32;
            if d + w < dist[v as usize] {
                dist[v as usize] = d + w;
                parent[v as usize] = Some((u, l));
                if w == 0 {
                    deque.push_front(v);
                } else {
                    deque.push_back(v);
                }
            }
        }
    }
    let hit = hit?;
    let mut tail_states = vec![hit];
    let mut tail_labels = Vec::new();
    let mut c = hit;
    while let Some((u, l)) = parent[c as usize] {
        tail_states.push(u);
        tail_labels.push(l);
        c = u;
    }
    tail_states.reverse();
    tail_labels.reverse();
    let start = tail_states[0];
    let prefix = bfs_path(succ, initial, &|_| true, &|u| u == start).expect("reachable");
    let mut states = prefix.states;
    let mut labels = prefix.labels;
    states.extend_from_slice(&tail_states[1..]);
    labels.extend_from_slice(&tail_labels);
    Some(Path {
        states,
        labels,
        loop_start: None,
    })
}

pub fn is_tick(l: Label) -> bool {
    l == TICK
}
