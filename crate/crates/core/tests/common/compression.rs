//! Compressed verdicts against brute force on the concrete model.

use super::gen::{int_model, rng};
use super::oracle;
use tapcheck::checker::{check, prepare, DEFAULT_BUDGET};

pub struct Tally {
    pub props: usize,
    pub violated: usize,
    pub compressed_states: usize,
    pub plain_states: usize,
}

/// Compressed engine verdict against brute force on the concrete model.
pub fn compare(seed: u64, t: &mut Tally) -> Result<(), String> {
    let m = int_model(&mut rng(seed));
    let (l, props) = super::model(&m);
    for p in &props {
        let (cts, cgoal) = prepare(&l.brs, p, None, true)?;
        let o = check(&cts, &cgoal, DEFAULT_BUDGET);
        if o.verdict.is_rejected() {
            return Err(format!("seed {seed} {}: {:?}", p.id, o.verdict));
        }
        let (pts, pgoal) = prepare(&l.brs, p, None, false)?;
        let g = oracle::enumerate(&pts, 5_000_000);
        let want = oracle::violated(&pts, &pgoal, 5_000_000);
        if o.verdict.is_violated() != want {
            return Err(format!(
                "seed {seed} {}: compressed {} brute force violated={want}\n{}{}",
                p.id,
                o.verdict.word(),
                m.rules,
                m.props
            ));
        }
        if let Some(tr) = o.verdict.trace() {
            tr.replay(&cts).map_err(|e| format!("seed {seed} {}: replay {e}", p.id))?;
        }
        t.props += 1;
        t.violated += want as usize;
        t.compressed_states += o.explored;
        t.plain_states += g.states.len();
    }
    Ok(())
}
