//! One line per acceptance criterion. Exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{compression, external, liveness, perf, scenarios, slicing};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn run(n: u32, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
        .unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
    let dt = t0.elapsed();
    let (word, detail, ok) = match out {
        Outcome::Pass(d) => ("PASS", d, true),
        Outcome::Fail(d) => ("FAIL", d, false),
        Outcome::Skip(d) => ("SKIP", d, true),
    };
    println!("criterion {n}: {word} {title} ({detail}; {:.2}s)", dt.as_secs_f64());
    ok
}

fn c1() -> Outcome {
    let mut slowest = Duration::ZERO;
    for (name, cand, want) in scenarios::EXPECTED {
        match scenarios::threat_fixture(name, cand, want) {
            Ok(t) if t < Duration::from_secs(1) => slowest = slowest.max(t),
            Ok(t) => return Outcome::Fail(format!("{name} took {t:?}")),
            Err(e) => return Outcome::Fail(e),
        }
    }
    Outcome::Pass(format!(
        "{} fixtures T1-T7 as expected, slowest {:.0} ms",
        scenarios::EXPECTED.len(),
        slowest.as_secs_f64() * 1e3
    ))
}

fn c2() -> Outcome {
    let (t1, swapped) = scenarios::heater_orderings();
    let want = [("L1".to_owned(), "holds"), ("L2".to_owned(), "violated")];
    if t1 == "violated" && swapped == want {
        Outcome::Pass("off<window: T1 leadsto violated; swapped: window leadsto holds, heater-off leadsto violated".into())
    } else {
        Outcome::Fail(format!("T1 {t1}, swapped {swapped:?}"))
    }
}

fn c3() -> Outcome {
    let mut t = compression::Tally { props: 0, violated: 0, compressed_states: 0, plain_states: 0 };
    let t0 = Instant::now();
    for seed in 0..25 {
        if let Err(e) = compression::compare(seed, &mut t) {
            return Outcome::Fail(e);
        }
    }
    if t0.elapsed() > Duration::from_secs(60) {
        return Outcome::Fail(format!("took {:?}", t0.elapsed()));
    }
    Outcome::Pass(format!(
        "25/25 models, {} properties ({} violated) agree; {} vs {} states",
        t.props, t.violated, t.compressed_states, t.plain_states
    ))
}

fn c4() -> Outcome {
    let mut t = slicing::Tally::default();
    for seed in 0..25 {
        if let Err(e) = slicing::compare(seed, &mut t) {
            return Outcome::Fail(e);
        }
    }
    Outcome::Pass(format!(
        "25/25 models, partition and closure hold; {} within-slicer verdicts agree ({} violated), {} cross-slicer rejected",
        t.checked, t.violated, t.rejected
    ))
}

fn c5() -> Outcome {
    let r = perf::two_cluster();
    let detail = format!(
        "{} vs {} states ({:.0}x)",
        r.sliced,
        r.monolithic,
        r.monolithic as f64 / r.sliced.max(1) as f64
    );
    if !r.same_verdicts {
        Outcome::Fail(format!("verdicts differ: {:?}", r.words))
    } else if r.sliced * 10 > r.monolithic {
        Outcome::Fail(detail)
    } else if r.elapsed > Duration::from_secs(30) {
        Outcome::Fail(format!("{detail}, took {:?}", r.elapsed))
    } else {
        Outcome::Pass(detail)
    }
}

fn c6() -> Outcome {
    let mut lassos = 0;
    for seed in 0..50 {
        match liveness::compare(seed) {
            Ok(found) => lassos += found as usize,
            Err(e) => return Outcome::Fail(e),
        }
    }
    Outcome::Pass(format!("50/50 agree ({lassos} with a fair lasso)"))
}

fn c7() -> Outcome {
    match scenarios::all_traces() {
        Ok((v, ok)) if v == ok && v > 0 => Outcome::Pass(format!("{ok}/{v} traces replay and witness")),
        Ok((v, ok)) => Outcome::Fail(format!("{ok}/{v}")),
        Err(e) => Outcome::Fail(e),
    }
}

fn c8() -> Outcome {
    match external::cross_check(&["curling_iron", "heater_window"]) {
        None => Outcome::Skip("NuSMV not on PATH".into()),
        Some(Ok(n)) => Outcome::Pass(format!("{n} specs agree")),
        Some(Err(e)) => Outcome::Fail(e),
    }
}

fn main() {
    let results = [
        run(1, "threat fixtures", c1),
        run(2, "tardy ordering", c2),
        run(3, "compression equivalence", c3),
        run(4, "slicing soundness", c4),
        run(5, "slicing+compression state reduction", c5),
        run(6, "fair-lasso oracle", c6),
        run(7, "trace replay", c7),
        run(8, "external checker", c8),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
