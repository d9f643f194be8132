mod common;

use std::time::Instant;

use common::compression::{compare, Tally};

#[test]
fn compressed_matches_brute_force() {
    let t0 = Instant::now();
    let mut t = Tally { props: 0, violated: 0, compressed_states: 0, plain_states: 0 };
    for seed in 0..25 {
        compare(seed, &mut t).unwrap();
    }
    eprintln!(
        "{} props, {} violated, states {} compressed vs {} concrete, {:?}",
        t.props, t.violated, t.compressed_states, t.plain_states, t0.elapsed()
    );
    assert!(t.violated > 0 && t.violated < t.props);
}

#[test]
fn compressed_matches_brute_force_wider() {
    let mut t = Tally { props: 0, violated: 0, compressed_states: 0, plain_states: 0 };
    for seed in 100..300 {
        compare(seed, &mut t).unwrap();
    }
}
