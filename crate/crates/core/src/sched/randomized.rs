use alloc::vec::Vec;

use crate::model::{Matching, VoqSwitchState};
use crate::rng::RngState;

/// Randomized matching variants built on queue-length weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomizedMode {
    /// Compare a fresh uniformly random permutation against the previous
    /// matching, keep the heavier.
    Tassiulas,
    /// Retain the heaviest previous edges covering at least `gamma` of the
    /// previous weight, complete randomly, keep the heavier of the two.
    Laura { gamma: f64 },
}

fn lqf_weight(state: &VoqSwitchState, m: &Matching) -> i64 {
    m.pairs()
        .iter()
        .map(|&(i, j)| state.voq(i, j).len() as i64)
        .sum()
}

fn random_full_matching(n: usize, rng: &mut RngState) -> Matching {
    let perm = rng.permutation(n);
    Matching::from_pairs(n, perm.into_iter().enumerate()).expect("permutation is valid")
}

/// One slot of randomized scheduling. `prev` is the scheduler's retained
/// matching (empty on the first slot) and is updated to the winner. The
/// returned matching is the winner restricted to non-empty VOQs.
pub fn randomized_schedule(
    state: &VoqSwitchState,
    mode: RandomizedMode,
    prev: &mut Matching,
    rng: &mut RngState,
) -> Matching {
    let n = state.n_ports();
    let candidate = match mode {
        RandomizedMode::Tassiulas => random_full_matching(n, rng),
        RandomizedMode::Laura { gamma } => {
            assert!(
                gamma > 0.0 && gamma <= 1.0,
                "laura gamma must be in (0,1], got {gamma}"
            );
            laura_candidate(state, prev, gamma, rng)
        }
    };
    if prev.is_empty() || lqf_weight(state, &candidate) > lqf_weight(state, prev) {
        *prev = candidate;
    }
    let live = prev
        .pairs()
        .iter()
        .copied()
        .filter(|&(i, j)| !state.voq(i, j).is_empty());
    Matching::from_pairs(n, live).expect("filtering preserves validity")
}

fn laura_candidate(
    state: &VoqSwitchState,
    prev: &Matching,
    gamma: f64,
    rng: &mut RngState,
) -> Matching {
    let n = state.n_ports();
    let total = lqf_weight(state, prev);
    let mut edges: Vec<(i64, usize, usize)> = prev
        .pairs()
        .iter()
        .map(|&(i, j)| (state.voq(i, j).len() as i64, i, j))
        .collect();
    edges.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut kept: Vec<(usize, usize)> = Vec::new();
    let mut acc = 0i64;
    let threshold = gamma * total as f64;
    for (w, i, j) in edges {
        if acc as f64 >= threshold {
            break;
        }
        acc += w;
        kept.push((i, j));
    }

    // complete uniformly at random over the remaining ports
    let mut in_free: Vec<usize> = (0..n)
        .filter(|&i| !kept.iter().any(|&(ki, _)| ki == i))
        .collect();
    let out_free: Vec<usize> = (0..n)
        .filter(|&j| !kept.iter().any(|&(_, kj)| kj == j))
        .collect();
    let perm = rng.permutation(in_free.len());
    in_free = perm.into_iter().map(|k| in_free[k]).collect();
    kept.extend(in_free.into_iter().zip(out_free));
    Matching::from_pairs(n, kept).expect("kept edges are disjoint")
}
