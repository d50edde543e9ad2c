use alloc::vec::Vec;

use crate::matching::{max_weight_matching, WeightMatrix};
use crate::model::{Matching, VoqSwitchState};

/// Weight assigned to each non-empty VOQ edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightPolicy {
    /// Queue length |voq[i][j]|.
    Lqf,
    /// Waiting time of the head-of-line cell.
    Ocf,
    /// Port occupancy R_i + C_j.
    Lpf,
}

/// Exact maximum-weight matching over non-empty VOQs under the given policy.
pub fn weighted_schedule(state: &VoqSwitchState, policy: WeightPolicy) -> Matching {
    let n = state.n_ports();
    let w: Vec<Vec<Option<i64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if state.voq(i, j).is_empty() {
                        return None; // forbidden: never match an empty VOQ
                    }
                    Some(match policy {
                        WeightPolicy::Lqf => state.voq(i, j).len() as i64,
                        WeightPolicy::Ocf => state.hol_wait(i, j) as i64,
                        WeightPolicy::Lpf => {
                            (state.queued_at_input(i) + state.queued_for_output(j)) as i64
                        }
                    })
                })
                .collect()
        })
        .collect();
    let w = WeightMatrix::new(w).expect("counts and waits are non-negative");
    max_weight_matching(&w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    #[test]
    fn lqf_diagonal_queues_identity_matching() {
        let n = 4;
        let mut s = VoqSwitchState::new(n, 8);
        for i in 0..n {
            for _ in 0..=i {
                let c = s.make_cell(0, i, i);
                s.enqueue_cell(c).unwrap();
            }
        }
        let m = weighted_schedule(&s, WeightPolicy::Lqf);
        assert_eq!(m.pairs(), &[(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    /// Brute-force LQF weight over all permutations of a 4x4 instance.
    fn brute_lqf_weight(s: &VoqSwitchState) -> i64 {
        let n = s.n_ports();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = 0i64;
        // Heap's algorithm
        fn heaps(k: usize, perm: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
            if k == 1 {
                visit(perm);
                return;
            }
            for i in 0..k {
                heaps(k - 1, perm, visit);
                if k % 2 == 0 {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        heaps(n, &mut perm, &mut |p: &[usize]| {
            let w: i64 = p
                .iter()
                .enumerate()
                .map(|(i, &j)| s.voq(i, j).len() as i64)
                .sum();
            best = best.max(w);
        });
        best
    }

    #[test]
    fn lqf_weight_equals_permutation_brute_force() {
        let mut rng = RngState::new(42);
        for _ in 0..30 {
            let n = 4;
            let mut s = VoqSwitchState::new(n, 8);
            for i in 0..n {
                for j in 0..n {
                    let depth = (rng.next_u64() % 5) as usize;
                    for _ in 0..depth {
                        let c = s.make_cell(0, i, j);
                        s.enqueue_cell(c).unwrap();
                    }
                }
            }
            let m = weighted_schedule(&s, WeightPolicy::Lqf);
            let got: i64 = m
                .pairs()
                .iter()
                .map(|&(i, j)| s.voq(i, j).len() as i64)
                .sum();
            assert_eq!(got, brute_lqf_weight(&s));
            assert!(m.pairs().iter().all(|&(i, j)| !s.voq(i, j).is_empty()));
        }
    }

    #[test]
    fn ocf_old_hol_cell_wins_when_weight_dominates() {
        let n = 4;
        let mut s = VoqSwitchState::new(n, 8);
        // a very old cell at (2,3)
        let c = s.make_cell(0, 2, 3);
        s.enqueue_cell(c).unwrap();
        for _ in 0..100 {
            s.advance_slot();
        }
        // longer but young queues elsewhere on column 3
        for i in [0usize, 1] {
            for _ in 0..5 {
                let c = s.make_cell(0, i, 3);
                s.enqueue_cell(c).unwrap();
            }
        }
        let m = weighted_schedule(&s, WeightPolicy::Ocf);
        assert_eq!(m.input_of(3), Some(2));
    }

    #[test]
    fn lpf_uses_port_occupancy() {
        let n = 2;
        let mut s = VoqSwitchState::new(n, 8);
        // input 0 heavily loaded overall, both inputs have one cell for output 0
        for _ in 0..10 {
            let c = s.make_cell(0, 0, 1);
            s.enqueue_cell(c).unwrap();
        }
        for i in 0..2 {
            let c = s.make_cell(0, i, 0);
            s.enqueue_cell(c).unwrap();
        }
        let m = weighted_schedule(&s, WeightPolicy::Lpf);
        // (0,1) weight: R_0 + C_1 = 11 + 10; (0,0): 11 + 2; (1,0): 1 + 2.
        // best total = (0,1) + (1,0)
        assert_eq!(m.output_of(0), Some(1));
        assert_eq!(m.output_of(1), Some(0));
    }
}
