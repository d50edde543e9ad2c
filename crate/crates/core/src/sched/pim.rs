use alloc::vec;
use alloc::vec::Vec;

use crate::config_err;
use crate::error::ConfigError;
use crate::model::{Matching, VoqSwitchState};
use crate::rng::RngState;
use crate::sched::request_matrix;

/// Parallel iterative matching: random grant among requesters, random accept
/// among grants, iterated over unmatched ports.
pub fn pim_schedule(state: &VoqSwitchState, iterations: usize, rng: &mut RngState) -> Matching {
    let requests = request_matrix(state);
    pim_rounds(&requests, iterations, rng, |_reqs| {})
}

fn pim_rounds(
    requests: &[Vec<bool>],
    iterations: usize,
    rng: &mut RngState,
    mut mask_step: impl FnMut(&mut Vec<Vec<bool>>),
) -> Matching {
    let n = requests.len();
    let mut matched_in: Vec<Option<usize>> = vec![None; n];
    let mut matched_out: Vec<Option<usize>> = vec![None; n];

    for _ in 0..iterations.max(1) {
        // per-iteration view of requests from unmatched pairs
        let mut live = vec![vec![false; n]; n];
        for i in 0..n {
            if matched_in[i].is_some() {
                continue;
            }
            for j in 0..n {
                live[i][j] = matched_out[j].is_none() && requests[i][j];
            }
        }
        mask_step(&mut live);

        // Grant: each output grants a uniformly random requester.
        let mut grants: Vec<Option<usize>> = vec![None; n];
        for (j, grant) in grants.iter_mut().enumerate() {
            let requesters: Vec<usize> = (0..n).filter(|&i| live[i][j]).collect();
            if !requesters.is_empty() {
                *grant = Some(requesters[rng.index(requesters.len())]);
            }
        }
        // Accept: each input accepts a uniformly random grant.
        let mut any_new = false;
        for i in 0..n {
            if matched_in[i].is_some() {
                continue;
            }
            let granted: Vec<usize> = (0..n).filter(|&j| grants[j] == Some(i)).collect();
            if !granted.is_empty() {
                let j = granted[rng.index(granted.len())];
                matched_in[i] = Some(j);
                matched_out[j] = Some(i);
                any_new = true;
            }
        }
        if !any_new {
            break;
        }
    }

    let pairs = matched_in
        .iter()
        .enumerate()
        .filter_map(|(i, &j)| j.map(|j| (i, j)));
    Matching::from_pairs(n, pairs).expect("grant/accept yields a valid matching")
}

/// Per-frame service credits for WPIM.
#[derive(Debug, Clone)]
pub struct CreditTable {
    credit: Vec<Vec<u64>>,
    used: Vec<Vec<u64>>,
    frame_len: u64,
}

impl CreditTable {
    pub fn new(credit: Vec<Vec<u64>>, frame_len: u64) -> Result<Self, ConfigError> {
        let n = credit.len();
        if frame_len == 0 {
            return Err(config_err!("frame length must be positive"));
        }
        for row in &credit {
            if row.len() != n {
                return Err(config_err!("credit table is not square"));
            }
        }
        for j in 0..n {
            let col: u64 = credit.iter().map(|row| row[j]).sum();
            if col > frame_len {
                return Err(config_err!(
                    "credits for output {j} sum to {col}, above frame length {frame_len}"
                ));
            }
        }
        Ok(Self {
            used: vec![vec![0; n]; n],
            credit,
            frame_len,
        })
    }

    pub fn frame_len(&self) -> u64 {
        self.frame_len
    }

    pub fn used(&self, input: usize, output: usize) -> u64 {
        self.used[input][output]
    }

    fn exhausted(&self, input: usize, output: usize) -> bool {
        self.used[input][output] >= self.credit[input][output]
    }

    fn reset_frame(&mut self) {
        for row in &mut self.used {
            row.fill(0);
        }
    }
}

/// PIM with per-frame credit masking. Requests from connections that consumed
/// their credit are masked before the grant step; an output whose requesters
/// are all masked lifts the mask for the slot (work conservation).
pub fn wpim_schedule(
    state: &VoqSwitchState,
    credits: &mut CreditTable,
    iterations: usize,
    rng: &mut RngState,
) -> Matching {
    if state.slot() % credits.frame_len == 0 {
        credits.reset_frame();
    }
    let requests = request_matrix(state);
    let n = requests.len();
    let m = pim_rounds(&requests, iterations, rng, |live| {
        for j in 0..n {
            let any_unmasked = (0..n).any(|i| live[i][j] && !credits.exhausted(i, j));
            if !any_unmasked {
                continue; // all requesters masked (or none): lift the mask
            }
            for i in 0..n {
                if live[i][j] && credits.exhausted(i, j) {
                    live[i][j] = false;
                }
            }
        }
    });
    for &(i, j) in m.pairs() {
        credits.used[i][j] += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::is_maximal;
    use crate::model::DequeuePolicy;

    fn saturated(n: usize) -> VoqSwitchState {
        let mut s = VoqSwitchState::new(n, 64);
        for i in 0..n {
            for j in 0..n {
                for _ in 0..4 {
                    let c = s.make_cell(j % 64, i, j);
                    s.enqueue_cell(c).unwrap();
                }
            }
        }
        s
    }

    #[test]
    fn permutation_requests_matched_in_one_iteration() {
        let n = 4;
        let mut s = VoqSwitchState::new(n, 64);
        for i in 0..n {
            let c = s.make_cell(0, i, (i + 2) % n);
            s.enqueue_cell(c).unwrap();
        }
        let mut rng = RngState::new(1);
        let m = pim_schedule(&s, 1, &mut rng);
        assert_eq!(m.len(), n);
        for i in 0..n {
            assert_eq!(m.output_of(i), Some((i + 2) % n));
        }
    }

    #[test]
    fn k_equals_n_is_maximal() {
        let mut rng = RngState::new(7);
        for _ in 0..100 {
            let n = 4;
            let mut s = VoqSwitchState::new(n, 64);
            for i in 0..n {
                for j in 0..n {
                    if rng.next_f64() < 0.5 {
                        let c = s.make_cell(0, i, j);
                        s.enqueue_cell(c).unwrap();
                    }
                }
            }
            let requests = request_matrix(&s);
            let m = pim_schedule(&s, n, &mut rng);
            assert!(is_maximal(&requests, &m));
        }
    }

    #[test]
    fn zero_credits_behave_as_pim() {
        // with all credits zero the mask is always lifted, so a saturated
        // 2-to-1 contest still transfers one cell per slot
        let n = 2;
        let mut s = saturated(n);
        let mut credits = CreditTable::new(vec![vec![0; n]; n], 4).unwrap();
        let mut rng = RngState::new(3);
        let mut transfers = 0;
        for _ in 0..100 {
            let m = wpim_schedule(&s, &mut credits, 1, &mut rng);
            transfers += s.apply_matching(&m, DequeuePolicy::Head).len();
            crate::traffic::saturate_voqs(&mut s, &vec![vec![0], vec![1]], 2);
            s.advance_slot();
        }
        assert!(transfers >= 150, "wpim with zero credits stalled: {transfers}");
    }

    #[test]
    fn credit_shares_are_exact_per_frame() {
        // inputs {0,1} -> output 0 only, credits 3:1, frame 4
        let n = 2;
        let mut s = VoqSwitchState::new(n, 8);
        let mut credits = CreditTable::new(vec![vec![3, 0], vec![1, 0]], 4).unwrap();
        let mut rng = RngState::new(11);
        let mut served = [0u64; 2];
        let frames = 200;
        for slot in 0..(4 * frames) {
            // keep both VOQs to output 0 backlogged
            for i in 0..2 {
                while s.voq(i, 0).len() < 2 {
                    let c = s.make_cell(0, i, 0);
                    s.enqueue_cell(c).unwrap();
                }
            }
            let m = wpim_schedule(&s, &mut credits, 1, &mut rng);
            for cell in s.apply_matching(&m, DequeuePolicy::Head) {
                served[cell.input_port] += 1;
            }
            s.advance_slot();
            if slot % 4 == 3 {
                assert_eq!(served[0], 3 * (slot as u64 / 4 + 1));
                assert_eq!(served[1], slot as u64 / 4 + 1);
            }
        }
    }

    #[test]
    fn full_credit_never_masked() {
        let n = 2;
        let mut s = saturated(n);
        let mut credits = CreditTable::new(vec![vec![4, 0], vec![0, 0]], 4).unwrap();
        let mut rng = RngState::new(5);
        // input 0 requests only output 0 here; it must be served every slot
        let mut s0 = VoqSwitchState::new(n, 8);
        for _ in 0..16 {
            let c = s0.make_cell(0, 0, 0);
            s0.enqueue_cell(c).unwrap();
        }
        core::mem::swap(&mut s, &mut s0);
        for _ in 0..8 {
            let m = wpim_schedule(&s, &mut credits, 1, &mut rng);
            assert_eq!(m.output_of(0), Some(0));
            s.apply_matching(&m, DequeuePolicy::Head);
            s.advance_slot();
        }
    }

    #[test]
    fn oversubscribed_credits_rejected() {
        assert!(CreditTable::new(vec![vec![3, 0], vec![2, 0]], 4).is_err());
    }
}
