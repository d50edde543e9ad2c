use alloc::vec;

use crate::model::{Matching, VoqSwitchState};
use crate::sched::{next_from, request_matrix};

/// Iterative round-robin matching with rotating grant/accept pointers.
///
/// A grant pointer advances one past the granted input only when the grant is
/// accepted, and pointer updates happen only for first-iteration matches.
pub fn islip_schedule(state: &mut VoqSwitchState, iterations: usize) -> Matching {
    let n = state.n_ports();
    let requests = request_matrix(state);
    let mut matched_in: alloc::vec::Vec<Option<usize>> = vec![None; n];
    let mut matched_out: alloc::vec::Vec<Option<usize>> = vec![None; n];

    for iter in 0..iterations.max(1) {
        // Grant: each unmatched output picks the requesting unmatched input
        // next in round-robin order from its pointer.
        let mut grants: alloc::vec::Vec<Option<usize>> = vec![None; n]; // output -> input
        for j in 0..n {
            if matched_out[j].is_some() {
                continue;
            }
            grants[j] = next_from(n, state.grant_index(j), |i| {
                matched_in[i].is_none() && requests[i][j]
            });
        }
        // Accept: each input with grants picks the granting output next in
        // round-robin order from its pointer.
        let mut any_new = false;
        for i in 0..n {
            if matched_in[i].is_some() {
                continue;
            }
            let accepted = next_from(n, state.accept_index(i), |j| grants[j] == Some(i));
            if let Some(j) = accepted {
                matched_in[i] = Some(j);
                matched_out[j] = Some(i);
                any_new = true;
                if iter == 0 {
                    state.set_grant_index(j, i + 1);
                    state.set_accept_index(i, j + 1);
                }
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
