use alloc::vec;

use crate::model::{Matching, VoqSwitchState};
use crate::sched::{next_from, request_matrix};

/// Two-dimensional round robin: grant and accept by rotating priority, with
/// pointers advancing past their selections every slot whether or not the
/// grant is accepted. Under saturation the grant pointers stay synchronized,
/// which caps throughput well below iSLIP.
pub fn rr_2d_schedule(state: &mut VoqSwitchState) -> Matching {
    let n = state.n_ports();
    let requests = request_matrix(state);

    let mut grants: alloc::vec::Vec<Option<usize>> = vec![None; n]; // output -> input
    for j in 0..n {
        if let Some(i) = next_from(n, state.grant_index(j), |i| requests[i][j]) {
            grants[j] = Some(i);
            state.set_grant_index(j, i + 1); // unconditional advance
        }
    }

    let mut pairs = alloc::vec::Vec::new();
    let mut out_taken = vec![false; n];
    for i in 0..n {
        if let Some(j) = next_from(n, state.accept_index(i), |j| grants[j] == Some(i)) {
            state.set_accept_index(i, j + 1); // unconditional advance
            if !out_taken[j] {
                out_taken[j] = true;
                pairs.push((i, j));
            }
        }
    }
    Matching::from_pairs(n, pairs).expect("grant/accept yields a valid matching")
}
