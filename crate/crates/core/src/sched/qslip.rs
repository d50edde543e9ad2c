use alloc::vec;
use alloc::vec::Vec;

use crate::model::{FlowBitmap, Matching, VoqSwitchState};
use crate::sched::next_from;

/// Flow-aware iSLIP: requests carry per-VOQ flow bitmaps, each output picks an
/// expected flow by round robin over the flow-id space and grants the
/// round-robin-first input holding that flow. Accepted first-iteration grants
/// advance the grant, accept, and flow pointers.
///
/// Returns the matching plus the flow each matched output selected, which the
/// caller passes to `apply_matching` as the specific-flow dequeue policy.
pub fn qslip_schedule(
    state: &mut VoqSwitchState,
    iterations: usize,
) -> (Matching, Vec<Option<usize>>) {
    let n = state.n_ports();
    let mut matched_in: Vec<Option<usize>> = vec![None; n];
    let mut matched_out: Vec<Option<usize>> = vec![None; n];
    let mut selected_flows: Vec<Option<usize>> = vec![None; n];

    for iter in 0..iterations.max(1) {
        // Grant: output j ORs the requesters' bitmaps, picks the expected
        // flow cyclically from its flow pointer, and grants the requester
        // holding that flow nearest its grant pointer.
        let mut grants: Vec<Option<(usize, usize)>> = vec![None; n]; // output -> (input, flow)
        for j in 0..n {
            if matched_out[j].is_some() {
                continue;
            }
            let mut pending = FlowBitmap::new(state.flow_space());
            for i in 0..n {
                if matched_in[i].is_none() && !state.voq(i, j).is_empty() {
                    pending.or_assign(state.voq(i, j).bitmap());
                }
            }
            let Some(flow) = pending.first_set_from(state.flow_index(j)) else {
                continue; // no requests at all
            };
            let granted = next_from(n, state.grant_index(j), |i| {
                matched_in[i].is_none() && state.voq(i, j).has_flow(flow)
            });
            if let Some(i) = granted {
                grants[j] = Some((i, flow));
            }
        }

        // Accept: as iSLIP, by the input's rotating accept pointer.
        let mut any_new = false;
        for i in 0..n {
            if matched_in[i].is_some() {
                continue;
            }
            let accepted = next_from(n, state.accept_index(i), |j| {
                matches!(grants[j], Some((gi, _)) if gi == i)
            });
            if let Some(j) = accepted {
                let (_, flow) = grants[j].unwrap();
                matched_in[i] = Some(j);
                matched_out[j] = Some(i);
                selected_flows[j] = Some(flow);
                any_new = true;
                if iter == 0 {
                    state.set_grant_index(j, i + 1);
                    state.set_accept_index(i, j + 1);
                    state.set_flow_index(j, flow + 1);
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
    let m = Matching::from_pairs(n, pairs).expect("grant/accept yields a valid matching");
    (m, selected_flows)
}
