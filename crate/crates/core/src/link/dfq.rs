use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::config_err;
use crate::error::ConfigError;
use crate::link::{ceil_pos, CurveSample, FlowSet, PacketTrace, ScheduleResult, ScheduledPacket};

struct Queued {
    index: usize,
    remaining: u64,
    first_start: Option<f64>,
}

/// Deficit-fragmentation queueing with granularity T: each round serves
/// ceil(w_i * T * C) bits from every flow backlogged at the round start,
/// splitting the packet at the budget boundary; the tail fragment leads the
/// queue into the next round. A packet departs when its last bit is sent,
/// and start_service marks its first bit (fragments of different flows may
/// interleave in between).
pub fn dfq_schedule(
    trace: &PacketTrace,
    flows: &FlowSet,
    granularity: f64,
) -> Result<ScheduleResult, ConfigError> {
    if granularity <= 0.0 || !granularity.is_finite() {
        return Err(config_err!("granularity T must be positive"));
    }
    for p in trace.packets() {
        flows.weight(p.flow_id)?;
    }
    let capacity = flows.capacity();
    let packets = trace.packets();
    let budget_of: BTreeMap<usize, u64> = flows
        .flows()
        .map(|(f, w)| (f, ceil_pos(w * granularity * capacity).max(1)))
        .collect();

    let mut queues: BTreeMap<usize, VecDeque<Queued>> = BTreeMap::new();
    let mut served_bits: BTreeMap<usize, f64> = BTreeMap::new();
    for (f, _) in flows.flows() {
        served_bits.insert(f, 0.0);
    }
    let mut out = ScheduleResult::default();
    let mut next = 0usize;
    let mut t = 0.0f64;

    macro_rules! admit {
        ($t:expr) => {
            while next < packets.len() && packets[next].arrival_time <= $t {
                queues
                    .entry(packets[next].flow_id)
                    .or_default()
                    .push_back(Queued {
                        index: next,
                        remaining: packets[next].length_bits,
                        first_start: None,
                    });
                next += 1;
            }
        };
    }

    loop {
        admit!(t);
        let round: Vec<usize> = queues
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(&f, _)| f)
            .collect();
        if round.is_empty() {
            if next >= packets.len() {
                break;
            }
            t = packets[next].arrival_time;
            continue;
        }
        for &flow in &round {
            let mut budget = budget_of[&flow];
            while budget > 0 {
                let Some(head) = queues.get_mut(&flow).and_then(|q| q.front_mut()) else {
                    break; // unused budget is not carried over
                };
                let chunk = head.remaining.min(budget);
                if head.first_start.is_none() {
                    head.first_start = Some(t);
                }
                t += chunk as f64 / capacity;
                head.remaining -= chunk;
                budget -= chunk;
                *served_bits.get_mut(&flow).unwrap() += chunk as f64;
                if head.remaining == 0 {
                    let idx = head.index;
                    let start = head.first_start.unwrap();
                    queues.get_mut(&flow).unwrap().pop_front();
                    out.packets.push(ScheduledPacket {
                        packet_index: idx,
                        flow_id: flow,
                        length_bits: packets[idx].length_bits,
                        arrival_time: packets[idx].arrival_time,
                        start_tag: 0.0,
                        finish_tag: 0.0,
                        start_service: start,
                        departure: t,
                    });
                }
                admit!(t);
                let mut backlogged: Vec<usize> = queues
                    .iter()
                    .filter(|(_, q)| !q.is_empty())
                    .map(|(&f, _)| f)
                    .collect();
                backlogged.sort_unstable();
                out.samples.push(CurveSample {
                    time: t,
                    service: served_bits.clone(),
                    backlogged,
                });
            }
        }
    }

    Ok(out)
}
