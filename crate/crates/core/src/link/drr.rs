use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use crate::config_err;
use crate::error::ConfigError;
use crate::link::{CurveSample, FlowSet, PacketTrace, ScheduleResult, ScheduledPacket};

/// Flows whose quantum is below their largest packet: DRR's O(1) guarantee
/// (at least one packet per visit) is void for them. Callers should warn.
pub fn drr_quantum_warnings(trace: &PacketTrace, quanta: &BTreeMap<usize, u64>) -> Vec<usize> {
    let mut max_len: BTreeMap<usize, u64> = BTreeMap::new();
    for p in trace.packets() {
        let e = max_len.entry(p.flow_id).or_insert(0);
        *e = (*e).max(p.length_bits);
    }
    max_len
        .iter()
        .filter(|(f, &l)| quanta.get(f).copied().unwrap_or(0) < l)
        .map(|(&f, _)| f)
        .collect()
}

/// Deficit round robin: visits active flows in arrival-of-backlog order,
/// adds the flow's quantum to its deficit, sends head packets while the
/// deficit covers them, and resets the deficit when the flow drains.
pub fn drr_schedule(
    trace: &PacketTrace,
    flows: &FlowSet,
    quanta: &BTreeMap<usize, u64>,
) -> Result<ScheduleResult, ConfigError> {
    for p in trace.packets() {
        flows.weight(p.flow_id)?;
        if quanta.get(&p.flow_id).copied().unwrap_or(0) == 0 {
            return Err(config_err!("flow {} has no quantum", p.flow_id));
        }
    }
    let capacity = flows.capacity();
    let packets = trace.packets();

    let mut queues: BTreeMap<usize, VecDeque<usize>> = BTreeMap::new();
    let mut active: VecDeque<usize> = VecDeque::new();
    let mut in_active: BTreeSet<usize> = BTreeSet::new();
    let mut deficit: BTreeMap<usize, f64> = BTreeMap::new();
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
                let f = packets[next].flow_id;
                queues.entry(f).or_default().push_back(next);
                if in_active.insert(f) {
                    active.push_back(f);
                }
                next += 1;
            }
        };
    }

    loop {
        admit!(t);
        if active.is_empty() {
            if next >= packets.len() {
                break;
            }
            t = packets[next].arrival_time;
            continue;
        }
        let flow = active.pop_front().unwrap();

        let d = deficit.entry(flow).or_insert(0.0);
        *d += quanta[&flow] as f64;
        loop {
            let Some(&idx) = queues.get(&flow).and_then(|q| q.front()) else {
                break;
            };
            let len = packets[idx].length_bits as f64;
            if len > *deficit.get(&flow).unwrap() {
                break;
            }
            queues.get_mut(&flow).unwrap().pop_front();
            *deficit.get_mut(&flow).unwrap() -= len;
            let start = t;
            t += len / capacity;
            *served_bits.get_mut(&flow).unwrap() += len;
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
            admit!(t); // arrivals during this transmission join queues/list
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
        if queues.get(&flow).map_or(true, |q| q.is_empty()) {
            deficit.insert(flow, 0.0); // reset on empty
            in_active.remove(&flow);
        } else {
            active.push_back(flow); // deficit carries to the next visit
        }
    }

    Ok(out)
}
