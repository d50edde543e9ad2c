use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::ConfigError;
use crate::link::{FlowSet, PacketTrace};

/// State captured at one fluid event boundary (arrival or backlog emptying).
#[derive(Debug, Clone)]
pub struct FfqEvent {
    pub time: f64,
    /// flow id -> cumulative bits of fluid service.
    pub cum_service: BTreeMap<usize, f64>,
    /// Cumulative server busy time up to this boundary.
    pub busy_time: f64,
    /// System virtual time (normalized service), monotone, never reset.
    pub virtual_time: f64,
    /// Rate of the virtual clock on the interval after this boundary.
    pub vt_slope_after: f64,
    pub backlogged: Vec<usize>,
}

/// Exact event-driven evaluation of the fluid fair-queueing server.
#[derive(Debug, Clone)]
pub struct FfqResult {
    /// Fluid departure time per trace packet (same indexing as the trace).
    pub departures: Vec<f64>,
    pub events: Vec<FfqEvent>,
}

impl FfqResult {
    /// V(t) by interpolation over the piecewise-linear event record.
    pub fn virtual_time_at(&self, t: f64) -> f64 {
        let mut lo = 0usize;
        let mut hi = self.events.len();
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.events[mid].time <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let e = &self.events[lo];
        e.virtual_time + (t - e.time).max(0.0) * e.vt_slope_after
    }
}

struct FlowQueue {
    /// (trace index, remaining bits), FIFO.
    packets: VecDeque<(usize, f64)>,
    backlog: f64,
    cum_service: f64,
}

/// Fluid service per Eq.-style proportional sharing: between events every
/// backlogged flow n is served at rate phi_n / sum(phi_B) * C; a packet's
/// fluid departure is when its flow's cumulative service covers it.
pub fn ffq_service(trace: &PacketTrace, flows: &FlowSet) -> Result<FfqResult, ConfigError> {
    let packets = trace.packets();
    let capacity = flows.capacity();
    let mut fq: BTreeMap<usize, FlowQueue> = BTreeMap::new();
    for (f, _) in flows.flows() {
        fq.insert(
            f,
            FlowQueue {
                packets: VecDeque::new(),
                backlog: 0.0,
                cum_service: 0.0,
            },
        );
    }
    for p in packets {
        flows.weight(p.flow_id)?; // every trace flow must be configured
    }

    let mut departures = vec![f64::NAN; packets.len()];
    let mut events: Vec<FfqEvent> = Vec::new();
    let mut t = 0.0f64;
    let mut vt = 0.0f64;
    let mut busy = 0.0f64;
    let mut next = 0usize; // next trace arrival

    let snapshot = |t: f64,
                    vt: f64,
                    busy: f64,
                    fq: &BTreeMap<usize, FlowQueue>,
                    slope: f64|
     -> FfqEvent {
        FfqEvent {
            time: t,
            cum_service: fq.iter().map(|(&f, q)| (f, q.cum_service)).collect(),
            busy_time: busy,
            virtual_time: vt,
            vt_slope_after: slope,
            backlogged: fq
                .iter()
                .filter(|(_, q)| q.backlog > 0.0)
                .map(|(&f, _)| f)
                .collect(),
        }
    };
    events.push(snapshot(t, vt, busy, &fq, 0.0));

    loop {
        let backlogged: Vec<usize> = fq
            .iter()
            .filter(|(_, q)| q.backlog > 0.0)
            .map(|(&f, _)| f)
            .collect();

        if backlogged.is_empty() {
            if next >= packets.len() {
                break;
            }
            // idle: jump to the next arrival instant
            t = packets[next].arrival_time;
            while next < packets.len() && packets[next].arrival_time <= t {
                let p = packets[next];
                let q = fq.get_mut(&p.flow_id).unwrap();
                q.packets.push_back((next, p.length_bits as f64));
                q.backlog += p.length_bits as f64;
                next += 1;
            }
            let phi_sum: f64 = fq
                .iter()
                .filter(|(_, q)| q.backlog > 0.0)
                .map(|(&f, _)| flows.weight(f).unwrap())
                .sum();
            events.push(snapshot(t, vt, busy, &fq, capacity / phi_sum));
            continue;
        }

        let phi_sum: f64 = backlogged.iter().map(|&f| flows.weight(f).unwrap()).sum();
        // time until the earliest backlog empties, at current rates
        let mut dt_empty = f64::INFINITY;
        for &f in &backlogged {
            let rate = flows.weight(f).unwrap() / phi_sum * capacity;
            dt_empty = dt_empty.min(fq[&f].backlog / rate);
        }
        let dt_arrival = if next < packets.len() {
            packets[next].arrival_time - t
        } else {
            f64::INFINITY
        };
        let dt = dt_empty.min(dt_arrival);

        // serve every backlogged flow for dt
        for &f in &backlogged {
            let rate = flows.weight(f).unwrap() / phi_sum * capacity;
            let mut delta = rate * dt;
            let q = fq.get_mut(&f).unwrap();
            q.cum_service += delta;
            q.backlog = (q.backlog - delta).max(0.0);
            let mut clock = t;
            while let Some(&(idx, remaining)) = q.packets.front() {
                if remaining <= delta + 1e-9 {
                    clock += remaining / rate;
                    departures[idx] = clock;
                    delta -= remaining;
                    q.packets.pop_front();
                } else {
                    q.packets.front_mut().unwrap().1 = remaining - delta;
                    break;
                }
            }
            if q.packets.is_empty() {
                q.backlog = 0.0;
            }
        }
        t += dt;
        busy += dt;
        vt += capacity / phi_sum * dt;

        // admit arrivals landing exactly on this boundary
        while next < packets.len() && packets[next].arrival_time <= t + 1e-12 {
            let p = packets[next];
            let q = fq.get_mut(&p.flow_id).unwrap();
            q.packets.push_back((next, p.length_bits as f64));
            q.backlog += p.length_bits as f64;
            next += 1;
        }
        let phi_after: f64 = fq
            .iter()
            .filter(|(_, q)| q.backlog > 0.0)
            .map(|(&f, _)| flows.weight(f).unwrap())
            .sum();
        let slope = if phi_after > 0.0 {
            capacity / phi_after
        } else {
            0.0
        };
        events.push(snapshot(t, vt, busy, &fq, slope));
    }

    Ok(FfqResult { departures, events })
}
