use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::error::ConfigError;
use crate::link::ffq::{ffq_service, FfqResult};
use crate::link::{CurveSample, FlowSet, PacketTrace, ScheduleResult, ScheduledPacket};

/// Virtual-time packet disciplines. They differ only in how the system
/// virtual clock V(t) advances and (for SFQ) in the dispatch key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtDiscipline {
    /// V(t) = real time; per-flow finish tags persist across idle periods.
    VirtualClock,
    /// V(t) taken from the exact fluid reference, monotone, never reset.
    Wfq,
    /// V(t) = finish tag of the packet in service; reset when the system empties.
    Scfq,
    /// V(t) = start tag of the packet in service; dispatch by minimum start tag.
    Sfq,
    /// V(t) = max(V, min start tag over backlogged flow heads).
    Msfq,
}

struct Tagged {
    packet_index: usize,
    length_bits: u64,
    arrival_time: f64,
    start_tag: f64,
    finish_tag: f64,
}

struct Server<'a> {
    discipline: VtDiscipline,
    flows: &'a FlowSet,
    capacity: f64,
    fluid: Option<FfqResult>,
    v: f64,
    last_finish: BTreeMap<usize, f64>,
    queues: BTreeMap<usize, VecDeque<Tagged>>,
    served_bits: BTreeMap<usize, f64>,
}

impl Server<'_> {
    fn v_at(&mut self, t: f64) -> f64 {
        match self.discipline {
            VtDiscipline::VirtualClock => t,
            VtDiscipline::Wfq => self.fluid.as_ref().unwrap().virtual_time_at(t),
            VtDiscipline::Scfq | VtDiscipline::Sfq => self.v,
            VtDiscipline::Msfq => {
                let min_head = self
                    .queues
                    .values()
                    .filter_map(|q| q.front())
                    .map(|p| p.start_tag)
                    .fold(f64::INFINITY, f64::min);
                if min_head.is_finite() && min_head > self.v {
                    self.v = min_head;
                }
                self.v
            }
        }
    }

    fn tag_arrival(&mut self, idx: usize, flow: usize, len: u64, t: f64) -> Result<(), ConfigError> {
        let phi = self.flows.weight(flow)?;
        let v = self.v_at(t);
        let prev = self.last_finish.get(&flow).copied().unwrap_or(0.0);
        let start = if v > prev { v } else { prev };
        // Virtual Clock's clock is real time, so its tags are in seconds
        // and the flow's reserved rate is phi * C; the others tag in
        // normalized-service units where L / phi is already consistent.
        let finish = if self.discipline == VtDiscipline::VirtualClock {
            start + len as f64 / (phi * self.capacity)
        } else {
            start + len as f64 / phi
        };
        self.last_finish.insert(flow, finish);
        self.queues.entry(flow).or_default().push_back(Tagged {
            packet_index: idx,
            length_bits: len,
            arrival_time: t,
            start_tag: start,
            finish_tag: finish,
        });
        Ok(())
    }

    /// Pops the head with the smallest dispatch key; tie on (arrival, flow id).
    fn dispatch(&mut self) -> Option<(usize, Tagged)> {
        let by_start = self.discipline == VtDiscipline::Sfq;
        let mut best: Option<(f64, f64, usize)> = None;
        for (&f, q) in &self.queues {
            if let Some(head) = q.front() {
                let key = if by_start { head.start_tag } else { head.finish_tag };
                let cand = (key, head.arrival_time, f);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        let (_, _, flow) = best?;
        let tagged = self.queues.get_mut(&flow).unwrap().pop_front().unwrap();
        match self.discipline {
            VtDiscipline::Scfq => self.v = self.v.max(tagged.finish_tag),
            VtDiscipline::Sfq => self.v = self.v.max(tagged.start_tag),
            VtDiscipline::Msfq => {
                self.v = self.v.max(tagged.start_tag);
            }
            _ => {}
        }
        Some((flow, tagged))
    }

    fn system_empty(&self) -> bool {
        self.queues.values().all(|q| q.is_empty())
    }

    fn reset_busy_period(&mut self) {
        if matches!(
            self.discipline,
            VtDiscipline::Scfq | VtDiscipline::Sfq | VtDiscipline::Msfq
        ) {
            self.v = 0.0;
            self.last_finish.clear();
        }
    }
}

/// Non-preemptive, work-conserving packetized schedule under the chosen
/// virtual-time discipline. Samples are taken at every departure.
pub fn vt_schedule(
    trace: &PacketTrace,
    flows: &FlowSet,
    discipline: VtDiscipline,
) -> Result<ScheduleResult, ConfigError> {
    let fluid = if discipline == VtDiscipline::Wfq {
        Some(ffq_service(trace, flows)?)
    } else {
        for p in trace.packets() {
            flows.weight(p.flow_id)?;
        }
        None
    };
    let mut server = Server {
        discipline,
        flows,
        capacity: flows.capacity(),
        fluid,
        v: 0.0,
        last_finish: BTreeMap::new(),
        queues: BTreeMap::new(),
        served_bits: BTreeMap::new(),
    };
    for (f, _) in flows.flows() {
        server.served_bits.insert(f, 0.0);
    }

    let packets = trace.packets();
    let capacity = flows.capacity();
    let mut out = ScheduleResult::default();
    let mut next = 0usize;
    let mut t;
    // (flow, tagged, completion time) of the packet in service
    let mut in_service: Option<(usize, Tagged, f64)> = None;

    loop {
        let next_arrival = if next < packets.len() {
            packets[next].arrival_time
        } else {
            f64::INFINITY
        };
        let completion = in_service.as_ref().map_or(f64::INFINITY, |s| s.2);
        if next_arrival.is_infinite() && completion.is_infinite() && server.system_empty() {
            break;
        }

        if next_arrival <= completion {
            t = next_arrival;
            // admit every packet landing at this instant before dispatching
            while next < packets.len() && packets[next].arrival_time <= t {
                let p = packets[next];
                server.tag_arrival(next, p.flow_id, p.length_bits, t)?;
                next += 1;
            }
        } else {
            t = completion;
            let (flow, tagged, _) = in_service.take().unwrap();
            *server.served_bits.get_mut(&flow).unwrap() += tagged.length_bits as f64;
            out.packets.push(ScheduledPacket {
                packet_index: tagged.packet_index,
                flow_id: flow,
                length_bits: tagged.length_bits,
                arrival_time: tagged.arrival_time,
                start_tag: tagged.start_tag,
                finish_tag: tagged.finish_tag,
                start_service: t - tagged.length_bits as f64 / capacity,
                departure: t,
            });
            let mut backlogged: Vec<usize> = server
                .queues
                .iter()
                .filter(|(_, q)| !q.is_empty())
                .map(|(&f, _)| f)
                .collect();
            backlogged.sort_unstable();
            out.samples.push(CurveSample {
                time: t,
                service: server.served_bits.clone(),
                backlogged,
            });
            if server.system_empty() {
                server.reset_busy_period();
            }
        }

        if in_service.is_none() {
            if let Some((flow, tagged)) = server.dispatch() {
                let done = t + tagged.length_bits as f64 / capacity;
                in_service = Some((flow, tagged, done));
            }
        }
    }

    Ok(out)
}
