//! Output-link packet schedulers over variable-length packets: an exact
//! fluid fair-queueing reference plus virtual-time and round-robin
//! disciplines, all non-preemptive and work-conserving.

mod dfq;
mod drr;
mod ffq;
mod srr;
mod vt;

pub use dfq::dfq_schedule;
pub use drr::{drr_quantum_warnings, drr_schedule};
pub use ffq::{ffq_service, FfqEvent, FfqResult};
pub use srr::srr_sequence;
pub use vt::{vt_schedule, VtDiscipline};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::config_err;
use crate::error::ConfigError;

/// Variable-length packet on the output link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub flow_id: usize,
    pub length_bits: u64,
    pub arrival_time: f64,
}

/// Timed packet sequence, ascending arrival times.
#[derive(Debug, Clone, Default)]
pub struct PacketTrace {
    packets: Vec<Packet>,
}

impl PacketTrace {
    pub fn new(packets: Vec<Packet>) -> Result<Self, ConfigError> {
        for w in packets.windows(2) {
            if w[1].arrival_time < w[0].arrival_time {
                return Err(config_err!("trace arrival times must be non-decreasing"));
            }
        }
        if packets.iter().any(|p| p.length_bits == 0) {
            return Err(config_err!("packet lengths must be positive"));
        }
        if packets.iter().any(|p| p.arrival_time < 0.0 || !p.arrival_time.is_finite()) {
            return Err(config_err!("packet arrival times must be finite and non-negative"));
        }
        Ok(Self { packets })
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn flow_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.packets.iter().map(|p| p.flow_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn max_length(&self) -> u64 {
        self.packets.iter().map(|p| p.length_bits).max().unwrap_or(0)
    }
}

/// Per-flow weights phi and the (constant) link capacity in bits/second.
#[derive(Debug, Clone)]
pub struct FlowSet {
    weights: BTreeMap<usize, f64>,
    capacity: f64,
}

impl FlowSet {
    pub fn new(weights: BTreeMap<usize, f64>, capacity: f64) -> Result<Self, ConfigError> {
        if capacity <= 0.0 || !capacity.is_finite() {
            return Err(config_err!("link capacity must be positive"));
        }
        if weights.is_empty() {
            return Err(config_err!("flow set must name at least one flow"));
        }
        if weights.values().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(config_err!("flow weights must be positive"));
        }
        Ok(Self { weights, capacity })
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn weight(&self, flow: usize) -> Result<f64, ConfigError> {
        self.weights
            .get(&flow)
            .copied()
            .ok_or_else(|| config_err!("flow {flow} has no configured weight"))
    }

    pub fn flows(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().map(|(&f, &w)| (f, w))
    }
}

/// One packet's packetized service record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledPacket {
    /// Index into the input trace.
    pub packet_index: usize,
    pub flow_id: usize,
    pub length_bits: u64,
    pub arrival_time: f64,
    pub start_tag: f64,
    pub finish_tag: f64,
    pub start_service: f64,
    pub departure: f64,
}

/// Cumulative per-flow service sampled at one event boundary.
#[derive(Debug, Clone)]
pub struct CurveSample {
    pub time: f64,
    /// flow id -> cumulative bits served.
    pub service: BTreeMap<usize, f64>,
    /// Flows with queued or in-service bits at this boundary.
    pub backlogged: Vec<usize>,
}

/// Schedule produced by a packetized discipline, in departure order.
#[derive(Debug, Clone, Default)]
pub struct ScheduleResult {
    pub packets: Vec<ScheduledPacket>,
    pub samples: Vec<CurveSample>,
}

impl ScheduleResult {
    /// Total bits served per flow.
    pub fn service_totals(&self) -> BTreeMap<usize, f64> {
        let mut totals = BTreeMap::new();
        for p in &self.packets {
            *totals.entry(p.flow_id).or_insert(0.0) += p.length_bits as f64;
        }
        totals
    }

    /// Checks the one-server property: service intervals never overlap.
    pub fn service_intervals_disjoint(&self) -> bool {
        let mut ordered: Vec<(f64, f64)> = self
            .packets
            .iter()
            .map(|p| (p.start_service, p.departure))
            .collect();
        ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        ordered.windows(2).all(|w| w[0].1 <= w[1].0 + 1e-9)
    }
}

/// Ceiling of a non-negative float, without libm.
pub(crate) fn ceil_pos(x: f64) -> u64 {
    debug_assert!(x >= 0.0);
    let t = x as u64;
    if (t as f64) >= x {
        t
    } else {
        t + 1
    }
}
