//! Report quantities the experiments assert on: throughput, delay, fairness,
//! and normalized service discrepancy.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::config_err;
use crate::error::ConfigError;
use crate::model::Cell;

/// Aggregated counters from one simulation run.
#[derive(Debug, Clone)]
pub struct RunStats {
    pub n_ports: usize,
    pub slots: u64,
    pub warmup: u64,
    pub arrived: u64,
    /// Departures after the warmup cutoff.
    pub departed_measured: u64,
    delay_sum: u128,
    delay_hist: BTreeMap<u64, u64>,
    /// Service counts per flow id, post warmup.
    pub flow_service: BTreeMap<usize, u64>,
    /// Total queued cells at the end of each slot.
    pub occupancy: Vec<u32>,
    /// (slot, output, flow) for flow-aware schedulers.
    pub selected_flow_log: Vec<(u64, usize, usize)>,
}

impl RunStats {
    pub fn new(n_ports: usize, warmup: u64) -> Self {
        Self {
            n_ports,
            slots: 0,
            warmup,
            arrived: 0,
            departed_measured: 0,
            delay_sum: 0,
            delay_hist: BTreeMap::new(),
            flow_service: BTreeMap::new(),
            occupancy: Vec::new(),
            selected_flow_log: Vec::new(),
        }
    }

    pub fn record_departure(&mut self, cell: &Cell) {
        let dep = cell.departure_slot.expect("departed cell has a slot");
        if dep < self.warmup {
            return;
        }
        let delay = dep - cell.arrival_slot;
        self.departed_measured += 1;
        self.delay_sum += delay as u128;
        *self.delay_hist.entry(delay).or_insert(0) += 1;
        *self.flow_service.entry(cell.flow_id).or_insert(0) += 1;
    }

    pub fn measured_slots(&self) -> u64 {
        self.slots.saturating_sub(self.warmup)
    }

    pub fn mean_delay(&self) -> f64 {
        if self.departed_measured == 0 {
            return 0.0;
        }
        self.delay_sum as f64 / self.departed_measured as f64
    }

    pub fn p99_delay(&self) -> u64 {
        percentile(&self.delay_hist, self.departed_measured, 0.99)
    }

    /// Mean occupancy over the slot range [from, to).
    pub fn mean_occupancy(&self, from: usize, to: usize) -> f64 {
        let span = &self.occupancy[from..to.min(self.occupancy.len())];
        if span.is_empty() {
            return 0.0;
        }
        span.iter().map(|&x| x as u64).sum::<u64>() as f64 / span.len() as f64
    }
}

fn percentile(hist: &BTreeMap<u64, u64>, total: u64, q: f64) -> u64 {
    if total == 0 {
        return 0;
    }
    let target = (total as f64 * q) as u64;
    let mut acc = 0;
    for (&delay, &count) in hist {
        acc += count;
        if acc > target {
            return delay;
        }
    }
    *hist.keys().next_back().unwrap_or(&0)
}

/// Departed cells per slot per port, post warmup.
pub fn throughput(stats: &RunStats) -> Result<f64, ConfigError> {
    let slots = stats.measured_slots();
    if slots == 0 {
        return Err(config_err!("throughput undefined over zero measured slots"));
    }
    Ok(stats.departed_measured as f64 / (stats.n_ports as f64 * slots as f64))
}

/// Jain fairness index over weight-normalized services x_i = service_i/phi_i.
/// All-zero services count as perfectly fair by convention.
pub fn jain_index(services: &[f64], weights: &[f64]) -> f64 {
    assert_eq!(services.len(), weights.len());
    assert!(!services.is_empty(), "jain index needs at least one flow");
    let xs: Vec<f64> = services
        .iter()
        .zip(weights)
        .map(|(&s, &w)| s / w)
        .collect();
    let sum: f64 = xs.iter().sum();
    let sq: f64 = xs.iter().map(|x| x * x).sum();
    if sq == 0.0 {
        return 1.0;
    }
    sum * sum / (xs.len() as f64 * sq)
}

/// One sample of two flows' cumulative service at an event boundary.
#[derive(Debug, Clone, Copy)]
pub struct ServiceSample {
    pub service_a: f64,
    pub service_b: f64,
    /// Both flows backlogged through the interval ending here.
    pub both_backlogged: bool,
}

/// Max over backlogged intervals of |S_a/phi_a - S_b/phi_b|, scanned exactly
/// at event boundaries. Within one backlogged span this is the spread of the
/// normalized-service difference.
pub fn service_discrepancy(samples: &[ServiceSample], phi_a: f64, phi_b: f64) -> f64 {
    let mut best: f64 = 0.0;
    let mut span_min = f64::INFINITY;
    let mut span_max = f64::NEG_INFINITY;
    let mut in_span = false;
    for (k, s) in samples.iter().enumerate() {
        let d = s.service_a / phi_a - s.service_b / phi_b;
        if s.both_backlogged {
            if !in_span {
                // the interval starts at the previous boundary
                if k > 0 {
                    let p = samples[k - 1];
                    let dp = p.service_a / phi_a - p.service_b / phi_b;
                    span_min = dp;
                    span_max = dp;
                } else {
                    span_min = f64::INFINITY;
                    span_max = f64::NEG_INFINITY;
                }
                in_span = true;
            }
            span_min = span_min.min(d);
            span_max = span_max.max(d);
            best = best.max(span_max - span_min);
        } else {
            in_span = false;
        }
    }
    best
}
