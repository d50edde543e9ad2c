//! Slot-loop drivers for the fabric experiments, with per-slot invariant
//! checks (cell conservation, matching validity, per-flow FIFO).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::metrics::RunStats;
use crate::model::{DequeuePolicy, VoqSwitchState};
use crate::rng::RngState;
use crate::sched::{fifo_iq_schedule, FifoIqState, SchedulerInstance, SchedulerKind};
use crate::traffic::{bernoulli_arrivals, saturate_triples, saturate_voqs, FlowTable, LoadMatrix};

/// Workload for a fabric run.
#[derive(Debug, Clone)]
pub enum TrafficMode {
    /// Bernoulli i.i.d. arrivals under a load matrix.
    Bernoulli {
        load: LoadMatrix,
        flows: Option<FlowTable>,
    },
    /// Backlogged everywhere: every VOQ (or input FIFO) refilled each slot.
    Saturated {
        /// Flow ids refilled per output; defaults to [output id].
        flows_per_output: Option<Vec<Vec<usize>>>,
    },
    /// Backlogged only on the listed (input, output, flow) triples.
    SaturatedTriples { triples: Vec<(usize, usize, usize)> },
}

#[derive(Debug, Clone)]
pub struct FabricConfig {
    pub kind: SchedulerKind,
    pub n_ports: usize,
    pub flow_space: usize,
    pub iterations: usize,
    pub traffic: TrafficMode,
    pub slots: u64,
    pub warmup: u64,
    pub seed: u64,
    pub credits: Option<crate::sched::CreditTable>,
}

/// Run one seeded fabric experiment to completion.
pub fn run_fabric(cfg: &FabricConfig) -> RunStats {
    match cfg.kind {
        SchedulerKind::FifoIq => run_fifo_iq(cfg),
        _ => run_voq(cfg),
    }
}

fn run_voq(cfg: &FabricConfig) -> RunStats {
    let n = cfg.n_ports;
    let mut state = VoqSwitchState::new(n, cfg.flow_space);
    let mut rng = RngState::new(cfg.seed);
    let mut sched = SchedulerInstance::new(cfg.kind, cfg.iterations);
    if let Some(credits) = cfg.credits.clone() {
        sched = sched.with_credits(credits);
    }
    let mut stats = RunStats::new(n, cfg.warmup);
    // per-(input,output,flow) last departed cell id, for the FIFO check
    let mut last_departed: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();

    let default_flows: Vec<Vec<usize>> = (0..n).map(|j| vec![j % cfg.flow_space]).collect();

    for slot in 0..cfg.slots {
        match &cfg.traffic {
            TrafficMode::Bernoulli { load, flows } => {
                for cell in bernoulli_arrivals(load, flows.as_ref(), &mut rng, &mut state) {
                    state.enqueue_cell(cell).expect("generated cell in range");
                }
            }
            TrafficMode::Saturated { flows_per_output } => {
                let flows = flows_per_output.as_ref().unwrap_or(&default_flows);
                saturate_voqs(&mut state, flows, 1);
            }
            TrafficMode::SaturatedTriples { triples } => {
                saturate_triples(&mut state, triples, 1);
            }
        }

        let outcome = sched.schedule(&mut state, &mut rng);
        let policy = match &outcome.selected_flows {
            Some(flows) => DequeuePolicy::SpecificFlow(flows),
            None => DequeuePolicy::Head,
        };
        let transferred = state.apply_matching(&outcome.matching, policy);
        debug_assert_eq!(
            state.skipped_empty_pairs, 0,
            "scheduler matched an empty VOQ"
        );
        for cell in &transferred {
            let key = (cell.input_port, cell.output_port, cell.flow_id);
            if let Some(&prev) = last_departed.get(&key) {
                debug_assert!(prev < cell.cell_id, "per-flow FIFO order violated");
            }
            last_departed.insert(key, cell.cell_id);
            stats.record_departure(cell);
        }
        if let Some(flows) = &outcome.selected_flows {
            for &(_, j) in outcome.matching.pairs() {
                if let Some(f) = flows[j] {
                    stats.selected_flow_log.push((slot, j, f));
                }
            }
        }

        // cell conservation
        debug_assert_eq!(
            state.cells_arrived(),
            state.cells_departed() + state.total_queued() as u64
        );

        stats.occupancy.push(state.total_queued() as u32);
        state.advance_slot();
    }
    stats.slots = cfg.slots;
    stats.arrived = state.cells_arrived();
    stats
}

fn run_fifo_iq(cfg: &FabricConfig) -> RunStats {
    let n = cfg.n_ports;
    let mut state = FifoIqState::new(n);
    let mut rng = RngState::new(cfg.seed);
    let mut stats = RunStats::new(n, cfg.warmup);

    for _ in 0..cfg.slots {
        match &cfg.traffic {
            TrafficMode::Bernoulli { load, .. } => {
                for i in 0..n {
                    let u = rng.next_f64();
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += load.rate(i, j);
                        if u < acc {
                            state.enqueue(j % cfg.flow_space, i, j);
                            break;
                        }
                    }
                }
            }
            TrafficMode::Saturated { .. } => {
                // keep each input FIFO non-empty; fresh heads draw a uniform
                // random destination, the classic head-of-line model
                for i in 0..n {
                    if state.queue_len(i) == 0 {
                        let j = rng.index(n);
                        state.enqueue(j % cfg.flow_space, i, j);
                    }
                }
            }
            TrafficMode::SaturatedTriples { triples } => {
                for &(i, j, f) in triples {
                    if state.queue_len(i) == 0 {
                        state.enqueue(f, i, j);
                    }
                }
            }
        }
        let m = fifo_iq_schedule(&state, &mut rng);
        for cell in state.apply_matching(&m) {
            stats.record_departure(&cell);
        }
        let occupancy: usize = (0..n).map(|i| state.queue_len(i)).sum();
        stats.occupancy.push(occupancy as u32);
        state.advance_slot();
    }
    stats.slots = cfg.slots;
    stats.arrived = state.arrived;
    stats
}
