//! Fabric schedulers: each maps the current VOQ state to a crossbar matching
//! for the slot, updating its own rotating indices or private state.

mod fifo_iq;
mod islip;
mod pim;
mod qslip;
mod randomized;
mod rr2d;
mod weighted;

pub use fifo_iq::{fifo_iq_schedule, FifoIqState};
pub use islip::islip_schedule;
pub use pim::{pim_schedule, wpim_schedule, CreditTable};
pub use qslip::qslip_schedule;
pub use randomized::{randomized_schedule, RandomizedMode};
pub use rr2d::rr_2d_schedule;
pub use weighted::{weighted_schedule, WeightPolicy};

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Matching, VoqSwitchState};
use crate::rng::RngState;

/// Scheduler family, selected by name in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchedulerKind {
    FifoIq,
    Pim,
    Rr2d,
    Islip,
    Wpim,
    Weighted(WeightPolicy),
    Randomized(RandomizedMode),
    Qslip,
}

impl SchedulerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::FifoIq => "fifo_iq",
            SchedulerKind::Pim => "pim",
            SchedulerKind::Rr2d => "rr_2d",
            SchedulerKind::Islip => "islip",
            SchedulerKind::Wpim => "wpim",
            SchedulerKind::Weighted(WeightPolicy::Lqf) => "lqf",
            SchedulerKind::Weighted(WeightPolicy::Ocf) => "ocf",
            SchedulerKind::Weighted(WeightPolicy::Lpf) => "lpf",
            SchedulerKind::Randomized(RandomizedMode::Tassiulas) => "tassiulas",
            SchedulerKind::Randomized(RandomizedMode::Laura { .. }) => "laura",
            SchedulerKind::Qslip => "qslip",
        }
    }
}

/// Matching for the slot plus, for the flow-aware scheduler, the flow each
/// output selected (drives the specific-flow dequeue).
#[derive(Debug, Clone)]
pub struct ScheduleOutcome {
    pub matching: Matching,
    pub selected_flows: Option<Vec<Option<usize>>>,
}

impl ScheduleOutcome {
    pub fn plain(matching: Matching) -> Self {
        Self {
            matching,
            selected_flows: None,
        }
    }
}

/// One scheduler owned by one simulation run.
#[derive(Debug, Clone)]
pub struct SchedulerInstance {
    kind: SchedulerKind,
    iterations: usize,
    prev: Matching,
    credits: Option<CreditTable>,
}

impl SchedulerInstance {
    pub fn new(kind: SchedulerKind, iterations: usize) -> Self {
        Self {
            kind,
            iterations: iterations.max(1),
            prev: Matching::empty(),
            credits: None,
        }
    }

    pub fn with_credits(mut self, credits: CreditTable) -> Self {
        self.credits = Some(credits);
        self
    }

    pub fn kind(&self) -> SchedulerKind {
        self.kind
    }

    pub fn schedule(&mut self, state: &mut VoqSwitchState, rng: &mut RngState) -> ScheduleOutcome {
        match self.kind {
            SchedulerKind::FifoIq => {
                panic!("fifo_iq runs on FifoIqState, not VOQ state")
            }
            SchedulerKind::Pim => {
                ScheduleOutcome::plain(pim_schedule(state, self.iterations, rng))
            }
            SchedulerKind::Rr2d => ScheduleOutcome::plain(rr_2d_schedule(state)),
            SchedulerKind::Islip => {
                ScheduleOutcome::plain(islip_schedule(state, self.iterations))
            }
            SchedulerKind::Wpim => {
                let credits = self
                    .credits
                    .as_mut()
                    .expect("wpim requires a credit table");
                ScheduleOutcome::plain(wpim_schedule(state, credits, self.iterations, rng))
            }
            SchedulerKind::Weighted(policy) => {
                ScheduleOutcome::plain(weighted_schedule(state, policy))
            }
            SchedulerKind::Randomized(mode) => {
                let m = randomized_schedule(state, mode, &mut self.prev, rng);
                ScheduleOutcome::plain(m)
            }
            SchedulerKind::Qslip => {
                let (m, flows) = qslip_schedule(state, self.iterations);
                ScheduleOutcome {
                    matching: m,
                    selected_flows: Some(flows),
                }
            }
        }
    }
}

/// Request matrix: input i requests output j iff voq[i][j] is non-empty.
pub(crate) fn request_matrix(state: &VoqSwitchState) -> Vec<Vec<bool>> {
    let n = state.n_ports();
    let mut req = vec![vec![false; n]; n];
    for (i, row) in req.iter_mut().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = !state.voq(i, j).is_empty();
        }
    }
    req
}

/// First index at or after `start` (cyclically over 0..n) satisfying `pred`.
pub(crate) fn next_from(n: usize, start: usize, pred: impl Fn(usize) -> bool) -> Option<usize> {
    for off in 0..n {
        let k = (start + off) % n;
        if pred(k) {
            return Some(k);
        }
    }
    None
}
