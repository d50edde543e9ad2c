use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Cell, Matching};
use crate::rng::RngState;

/// Input-queued switch with a single FIFO per input: only the head cell is
/// visible to the scheduler, so head-of-line blocking applies.
#[derive(Debug, Clone)]
pub struct FifoIqState {
    queues: Vec<VecDeque<Cell>>,
    slot: u64,
    next_cell_id: u64,
    pub arrived: u64,
    pub departed: u64,
}

impl FifoIqState {
    pub fn new(n_ports: usize) -> Self {
        Self {
            queues: vec![VecDeque::new(); n_ports],
            slot: 0,
            next_cell_id: 0,
            arrived: 0,
            departed: 0,
        }
    }

    pub fn n_ports(&self) -> usize {
        self.queues.len()
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn advance_slot(&mut self) {
        self.slot += 1;
    }

    pub fn queue_len(&self, input: usize) -> usize {
        self.queues[input].len()
    }

    pub fn enqueue(&mut self, flow_id: usize, input: usize, output: usize) {
        let cell = Cell {
            cell_id: self.next_cell_id,
            flow_id,
            input_port: input,
            output_port: output,
            arrival_slot: self.slot,
            departure_slot: None,
        };
        self.next_cell_id += 1;
        self.arrived += 1;
        self.queues[input].push_back(cell);
    }

    pub fn head_output(&self, input: usize) -> Option<usize> {
        self.queues[input].front().map(|c| c.output_port)
    }

    pub fn heads(&self) -> Vec<Option<usize>> {
        (0..self.n_ports()).map(|i| self.head_output(i)).collect()
    }

    /// Dequeue matched heads, stamping departure slots.
    pub fn apply_matching(&mut self, m: &Matching) -> Vec<Cell> {
        let mut out = Vec::with_capacity(m.len());
        for &(i, j) in m.pairs() {
            if self.head_output(i) == Some(j) {
                let mut cell = self.queues[i].pop_front().unwrap();
                cell.departure_slot = Some(self.slot);
                self.departed += 1;
                out.push(cell);
            }
        }
        out
    }
}

/// Each input requests only its head cell's output; each requested output
/// selects uniformly at random among its requesters.
pub fn fifo_iq_schedule(state: &FifoIqState, rng: &mut RngState) -> Matching {
    let n = state.n_ports();
    let heads = state.heads();
    let mut pairs = Vec::new();
    for j in 0..n {
        let requesters: Vec<usize> = (0..n).filter(|&i| heads[i] == Some(j)).collect();
        if !requesters.is_empty() {
            pairs.push((requesters[rng.index(requesters.len())], j));
        }
    }
    Matching::from_pairs(n, pairs).expect("one winner per output is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_inputs_empty_matching() {
        let s = FifoIqState::new(4);
        let mut rng = RngState::new(1);
        assert!(fifo_iq_schedule(&s, &mut rng).is_empty());
    }

    #[test]
    fn permutation_heads_full_matching() {
        let n = 4;
        let mut s = FifoIqState::new(n);
        for i in 0..n {
            s.enqueue(0, i, (i + 1) % n);
        }
        let mut rng = RngState::new(1);
        let m = fifo_iq_schedule(&s, &mut rng);
        assert_eq!(m.len(), n);
    }

    #[test]
    fn hol_blocking_limits_contested_output() {
        // both inputs head toward output 0: only one can win per slot
        let mut s = FifoIqState::new(2);
        for i in 0..2 {
            s.enqueue(0, i, 0);
            s.enqueue(0, i, 1);
        }
        let mut rng = RngState::new(2);
        let m = fifo_iq_schedule(&s, &mut rng);
        assert_eq!(m.len(), 1);
        assert_eq!(m.pairs()[0].1, 0);
    }
}
