//! Switch state machine: cells, bipartite matchings, and the N x N
//! virtual-output-queued state that every fabric scheduler operates on.

use alloc::collections::BTreeMap;
use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::config_err;
use crate::error::ConfigError;

/// Fixed-size unit switched through the fabric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub cell_id: u64,
    pub flow_id: usize,
    pub input_port: usize,
    pub output_port: usize,
    pub arrival_slot: u64,
    pub departure_slot: Option<u64>,
}

/// One-to-one partial pairing of inputs to outputs for one time slot.
///
/// Construction enforces bipartite validity: no port on either side appears
/// twice and every port is within range.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn empty() -> Self {
        Self { pairs: Vec::new() }
    }

    pub fn from_pairs(
        n_ports: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, ConfigError> {
        let mut in_used = vec![false; n_ports];
        let mut out_used = vec![false; n_ports];
        let mut v: Vec<(usize, usize)> = Vec::new();
        for (i, j) in pairs {
            if i >= n_ports || j >= n_ports {
                return Err(config_err!("matching pair ({i},{j}) out of range for N={n_ports}"));
            }
            if in_used[i] {
                return Err(config_err!("input {i} matched twice"));
            }
            if out_used[j] {
                return Err(config_err!("output {j} matched twice"));
            }
            in_used[i] = true;
            out_used[j] = true;
            v.push((i, j));
        }
        v.sort_unstable();
        Ok(Self { pairs: v })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs in ascending input order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn output_of(&self, input: usize) -> Option<usize> {
        self.pairs
            .iter()
            .find(|&&(i, _)| i == input)
            .map(|&(_, j)| j)
    }

    pub fn input_of(&self, output: usize) -> Option<usize> {
        self.pairs
            .iter()
            .find(|&&(_, j)| j == output)
            .map(|&(i, _)| i)
    }
}

/// Bit vector over the flow-id space of one VOQ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowBitmap {
    words: Vec<u64>,
    n_bits: usize,
}

impl FlowBitmap {
    pub fn new(n_bits: usize) -> Self {
        Self {
            words: vec![0; n_bits.div_ceil(64)],
            n_bits,
        }
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1u64 << (bit % 64);
    }

    pub fn clear(&mut self, bit: usize) {
        self.words[bit / 64] &= !(1u64 << (bit % 64));
    }

    pub fn test(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 != 0
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    pub fn or_assign(&mut self, other: &FlowBitmap) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    /// First set bit at or after `start`, wrapping around; None if empty.
    pub fn first_set_from(&self, start: usize) -> Option<usize> {
        if !self.any() {
            return None;
        }
        let start = start % self.n_bits.max(1);
        for off in 0..self.n_bits {
            let b = (start + off) % self.n_bits;
            if self.test(b) {
                return Some(b);
            }
        }
        None
    }
}

/// One virtual output queue: per-flow FIFO sub-queues plus a flow bitmap.
///
/// Global FIFO order across flows is recovered from monotone cell ids, so the
/// oldest cell in the VOQ is the sub-queue head with the smallest id.
#[derive(Debug, Clone)]
pub struct Voq {
    flows: BTreeMap<usize, VecDeque<Cell>>,
    bitmap: FlowBitmap,
    len: usize,
}

impl Voq {
    fn new(flow_space: usize) -> Self {
        Self {
            flows: BTreeMap::new(),
            bitmap: FlowBitmap::new(flow_space),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bitmap(&self) -> &FlowBitmap {
        &self.bitmap
    }

    pub fn has_flow(&self, flow: usize) -> bool {
        self.bitmap.test(flow)
    }

    /// Oldest cell across all sub-queues.
    pub fn head(&self) -> Option<&Cell> {
        self.flows
            .values()
            .filter_map(|q| q.front())
            .min_by_key(|c| c.cell_id)
    }

    pub fn flow_head(&self, flow: usize) -> Option<&Cell> {
        self.flows.get(&flow).and_then(|q| q.front())
    }

    pub fn flow_len(&self, flow: usize) -> usize {
        self.flows.get(&flow).map(|q| q.len()).unwrap_or(0)
    }

    /// Cells in arrival order (by monotone cell id).
    pub fn iter(&self) -> impl Iterator<Item = &Cell> {
        let mut cells: Vec<&Cell> = self.flows.values().flatten().collect();
        cells.sort_by_key(|c| c.cell_id);
        cells.into_iter()
    }

    fn push(&mut self, cell: Cell) {
        let flow = cell.flow_id;
        self.flows.entry(flow).or_default().push_back(cell);
        self.bitmap.set(flow);
        self.len += 1;
    }

    fn pop_head(&mut self) -> Option<Cell> {
        let flow = self.head()?.flow_id;
        self.pop_flow(flow)
    }

    fn pop_flow(&mut self, flow: usize) -> Option<Cell> {
        let q = self.flows.get_mut(&flow)?;
        let cell = q.pop_front()?;
        if q.is_empty() {
            self.flows.remove(&flow);
            self.bitmap.clear(flow);
        }
        self.len -= 1;
        Some(cell)
    }

    /// Recompute the bitmap from queue contents (test oracle).
    pub fn recomputed_bitmap(&self) -> FlowBitmap {
        let mut bm = FlowBitmap::new(self.bitmap.n_bits);
        for (&f, q) in &self.flows {
            if !q.is_empty() {
                bm.set(f);
            }
        }
        bm
    }
}

/// Which cell `apply_matching` dequeues from each matched VOQ.
#[derive(Debug, Clone, Copy)]
pub enum DequeuePolicy<'a> {
    /// Globally oldest cell in the VOQ.
    Head,
    /// Per-output selected flow (index = output port); falls back to the
    /// oldest cell when the requested flow is absent.
    SpecificFlow(&'a [Option<usize>]),
}

/// N x N VOQ switch state plus the rotating priority indices the iterative
/// schedulers carry between slots.
#[derive(Debug, Clone)]
pub struct VoqSwitchState {
    n_ports: usize,
    flow_space: usize,
    voq: Vec<Vec<Voq>>,
    grant_index: Vec<usize>,
    accept_index: Vec<usize>,
    flow_index: Vec<usize>,
    queued_per_input: Vec<usize>,
    queued_per_output: Vec<usize>,
    slot: u64,
    next_cell_id: u64,
    arrived: u64,
    departed: u64,
    /// Matched pairs that pointed at an empty VOQ (scheduler bug signal).
    pub skipped_empty_pairs: u64,
}

impl VoqSwitchState {
    pub const DEFAULT_FLOW_SPACE: usize = 64;

    pub fn new(n_ports: usize, flow_space: usize) -> Self {
        Self {
            n_ports,
            flow_space,
            voq: (0..n_ports)
                .map(|_| (0..n_ports).map(|_| Voq::new(flow_space)).collect())
                .collect(),
            grant_index: vec![0; n_ports],
            accept_index: vec![0; n_ports],
            flow_index: vec![0; n_ports],
            queued_per_input: vec![0; n_ports],
            queued_per_output: vec![0; n_ports],
            slot: 0,
            next_cell_id: 0,
            arrived: 0,
            departed: 0,
            skipped_empty_pairs: 0,
        }
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn flow_space(&self) -> usize {
        self.flow_space
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn advance_slot(&mut self) {
        self.slot += 1;
    }

    pub fn voq(&self, input: usize, output: usize) -> &Voq {
        &self.voq[input][output]
    }

    /// R_i: cells queued anywhere at input i.
    pub fn queued_at_input(&self, input: usize) -> usize {
        self.queued_per_input[input]
    }

    /// C_j: cells anywhere destined to output j.
    pub fn queued_for_output(&self, output: usize) -> usize {
        self.queued_per_output[output]
    }

    pub fn total_queued(&self) -> usize {
        self.queued_per_input.iter().sum()
    }

    pub fn cells_arrived(&self) -> u64 {
        self.arrived
    }

    pub fn cells_departed(&self) -> u64 {
        self.departed
    }

    pub fn grant_index(&self, output: usize) -> usize {
        self.grant_index[output]
    }

    pub fn accept_index(&self, input: usize) -> usize {
        self.accept_index[input]
    }

    pub fn flow_index(&self, output: usize) -> usize {
        self.flow_index[output]
    }

    pub fn set_grant_index(&mut self, output: usize, v: usize) {
        self.grant_index[output] = v % self.n_ports;
    }

    pub fn set_accept_index(&mut self, input: usize, v: usize) {
        self.accept_index[input] = v % self.n_ports;
    }

    pub fn set_flow_index(&mut self, output: usize, v: usize) {
        self.flow_index[output] = v % self.flow_space;
    }

    /// Slots the head cell of voq[i][j] has waited (OCF weight).
    pub fn hol_wait(&self, input: usize, output: usize) -> u64 {
        self.voq[input][output]
            .head()
            .map(|c| self.slot.saturating_sub(c.arrival_slot))
            .unwrap_or(0)
    }

    /// Mint a cell with the next monotone id, stamped with the current slot.
    pub fn make_cell(&mut self, flow_id: usize, input: usize, output: usize) -> Cell {
        let cell = Cell {
            cell_id: self.next_cell_id,
            flow_id,
            input_port: input,
            output_port: output,
            arrival_slot: self.slot,
            departure_slot: None,
        };
        self.next_cell_id += 1;
        cell
    }

    pub fn enqueue_cell(&mut self, cell: Cell) -> Result<(), ConfigError> {
        if cell.input_port >= self.n_ports || cell.output_port >= self.n_ports {
            return Err(config_err!(
                "cell ports ({},{}) out of range for N={}",
                cell.input_port,
                cell.output_port,
                self.n_ports
            ));
        }
        if cell.flow_id >= self.flow_space {
            return Err(config_err!(
                "flow id {} outside flow space F={}",
                cell.flow_id,
                self.flow_space
            ));
        }
        self.queued_per_input[cell.input_port] += 1;
        self.queued_per_output[cell.output_port] += 1;
        self.arrived += 1;
        self.voq[cell.input_port][cell.output_port].push(cell);
        Ok(())
    }

    /// Transfer one cell per matched pair across the crossbar. Matched pairs
    /// whose VOQ is empty are skipped and tallied.
    pub fn apply_matching(&mut self, m: &Matching, policy: DequeuePolicy<'_>) -> Vec<Cell> {
        let mut out = Vec::with_capacity(m.len());
        for &(i, j) in m.pairs() {
            let voq = &mut self.voq[i][j];
            let cell = match policy {
                DequeuePolicy::Head => voq.pop_head(),
                DequeuePolicy::SpecificFlow(flows) => match flows[j] {
                    Some(f) if voq.has_flow(f) => voq.pop_flow(f),
                    _ => voq.pop_head(),
                },
            };
            match cell {
                Some(mut cell) => {
                    self.queued_per_input[i] -= 1;
                    self.queued_per_output[j] -= 1;
                    self.departed += 1;
                    cell.departure_slot = Some(self.slot);
                    out.push(cell);
                }
                None => self.skipped_empty_pairs += 1,
            }
        }
        out
    }
}
