//! Admissible synthetic workloads: Bernoulli i.i.d. arrivals under a load
//! matrix, with optional flow tagging for the QoS experiments.

use alloc::vec;
use alloc::vec::Vec;

use crate::config_err;
use crate::error::ConfigError;
use crate::model::{Cell, VoqSwitchState};
use crate::rng::RngState;

/// Per-slot arrival probabilities lambda[i][j].
#[derive(Debug, Clone)]
pub struct LoadMatrix {
    lambda: Vec<Vec<f64>>,
}

impl LoadMatrix {
    /// Builds and checks admissibility: all row and column sums <= 1
    /// (equality allowed for saturation studies).
    pub fn new(lambda: Vec<Vec<f64>>) -> Result<Self, ConfigError> {
        let m = Self { lambda };
        m.check_admissible()?;
        Ok(m)
    }

    /// Skips the admissibility check (saturation override).
    pub fn new_unchecked(lambda: Vec<Vec<f64>>) -> Self {
        Self { lambda }
    }

    pub fn n_ports(&self) -> usize {
        self.lambda.len()
    }

    pub fn rate(&self, input: usize, output: usize) -> f64 {
        self.lambda[input][output]
    }

    pub fn row_sum(&self, input: usize) -> f64 {
        self.lambda[input].iter().sum()
    }

    pub fn col_sum(&self, output: usize) -> f64 {
        self.lambda.iter().map(|row| row[output]).sum()
    }

    pub fn check_admissible(&self) -> Result<(), ConfigError> {
        let n = self.lambda.len();
        const EPS: f64 = 1e-9;
        for (i, row) in self.lambda.iter().enumerate() {
            if row.len() != n {
                return Err(config_err!("load matrix is not square"));
            }
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(config_err!("load matrix entry out of [0,1] in row {i}"));
            }
            if self.row_sum(i) > 1.0 + EPS {
                return Err(config_err!("inadmissible load: row {i} sums above 1"));
            }
        }
        for j in 0..n {
            if self.col_sum(j) > 1.0 + EPS {
                return Err(config_err!("inadmissible load: column {j} sums above 1"));
            }
        }
        Ok(())
    }
}

/// lambda[i][j] = rho/N for all i,j; admissible by construction.
pub fn make_uniform_load(n_ports: usize, rho: f64) -> Result<LoadMatrix, ConfigError> {
    if n_ports == 0 {
        return Err(config_err!("port count must be at least 1"));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(config_err!("rho must be in [0,1], got {rho}"));
    }
    let per = rho / n_ports as f64;
    Ok(LoadMatrix::new_unchecked(vec![vec![per; n_ports]; n_ports]))
}

/// Flow definition: where the flow lives and its share of arrivals there.
#[derive(Debug, Clone)]
pub struct FlowEntry {
    pub flow_id: usize,
    pub input_port: usize,
    pub output_port: usize,
    /// phi: weight for fairness accounting.
    pub weight: f64,
    /// Share of arrivals at (input, output) carrying this flow id.
    pub share: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FlowTable {
    entries: Vec<FlowEntry>,
}

impl FlowTable {
    pub fn new(entries: Vec<FlowEntry>) -> Result<Self, ConfigError> {
        const EPS: f64 = 1e-9;
        for e in &entries {
            if e.weight <= 0.0 {
                return Err(config_err!("flow {} has non-positive weight", e.flow_id));
            }
            if !(0.0..=1.0 + EPS).contains(&e.share) {
                return Err(config_err!("flow {} share out of [0,1]", e.flow_id));
            }
        }
        // per-(i,j) shares must sum to 1
        let mut pairs: Vec<(usize, usize)> = entries
            .iter()
            .map(|e| (e.input_port, e.output_port))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        for (i, j) in pairs {
            let s: f64 = entries
                .iter()
                .filter(|e| e.input_port == i && e.output_port == j)
                .map(|e| e.share)
                .sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(config_err!("flow shares at ({i},{j}) sum to {s}, expected 1"));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[FlowEntry] {
        &self.entries
    }

    pub fn weight_of(&self, flow_id: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.flow_id == flow_id)
            .map(|e| e.weight)
    }

    fn pick_flow(&self, input: usize, output: usize, rng: &mut RngState) -> Option<usize> {
        let candidates: Vec<&FlowEntry> = self
            .entries
            .iter()
            .filter(|e| e.input_port == input && e.output_port == output)
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let u = rng.next_f64();
        let mut acc = 0.0;
        for e in &candidates {
            acc += e.share;
            if u < acc {
                return Some(e.flow_id);
            }
        }
        Some(candidates.last().unwrap().flow_id)
    }
}

/// Draw this slot's arrivals: at most one cell per input, destination drawn
/// with probability lambda[i][j]; flow id from the flow table when given,
/// else flow_id = output_port.
pub fn bernoulli_arrivals(
    load: &LoadMatrix,
    flows: Option<&FlowTable>,
    rng: &mut RngState,
    state: &mut VoqSwitchState,
) -> Vec<Cell> {
    let n = load.n_ports();
    let mut cells = Vec::new();
    for i in 0..n {
        let u = rng.next_f64();
        let mut acc = 0.0;
        for j in 0..n {
            acc += load.rate(i, j);
            if u < acc {
                let flow = flows
                    .and_then(|t| t.pick_flow(i, j, rng))
                    .unwrap_or(j % state.flow_space());
                cells.push(state.make_cell(flow, i, j));
                break;
            }
        }
    }
    cells
}

/// Backlogged-everywhere saturation: refill every VOQ so each holds at least
/// `depth` cells of every listed flow (default flow = output id).
pub fn saturate_voqs(
    state: &mut VoqSwitchState,
    flows_per_output: &[Vec<usize>],
    depth: usize,
) -> Vec<Cell> {
    let n = state.n_ports();
    let mut added = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for &f in &flows_per_output[j] {
                let have = state.voq(i, j).flow_len(f);
                for _ in have..depth {
                    let c = state.make_cell(f, i, j);
                    added.push(c.clone());
                    state.enqueue_cell(c).expect("saturation cell in range");
                }
            }
        }
    }
    added
}

/// Saturation pinned to explicit (input, output, flow) triples: each listed
/// sub-queue is refilled to `depth` cells.
pub fn saturate_triples(
    state: &mut VoqSwitchState,
    triples: &[(usize, usize, usize)],
    depth: usize,
) -> Vec<Cell> {
    let mut added = Vec::new();
    for &(i, j, f) in triples {
        let have = state.voq(i, j).flow_len(f);
        for _ in have..depth {
            let c = state.make_cell(f, i, j);
            added.push(c.clone());
            state.enqueue_cell(c).expect("saturation cell in range");
        }
    }
    added
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_load_values() {
        let m = make_uniform_load(2, 1.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m.rate(i, j), 0.5);
            }
        }
        let z = make_uniform_load(4, 0.0).unwrap();
        assert_eq!(z.row_sum(0), 0.0);
        let s = make_uniform_load(16, 1.0).unwrap();
        for k in 0..16 {
            assert!((s.row_sum(k) - 1.0).abs() < 1e-12);
            assert!((s.col_sum(k) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_above_one_rejected() {
        assert!(make_uniform_load(4, 1.5).is_err());
    }

    #[test]
    fn inadmissible_matrix_rejected() {
        let m = LoadMatrix::new(vec![vec![0.9, 0.9], vec![0.0, 0.0]]);
        assert!(m.is_err());
    }

    #[test]
    fn zero_matrix_generates_nothing() {
        let load = make_uniform_load(4, 0.0).unwrap();
        let mut rng = RngState::new(1);
        let mut state = VoqSwitchState::new(4, 64);
        for _ in 0..100 {
            assert!(bernoulli_arrivals(&load, None, &mut rng, &mut state).is_empty());
        }
    }

    #[test]
    fn deterministic_single_pair() {
        let mut lam = vec![vec![0.0; 2]; 2];
        lam[0][1] = 1.0;
        let load = LoadMatrix::new(lam).unwrap();
        let mut rng = RngState::new(1);
        let mut state = VoqSwitchState::new(2, 64);
        for _ in 0..50 {
            let cells = bernoulli_arrivals(&load, None, &mut rng, &mut state);
            assert_eq!(cells.len(), 1);
            assert_eq!((cells[0].input_port, cells[0].output_port), (0, 1));
        }
    }

    #[test]
    fn empirical_rate_close_to_lambda() {
        // N=8, rho=0.6 -> per-pair rate 0.075; check one pair over 10^6 slots
        let load = make_uniform_load(8, 0.6).unwrap();
        let mut rng = RngState::new(12345);
        let mut state = VoqSwitchState::new(8, 64);
        let slots = 1_000_000u64;
        let mut count = vec![vec![0u64; 8]; 8];
        for _ in 0..slots {
            for c in bernoulli_arrivals(&load, None, &mut rng, &mut state) {
                count[c.input_port][c.output_port] += 1;
            }
        }
        for i in 0..8 {
            for j in 0..8 {
                let rate = count[i][j] as f64 / slots as f64;
                assert!(
                    (rate - 0.075).abs() < 0.005,
                    "rate[{i}][{j}] = {rate}"
                );
            }
        }
    }

    #[test]
    fn flow_shares_must_sum_to_one() {
        let bad = FlowTable::new(vec![FlowEntry {
            flow_id: 1,
            input_port: 0,
            output_port: 0,
            weight: 1.0,
            share: 0.5,
        }]);
        assert!(bad.is_err());
    }
}
