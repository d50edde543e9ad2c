//! Exact reference solvers for maximum-size, maximum-weight, and stable
//! matchings. They back the weighted schedulers and double as test oracles.

use alloc::vec;
use alloc::vec::Vec;

use crate::config_err;
use crate::error::ConfigError;
use crate::model::Matching;

/// Square weight matrix; `None` marks a forbidden pair. Finite weights are
/// integers (callers scale rationals by a fixed denominator).
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    w: Vec<Vec<Option<i64>>>,
}

impl WeightMatrix {
    pub fn new(w: Vec<Vec<Option<i64>>>) -> Result<Self, ConfigError> {
        let n = w.len();
        for row in &w {
            if row.len() != n {
                return Err(config_err!("weight matrix is not square"));
            }
            if row.iter().flatten().any(|&x| x < 0) {
                return Err(config_err!("finite weights must be non-negative"));
            }
        }
        Ok(Self { w })
    }

    /// Scales floating weights to integers with the given denominator;
    /// non-finite entries become forbidden.
    pub fn from_f64(w: &[Vec<f64>], denominator: i64) -> Result<Self, ConfigError> {
        let scaled = w
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&x| {
                        if x.is_finite() {
                            Some((x * denominator as f64) as i64)
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(scaled)
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<i64> {
        self.w[i][j]
    }

    pub fn weight_of(&self, m: &Matching) -> i64 {
        m.pairs()
            .iter()
            .map(|&(i, j)| self.w[i][j].unwrap_or(0))
            .sum()
    }
}

/// Maximum-cardinality bipartite matching via augmenting paths.
pub fn max_size_matching(requests: &[Vec<bool>]) -> Matching {
    let n = requests.len();
    let mut match_out: Vec<Option<usize>> = vec![None; n]; // output -> input
    for start in 0..n {
        let mut visited = vec![false; n];
        augment(requests, start, &mut visited, &mut match_out);
    }
    let pairs = match_out
        .iter()
        .enumerate()
        .filter_map(|(j, &i)| i.map(|i| (i, j)));
    Matching::from_pairs(n, pairs).expect("augmenting paths keep the matching valid")
}

fn augment(
    requests: &[Vec<bool>],
    input: usize,
    visited: &mut [bool],
    match_out: &mut [Option<usize>],
) -> bool {
    for j in 0..requests.len() {
        if requests[input][j] && !visited[j] {
            visited[j] = true;
            if match_out[j].is_none() || augment(requests, match_out[j].unwrap(), visited, match_out)
            {
                match_out[j] = Some(input);
                return true;
            }
        }
    }
    false
}

/// True iff no matched input-output pair could be added to `m` (used to
/// certify maximality of iterative schedulers in tests).
pub fn is_maximal(requests: &[Vec<bool>], m: &Matching) -> bool {
    let n = requests.len();
    for i in 0..n {
        if m.output_of(i).is_some() {
            continue;
        }
        for j in 0..n {
            if requests[i][j] && m.input_of(j).is_none() {
                return false;
            }
        }
    }
    true
}

const SKIP: u8 = u8::MAX;

#[derive(Clone, Copy)]
struct DpEntry {
    weight: i64,
    card: u8,
    choice: u8,
    seen: bool,
}

/// Exact maximum-weight matching.
///
/// Ties are broken by larger cardinality, then by the lexicographically
/// smallest sorted pair list. Forbidden pairs are never matched; zero-weight
/// pairs are matched when that raises cardinality. Exponential in N (bitmask
/// dynamic program), intended for the desk-scale port counts used here.
pub fn max_weight_matching(w: &WeightMatrix) -> Matching {
    let n = w.n();
    assert!(n <= 22, "max_weight_matching supports N <= 22, got {n}");
    if n == 0 {
        return Matching::empty();
    }
    let size = 1usize << n;
    let mut memo = vec![
        DpEntry {
            weight: 0,
            card: 0,
            choice: SKIP,
            seen: false
        };
        n * size
    ];
    solve(w, 0, 0, &mut memo, size);

    // reconstruct
    let mut pairs = Vec::new();
    let mut mask = 0usize;
    for i in 0..n {
        let e = memo[i * size + mask];
        if e.choice != SKIP {
            let j = e.choice as usize;
            pairs.push((i, j));
            mask |= 1 << j;
        }
    }
    Matching::from_pairs(n, pairs).expect("dynamic program keeps the matching valid")
}

fn solve(w: &WeightMatrix, i: usize, mask: usize, memo: &mut [DpEntry], size: usize) -> (i64, u8) {
    let n = w.n();
    if i == n {
        return (0, 0);
    }
    let idx = i * size + mask;
    if memo[idx].seen {
        return (memo[idx].weight, memo[idx].card);
    }
    // Options in preference order: outputs ascending, then skip. Among equal
    // (weight, cardinality) the first option wins, which yields the
    // lexicographically smallest pair list.
    let mut best: Option<(i64, u8, u8)> = None;
    for j in 0..n {
        if mask & (1 << j) != 0 {
            continue;
        }
        let Some(wij) = w.get(i, j) else { continue };
        let (sw, sc) = solve(w, i + 1, mask | (1 << j), memo, size);
        let cand = (wij + sw, sc + 1, j as u8);
        if best.is_none() || (cand.0, cand.1) > (best.unwrap().0, best.unwrap().1) {
            best = Some(cand);
        }
    }
    let (sw, sc) = solve(w, i + 1, mask, memo, size);
    if best.is_none() || (sw, sc) > (best.unwrap().0, best.unwrap().1) {
        best = Some((sw, sc, SKIP));
    }
    let (bw, bc, bj) = best.unwrap();
    memo[idx] = DpEntry {
        weight: bw,
        card: bc,
        choice: bj,
        seen: true,
    };
    (bw, bc)
}

/// Complete preference lists for stable matching.
#[derive(Debug, Clone)]
pub struct PreferenceProfile {
    pub input_prefs: Vec<Vec<usize>>,
    pub output_prefs: Vec<Vec<usize>>,
}

impl PreferenceProfile {
    pub fn new(
        input_prefs: Vec<Vec<usize>>,
        output_prefs: Vec<Vec<usize>>,
    ) -> Result<Self, ConfigError> {
        let n = input_prefs.len();
        if output_prefs.len() != n {
            return Err(config_err!("preference profile sides differ in size"));
        }
        for p in input_prefs.iter().chain(output_prefs.iter()) {
            let mut sorted = p.clone();
            sorted.sort_unstable();
            if sorted != (0..n).collect::<Vec<_>>() {
                return Err(config_err!("preference list is not a permutation of 0..{n}"));
            }
        }
        Ok(Self {
            input_prefs,
            output_prefs,
        })
    }
}

/// Input-proposing deferred acceptance over complete lists.
pub fn stable_matching(prefs: &PreferenceProfile) -> Matching {
    let n = prefs.input_prefs.len();
    stable_matching_partial(n, &prefs.input_prefs, |j, a, b| {
        let rank = |i: usize| {
            prefs.output_prefs[j]
                .iter()
                .position(|&x| x == i)
                .expect("complete list")
        };
        rank(a) < rank(b)
    })
}

/// Deferred acceptance over possibly-partial input preference lists.
/// `output_prefers(j, a, b)` is true when output j prefers input a over b.
pub fn stable_matching_partial(
    n: usize,
    input_prefs: &[Vec<usize>],
    output_prefers: impl Fn(usize, usize, usize) -> bool,
) -> Matching {
    let mut next_proposal = vec![0usize; n];
    let mut engaged_to: Vec<Option<usize>> = vec![None; n]; // output -> input
    let mut free: Vec<usize> = (0..n).rev().collect();
    while let Some(i) = free.pop() {
        let Some(&j) = input_prefs[i].get(next_proposal[i]) else {
            continue; // list exhausted, stays unmatched
        };
        next_proposal[i] += 1;
        match engaged_to[j] {
            None => engaged_to[j] = Some(i),
            Some(cur) => {
                if output_prefers(j, i, cur) {
                    engaged_to[j] = Some(i);
                    free.push(cur);
                } else {
                    free.push(i);
                }
            }
        }
    }
    let pairs = engaged_to
        .iter()
        .enumerate()
        .filter_map(|(j, &i)| i.map(|i| (i, j)));
    Matching::from_pairs(n, pairs).expect("deferred acceptance keeps the matching valid")
}
