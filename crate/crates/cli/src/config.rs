use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};

pub const FABRIC_SCHEDULERS: &[&str] = &[
    "fifo_iq",
    "pim",
    "rr_2d",
    "islip",
    "wpim",
    "lqf",
    "ocf",
    "lpf",
    "tassiulas",
    "laura",
    "qslip",
];

pub const LINK_DISCIPLINES: &[&str] = &[
    "ffq",
    "wfq",
    "scfq",
    "sfq",
    "msfq",
    "virtual_clock",
    "drr",
    "srr",
    "dfq",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Fabric,
    Cioq,
    Link,
}

/// Declarative description of one experiment (before replication fan-out).
/// Paths are resolved against the config file's directory.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub scheduler: String,
    pub ports: usize,
    /// Uniform offered load; None means saturated (fabric/cioq only).
    pub load: Option<f64>,
    pub load_matrix: Option<PathBuf>,
    pub flow_table: Option<PathBuf>,
    pub slots: u64,
    pub warmup: u64,
    pub seed: u64,
    pub iterations: usize,
    pub replications: u64,
    pub flow_space: usize,
    pub credits: Option<PathBuf>,
    pub gamma: f64,
    pub speedup: u32,
    /// Link mode: packet trace path.
    pub trace: Option<PathBuf>,
    /// Link mode: capacity in bits per second.
    pub capacity: f64,
    /// Link mode: flow_id -> weight.
    pub weights: BTreeMap<usize, f64>,
    /// DRR base quantum in bits (per-flow quantum = round(weight * quantum)).
    pub quantum: Option<u64>,
    /// DFQ granularity T in seconds.
    pub granularity: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Fabric,
            scheduler: String::new(),
            ports: 0,
            load: None,
            load_matrix: None,
            flow_table: None,
            slots: 0,
            warmup: 10_000,
            seed: 1,
            iterations: 1,
            replications: 1,
            flow_space: 64,
            credits: None,
            gamma: 0.8,
            speedup: 2,
            trace: None,
            capacity: 1.0,
            weights: BTreeMap::new(),
            quantum: None,
            granularity: None,
            out: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(line_no: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| anyhow!("line {line_no}: invalid value `{v}` for `{key}`"))
}

/// flow_id:weight pairs, comma separated, e.g. `1:1.0,2:2.5`.
fn parse_weights(line_no: usize, v: &str) -> Result<BTreeMap<usize, f64>> {
    let mut map = BTreeMap::new();
    for part in v.split(',') {
        let (f, w) = part
            .trim()
            .split_once(':')
            .ok_or_else(|| anyhow!("line {line_no}: expected `flow:weight`, got `{part}`"))?;
        let f: usize = parse_num(line_no, "weights", f.trim())?;
        let w: f64 = parse_num(line_no, "weights", w.trim())?;
        if map.insert(f, w).is_some() {
            bail!("line {line_no}: duplicate weight for flow {f}");
        }
    }
    Ok(map)
}

/// Parses the flat `key = value` config format. `base` anchors relative
/// paths. Unknown keys are rejected; every diagnostic names its line.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen = BTreeMap::new();
    let mut mode_set = false;
    let mut slots_set = false;
    let path_of = |v: &str| -> PathBuf { base.join(v) };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {line_no}: expected `key = value`, got `{line}`"))?;
        let key = key.trim();
        let value = value.trim();
        if let Some(prev) = seen.insert(key.to_string(), line_no) {
            bail!("line {line_no}: `{key}` already set on line {prev}");
        }
        match key {
            "mode" => {
                cfg.mode = match value {
                    "fabric" => Mode::Fabric,
                    "cioq" => Mode::Cioq,
                    "link" => Mode::Link,
                    _ => bail!("line {line_no}: unknown mode `{value}` (fabric, cioq, link)"),
                };
                mode_set = true;
            }
            "scheduler" => cfg.scheduler = value.to_string(),
            "ports" => cfg.ports = parse_num(line_no, key, value)?,
            "load" => {
                let rho: f64 = parse_num(line_no, key, value)?;
                if !(0.0..=1.0).contains(&rho) {
                    bail!("line {line_no}: load must be in [0, 1], got {rho}");
                }
                cfg.load = Some(rho);
            }
            "traffic" => match value {
                "saturated" => cfg.load = None,
                "bernoulli" => {}
                _ => bail!("line {line_no}: unknown traffic `{value}` (bernoulli, saturated)"),
            },
            "load_matrix" => cfg.load_matrix = Some(path_of(value)),
            "flow_table" => cfg.flow_table = Some(path_of(value)),
            "slots" => {
                cfg.slots = parse_num(line_no, key, value)?;
                slots_set = true;
            }
            "warmup" => cfg.warmup = parse_num(line_no, key, value)?,
            "seed" => cfg.seed = parse_num(line_no, key, value)?,
            "iterations" => cfg.iterations = parse_num(line_no, key, value)?,
            "replications" => cfg.replications = parse_num(line_no, key, value)?,
            "flow_space" => cfg.flow_space = parse_num(line_no, key, value)?,
            "credits" => cfg.credits = Some(path_of(value)),
            "gamma" => {
                let g: f64 = parse_num(line_no, key, value)?;
                if !(g > 0.0 && g <= 1.0) {
                    bail!("line {line_no}: gamma must be in (0, 1], got {g}");
                }
                cfg.gamma = g;
            }
            "speedup" => {
                cfg.speedup = parse_num(line_no, key, value)?;
                if !(1..=2).contains(&cfg.speedup) {
                    bail!("line {line_no}: speedup must be 1 or 2");
                }
            }
            "trace" => cfg.trace = Some(path_of(value)),
            "capacity" => {
                cfg.capacity = parse_num(line_no, key, value)?;
                if cfg.capacity <= 0.0 {
                    bail!("line {line_no}: capacity must be positive");
                }
            }
            "weights" => cfg.weights = parse_weights(line_no, value)?,
            "quantum" => cfg.quantum = Some(parse_num(line_no, key, value)?),
            "granularity" => {
                let t: f64 = parse_num(line_no, key, value)?;
                if t <= 0.0 {
                    bail!("line {line_no}: granularity must be positive");
                }
                cfg.granularity = Some(t);
            }
            "out" => cfg.out = Some(path_of(value)),
            _ => bail!("line {line_no}: unknown key `{key}`"),
        }
    }

    if !mode_set {
        bail!("missing required key `mode`");
    }
    let sched_line = seen.get("scheduler").copied().unwrap_or(0);
    match cfg.mode {
        Mode::Fabric => {
            if cfg.scheduler.is_empty() {
                bail!("missing required key `scheduler`");
            }
            if !FABRIC_SCHEDULERS.contains(&cfg.scheduler.as_str()) {
                bail!(
                    "line {sched_line}: unknown scheduler `{}`; valid: {}",
                    cfg.scheduler,
                    FABRIC_SCHEDULERS.join(", ")
                );
            }
            if cfg.ports == 0 {
                bail!("missing required key `ports`");
            }
            if !slots_set {
                bail!("missing required key `slots`");
            }
            if cfg.iterations == 0 {
                bail!("iterations must be at least 1");
            }
        }
        Mode::Cioq => {
            if cfg.ports == 0 {
                bail!("missing required key `ports`");
            }
            if !slots_set {
                bail!("missing required key `slots`");
            }
        }
        Mode::Link => {
            if cfg.scheduler.is_empty() {
                bail!("missing required key `scheduler`");
            }
            if !LINK_DISCIPLINES.contains(&cfg.scheduler.as_str()) {
                bail!(
                    "line {sched_line}: unknown scheduler `{}`; valid: {}",
                    cfg.scheduler,
                    LINK_DISCIPLINES.join(", ")
                );
            }
            if cfg.weights.is_empty() {
                bail!("link mode needs `weights` (flow:weight pairs)");
            }
            if cfg.scheduler != "srr" && cfg.trace.is_none() {
                bail!("link mode needs `trace`");
            }
            if cfg.scheduler == "drr" && cfg.quantum.is_none() {
                bail!("drr needs `quantum`");
            }
            if cfg.scheduler == "dfq" && cfg.granularity.is_none() {
                bail!("dfq needs `granularity`");
            }
        }
    }
    for p in [&cfg.load_matrix, &cfg.flow_table, &cfg.credits, &cfg.trace]
        .into_iter()
        .flatten()
    {
        if !p.exists() {
            bail!("referenced file does not exist: {}", p.display());
        }
    }
    Ok(cfg)
}
