//! Turns a parsed config into seeded runs and CSV rows.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use fabsim_core::cioq::{time_slot_speedup1, CioqState};
use fabsim_core::link::{
    dfq_schedule, drr_quantum_warnings, drr_schedule, ffq_service, srr_sequence, vt_schedule,
    FlowSet, ScheduleResult, VtDiscipline,
};
use fabsim_core::metrics::{jain_index, service_discrepancy, throughput, ServiceSample};
use fabsim_core::sched::{CreditTable, RandomizedMode, SchedulerKind, WeightPolicy};
use fabsim_core::sim::{run_fabric, FabricConfig, TrafficMode};
use fabsim_core::traffic::make_uniform_load;
use fabsim_core::RngState;

use crate::config::{ExperimentConfig, Mode};
use crate::csv::{fmt_sig, Row};
use crate::files;

/// CSV header + rows for one experiment (all replications).
pub struct ExperimentOutput {
    pub header: Vec<&'static str>,
    pub rows: Vec<Row>,
}

const RUN_HEADER: [&str; 11] = [
    "run",
    "seed",
    "scheduler",
    "ports",
    "load",
    "throughput",
    "mean_delay",
    "p99_delay",
    "jain",
    "discrepancy",
    "extra",
];

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.mode == Mode::Link && cfg.scheduler == "srr" {
        return run_srr(cfg);
    }
    let mut rows = Vec::new();
    for r in 0..cfg.replications {
        let seed = cfg.seed + r;
        let row = match cfg.mode {
            Mode::Fabric => run_fabric_once(cfg, r, seed)?,
            Mode::Cioq => run_cioq_once(cfg, r, seed)?,
            Mode::Link => run_link_once(cfg, r, seed)?,
        };
        rows.push(row);
    }
    Ok(ExperimentOutput {
        header: RUN_HEADER.to_vec(),
        rows,
    })
}

fn scheduler_kind(name: &str, gamma: f64) -> Result<SchedulerKind> {
    Ok(match name {
        "fifo_iq" => SchedulerKind::FifoIq,
        "pim" => SchedulerKind::Pim,
        "rr_2d" => SchedulerKind::Rr2d,
        "islip" => SchedulerKind::Islip,
        "wpim" => SchedulerKind::Wpim,
        "lqf" => SchedulerKind::Weighted(WeightPolicy::Lqf),
        "ocf" => SchedulerKind::Weighted(WeightPolicy::Ocf),
        "lpf" => SchedulerKind::Weighted(WeightPolicy::Lpf),
        "tassiulas" => SchedulerKind::Randomized(RandomizedMode::Tassiulas),
        "laura" => SchedulerKind::Randomized(RandomizedMode::Laura { gamma }),
        "qslip" => SchedulerKind::Qslip,
        other => bail!("not a fabric scheduler: {other}"),
    })
}

fn base_fields(cfg: &ExperimentConfig, run: u64, seed: u64) -> Vec<String> {
    vec![
        run.to_string(),
        seed.to_string(),
        cfg.scheduler.clone(),
        cfg.ports.to_string(),
        cfg.load.map(fmt_sig).unwrap_or_else(|| "sat".into()),
    ]
}

fn run_fabric_once(cfg: &ExperimentConfig, run: u64, seed: u64) -> Result<Row> {
    let kind = scheduler_kind(&cfg.scheduler, cfg.gamma)?;

    let flow_table = match &cfg.flow_table {
        Some(p) => Some(files::read_flow_table(p)?),
        None => None,
    };
    let traffic = match cfg.load {
        Some(rho) => {
            let load = match &cfg.load_matrix {
                Some(p) => files::read_load_matrix(p)?,
                None => make_uniform_load(cfg.ports, rho)
                    .map_err(|e| anyhow::anyhow!("load matrix: {e:?}"))?,
            };
            TrafficMode::Bernoulli {
                load,
                flows: flow_table.clone(),
            }
        }
        None => match &flow_table {
            Some(table) => TrafficMode::SaturatedTriples {
                triples: table
                    .entries()
                    .iter()
                    .map(|e| (e.input_port, e.output_port, e.flow_id))
                    .collect(),
            },
            None => TrafficMode::Saturated {
                flows_per_output: None,
            },
        },
    };
    let credits: Option<CreditTable> = match (&kind, &cfg.credits) {
        (SchedulerKind::Wpim, Some(p)) => Some(files::read_credits(p, cfg.ports)?),
        (SchedulerKind::Wpim, None) => bail!("wpim needs a credits file"),
        _ => None,
    };

    let stats = run_fabric(&FabricConfig {
        kind,
        n_ports: cfg.ports,
        flow_space: cfg.flow_space,
        iterations: cfg.iterations,
        traffic,
        slots: cfg.slots,
        warmup: cfg.warmup,
        seed,
        credits,
    });

    let tput = throughput(&stats).map_err(|e| anyhow::anyhow!("throughput: {e:?}"))?;
    let (services, weights): (Vec<f64>, Vec<f64>) = match &flow_table {
        Some(table) => table
            .entries()
            .iter()
            .map(|e| {
                let s = stats.flow_service.get(&e.flow_id).copied().unwrap_or(0) as f64;
                (s, e.weight)
            })
            .unzip(),
        None => stats
            .flow_service
            .values()
            .map(|&s| (s as f64, 1.0))
            .unzip(),
    };
    let jain = jain_index(&services, &weights);

    let mut fields = base_fields(cfg, run, seed);
    fields.push(fmt_sig(tput));
    fields.push(fmt_sig(stats.mean_delay()));
    fields.push(fmt_sig(stats.p99_delay() as f64));
    fields.push(fmt_sig(jain));
    fields.push(String::new());
    fields.push(String::new());
    Ok(Row { fields })
}

fn run_cioq_once(cfg: &ExperimentConfig, run: u64, seed: u64) -> Result<Row> {
    if !cfg.scheduler.is_empty() && cfg.scheduler != "ccf" {
        bail!("cioq mode supports only scheduler = ccf, got {}", cfg.scheduler);
    }
    let rho = cfg.load.context("cioq mode needs load")?;
    let n = cfg.ports;
    let mut state = CioqState::new(n);
    let mut rng = RngState::new(seed);
    let mut min_slack = i64::MAX;

    let mut step = |state: &mut CioqState, arrivals: &[(usize, usize)]| {
        match cfg.speedup {
            1 => time_slot_speedup1(state, arrivals),
            2 => state.time_slot(arrivals),
            s => panic!("unsupported speedup {s}"),
        }
        for (_, l) in state.all_slackness() {
            min_slack = min_slack.min(l);
        }
    };

    for _ in 0..cfg.slots {
        let mut arrivals = Vec::new();
        for i in 0..n {
            if rng.next_f64() < rho {
                arrivals.push((i, rng.index(n)));
            }
        }
        step(&mut state, &arrivals);
    }
    // drain so every admitted cell gets compared against its shadow slot
    let mut guard = 0u64;
    while !state.is_drained() {
        step(&mut state, &[]);
        guard += 1;
        if guard > 16 * cfg.slots + 1024 {
            bail!("cioq drain did not terminate");
        }
    }

    let mismatches = state.check_oq_emulation().len();
    let departed = state.departures().len() as f64;
    let tput = departed / (n as f64 * cfg.slots as f64);
    if min_slack == i64::MAX {
        min_slack = 0;
    }

    let mut fields = base_fields(cfg, run, seed);
    fields[2] = "ccf".into();
    fields.push(fmt_sig(tput));
    fields.push(String::new());
    fields.push(String::new());
    fields.push(String::new());
    fields.push(String::new());
    fields.push(format!("mismatches={mismatches};min_slack={min_slack}"));
    Ok(Row { fields })
}

fn run_link_once(cfg: &ExperimentConfig, run: u64, seed: u64) -> Result<Row> {
    let trace = files::read_trace(cfg.trace.as_ref().context("link mode needs trace")?)?;
    let flows = FlowSet::new(cfg.weights.clone(), cfg.capacity)
        .map_err(|e| anyhow::anyhow!("flows: {e:?}"))?;

    let mut extra = String::new();
    let (departures, totals, samples): (
        Vec<(f64, f64)>, // (arrival, departure) per packet
        BTreeMap<usize, f64>,
        Vec<(f64, BTreeMap<usize, f64>, Vec<usize>)>,
    );
    match cfg.scheduler.as_str() {
        "ffq" => {
            let res = ffq_service(&trace, &flows).map_err(|e| anyhow::anyhow!("ffq: {e:?}"))?;
            departures = trace
                .packets()
                .iter()
                .zip(&res.departures)
                .map(|(p, &d)| (p.arrival_time, d))
                .collect();
            let last = res.events.last();
            totals = last.map(|e| e.cum_service.clone()).unwrap_or_default();
            samples = res
                .events
                .iter()
                .map(|e| (e.time, e.cum_service.clone(), e.backlogged.clone()))
                .collect();
        }
        name => {
            let res: ScheduleResult = match name {
                "wfq" => vt_schedule(&trace, &flows, VtDiscipline::Wfq),
                "scfq" => vt_schedule(&trace, &flows, VtDiscipline::Scfq),
                "sfq" => vt_schedule(&trace, &flows, VtDiscipline::Sfq),
                "msfq" => vt_schedule(&trace, &flows, VtDiscipline::Msfq),
                "virtual_clock" => vt_schedule(&trace, &flows, VtDiscipline::VirtualClock),
                "drr" => {
                    let base = cfg.quantum.context("drr needs quantum")?;
                    let quanta: BTreeMap<usize, u64> = flows
                        .flows()
                        .map(|(id, w)| (id, ((w * base as f64).round() as u64).max(1)))
                        .collect();
                    let warn = drr_quantum_warnings(&trace, &quanta);
                    if !warn.is_empty() {
                        extra = format!(
                            "quantum_below_max_packet={}",
                            warn.iter()
                                .map(|f| f.to_string())
                                .collect::<Vec<_>>()
                                .join("|")
                        );
                    }
                    drr_schedule(&trace, &flows, &quanta)
                }
                "dfq" => {
                    let t = cfg.granularity.context("dfq needs granularity")?;
                    dfq_schedule(&trace, &flows, t)
                }
                other => bail!("not a link discipline: {other}"),
            }
            .map_err(|e| anyhow::anyhow!("{name}: {e:?}"))?;
            departures = res
                .packets
                .iter()
                .map(|p| (p.arrival_time, p.departure))
                .collect();
            totals = res.service_totals();
            samples = res
                .samples
                .iter()
                .map(|s| (s.time, s.service.clone(), s.backlogged.clone()))
                .collect();
        }
    }

    let makespan = departures
        .iter()
        .map(|&(_, d)| d)
        .fold(0.0f64, f64::max);
    let bits: u64 = trace.packets().iter().map(|p| p.length_bits).sum();
    let tput = if makespan > 0.0 {
        bits as f64 / (cfg.capacity * makespan)
    } else {
        0.0
    };
    let mut sojourn: Vec<f64> = departures.iter().map(|&(a, d)| d - a).collect();
    sojourn.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean_delay = if sojourn.is_empty() {
        0.0
    } else {
        sojourn.iter().sum::<f64>() / sojourn.len() as f64
    };
    let p99 = if sojourn.is_empty() {
        0.0
    } else {
        sojourn[((sojourn.len() as f64 * 0.99).ceil() as usize - 1).min(sojourn.len() - 1)]
    };

    let ids: Vec<usize> = flows.flows().map(|(id, _)| id).collect();
    let (services, weights): (Vec<f64>, Vec<f64>) = ids
        .iter()
        .map(|id| {
            (
                totals.get(id).copied().unwrap_or(0.0),
                flows.weight(*id).unwrap(),
            )
        })
        .unzip();
    let jain = jain_index(&services, &weights);

    // worst normalized-service spread over any pair of flows
    let mut disc: f64 = 0.0;
    for (ai, &a) in ids.iter().enumerate() {
        for &b in &ids[ai + 1..] {
            let pair: Vec<ServiceSample> = samples
                .iter()
                .map(|(_, service, backlog)| ServiceSample {
                    service_a: service.get(&a).copied().unwrap_or(0.0),
                    service_b: service.get(&b).copied().unwrap_or(0.0),
                    both_backlogged: backlog.contains(&a) && backlog.contains(&b),
                })
                .collect();
            disc = disc.max(service_discrepancy(
                &pair,
                flows.weight(a).unwrap(),
                flows.weight(b).unwrap(),
            ));
        }
    }

    let mut fields = base_fields(cfg, run, seed);
    fields[4] = String::new(); // load has no meaning on a trace-driven link
    fields.push(fmt_sig(tput));
    fields.push(fmt_sig(mean_delay));
    fields.push(fmt_sig(p99));
    fields.push(fmt_sig(jain));
    fields.push(fmt_sig(disc));
    fields.push(extra);
    Ok(Row { fields })
}

fn run_srr(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    // the scan sequence is a pure function of integer weights, ascending ids
    let weights: Vec<u64> = cfg
        .weights
        .values()
        .map(|&w| {
            if w < 1.0 || w.fract() != 0.0 {
                bail!("srr weights must be positive integers, got {w}")
            } else {
                Ok(w as u64)
            }
        })
        .collect::<Result<_>>()?;
    let ids: Vec<usize> = cfg.weights.keys().copied().collect();
    let rows = srr_sequence(&weights)
        .iter()
        .enumerate()
        .map(|(pos, &slot)| Row {
            fields: vec![pos.to_string(), ids[slot].to_string()],
        })
        .collect();
    Ok(ExperimentOutput {
        header: vec!["position", "flow"],
        rows,
    })
}
