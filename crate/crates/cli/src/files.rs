use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fabsim_core::link::{Packet, PacketTrace};
use fabsim_core::sched::CreditTable;
use fabsim_core::traffic::{FlowEntry, FlowTable, LoadMatrix};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Non-comment, non-blank lines with their 1-based numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// N lines of N arrival probabilities.
pub fn read_load_matrix(path: &Path) -> Result<LoadMatrix> {
    let text = read(path)?;
    let mut rows = Vec::new();
    for (no, line) in data_lines(&text) {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|v| {
                v.parse()
                    .map_err(|_| anyhow!("{}:{no}: bad probability `{v}`", path.display()))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    LoadMatrix::new(rows).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// One `flow_id input output weight share` record per line.
pub fn read_flow_table(path: &Path) -> Result<FlowTable> {
    let text = read(path)?;
    let mut entries = Vec::new();
    for (no, line) in data_lines(&text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            bail!(
                "{}:{no}: expected `flow_id input output weight share`, got {} fields",
                path.display(),
                f.len()
            );
        }
        let ctx = |v: &str| anyhow!("{}:{no}: bad field `{v}`", path.display());
        entries.push(FlowEntry {
            flow_id: f[0].parse().map_err(|_| ctx(f[0]))?,
            input_port: f[1].parse().map_err(|_| ctx(f[1]))?,
            output_port: f[2].parse().map_err(|_| ctx(f[2]))?,
            weight: f[3].parse().map_err(|_| ctx(f[3]))?,
            share: f[4].parse().map_err(|_| ctx(f[4]))?,
        });
    }
    FlowTable::new(entries).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// A `frame_len = K` line plus one `input output credit` record per line.
pub fn read_credits(path: &Path, n_ports: usize) -> Result<CreditTable> {
    let text = read(path)?;
    let mut frame_len: Option<u64> = None;
    let mut credit = vec![vec![0u64; n_ports]; n_ports];
    for (no, line) in data_lines(&text) {
        if let Some(rest) = line.strip_prefix("frame_len") {
            let v = rest.trim_start_matches(['=', ' ']).trim();
            frame_len = Some(
                v.parse()
                    .map_err(|_| anyhow!("{}:{no}: bad frame_len `{v}`", path.display()))?,
            );
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            bail!("{}:{no}: expected `input output credit`", path.display());
        }
        let ctx = |v: &str| anyhow!("{}:{no}: bad field `{v}`", path.display());
        let i: usize = f[0].parse().map_err(|_| ctx(f[0]))?;
        let j: usize = f[1].parse().map_err(|_| ctx(f[1]))?;
        let c: u64 = f[2].parse().map_err(|_| ctx(f[2]))?;
        if i >= n_ports || j >= n_ports {
            bail!("{}:{no}: port out of range for N={n_ports}", path.display());
        }
        credit[i][j] = c;
    }
    let frame_len =
        frame_len.ok_or_else(|| anyhow!("{}: missing `frame_len`", path.display()))?;
    CreditTable::new(credit, frame_len).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// One `arrival_time flow_id length_bits` record per line, ascending time.
pub fn read_trace(path: &Path) -> Result<PacketTrace> {
    let text = read(path)?;
    let mut packets = Vec::new();
    for (no, line) in data_lines(&text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            bail!(
                "{}:{no}: expected `arrival_time flow_id length_bits`",
                path.display()
            );
        }
        let ctx = |v: &str| anyhow!("{}:{no}: bad field `{v}`", path.display());
        packets.push(Packet {
            arrival_time: f[0].parse().map_err(|_| ctx(f[0]))?,
            flow_id: f[1].parse().map_err(|_| ctx(f[1]))?,
            length_bits: f[2].parse().map_err(|_| ctx(f[2]))?,
        });
    }
    PacketTrace::new(packets).map_err(|e| anyhow!("{}: {e}", path.display()))
}
