use std::path::Path;

use anyhow::{Context, Result};

/// A float rounded to 6 significant digits, plain decimal notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(5 - mag);
    let rounded = (x * scale).round() / scale;
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{rounded:.decimals$}");
    // trim trailing zeros but keep at least one digit after the point
    if s.contains('.') {
        let t = s.trim_end_matches('0');
        let t = t.strip_suffix('.').unwrap_or(t);
        t.to_string()
    } else {
        s
    }
}

/// One record of the output CSV. Fields are pre-rendered so fabric and link
/// runs share the writer.
#[derive(Debug, Clone)]
pub struct Row {
    pub fields: Vec<String>,
}

/// Renders header + rows, comma-separated, LF line endings.
pub fn render_csv(header: &[&str], rows: &[Row]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in rows {
        out.push_str(&r.fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(header: &[&str], rows: &[Row], path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(header, rows))
        .with_context(|| format!("writing {}", path.display()))
}
