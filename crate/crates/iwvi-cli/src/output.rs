//! Result rows, CSV emission (RFC-4180), and the run manifest. Float
//! formatting uses Rust's shortest-roundtrip `Display`, so identical
//! computations always serialize to identical bytes.

use anyhow::{Context, Result};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const CSV_HEADER: &str = "experiment,family,M,repetition,metric,value,stderr,extra";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: &'static str,
    pub family: String,
    pub m: usize,
    pub repetition: usize,
    pub metric: &'static str,
    pub value: f64,
    pub stderr: f64,
    pub extra: String,
}

pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// RFC-4180 field quoting: quote when the field contains a comma, quote,
/// CR, or LF; embedded quotes double.
fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push_str("\r\n");
    for r in rows {
        out.push_str(&quote(r.experiment));
        out.push(',');
        out.push_str(&quote(&r.family));
        out.push(',');
        out.push_str(&r.m.to_string());
        out.push(',');
        out.push_str(&r.repetition.to_string());
        out.push(',');
        out.push_str(&quote(r.metric));
        out.push(',');
        out.push_str(&quote(&format_f64(r.value)));
        out.push(',');
        out.push_str(&quote(&format_f64(r.stderr)));
        out.push(',');
        out.push_str(&quote(&r.extra));
        out.push_str("\r\n");
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub experiment: &'static str,
    pub seed: u64,
    pub version: &'static str,
    pub wall_ms: u128,
    pub rows: usize,
    pub csv: &'static str,
    pub config_echo: &'static str,
}

pub fn write_run(
    out_dir: &Path,
    rows: &[ResultRow],
    config_json: &str,
    experiment: &'static str,
    seed: u64,
    wall_ms: u128,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    write_csv(&out_dir.join("results.csv"), rows)?;
    let mut cfg_file = std::fs::File::create(out_dir.join("config.json"))?;
    cfg_file.write_all(config_json.as_bytes())?;
    cfg_file.write_all(b"\n")?;
    let manifest = Manifest {
        experiment,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_ms,
        rows: rows.len(),
        csv: "results.csv",
        config_echo: "config.json",
    };
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}
