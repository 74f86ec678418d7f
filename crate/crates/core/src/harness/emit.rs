use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::IterationTrace;
use crate::error::{Error, Result};

use super::{OutputFormat, ScenarioOutcome};

pub const CSV_HEADER: &str = "k,t,x,r,e,u,epsilon,a,w_hat";

/// One emitted row. `t` is the control instant; `x`, `r` and `e` refer to
/// `t + rho`. Adaptation columns are empty for the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub k: u64,
    pub t: usize,
    pub x: f64,
    pub r: f64,
    pub e: f64,
    pub u: f64,
    pub epsilon: Option<f64>,
    pub a: Option<f64>,
    pub w_hat: Option<f64>,
}

fn rows(traces: &[IterationTrace], channel: usize) -> impl Iterator<Item = CsvRow> + '_ {
    traces.iter().flat_map(move |tr| {
        tr.channels[channel].rows.iter().map(move |r| CsvRow {
            k: tr.k,
            t: r.t,
            x: r.x,
            r: r.r,
            e: r.e,
            u: r.u,
            epsilon: r.epsilon,
            a: r.a,
            w_hat: r.w_hat,
        })
    })
}

fn num(out: &mut String, v: f64) {
    // 17 significant digits: exact round trip for every finite f64
    write!(out, ",{v:.16e}").unwrap();
}

fn opt(out: &mut String, v: Option<f64>) {
    match v {
        Some(v) => num(out, v),
        None => out.push(','),
    }
}

/// Per-step CSV for one channel, header included.
pub fn trace_csv(traces: &[IterationTrace], channel: usize) -> String {
    let mut out = String::with_capacity(64 + traces.len() * 50 * 220);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows(traces, channel) {
        write!(out, "{},{}", row.k, row.t).unwrap();
        for v in [row.x, row.r, row.e, row.u] {
            num(&mut out, v);
        }
        for v in [row.epsilon, row.a, row.w_hat] {
            opt(&mut out, v);
        }
        out.push('\n');
    }
    out
}

fn bad_csv(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("trace CSV line {line}: {msg}"))
}

/// Parses output of [`trace_csv`].
pub fn read_trace_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(bad_csv(1, format!("expected header {CSV_HEADER:?}, got {other:?}"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad_csv(n, format!("expected 9 fields, got {}", f.len())));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|e| bad_csv(n, format!("{s:?}: {e}")));
        let maybe = |s: &str| if s.is_empty() { Ok(None) } else { float(s).map(Some) };
        out.push(CsvRow {
            k: f[0].parse().map_err(|e| bad_csv(n, e))?,
            t: f[1].parse().map_err(|e| bad_csv(n, e))?,
            x: float(f[2])?,
            r: float(f[3])?,
            e: float(f[4])?,
            u: float(f[5])?,
            epsilon: maybe(f[6])?,
            a: maybe(f[7])?,
            w_hat: maybe(f[8])?,
        });
    }
    Ok(out)
}

fn write(path: PathBuf, contents: &[u8]) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `<name>.<controller>.ch<c>.{csv,json}` per controller and channel,
/// plus `<name>.summary.json`. Returns the paths written.
pub fn emit_results(outcome: &ScenarioOutcome, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let name = &outcome.config.run.name;
    let mut written = Vec::new();
    for &kind in &outcome.config.controller.controllers {
        let traces = match outcome.traces(kind) {
            Some(t) if !t.is_empty() => t,
            _ => continue,
        };
        for c in 0..traces[0].channels.len() {
            let stem = format!("{name}.{}.ch{c}", kind.as_str());
            let path = match format {
                OutputFormat::Csv => write(dir.join(format!("{stem}.csv")), trace_csv(traces, c).as_bytes())?,
                OutputFormat::Json => {
                    let rows: Vec<CsvRow> = rows(traces, c).collect();
                    let text = serde_json::to_string_pretty(&rows).expect("rows serialise");
                    write(dir.join(format!("{stem}.json")), text.as_bytes())?
                }
            };
            written.push(path);
        }
    }
    let summary = serde_json::to_string_pretty(&outcome.summary).expect("summary serialises");
    written.push(write(dir.join(format!("{name}.summary.json")), summary.as_bytes())?);
    Ok(written)
}
