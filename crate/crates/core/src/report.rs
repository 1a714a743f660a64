//! Text trace format and CSV reports.
//!
//! Trace layout (newline-terminated, no trailing whitespace):
//!
//! ```text
//! numa-trace v1
//! N=<n> L=<l> K=<k> Q=<q>
//! quantum 1
//! <N lines of N comma-separated c2c counts>
//! dram
//! <N lines of L comma-separated DRAM counts>
//! quantum 2
//! ...
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{C2CMatrix, Count, DramMatrix, SystemConfig};
use crate::sim::{SimResult, SweepCell};
use crate::workload::{Quantum, Trace};

pub const TRACE_MAGIC: &str = "numa-trace v1";

pub fn write_trace(trace: &Trace) -> String {
    let c = trace.config();
    let mut out = String::new();
    out.push_str(TRACE_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "{c}");
    let join = |row: &[Count]| row.iter().map(Count::to_string).collect::<Vec<_>>().join(",");
    for (q, quantum) in trace.quanta().iter().enumerate() {
        let _ = writeln!(out, "quantum {}", q + 1);
        for i in 0..c.n_threads() {
            out.push_str(&join(quantum.c2c.row(i)));
            out.push('\n');
        }
        out.push_str("dram\n");
        for t in 0..c.n_threads() {
            out.push_str(&join(quantum.dram.row(t)));
            out.push('\n');
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Split<'a, char>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok((i + 1, line))
            }
            None => Err(Error::format(
                self.last + 1,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    fn expect(&mut self, literal: &str) -> Result<()> {
        let (no, line) = self.next(literal)?;
        if line != literal {
            return Err(Error::format(no, format!("expected `{literal}`, found `{line}`")));
        }
        Ok(())
    }

    fn row(&mut self, width: usize, what: &str) -> Result<Vec<Count>> {
        let (no, line) = self.next(what)?;
        let row = line
            .split(',')
            .map(|f| {
                if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(Error::format(no, format!("`{f}` is not a non-negative integer")));
                }
                f.parse::<Count>().map_err(|e| Error::format(no, format!("`{f}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != width {
            return Err(Error::format(
                no,
                format!("{what} row has {} fields, expected {width}", row.len()),
            ));
        }
        Ok(row)
    }
}

fn parse_dims(no: usize, line: &str) -> Result<SystemConfig> {
    let fields: Vec<&str> = line.split(' ').collect();
    let keys = ["N", "L", "K", "Q"];
    if fields.len() != keys.len() {
        return Err(Error::format(no, "expected `N=<n> L=<l> K=<k> Q=<q>`"));
    }
    let mut vals = [0usize; 4];
    for ((field, key), val) in fields.iter().zip(keys).zip(&mut vals) {
        let v = field
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| Error::format(no, format!("expected `{key}=<value>`, found `{field}`")))?;
        *val = v
            .parse()
            .map_err(|_| Error::format(no, format!("`{v}` is not a count")))?;
    }
    SystemConfig::new(vals[0], vals[1], vals[2], vals[3]).map_err(|e| Error::format(no, e.to_string()))
}

pub fn parse_trace(text: &str) -> Result<Trace> {
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| Error::format(text.split('\n').count(), "file must end with a newline"))?;
    let mut lines = Lines {
        inner: body.split('\n').enumerate(),
        last: 0,
    };
    lines.expect(TRACE_MAGIC)?;
    let (no, dims) = lines.next("dimensions")?;
    let config = parse_dims(no, dims)?;
    let n = config.n_threads();
    let l = config.n_nodes();

    let mut quanta = Vec::with_capacity(config.n_quanta());
    for q in 1..=config.n_quanta() {
        lines.expect(&format!("quantum {q}"))?;
        let first = lines.last + 1;
        let mut c2c = Vec::with_capacity(n * n);
        for _ in 0..n {
            c2c.extend(lines.row(n, "c2c")?);
        }
        let c2c = C2CMatrix::new(n, c2c).map_err(|e| Error::format(first, e.to_string()))?;
        lines.expect("dram")?;
        let mut dram = Vec::with_capacity(n * l);
        for _ in 0..n {
            dram.extend(lines.row(l, "dram")?);
        }
        let dram = DramMatrix::new(n, l, dram).expect("rows checked");
        quanta.push(Quantum { c2c, dram });
    }
    if let Some((i, line)) = lines.inner.next() {
        return Err(Error::format(i + 1, format!("unexpected trailing content `{line}`")));
    }
    Trace::new(config, quanta)
}

/// Two-decimal percentage; never prints `-0.00`.
pub fn fmt_pct(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_owned()
    } else {
        s
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

pub const QUANTUM_CSV_HEADER: &str =
    "quantum,c2c_local,c2c_remote,dram_local,dram_remote,migration,total,baseline_total,migrated_threads";

/// One row per quantum (1-based) with the optimized cost breakdown and the
/// baseline total alongside.
pub fn per_quantum_csv(result: &SimResult) -> String {
    let mut out = String::from(QUANTUM_CSV_HEADER);
    out.push('\n');
    for (q, (c, b)) in result.per_quantum.iter().zip(&result.baseline_per_quantum).enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            q + 1,
            c.c2c_local,
            c.c2c_remote,
            c.dram_local,
            c.dram_remote,
            c.migration,
            c.total,
            b.total,
            result.migrated[q].len()
        );
    }
    out
}

pub fn summary_line(workload: &str, policy_name: &str, affinity: bool, result: &SimResult) -> String {
    format!(
        "workload={workload} policy={policy_name} affinity={} baseline_total={} optimized_total={} improvement={}",
        on_off(affinity),
        result.baseline_total,
        result.optimized_total,
        fmt_pct(result.improvement)
    )
}

pub const SWEEP_CSV_HEADER: &str =
    "workload,policy,affinity,c2c_remote,dram_remote,baseline_total,optimized_total,improvement";

pub fn sweep_csv_row(workload: &str, cell: &SweepCell) -> String {
    format!(
        "{workload},{},{},{},{},{},{},{}",
        cell.policy.name(),
        on_off(cell.policy.affinity),
        cell.lat.c2c_remote,
        cell.lat.dram_remote,
        cell.result.baseline_total,
        cell.result.optimized_total,
        fmt_pct(cell.result.improvement)
    )
}

pub fn sweep_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a SweepCell)>) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for (w, cell) in rows {
        out.push_str(&sweep_csv_row(w, cell));
        out.push('\n');
    }
    out
}
