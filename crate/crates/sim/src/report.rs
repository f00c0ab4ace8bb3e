//! Trend summary of a `results.csv` file: per-cell means, the gain of RCG over
//! each other method, and the mean number of line-search trials per outer
//! iteration.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use crate::experiment::HEADER;
use crate::{SimError, SimResult};

#[derive(Debug, Clone, PartialEq)]
pub struct CellMean {
    pub power_dbm: f64,
    pub bsc: usize,
    pub method: String,
    pub rows: usize,
    pub mean_wsr_bits: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDelta {
    pub power_dbm: f64,
    pub bsc: usize,
    pub method: String,
    /// Mean of `wsr(rcg) − wsr(method)` over trials where both are available.
    pub mean_gain_bits: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrendReport {
    pub cells: Vec<CellMean>,
    pub deltas: Vec<MethodDelta>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

impl TrendReport {
    /// Line-search trials per outer iteration, if any iteration ran.
    pub fn mean_inner_iterations(&self) -> Option<f64> {
        (self.outer_iterations > 0).then(|| self.inner_iterations as f64 / self.outer_iterations as f64)
    }
}

impl fmt::Display for TrendReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>10} {:>4} {:>6} {:>6} {:>14}", "power_dbm", "bsc", "method", "rows", "mean_wsr_bits")?;
        for c in &self.cells {
            let wsr = c.mean_wsr_bits.map(|w| format!("{w:.6}")).unwrap_or_else(|| "n/a".into());
            writeln!(f, "{:>10} {:>4} {:>6} {:>6} {:>14}", c.power_dbm, c.bsc, c.method, c.rows, wsr)?;
        }
        if !self.deltas.is_empty() {
            writeln!(f)?;
            writeln!(
                f,
                "{:>10} {:>4} {:>12} {:>14} {:>6}",
                "power_dbm", "bsc", "comparison", "mean_gain_bits", "pairs"
            )?;
            for d in &self.deltas {
                let label = format!("rcg-{}", d.method);
                writeln!(
                    f,
                    "{:>10} {:>4} {:>12} {:>14.6} {:>6}",
                    d.power_dbm, d.bsc, label, d.mean_gain_bits, d.pairs
                )?;
            }
        }
        writeln!(f)?;
        match self.mean_inner_iterations() {
            Some(m) => write!(f, "rcg iterations: {} outer, mean inner per outer {m:.4}", self.outer_iterations),
            None => write!(f, "rcg iterations: 0"),
        }
    }
}

struct Row {
    trial: usize,
    power_dbm: f64,
    bsc: usize,
    method: String,
    outer: usize,
    wsr: Option<f64>,
    inner: usize,
}

fn parse_row(record: &csv::StringRecord, line: usize) -> SimResult<Row> {
    let bad = |message: String| SimError::Parse { line, message };
    if record.len() != HEADER.len() {
        return Err(bad(format!("expected {} fields, found {}", HEADER.len(), record.len())));
    }
    fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: usize) -> SimResult<T> {
        record[i].parse().map_err(|_| SimError::Parse {
            line,
            message: format!("column `{}`: bad value `{}`", HEADER[i], &record[i]),
        })
    }
    let wsr = if record[6].is_empty() { None } else { Some(field::<f64>(record, 6, line)?) };
    if wsr.is_some_and(|w| w.is_nan()) {
        return Err(bad("wsr_bits is NaN".into()));
    }
    Ok(Row {
        trial: field(record, 0, line)?,
        power_dbm: field(record, 2, line)?,
        bsc: field(record, 3, line)?,
        method: record[4].to_string(),
        outer: field(record, 5, line)?,
        wsr,
        inner: field(record, 8, line)?,
    })
}

/// Parses a results CSV and aggregates it. Malformed input is reported with
/// its 1-based line number.
pub fn report_trends(input: impl Read) -> SimResult<TrendReport> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut records = reader.records();
    match records.next() {
        None => return Err(SimError::Parse { line: 1, message: "missing header".into() }),
        Some(Err(e)) => return Err(SimError::Parse { line: 1, message: e.to_string() }),
        Some(Ok(h)) if h.iter().ne(HEADER.iter().copied()) => {
            return Err(SimError::Parse { line: 1, message: format!("unexpected header, want {}", HEADER.join(",")) });
        }
        Some(Ok(_)) => {}
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| SimError::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        rows.push(parse_row(&rec, line)?);
    }

    // Keys keep first-appearance order of power and method; floats are keyed by bits.
    let mut order: Vec<(u64, usize, String)> = Vec::new();
    let mut groups: BTreeMap<(u64, usize, String), Vec<&Row>> = BTreeMap::new();
    for r in &rows {
        let key = (r.power_dbm.to_bits(), r.bsc, r.method.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }

    let mut report = TrendReport::default();
    for key in &order {
        let g = &groups[key];
        let valid: Vec<f64> = g.iter().filter_map(|r| r.wsr).collect();
        report.cells.push(CellMean {
            power_dbm: f64::from_bits(key.0),
            bsc: key.1,
            method: key.2.clone(),
            rows: g.len(),
            mean_wsr_bits: (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64),
        });
        if key.2 == "rcg" {
            report.outer_iterations += g.iter().map(|r| r.outer).sum::<usize>();
            report.inner_iterations += g.iter().map(|r| r.inner).sum::<usize>();
        }
    }
    for key in order.iter().filter(|k| k.2 != "rcg") {
        let Some(rcg) = groups.get(&(key.0, key.1, "rcg".to_string())) else { continue };
        let gains: Vec<f64> = groups[key]
            .iter()
            .filter_map(|o| {
                let r = rcg.iter().find(|r| r.trial == o.trial)?;
                Some(r.wsr? - o.wsr?)
            })
            .collect();
        if !gains.is_empty() {
            report.deltas.push(MethodDelta {
                power_dbm: f64::from_bits(key.0),
                bsc: key.1,
                method: key.2.clone(),
                mean_gain_bits: gains.iter().sum::<f64>() / gains.len() as f64,
                pairs: gains.len(),
            });
        }
    }
    Ok(report)
}
