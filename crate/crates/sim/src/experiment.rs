//! Monte-Carlo sweeps over transmit power, cluster size and method.
//!
//! Every `(trial, power, cluster size, method)` cell is an independent job.
//! Channels depend only on the trial seed, so all cells of a trial see the same
//! draw and any row can be recomputed from its recorded seed. Jobs run on the
//! rayon pool and are collected in sweep order, so output files do not depend
//! on scheduling.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use ucn_core::baselines::{linear_baseline, mrt_precoder, BaselineKind};
use ucn_core::{
    generate_channels, rcg_solve_observed, select_clusters, Clock, Error, NoClock, Precoder, SolverTrace, WsrProblem,
};

use crate::{fmt_f64, ExperimentSpec, SimError, SimResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rcg,
    Baseline(BaselineKind),
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Rcg,
        Method::Baseline(BaselineKind::Mrt),
        Method::Baseline(BaselineKind::Zf),
        Method::Baseline(BaselineKind::Mmse),
        Method::Baseline(BaselineKind::Bd),
        Method::Baseline(BaselineKind::Ezf),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Rcg => "rcg",
            Method::Baseline(k) => k.name(),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        if name.eq_ignore_ascii_case("rcg") {
            Some(Method::Rcg)
        } else {
            BaselineKind::from_name(name).map(Method::Baseline)
        }
    }
}

/// Wall clock measured from construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn start() -> Self {
        StdClock(Instant::now())
    }
}

impl Clock for StdClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Channel seed of Monte-Carlo trial `trial` under master seed `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    splitmix64(seed ^ splitmix64(trial as u64))
}

/// One row of a trajectory or results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub trial: usize,
    pub seed: u64,
    pub power_dbm: f64,
    pub bsc: usize,
    pub method: Method,
    pub outer_iter: usize,
    pub wsr_bits: Option<f64>,
    pub grad_norm: Option<f64>,
    pub inner_iters: usize,
    pub wall_ms: f64,
    pub status: String,
}

pub const HEADER: [&str; 11] = [
    "trial",
    "seed",
    "power_dbm",
    "bsc",
    "method",
    "outer_iter",
    "wsr_bits",
    "grad_norm",
    "inner_iters",
    "wall_ms",
    "status",
];

impl ResultRow {
    fn record(&self) -> [String; 11] {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        [
            self.trial.to_string(),
            self.seed.to_string(),
            fmt_f64(self.power_dbm),
            self.bsc.to_string(),
            self.method.name().to_string(),
            self.outer_iter.to_string(),
            opt(self.wsr_bits),
            opt(self.grad_norm),
            self.inner_iters.to_string(),
            fmt_f64(self.wall_ms),
            self.status.clone(),
        ]
    }
}

/// Outcome of one sweep cell.
#[derive(Debug, Clone)]
pub enum CellOutcome {
    Solved { precoder: Precoder, trace: Option<SolverTrace> },
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct CellResult {
    /// Final row: `outer_iter` is the iteration count and `inner_iters` the
    /// total number of line-search trials.
    pub summary: ResultRow,
    /// Per-iteration rows (RCG) or the single evaluated point (baselines).
    pub trajectory: Vec<ResultRow>,
    pub outcome: CellOutcome,
}

const NATS_TO_BITS: f64 = core::f64::consts::LOG2_E;

/// Runs one cell of the sweep.
pub fn run_cell(spec: &ExperimentSpec, trial: usize, power_dbm: f64, bsc: usize, method: Method) -> CellResult {
    run_seeded_cell(spec, trial, trial_seed(spec.seed, trial), power_dbm, bsc, method)
}

/// Runs one cell with an explicit channel seed, as recorded in the `seed`
/// column of the output files.
pub fn run_seeded_cell(
    spec: &ExperimentSpec,
    trial: usize,
    seed: u64,
    power_dbm: f64,
    bsc: usize,
    method: Method,
) -> CellResult {
    let row = |outer_iter, wsr_bits, grad_norm, inner_iters, wall_ms, status: &str| ResultRow {
        trial,
        seed,
        power_dbm,
        bsc,
        method,
        outer_iter,
        wsr_bits,
        grad_norm,
        inner_iters,
        wall_ms,
        status: status.to_string(),
    };
    match solve_cell(spec, seed, power_dbm, bsc, method) {
        Ok((precoder, trace, grad_norm, wsr)) => match trace {
            Some(trace) => {
                let ms = |s: f64| if spec.record_time { s * 1e3 } else { 0.0 };
                let status = trace.termination.as_str();
                let trajectory = trace
                    .records
                    .iter()
                    .map(|r| {
                        row(
                            r.iteration,
                            Some(r.wsr * NATS_TO_BITS),
                            Some(r.grad_norm),
                            r.inner_iters,
                            ms(r.elapsed),
                            status,
                        )
                    })
                    .collect();
                let last = trace.final_record();
                let total_inner = trace.records.iter().map(|r| r.inner_iters).sum();
                let summary = row(
                    trace.outer_iterations(),
                    Some(last.wsr * NATS_TO_BITS),
                    Some(last.grad_norm),
                    total_inner,
                    ms(last.elapsed),
                    status,
                );
                CellResult { summary, trajectory, outcome: CellOutcome::Solved { precoder, trace: Some(trace) } }
            }
            None => {
                let r = row(0, Some(wsr * NATS_TO_BITS), Some(grad_norm), 0, 0.0, "ok");
                CellResult {
                    summary: r.clone(),
                    trajectory: vec![r],
                    outcome: CellOutcome::Solved { precoder, trace: None },
                }
            }
        },
        Err(e) => {
            let status = match e {
                Error::BaselineInfeasible { .. } => "infeasible",
                _ => "error",
            };
            let r = row(0, None, None, 0, 0.0, status);
            CellResult { summary: r.clone(), trajectory: vec![r], outcome: CellOutcome::Failed(e.to_string()) }
        }
    }
}

type Solved = (Precoder, Option<SolverTrace>, f64, f64);

fn solve_cell(
    spec: &ExperimentSpec,
    seed: u64,
    power_dbm: f64,
    bsc: usize,
    method: Method,
) -> ucn_core::Result<Solved> {
    let config = spec.network_config(power_dbm, bsc);
    let channels = generate_channels(&config, seed)?;
    let cluster = select_clusters(&channels, bsc)?;
    let problem = WsrProblem::from_config(&config, channels, cluster)?;
    match method {
        Method::Rcg => {
            let p0 = mrt_precoder(&problem)?;
            let sol = if spec.record_time {
                rcg_solve_observed(&problem, &p0, &config.solver, &StdClock::start(), |_| {})?
            } else {
                rcg_solve_observed(&problem, &p0, &config.solver, &NoClock, |_| {})?
            };
            let last = sol.trace.final_record();
            let (g, w) = (last.grad_norm, last.wsr);
            Ok((sol.precoder, Some(sol.trace), g, w))
        }
        Method::Baseline(kind) => {
            let p = linear_baseline(kind, &problem)?;
            let cache = problem.build_cache(&p)?;
            let (grad, _) = problem.riemannian_gradient(&p, &problem.euclidean_gradient(&cache))?;
            let wsr = problem.wsr(&cache);
            Ok((p, None, grad.norm_sq().sqrt(), wsr))
        }
    }
}

/// Cell coordinates in output order: power, cluster size, trial, method.
pub fn cells(spec: &ExperimentSpec) -> Vec<(usize, f64, usize, Method)> {
    let mut out = Vec::new();
    for &p in &spec.power_dbm {
        for &bsc in &spec.bsc {
            for trial in 0..spec.trials {
                for &m in &spec.methods {
                    out.push((trial, p, bsc, m));
                }
            }
        }
    }
    out
}

/// Runs every cell in parallel; results are in [`cells`] order.
pub fn run_cells(spec: &ExperimentSpec) -> Vec<CellResult> {
    cells(spec).into_par_iter().map(|(t, p, b, m)| run_cell(spec, t, p, b, m)).collect()
}

/// Per-(power, cluster size, method) averages over the trials with a usable
/// precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub power_dbm: f64,
    pub bsc: usize,
    pub method: Method,
    pub trials: usize,
    pub valid: usize,
    pub mean_wsr_bits: Option<f64>,
    pub mean_outer_iters: Option<f64>,
    /// Total line-search trials over total outer iterations.
    pub mean_inner_iters: Option<f64>,
}

pub fn summarize(spec: &ExperimentSpec, results: &[CellResult]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &p in &spec.power_dbm {
        for &bsc in &spec.bsc {
            for &m in &spec.methods {
                let rows: Vec<&ResultRow> = results
                    .iter()
                    .map(|r| &r.summary)
                    .filter(|r| r.power_dbm == p && r.bsc == bsc && r.method == m)
                    .collect();
                let valid: Vec<&&ResultRow> = rows.iter().filter(|r| r.wsr_bits.is_some()).collect();
                let n = valid.len() as f64;
                let mean =
                    |f: &dyn Fn(&ResultRow) -> f64| (n > 0.0).then(|| valid.iter().map(|r| f(r)).sum::<f64>() / n);
                let outer: usize = valid.iter().map(|r| r.outer_iter).sum();
                let inner: usize = valid.iter().map(|r| r.inner_iters).sum();
                out.push(SummaryRow {
                    power_dbm: p,
                    bsc,
                    method: m,
                    trials: rows.len(),
                    valid: valid.len(),
                    mean_wsr_bits: mean(&|r| r.wsr_bits.unwrap_or(0.0)),
                    mean_outer_iters: mean(&|r| r.outer_iter as f64),
                    mean_inner_iters: (outer > 0).then(|| inner as f64 / outer as f64),
                });
            }
        }
    }
    out
}

fn csv_writer(path: &Path) -> SimResult<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = &'a ResultRow>) -> SimResult<()> {
    let io = |e: csv::Error| SimError::io(path, std::io::Error::other(e));
    let mut w = csv_writer(path)?;
    w.write_record(HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.record()).map_err(io)?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> SimResult<()> {
    let io = |e: csv::Error| SimError::io(path, std::io::Error::other(e));
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut w = csv_writer(path)?;
    w.write_record([
        "power_dbm",
        "bsc",
        "method",
        "trials",
        "valid",
        "mean_wsr_bits",
        "mean_outer_iters",
        "mean_inner_iters",
    ])
    .map_err(io)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.power_dbm),
            r.bsc.to_string(),
            r.method.name().to_string(),
            r.trials.to_string(),
            r.valid.to_string(),
            opt(r.mean_wsr_bits),
            opt(r.mean_outer_iters),
            opt(r.mean_inner_iters),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub results: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

/// Runs the sweep and writes `results.csv`, `summary.csv` and, if enabled,
/// one `trajectory_<method>.csv` per method into `spec.out_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> SimResult<ExperimentOutput> {
    spec.validate()?;
    let dir = &spec.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let results = run_cells(spec);
    let summary = summarize(spec, &results);

    let mut files = vec![dir.join("results.csv"), dir.join("summary.csv")];
    write_rows(&files[0], results.iter().map(|r| &r.summary))?;
    write_summary(&files[1], &summary)?;
    if spec.trajectory {
        for &m in &spec.methods {
            let path = dir.join(format!("trajectory_{}.csv", m.name()));
            write_rows(&path, results.iter().filter(|r| r.summary.method == m).flat_map(|r| r.trajectory.iter()))?;
            files.push(path);
        }
    }
    Ok(ExperimentOutput { results, summary, files })
}
