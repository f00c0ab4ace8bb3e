//! Experiment files: one `key = value` per line, `#` starts a comment, lists
//! are comma separated.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `num_bs`, `num_ut`, `mt`, `mr` | network dimensions | required |
//! | `streams` | streams per user (one value or one per user) | `mr` |
//! | `power_dbm` | per-station power sweep, dBm | required |
//! | `noise_dbm` | noise power, dBm | `-104` |
//! | `bsc` | cluster-size sweep | `num_bs` |
//! | `weights` | per-user weights | all ones |
//! | `trials` | Monte-Carlo channel draws | `1` |
//! | `seed` | master seed | `0` |
//! | `max_outer`, `max_inner`, `grad_tol`, `alpha0`, `r`, `c` | solver knobs | solver defaults |
//! | `methods` | any of `rcg,mrt,zf,mmse,bd,ezf` | all |
//! | `out_dir` | output directory | `results` |
//! | `trajectory` | write per-iteration CSVs | `false` |
//! | `record_time` | write measured wall time instead of `0` | `false` |
//! | `cell_radius`, `ref_distance`, `pathloss_exponent`, `ref_gain_db` | layout | layout defaults |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ucn_core::config::Layout;
use ucn_core::{dbm_to_watts, NetworkConfig, SolverOptions};

use crate::experiment::Method;
use crate::{SimError, SimResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub num_bs: usize,
    pub num_ut: usize,
    pub mt: usize,
    pub mr: usize,
    pub streams: Vec<usize>,
    pub power_dbm: Vec<f64>,
    pub noise_dbm: f64,
    pub bsc: Vec<usize>,
    pub weights: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverOptions,
    pub layout: Layout,
    pub methods: Vec<Method>,
    pub out_dir: PathBuf,
    pub trajectory: bool,
    pub record_time: bool,
}

const KEYS: &[&str] = &[
    "num_bs",
    "num_ut",
    "mt",
    "mr",
    "streams",
    "power_dbm",
    "noise_dbm",
    "bsc",
    "weights",
    "trials",
    "seed",
    "max_outer",
    "max_inner",
    "grad_tol",
    "alpha0",
    "r",
    "c",
    "methods",
    "out_dir",
    "trajectory",
    "record_time",
    "cell_radius",
    "ref_distance",
    "pathloss_exponent",
    "ref_gain_db",
];

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn scalar<T: FromStr>(&self, key: &str) -> SimResult<Option<T>> {
        let Some((line, raw)) = self.0.get(key) else { return Ok(None) };
        raw.parse()
            .map(Some)
            .map_err(|_| SimError::Config { line: *line, message: format!("`{key}`: cannot parse `{raw}`") })
    }

    fn required<T: FromStr>(&self, key: &str) -> SimResult<T> {
        self.scalar(key)?.ok_or_else(|| SimError::Config { line: 0, message: format!("missing key `{key}`") })
    }

    fn list<T: FromStr>(&self, key: &str) -> SimResult<Option<Vec<T>>> {
        let Some((line, raw)) = self.0.get(key) else { return Ok(None) };
        raw.split(',')
            .map(|t| {
                let t = t.trim();
                t.parse().map_err(|_| SimError::Config { line: *line, message: format!("`{key}`: cannot parse `{t}`") })
            })
            .collect::<SimResult<Vec<T>>>()
            .map(Some)
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> SimResult<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| SimError::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(SimError::Config { line, message: format!("unknown key `{key}`") });
            }
            if entries.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
                return Err(SimError::Config { line, message: format!("duplicate key `{key}`") });
            }
        }
        let e = Entries(entries);

        let num_bs: usize = e.required("num_bs")?;
        let num_ut: usize = e.required("num_ut")?;
        let mr: usize = e.required("mr")?;
        let streams = match e.list::<usize>("streams")? {
            None => vec![mr; num_ut],
            Some(s) if s.len() == 1 => vec![s[0]; num_ut],
            Some(s) => s,
        };
        let defaults = SolverOptions::default();
        let layout_defaults = Layout::default();
        let methods = match e.list::<String>("methods")? {
            None => Method::ALL.to_vec(),
            Some(names) => {
                parse_methods(&names).map_err(|m| SimError::Config { line: e.0["methods"].0, message: m })?
            }
        };
        let spec = ExperimentSpec {
            num_bs,
            num_ut,
            mt: e.required("mt")?,
            mr,
            streams,
            power_dbm: e
                .list("power_dbm")?
                .ok_or_else(|| SimError::Config { line: 0, message: "missing key `power_dbm`".into() })?,
            noise_dbm: e.scalar("noise_dbm")?.unwrap_or(-104.0),
            bsc: e.list("bsc")?.unwrap_or_else(|| vec![num_bs]),
            weights: e.list("weights")?.unwrap_or_else(|| vec![1.0; num_ut]),
            trials: e.scalar("trials")?.unwrap_or(1),
            seed: e.scalar("seed")?.unwrap_or(0),
            solver: SolverOptions {
                initial_step: e.scalar("alpha0")?.unwrap_or(defaults.initial_step),
                backtrack: e.scalar("r")?.unwrap_or(defaults.backtrack),
                armijo: e.scalar("c")?.unwrap_or(defaults.armijo),
                max_outer: e.scalar("max_outer")?.unwrap_or(defaults.max_outer),
                max_inner: e.scalar("max_inner")?.unwrap_or(defaults.max_inner),
                grad_tol: e.scalar("grad_tol")?.unwrap_or(defaults.grad_tol),
                restart: defaults.restart,
            },
            layout: Layout {
                cell_radius: e.scalar("cell_radius")?.unwrap_or(layout_defaults.cell_radius),
                ref_distance: e.scalar("ref_distance")?.unwrap_or(layout_defaults.ref_distance),
                pathloss_exponent: e.scalar("pathloss_exponent")?.unwrap_or(layout_defaults.pathloss_exponent),
                ref_gain_db: e.scalar("ref_gain_db")?.unwrap_or(layout_defaults.ref_gain_db),
            },
            methods,
            out_dir: e.scalar::<String>("out_dir")?.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results")),
            trajectory: e.scalar("trajectory")?.unwrap_or(false),
            record_time: e.scalar("record_time")?.unwrap_or(false),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text)
    }

    /// Network configuration of one sweep cell.
    pub fn network_config(&self, power_dbm: f64, bsc: usize) -> NetworkConfig {
        NetworkConfig {
            num_bs: self.num_bs,
            num_ut: self.num_ut,
            mt: self.mt,
            mr: self.mr,
            streams: self.streams.clone(),
            bs_power: vec![dbm_to_watts(power_dbm); self.num_bs],
            noise_power: dbm_to_watts(self.noise_dbm),
            weights: self.weights.clone(),
            cluster_size: bsc,
            layout: self.layout.clone(),
            solver: self.solver.clone(),
            rng_seed: self.seed,
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        let fail = |m: &str| Err(SimError::Spec(m.to_string()));
        if self.power_dbm.is_empty() || self.bsc.is_empty() || self.methods.is_empty() {
            return fail("power_dbm, bsc and methods must be nonempty");
        }
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.power_dbm.iter().chain([&self.noise_dbm]).any(|x| !x.is_finite()) {
            return fail("powers must be finite");
        }
        for &bsc in &self.bsc {
            for &p in &self.power_dbm {
                self.network_config(p, bsc).validate()?;
            }
        }
        Ok(())
    }
}

pub fn parse_methods(names: &[String]) -> Result<Vec<Method>, String> {
    let mut out = Vec::new();
    for name in names {
        let m = Method::from_name(name.trim()).ok_or_else(|| format!("unknown method `{}`", name.trim()))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}
