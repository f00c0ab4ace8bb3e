use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::solver::SolverOptions;

/// Converts a power level in dBm to linear watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, (dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * libm::log10(watts) + 30.0
}

/// Geometry of the synthetic deployment used to draw large-scale gains.
///
/// Base stations sit evenly spaced on a ring of half the cell radius (a single
/// base station sits at the origin) and user terminals are dropped uniformly
/// in the disc. The gain of a link at distance `d` is
/// `10^(ref_gain_db/10) · (1 + d/ref_distance)^(−pathloss_exponent)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub cell_radius: f64,
    pub ref_distance: f64,
    pub pathloss_exponent: f64,
    pub ref_gain_db: f64,
}

impl Default for Layout {
    fn default() -> Self {
        Self { cell_radius: 500.0, ref_distance: 50.0, pathloss_exponent: 3.5, ref_gain_db: -80.0 }
    }
}

/// Dimensions, power budgets, weights and solver knobs of one network instance.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub num_bs: usize,
    pub num_ut: usize,
    /// Transmit antennas per base station.
    pub mt: usize,
    /// Receive antennas per user terminal.
    pub mr: usize,
    /// Data streams per user terminal.
    pub streams: Vec<usize>,
    /// Per-base-station power budget in watts.
    pub bs_power: Vec<f64>,
    /// Noise power in watts.
    pub noise_power: f64,
    pub weights: Vec<f64>,
    /// Number of serving base stations per user terminal.
    pub cluster_size: usize,
    pub layout: Layout,
    pub solver: SolverOptions,
    pub rng_seed: u64,
}

impl NetworkConfig {
    /// Homogeneous network: equal streams, power budgets and unit weights.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        num_bs: usize,
        num_ut: usize,
        mt: usize,
        mr: usize,
        streams: usize,
        power: f64,
        noise_power: f64,
        cluster_size: usize,
    ) -> Self {
        Self {
            num_bs,
            num_ut,
            mt,
            mr,
            streams: vec![streams; num_ut],
            bs_power: vec![power; num_bs],
            noise_power,
            weights: vec![1.0; num_ut],
            cluster_size,
            layout: Layout::default(),
            solver: SolverOptions::default(),
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::Config(msg));
        if self.num_bs == 0 || self.num_ut == 0 || self.mt == 0 || self.mr == 0 {
            return bad(format!(
                "dimensions must be positive (B={}, U={}, Mt={}, Mr={})",
                self.num_bs, self.num_ut, self.mt, self.mr
            ));
        }
        if self.streams.len() != self.num_ut || self.weights.len() != self.num_ut {
            return bad(format!(
                "streams ({}) and weights ({}) must have one entry per user ({})",
                self.streams.len(),
                self.weights.len(),
                self.num_ut
            ));
        }
        if self.bs_power.len() != self.num_bs {
            return bad(format!("bs_power has {} entries for {} base stations", self.bs_power.len(), self.num_bs));
        }
        if self.cluster_size == 0 || self.cluster_size > self.num_bs {
            return bad(format!("cluster size {} outside 1..={}", self.cluster_size, self.num_bs));
        }
        for (i, &d) in self.streams.iter().enumerate() {
            if d == 0 || d > self.mr || d > self.cluster_size * self.mt {
                return bad(format!(
                    "user {i}: {d} streams with Mr={} and {} serving antennas",
                    self.mr,
                    self.cluster_size * self.mt
                ));
            }
        }
        if let Some(k) = self.bs_power.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
            return bad(format!("base station {k} power {} must be positive", self.bs_power[k]));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad(format!("noise power {} must be positive", self.noise_power));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return bad(format!("weights must be finite and nonnegative: {:?}", self.weights));
        }
        if !self.weights.iter().any(|&w| w > 0.0) {
            return bad("at least one weight must be positive".into());
        }
        let l = &self.layout;
        if !(l.cell_radius > 0.0 && l.ref_distance > 0.0 && l.pathloss_exponent >= 0.0 && l.ref_gain_db.is_finite()) {
            return bad(format!("invalid layout {l:?}"));
        }
        self.solver.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> NetworkConfig {
        NetworkConfig::uniform(3, 4, 4, 2, 2, 1.0, 1e-3, 2)
    }

    #[test]
    fn dbm_conversion() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert!((dbm_to_watts(0.0) - 1e-3).abs() < 1e-18);
        assert!((watts_to_dbm(dbm_to_watts(-104.0)) + 104.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_config_is_valid() {
        base().validate().unwrap();
    }

    #[test]
    fn rejects_invalid_fields() {
        let mut c = base();
        c.streams[1] = 3;
        assert!(matches!(c.validate(), Err(Error::Config(_))));

        let mut c = base();
        c.cluster_size = 4;
        assert!(c.validate().is_err());
        c.cluster_size = 0;
        assert!(c.validate().is_err());

        let mut c = base();
        c.weights = vec![0.0; 4];
        assert!(c.validate().is_err());

        let mut c = base();
        c.bs_power[2] = 0.0;
        assert!(c.validate().is_err());

        let mut c = base();
        c.noise_power = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn streams_limited_by_cluster_antennas() {
        let mut c = NetworkConfig::uniform(2, 1, 1, 4, 2, 1.0, 1.0, 1);
        assert!(c.validate().is_err());
        c.cluster_size = 2;
        c.validate().unwrap();
    }
}
