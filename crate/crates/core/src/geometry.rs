//! The constraint manifold: precoders whose per-base-station transmit power
//! equals its budget exactly.
//!
//! For every active base station `k` the stacked blocks `{P[i,k] : i ∈ U_k}`
//! lie on a sphere of radius `√P_k`, so the feasible set is a product of
//! spheres embedded in the ambient product of complex matrix spaces with the
//! real metric `Σ Re tr(ζ^H ξ)`. All operations here are pure functions of
//! their inputs.
//!
//! Every multiplier (projection, gradient projection, transport) has the same
//! form `(1/P_k) Σ_{i ∈ U_k} Re tr(X[i,k]^H ξ[i,k])` for a base point `X`, see
//! [`PowerManifold::normal_coefficients`]. Base stations with an empty served
//! group are left out: their multiplier is 0 and their retraction scale is 1.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::blocks::Blocks;
use crate::error::{Error, Result};
use crate::linalg::{frob_sq, re_inner, CMat};
use crate::network::{per_bs_power, ClusterMap};

pub type Precoder = Blocks;
pub type TangentVector = Blocks;

/// Relative tolerance for manifold membership and tangency checks.
pub const MANIFOLD_TOL: f64 = 1e-9;

/// Candidate powers below this are treated as a degenerate retraction.
pub const DEGENERATE_POWER: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerManifold {
    cluster: ClusterMap,
    powers: Vec<f64>,
    mt: usize,
    streams: Vec<usize>,
}

impl PowerManifold {
    pub fn new(cluster: ClusterMap, powers: Vec<f64>, mt: usize, streams: Vec<usize>) -> Result<Self> {
        if powers.len() != cluster.num_bs() {
            return Err(Error::Config(format!("{} power budgets for {} stations", powers.len(), cluster.num_bs())));
        }
        if streams.len() != cluster.num_ut() {
            return Err(Error::Config(format!("{} stream counts for {} users", streams.len(), cluster.num_ut())));
        }
        for (k, &power) in powers.iter().enumerate() {
            if cluster.is_active(k) && !(power.is_finite() && power > 0.0) {
                return Err(Error::Config(format!("active base station {k} has power budget {power}")));
            }
        }
        if mt == 0 || streams.contains(&0) {
            return Err(Error::Config("antenna and stream counts must be positive".into()));
        }
        Ok(Self { cluster, powers, mt, streams })
    }

    pub fn cluster(&self) -> &ClusterMap {
        &self.cluster
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn mt(&self) -> usize {
        self.mt
    }

    pub fn streams(&self) -> &[usize] {
        &self.streams
    }

    pub fn zeros(&self) -> Blocks {
        Blocks::zeros(&self.cluster, self.mt, &self.streams)
    }

    pub fn check(&self, x: &Blocks) -> Result<()> {
        x.check_shape(&self.cluster, self.mt, &self.streams)
    }

    /// The product metric `Σ_i Σ_{k∈B_i} Re tr(ζ[i,k]^H ξ[i,k])`. It does not
    /// depend on the base point.
    pub fn metric(&self, _p: &Precoder, xi: &TangentVector, zeta: &TangentVector) -> Result<f64> {
        self.check(xi)?;
        self.check(zeta)?;
        Ok(xi.inner(zeta))
    }

    pub fn norm(&self, xi: &TangentVector) -> f64 {
        libm::sqrt(xi.norm_sq())
    }

    pub fn per_bs_power(&self, p: &Precoder) -> Vec<f64> {
        per_bs_power(p, &self.cluster)
    }

    /// `power_k − P_k` per station; zero for stations with no users.
    pub fn feasibility_residual(&self, p: &Precoder) -> Vec<f64> {
        self.per_bs_power(p)
            .into_iter()
            .enumerate()
            .map(|(k, pw)| if self.cluster.is_active(k) { pw - self.powers[k] } else { 0.0 })
            .collect()
    }

    /// Largest `|power_k − P_k| / P_k` over active stations.
    pub fn max_relative_infeasibility(&self, p: &Precoder) -> f64 {
        self.feasibility_residual(p)
            .iter()
            .zip(&self.powers)
            .map(|(r, pk)| if *r == 0.0 { 0.0 } else { r.abs() / pk })
            .fold(0.0, f64::max)
    }

    pub fn is_on_manifold(&self, p: &Precoder) -> bool {
        self.check(p).is_ok() && self.max_relative_infeasibility(p) <= MANIFOLD_TOL
    }

    /// Differential of the power constraints applied to `xi`:
    /// component `k` is `Σ_{i∈U_k} 2 Re tr(P[i,k]^H ξ[i,k])`.
    pub fn tangency_residual(&self, p: &Precoder, xi: &TangentVector) -> Vec<f64> {
        (0..self.cluster.num_bs())
            .map(|k| {
                self.cluster
                    .served(k)
                    .iter()
                    .map(|s| 2.0 * re_inner(p.block(s.ut, s.slot), xi.block(s.ut, s.slot)))
                    .sum()
            })
            .collect()
    }

    /// Tangency residual scaled per station by `1 / (2 √P_k ‖ξ‖)`; the tangent
    /// test `≤ MANIFOLD_TOL` uses this form.
    pub fn relative_tangency(&self, p: &Precoder, xi: &TangentVector) -> f64 {
        let scale = self.norm(xi).max(f64::MIN_POSITIVE);
        self.tangency_residual(p, xi)
            .iter()
            .enumerate()
            .filter(|&(k, _)| self.cluster.is_active(k))
            .map(|(k, r)| r.abs() / (2.0 * libm::sqrt(self.powers[k]) * scale))
            .fold(0.0, f64::max)
    }

    pub fn is_tangent(&self, p: &Precoder, xi: &TangentVector) -> bool {
        self.relative_tangency(p, xi) <= MANIFOLD_TOL
    }

    /// `(1/P_k) Σ_{i∈U_k} Re tr(base[i,k]^H ξ[i,k])` for every station.
    pub fn normal_coefficients(&self, base: &Blocks, xi: &Blocks) -> Vec<f64> {
        (0..self.cluster.num_bs())
            .map(|k| {
                let served = self.cluster.served(k);
                if served.is_empty() {
                    return 0.0;
                }
                let s: f64 = served.iter().map(|s| re_inner(base.block(s.ut, s.slot), xi.block(s.ut, s.slot))).sum();
                s / self.powers[k]
            })
            .collect()
    }

    /// `ξ[i,k] − coeff_k · base[i,k]` for every block.
    fn subtract_normal(&self, xi: &Blocks, base: &Blocks, coeffs: &[f64]) -> Blocks {
        let mut out = xi.clone();
        for i in 0..self.cluster.num_ut() {
            for (n, &k) in self.cluster.slots(i).iter().enumerate() {
                let b = out.block_mut(i, n);
                *b -= base.block(i, n) * Complex64::new(coeffs[k], 0.0);
            }
        }
        out
    }

    /// Orthogonal projection of an ambient vector onto `T_p M`; also returns
    /// the per-station multipliers `μ`.
    pub fn project_tangent(&self, p: &Precoder, xi: &TangentVector) -> Result<(TangentVector, Vec<f64>)> {
        self.check(p)?;
        self.check(xi)?;
        let mu = self.normal_coefficients(p, xi);
        Ok((self.subtract_normal(xi, p, &mu), mu))
    }

    /// Per-station scales `γ_k = √(P_k / ‖stack_k(P + ξ)‖²)`.
    pub fn retraction_scales(&self, p: &Precoder, xi: &TangentVector) -> Result<Vec<f64>> {
        self.check(p)?;
        self.check(xi)?;
        (0..self.cluster.num_bs())
            .map(|k| {
                let served = self.cluster.served(k);
                if served.is_empty() {
                    return Ok(1.0);
                }
                let power: f64 =
                    served.iter().map(|s| frob_sq(&(p.block(s.ut, s.slot) + xi.block(s.ut, s.slot)))).sum();
                self.scale_for(k, power)
            })
            .collect()
    }

    /// `γ_k` for a candidate power at station `k`.
    pub fn scale_for(&self, k: usize, candidate_power: f64) -> Result<f64> {
        if !candidate_power.is_finite() || candidate_power < DEGENERATE_POWER {
            return Err(Error::DegenerateRetraction { bs: k, power: candidate_power });
        }
        Ok(libm::sqrt(self.powers[k] / candidate_power))
    }

    /// Blockwise `γ_k (P[i,k] + α ξ[i,k])`.
    pub fn scaled_step(&self, p: &Precoder, xi: &TangentVector, alpha: f64, gammas: &[f64]) -> Precoder {
        let mut out = p.clone();
        for i in 0..self.cluster.num_ut() {
            for (n, &k) in self.cluster.slots(i).iter().enumerate() {
                let b = out.block_mut(i, n);
                *b += xi.block(i, n) * Complex64::new(alpha, 0.0);
                *b *= Complex64::new(gammas[k], 0.0);
            }
        }
        out
    }

    /// Retraction by per-station power normalization; returns the new point
    /// and the scales `γ`.
    pub fn retract(&self, p: &Precoder, xi: &TangentVector) -> Result<(Precoder, Vec<f64>)> {
        let gammas = self.retraction_scales(p, xi)?;
        Ok((self.scaled_step(p, xi, 1.0, &gammas), gammas))
    }

    /// Pushes an arbitrary ambient point onto the manifold by the same
    /// per-station normalization the retraction uses.
    pub fn normalize(&self, candidate: &Blocks) -> Result<Precoder> {
        let zero = self.zeros();
        self.retract(&zero, candidate).map(|(p, _)| p)
    }

    /// Vector transport to `T_{p_new} M` by projection at the destination;
    /// returns the transported vector and the multipliers `ρ`.
    pub fn transport(&self, _p: &Precoder, p_new: &Precoder, xi: &TangentVector) -> Result<(TangentVector, Vec<f64>)> {
        self.project_tangent(p_new, xi)
    }

    /// A seeded random point on the manifold (i.i.d. complex Gaussian blocks,
    /// normalized per station). Degenerate draws are redrawn.
    pub fn random_point(&self, seed: u64) -> Precoder {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let sample = random_blocks(&self.cluster, self.mt, &self.streams, &mut rng);
            if let Ok(p) = self.normalize(&sample) {
                return p;
            }
        }
    }
}

/// i.i.d. `CN(0, 1)` blocks in the given layout.
pub fn random_blocks<R: rand::Rng>(cluster: &ClusterMap, mt: usize, streams: &[usize], rng: &mut R) -> Blocks {
    let per_ut = (0..cluster.num_ut())
        .map(|i| {
            cluster
                .slots(i)
                .iter()
                .map(|_| {
                    CMat::from_fn(mt, streams[i], |_, _| {
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = StandardNormal.sample(rng);
                        Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
                    })
                })
                .collect()
        })
        .collect();
    Blocks::from_blocks(per_ut)
}
