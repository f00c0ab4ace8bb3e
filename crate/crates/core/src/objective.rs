//! Weighted-sum-rate objective, its Euclidean and Riemannian gradients, and
//! the cached effective channels that keep iterations cheap.
//!
//! The cache stores `V[i][j][n] = H[i, k] P[j, n]` for every receiving user
//! `i`, transmitting user `j` and slot `n` of `j`'s cluster (`k` the station
//! at that slot), together with the sums `V[i][j] = Σ_n V[i][j][n]`. Rates,
//! interference covariances and gradients only need these `Mr × d_j` blocks
//! and `H`; the only systems ever factored are `Mr × Mr` covariances and
//! `d_i × d_i` matrices.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::blocks::Blocks;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::geometry::{PowerManifold, Precoder, TangentVector};
use crate::linalg::{frob_sq, re_inner, CMat, FactorLog, HpdFactor};
use crate::network::{ChannelSet, ClusterMap};

/// Products of every channel with every block of a precoder (or direction):
/// `single[i][j][n] = H[i, slot_j(n)] X[j, n]` and `sum[i][j] = Σ_n single[i][j][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    single: Vec<Vec<Vec<CMat>>>,
    sum: Vec<Vec<CMat>>,
}

impl EffectiveChannels {
    pub fn compute(channels: &ChannelSet, cluster: &ClusterMap, x: &Blocks) -> Self {
        let u = cluster.num_ut();
        let single: Vec<Vec<Vec<CMat>>> = (0..u)
            .map(|i| {
                (0..u)
                    .map(|j| {
                        cluster
                            .slots(j)
                            .iter()
                            .enumerate()
                            .map(|(n, &k)| channels.block(i, k) * x.block(j, n))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let sum = Self::sums(&single);
        Self { single, sum }
    }

    fn sums(single: &[Vec<Vec<CMat>>]) -> Vec<Vec<CMat>> {
        single
            .iter()
            .map(|row| {
                row.iter()
                    .map(|parts| {
                        let mut acc = parts[0].clone();
                        for p in &parts[1..] {
                            acc += p;
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Effective channels of the retracted point `γ_k (X + α D)` from those of
    /// `X` and `D`, without touching any channel matrix.
    pub fn step(&self, dir: &EffectiveChannels, cluster: &ClusterMap, alpha: f64, gammas: &[f64]) -> Self {
        let a = Complex64::new(alpha, 0.0);
        let single: Vec<Vec<Vec<CMat>>> = self
            .single
            .iter()
            .zip(&dir.single)
            .map(|(row, drow)| {
                row.iter()
                    .zip(drow)
                    .enumerate()
                    .map(|(j, (parts, dparts))| {
                        parts
                            .iter()
                            .zip(dparts)
                            .zip(cluster.slots(j))
                            .map(|((v, u), &k)| (v + u * a) * Complex64::new(gammas[k], 0.0))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let sum = Self::sums(&single);
        Self { single, sum }
    }

    pub fn single(&self, i: usize, j: usize, slot: usize) -> &CMat {
        &self.single[i][j][slot]
    }

    pub fn sum(&self, i: usize, j: usize) -> &CMat {
        &self.sum[i][j]
    }

    /// Largest `‖a − b‖_F / max(‖b‖_F, floor)` over all single and summed blocks.
    pub fn max_rel_diff(&self, other: &EffectiveChannels, floor: f64) -> f64 {
        let singles = self.single.iter().flatten().flatten().zip(other.single.iter().flatten().flatten());
        let sums = self.sum.iter().flatten().zip(other.sum.iter().flatten());
        singles.chain(sums).map(|(a, b)| crate::linalg::rel_diff(a, b, floor)).fold(0.0, f64::max)
    }
}

/// Everything the objective and gradient need at one point.
#[derive(Debug, Clone)]
pub struct ObjectiveCache {
    v: EffectiveChannels,
    /// Interference-plus-noise covariances `R_i`.
    r: Vec<CMat>,
    /// `R_i⁻¹ V[i][i]`.
    r_inv_v: Vec<CMat>,
    /// `C_i = (I + V[i][i]^H R_i⁻¹ V[i][i])⁻¹`.
    c: Vec<CMat>,
    rates: Vec<f64>,
    factors: FactorLog,
}

impl ObjectiveCache {
    /// Derives covariances, rates and `C_i` from effective channels.
    pub fn from_effective(v: EffectiveChannels, noise_power: f64) -> Result<Self> {
        let u = v.sum.len();
        let mut factors = FactorLog::default();
        let (mut r, mut r_inv_v, mut c, mut rates) =
            (Vec::with_capacity(u), Vec::with_capacity(u), Vec::with_capacity(u), Vec::with_capacity(u));
        for i in 0..u {
            let vii = v.sum(i, i);
            let mr = vii.nrows();
            let mut ri = CMat::identity(mr, mr) * Complex64::new(noise_power, 0.0);
            for j in (0..u).filter(|&j| j != i) {
                let vij = v.sum(i, j);
                ri += vij * vij.adjoint();
            }
            let r_fac = HpdFactor::new(ri.clone(), &mut factors)?;
            let signal = &ri + vii * vii.adjoint();
            let s_fac = HpdFactor::new(signal, &mut factors)?;
            let rate = s_fac.logdet() - r_fac.logdet();
            if !rate.is_finite() {
                return Err(Error::Numerical(format!("user {i} rate is not finite")));
            }

            let a = r_fac.solve(vii);
            let d = vii.ncols();
            let gram = CMat::identity(d, d) + vii.ad_mul(&a);
            let ci = HpdFactor::new(crate::linalg::hermitize(&gram), &mut factors)?.inverse();

            r.push(ri);
            r_inv_v.push(a);
            c.push(ci);
            rates.push(rate.max(0.0));
        }
        Ok(Self { v, r, r_inv_v, c, rates, factors })
    }

    pub fn effective(&self) -> &EffectiveChannels {
        &self.v
    }

    pub fn covariance(&self, i: usize) -> &CMat {
        &self.r[i]
    }

    pub fn c_matrix(&self, i: usize) -> &CMat {
        &self.c[i]
    }

    /// Rate of user `i` in nats: `logdet(R_i + V_ii V_ii^H) − logdet(R_i)`.
    pub fn rate(&self, i: usize) -> f64 {
        self.rates[i]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn wsr(&self, weights: &[f64]) -> f64 {
        self.rates.iter().zip(weights).map(|(r, w)| r * w).sum()
    }

    /// The minimization objective `f = −WSR`.
    pub fn objective(&self, weights: &[f64]) -> f64 {
        -self.wsr(weights)
    }

    pub fn factors(&self) -> FactorLog {
        self.factors
    }
}

/// Per-station coefficients of the candidate power along a search line:
/// `‖stack_k(P + αη)‖² = p0 + α p1 + α² p2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinePowers {
    coeffs: Vec<[f64; 3]>,
}

impl LinePowers {
    pub fn new(manifold: &PowerManifold, p: &Precoder, eta: &TangentVector) -> Self {
        let cluster = manifold.cluster();
        let coeffs = (0..cluster.num_bs())
            .map(|k| {
                cluster.served(k).iter().fold([0.0; 3], |acc, s| {
                    let (pb, eb) = (p.block(s.ut, s.slot), eta.block(s.ut, s.slot));
                    [acc[0] + frob_sq(pb), acc[1] + 2.0 * re_inner(pb, eb), acc[2] + frob_sq(eb)]
                })
            })
            .collect();
        Self { coeffs }
    }

    pub fn at(&self, k: usize, alpha: f64) -> f64 {
        let [a, b, c] = self.coeffs[k];
        a + alpha * (b + alpha * c)
    }

    /// Retraction scales `γ_k(α)`.
    pub fn gammas(&self, manifold: &PowerManifold, alpha: f64) -> Result<Vec<f64>> {
        (0..self.coeffs.len())
            .map(|k| if manifold.cluster().is_active(k) { manifold.scale_for(k, self.at(k, alpha)) } else { Ok(1.0) })
            .collect()
    }
}

/// Objective value and cache at a trial step of the line search.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub alpha: f64,
    pub gammas: Vec<f64>,
    pub objective: f64,
    pub cache: ObjectiveCache,
}

/// A fixed channel realization with its constraint manifold, noise and weights.
#[derive(Debug, Clone)]
pub struct WsrProblem {
    channels: ChannelSet,
    manifold: PowerManifold,
    noise_power: f64,
    weights: Vec<f64>,
}

impl WsrProblem {
    pub fn new(channels: ChannelSet, manifold: PowerManifold, noise_power: f64, weights: Vec<f64>) -> Result<Self> {
        let cluster = manifold.cluster();
        if channels.num_bs() != cluster.num_bs() || channels.num_ut() != cluster.num_ut() {
            return Err(Error::Dimension(format!(
                "channels for {}x{} but clusters for {}x{}",
                channels.num_ut(),
                channels.num_bs(),
                cluster.num_ut(),
                cluster.num_bs()
            )));
        }
        if channels.mt() != manifold.mt() {
            return Err(Error::Dimension("transmit antenna counts differ".into()));
        }
        if manifold.streams().iter().any(|&d| d > channels.mr()) {
            return Err(Error::Config("more streams than receive antennas".into()));
        }
        if weights.len() != cluster.num_ut() || weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::Config("one nonnegative weight per user required".into()));
        }
        if noise_power.is_nan() || noise_power <= 0.0 {
            return Err(Error::Config(format!("noise power {noise_power} must be positive")));
        }
        Ok(Self { channels, manifold, noise_power, weights })
    }

    /// Builds the problem for `config` with the given channels and clusters.
    pub fn from_config(config: &NetworkConfig, channels: ChannelSet, cluster: ClusterMap) -> Result<Self> {
        config.validate()?;
        let manifold = PowerManifold::new(cluster, config.bs_power.clone(), config.mt, config.streams.clone())?;
        Self::new(channels, manifold, config.noise_power, config.weights.clone())
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn manifold(&self) -> &PowerManifold {
        &self.manifold
    }

    pub fn cluster(&self) -> &ClusterMap {
        self.manifold.cluster()
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn build_cache(&self, p: &Precoder) -> Result<ObjectiveCache> {
        self.manifold.check(p)?;
        let v = EffectiveChannels::compute(&self.channels, self.cluster(), p);
        ObjectiveCache::from_effective(v, self.noise_power)
    }

    /// `H X` products for a search direction.
    pub fn direction_channels(&self, eta: &TangentVector) -> Result<EffectiveChannels> {
        self.manifold.check(eta)?;
        Ok(EffectiveChannels::compute(&self.channels, self.cluster(), eta))
    }

    pub fn objective(&self, p: &Precoder) -> Result<f64> {
        Ok(self.build_cache(p)?.objective(&self.weights))
    }

    pub fn wsr(&self, cache: &ObjectiveCache) -> f64 {
        cache.wsr(&self.weights)
    }

    /// Euclidean gradient of `f = −WSR` with respect to the real metric
    /// `Re tr(·^H ·)`. Block `(i, k)`:
    ///
    /// ```text
    /// −2 ( w_i H[i,k]^H R_i⁻¹ V_ii C_i
    ///      − Σ_{j≠i} w_j H[j,k]^H R_j⁻¹ V_jj C_j V_jj^H R_j⁻¹ V_ji )
    /// ```
    pub fn euclidean_gradient(&self, cache: &ObjectiveCache) -> TangentVector {
        let cluster = self.cluster();
        let u = cluster.num_ut();
        // G_j = w_j R_j⁻¹ V_jj C_j
        let g: Vec<CMat> =
            (0..u).map(|j| &cache.r_inv_v[j] * &cache.c[j] * Complex64::new(self.weights[j], 0.0)).collect();
        let per_ut = (0..u)
            .map(|i| {
                // X_ji: the Mr × d_i factor multiplying H[j,k]^H.
                let x: Vec<CMat> = (0..u)
                    .map(|j| if j == i { g[i].clone() } else { -(&g[j] * cache.r_inv_v[j].ad_mul(cache.v.sum(j, i))) })
                    .collect();
                cluster
                    .slots(i)
                    .iter()
                    .map(|&k| {
                        let mut acc = self.channels.block(i, k).ad_mul(&x[i]);
                        for (j, xj) in x.iter().enumerate().filter(|&(j, _)| j != i) {
                            acc += self.channels.block(j, k).ad_mul(xj);
                        }
                        acc * Complex64::new(-2.0, 0.0)
                    })
                    .collect()
            })
            .collect();
        Blocks::from_blocks(per_ut)
    }

    /// Projection of the Euclidean gradient onto `T_p M`; also returns the
    /// multipliers `λ`.
    pub fn riemannian_gradient(&self, p: &Precoder, egrad: &TangentVector) -> Result<(TangentVector, Vec<f64>)> {
        self.manifold.project_tangent(p, egrad)
    }

    /// `φ(α) = f(R_p(α η))` evaluated from the cached effective channels of
    /// `p` and `η`; returns the candidate cache for promotion.
    pub fn phi(
        &self,
        cache: &ObjectiveCache,
        dir: &EffectiveChannels,
        line: &LinePowers,
        alpha: f64,
    ) -> Result<Candidate> {
        let gammas = line.gammas(&self.manifold, alpha)?;
        let v = cache.v.step(dir, self.cluster(), alpha, &gammas);
        let cache = ObjectiveCache::from_effective(v, self.noise_power)?;
        Ok(Candidate { alpha, gammas, objective: cache.objective(&self.weights), cache })
    }
}
