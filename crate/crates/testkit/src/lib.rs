//! Test oracles that recompute everything from dense matrices.
//!
//! Nothing here calls into the library's index maps, caches or factorizations:
//! the selection matrices `W_i` (`B·Mt × |B_i|·Mt`) and `Q_k` (`B·Mt × B·Mt`)
//! are materialized as 0/1 matrices, rates use LU determinants and the
//! objective is evaluated from the stacked channel of every user.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ucn_core::{Blocks, ChannelSet, ClusterMap, NetworkConfig, PowerManifold, WsrProblem};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `W_i`: identity block at (row `slots[n]`, column `n`).
pub fn selection_w(cluster: &ClusterMap, ut: usize, mt: usize) -> CMat {
    let slots = cluster.slots(ut);
    let mut w = CMat::zeros(cluster.num_bs() * mt, slots.len() * mt);
    for (n, &k) in slots.iter().enumerate() {
        for a in 0..mt {
            w[(k * mt + a, n * mt + a)] = c(1.0, 0.0);
        }
    }
    w
}

/// `Q_k`: identity on the antennas of station `k`, zero elsewhere.
pub fn selection_q(num_bs: usize, bs: usize, mt: usize) -> CMat {
    let mut q = CMat::zeros(num_bs * mt, num_bs * mt);
    for a in 0..mt {
        q[(bs * mt + a, bs * mt + a)] = c(1.0, 0.0);
    }
    q
}

/// `P_i` stacked over the slots of the user's cluster.
pub fn stacked(x: &Blocks, ut: usize) -> CMat {
    let blocks = x.ut(ut);
    let (mt, d) = blocks[0].shape();
    let mut out = CMat::zeros(blocks.len() * mt, d);
    for (n, b) in blocks.iter().enumerate() {
        out.view_mut((n * mt, 0), (mt, d)).copy_from(b);
    }
    out
}

/// `H_i = [H_{i,1}, …, H_{i,B}]`.
pub fn stacked_channel(channels: &ChannelSet, ut: usize) -> CMat {
    let (mr, mt, b) = (channels.mr(), channels.mt(), channels.num_bs());
    let mut h = CMat::zeros(mr, b * mt);
    for k in 0..b {
        h.view_mut((0, k * mt), (mr, mt)).copy_from(channels.block(ut, k));
    }
    h
}

fn re_trace(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// `tr(P_i^H W_i^H Q_k W_i P_i)` summed over users.
pub fn dense_power(cluster: &ClusterMap, p: &Blocks, mt: usize) -> Vec<f64> {
    (0..cluster.num_bs())
        .map(|k| {
            let q = selection_q(cluster.num_bs(), k, mt);
            (0..cluster.num_ut())
                .map(|i| {
                    let wp = selection_w(cluster, i, mt) * stacked(p, i);
                    re_trace(&(wp.adjoint() * &q * &wp))
                })
                .sum()
        })
        .collect()
}

/// `(1/P_k) Σ_{i∈U_k} Re tr(X_i^H W_i^H Q_k W_i ξ_i)`: the common form of the
/// projection, gradient and transport multipliers. Inactive stations give 0.
pub fn dense_multiplier(cluster: &ClusterMap, powers: &[f64], base: &Blocks, xi: &Blocks, mt: usize) -> Vec<f64> {
    (0..cluster.num_bs())
        .map(|k| {
            if !cluster.is_active(k) {
                return 0.0;
            }
            let q = selection_q(cluster.num_bs(), k, mt);
            let s: f64 = (0..cluster.num_ut())
                .map(|i| {
                    let w = selection_w(cluster, i, mt);
                    re_trace(&(stacked(base, i).adjoint() * w.adjoint() * &q * &w * stacked(xi, i)))
                })
                .sum();
            s / powers[k]
        })
        .collect()
}

/// Retraction scales from the dense power of `P + ξ`.
pub fn dense_gamma(cluster: &ClusterMap, powers: &[f64], p: &Blocks, xi: &Blocks, mt: usize) -> Vec<f64> {
    let sum = p + xi;
    dense_power(cluster, &sum, mt)
        .iter()
        .enumerate()
        .map(|(k, &pw)| if cluster.is_active(k) { (powers[k] / pw).sqrt() } else { 1.0 })
        .collect()
}

/// `V_{i,j} = H_i W_j P_j`.
pub fn dense_effective(channels: &ChannelSet, cluster: &ClusterMap, p: &Blocks, i: usize, j: usize) -> CMat {
    stacked_channel(channels, i) * selection_w(cluster, j, channels.mt()) * stacked(p, j)
}

fn ln_det(m: &CMat) -> f64 {
    m.clone().determinant().re.ln()
}

/// Rates (nats) from the full-network expressions.
pub fn dense_rates(problem: &WsrProblem, p: &Blocks) -> Vec<f64> {
    let channels = problem.channels();
    let cluster = problem.cluster();
    let u = cluster.num_ut();
    let mr = channels.mr();
    let x: Vec<CMat> = (0..u).map(|j| selection_w(cluster, j, channels.mt()) * stacked(p, j)).collect();
    (0..u)
        .map(|i| {
            let h = stacked_channel(channels, i);
            let mut r = CMat::identity(mr, mr) * c(problem.noise_power(), 0.0);
            for j in (0..u).filter(|&j| j != i) {
                r += &h * &x[j] * x[j].adjoint() * h.adjoint();
            }
            let s = &r + &h * &x[i] * x[i].adjoint() * h.adjoint();
            ln_det(&s) - ln_det(&r)
        })
        .collect()
}

pub fn dense_objective(problem: &WsrProblem, p: &Blocks) -> f64 {
    -dense_rates(problem, p).iter().zip(problem.weights()).map(|(r, w)| r * w).sum::<f64>()
}

/// Central finite-difference gradient of the dense objective over every real
/// and imaginary coordinate, arranged like the Euclidean gradient.
pub fn fd_gradient(problem: &WsrProblem, p: &Blocks, step: f64) -> Blocks {
    let mut grad = p.map(|b| CMat::zeros(b.nrows(), b.ncols()));
    let coords: Vec<(usize, usize, usize, usize)> = p
        .iter()
        .flat_map(|(i, n, b)| (0..b.nrows()).flat_map(move |r| (0..b.ncols()).map(move |cc| (i, n, r, cc))))
        .collect();
    for (i, n, r, cc) in coords {
        let mut parts = [0.0; 2];
        for (part, dir) in [c(1.0, 0.0), c(0.0, 1.0)].into_iter().enumerate() {
            let mut plus = p.clone();
            plus.block_mut(i, n)[(r, cc)] += dir * step;
            let mut minus = p.clone();
            minus.block_mut(i, n)[(r, cc)] -= dir * step;
            parts[part] = (dense_objective(problem, &plus) - dense_objective(problem, &minus)) / (2.0 * step);
        }
        grad.block_mut(i, n)[(r, cc)] = c(parts[0], parts[1]);
    }
    grad
}

/// Random cluster map with `size` distinct stations per user.
pub fn random_cluster(num_bs: usize, num_ut: usize, size: usize, rng: &mut impl Rng) -> ClusterMap {
    let serving = (0..num_ut)
        .map(|_| {
            let mut all: Vec<usize> = (0..num_bs).collect();
            for a in 0..size {
                let b = rng.random_range(a..num_bs);
                all.swap(a, b);
            }
            all.truncate(size);
            all
        })
        .collect();
    ClusterMap::from_serving(num_bs, serving).unwrap()
}

/// Unit-variance Rayleigh channels (gains all 1).
pub fn unit_channels(num_bs: usize, num_ut: usize, mt: usize, mr: usize, rng: &mut impl Rng) -> ChannelSet {
    let blocks = (0..num_bs * num_ut).map(|_| CMat::from_fn(mr, mt, |_, _| gaussian(rng))).collect();
    ChannelSet::new(num_bs, num_ut, mt, mr, blocks, vec![1.0; num_bs * num_ut]).unwrap()
}

pub fn gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random ambient vector with the layout of `like`.
pub fn random_like(like: &Blocks, rng: &mut impl Rng) -> Blocks {
    like.map(|b| CMat::from_fn(b.nrows(), b.ncols(), |_, _| gaussian(rng)))
}

/// A small random instance for property checks.
pub struct Instance {
    pub problem: WsrProblem,
    pub config: NetworkConfig,
    pub rng: ChaCha8Rng,
}

impl Instance {
    /// Random dimensions within the given caps, random clusters, unit
    /// channels, random power budgets in [0.5, 2] and noise 0.1..1.
    pub fn random(seed: u64, max_bs: usize, max_ut: usize, max_mt: usize, mr: usize, max_d: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = rng.random_range(1..=max_bs);
        let u = rng.random_range(1..=max_ut);
        let mt = rng.random_range(1..=max_mt);
        let d = rng.random_range(1..=max_d.min(mr));
        let bsc = rng.random_range(1..=b);
        let d = d.min(bsc * mt);
        let mut config = NetworkConfig::uniform(b, u, mt, mr, d, 1.0, rng.random_range(0.1..1.0), bsc);
        config.bs_power = (0..b).map(|_| rng.random_range(0.5..2.0)).collect();
        config.weights = (0..u).map(|_| rng.random_range(0.5..1.5)).collect();
        let channels = unit_channels(b, u, mt, mr, &mut rng);
        let cluster = random_cluster(b, u, bsc, &mut rng);
        let problem = WsrProblem::from_config(&config, channels, cluster).unwrap();
        Self { problem, config, rng }
    }

    pub fn manifold(&self) -> &PowerManifold {
        self.problem.manifold()
    }

    pub fn random_point(&mut self) -> Blocks {
        let seed = self.rng.random();
        self.manifold().random_point(seed)
    }

    pub fn random_ambient(&mut self) -> Blocks {
        let like = self.manifold().zeros();
        random_like(&like, &mut self.rng)
    }
}

/// Largest relative deviation between two per-station vectors.
pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(x.abs()).max(1e-300))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}
