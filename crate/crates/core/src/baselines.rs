//! Closed-form linear precoders, each pushed onto the power manifold by the
//! per-station normalization of the retraction.
//!
//! MRT works per block. The other precoders act per user on the channels
//! seen from that user's serving cluster: for user `i` with cluster `B_i`,
//! `G[j|i] = [H[j,k] for k ∈ B_i]` is the `Mr × |B_i|·Mt` channel from the
//! cluster's antennas to user `j`. Columns are normalized to equal power per
//! stream before the per-station normalization.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::blocks::Blocks;
use crate::error::{Error, Result};
use crate::geometry::{PowerManifold, Precoder};
use crate::linalg::{hermitian_eigen, CMat, FactorLog, HpdFactor};
use crate::network::ChannelSet;
use crate::objective::WsrProblem;

/// Relative eigenvalue threshold below which a direction counts as null.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Mrt,
    Zf,
    Mmse,
    Bd,
    Ezf,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] =
        [BaselineKind::Mrt, BaselineKind::Zf, BaselineKind::Mmse, BaselineKind::Bd, BaselineKind::Ezf];

    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Mrt => "mrt",
            BaselineKind::Zf => "zf",
            BaselineKind::Mmse => "mmse",
            BaselineKind::Bd => "bd",
            BaselineKind::Ezf => "ezf",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

/// Scales every nonzero column to unit norm.
fn unit_columns(mut m: CMat) -> CMat {
    for mut col in m.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= Complex64::new(n, 0.0);
        }
    }
    m
}

/// Replaces near-zero columns with unit vectors orthogonal to all others.
fn pad_orthonormal(mut m: CMat, weak: &[bool]) -> CMat {
    let dim = m.nrows();
    for c in (0..m.ncols()).filter(|&c| weak[c]) {
        let mut filled = false;
        for e in 0..dim {
            let mut v = CMat::zeros(dim, 1);
            v[(e, 0)] = Complex64::new(1.0, 0.0);
            for o in (0..m.ncols()).filter(|&o| o != c && (!weak[o] || o < c)) {
                let q = m.column(o).into_owned();
                let proj = q.ad_mul(&v)[(0, 0)];
                v -= q * proj;
            }
            let n = v.norm();
            if n > 1e-8 {
                m.set_column(c, &(v / Complex64::new(n, 0.0)).column(0));
                filled = true;
                break;
            }
        }
        debug_assert!(filled, "stream count never exceeds the antenna count");
    }
    m
}

/// Top-`d` eigenvectors of `G G^H` (left singular directions of `G`).
fn top_left_directions(g: &CMat, d: usize) -> CMat {
    let (_, vecs) = hermitian_eigen(&(g * g.adjoint()));
    vecs.columns(0, d).into_owned()
}

/// Matched filter per block: `H^H u_m` for the top-`d` left singular vectors
/// `u_m` of `H`, each column scaled to unit norm. Only `Mr × Mr` eigenproblems
/// are solved. Rank-deficient blocks are padded with orthonormal complements.
pub fn mrt_precoder(problem: &WsrProblem) -> Result<Precoder> {
    let manifold = problem.manifold();
    let channels = problem.channels();
    let cluster = manifold.cluster();
    let per_ut = (0..cluster.num_ut())
        .map(|i| {
            let d = manifold.streams()[i];
            cluster
                .slots(i)
                .iter()
                .map(|&k| {
                    let h = channels.block(i, k);
                    let (vals, vecs) = hermitian_eigen(&(h * h.adjoint()));
                    let top = vals[0].max(0.0);
                    let weak: Vec<bool> =
                        vals[..d].iter().map(|&s| s.is_nan() || s <= RANK_TOL * top || top == 0.0).collect();
                    let cols = unit_columns(h.ad_mul(&vecs.columns(0, d).into_owned()));
                    pad_orthonormal(cols, &weak)
                })
                .collect()
        })
        .collect();
    manifold.normalize(&Blocks::from_blocks(per_ut))
}

/// Channel from the antennas of `ut`'s serving cluster to user `to`.
fn cluster_channel(channels: &ChannelSet, manifold: &PowerManifold, ut: usize, to: usize) -> CMat {
    let slots = manifold.cluster().slots(ut);
    let (mr, mt) = (channels.mr(), channels.mt());
    let mut g = CMat::zeros(mr, slots.len() * mt);
    for (n, &k) in slots.iter().enumerate() {
        g.view_mut((0, n * mt), (mr, mt)).copy_from(channels.block(to, k));
    }
    g
}

fn vstack(parts: &[CMat]) -> CMat {
    let rows = parts.iter().map(CMat::nrows).sum();
    let cols = parts[0].ncols();
    let mut out = CMat::zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        out.view_mut((r, 0), (p.nrows(), cols)).copy_from(p);
        r += p.nrows();
    }
    out
}

/// `S^H (S S^H + δ I)⁻¹`.
fn regularized_inverse(s: &CMat, delta: f64, kind: BaselineKind) -> Result<CMat> {
    let n = s.nrows();
    let gram = s * s.adjoint() + CMat::identity(n, n) * Complex64::new(delta, 0.0);
    let fac = HpdFactor::new(gram, &mut FactorLog::default()).map_err(|_| Error::BaselineInfeasible {
        kind: kind.name(),
        reason: format!("stacked {}x{} channel is rank deficient", s.nrows(), s.ncols()),
    })?;
    Ok(fac.solve(s).adjoint())
}

/// Splits a cluster block `(|B_i|·Mt) × d` into per-slot `Mt × d` blocks.
fn split_slots(full: &CMat, mt: usize) -> Vec<CMat> {
    (0..full.nrows() / mt).map(|n| full.rows(n * mt, mt).into_owned()).collect()
}

/// Orthonormal basis of the null space of `s` (columns), from the
/// eigen-decomposition of `s^H s`.
fn null_space(s: &CMat) -> CMat {
    let n = s.ncols();
    let (vals, vecs) = hermitian_eigen(&s.ad_mul(s));
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let rank = vals.iter().filter(|&&v| v > RANK_TOL * top && top > 0.0).count();
    vecs.columns(rank, n - rank).into_owned()
}

/// ZF, MMSE, BD or EZF precoder (MRT is delegated to [`mrt_precoder`]).
pub fn linear_baseline(kind: BaselineKind, problem: &WsrProblem) -> Result<Precoder> {
    if kind == BaselineKind::Mrt {
        return mrt_precoder(problem);
    }
    let manifold = problem.manifold();
    let channels = problem.channels();
    let cluster = manifold.cluster();
    let u = cluster.num_ut();
    let mt = channels.mt();
    let streams = manifold.streams();
    let total_streams: usize = streams.iter().sum();

    // Receive directions of every user over its own cluster channel.
    let combiners: Vec<CMat> =
        (0..u).map(|j| top_left_directions(&cluster_channel(channels, manifold, j, j), streams[j])).collect();

    let mut per_ut = Vec::with_capacity(u);
    for i in 0..u {
        let g: Vec<CMat> = (0..u).map(|j| cluster_channel(channels, manifold, i, j)).collect();
        let width = g[i].ncols();
        let infeasible = |need: usize| Error::BaselineInfeasible {
            kind: kind.name(),
            reason: format!("user {i}: {need} constraints for {width} transmit dimensions"),
        };
        let precoder = match kind {
            BaselineKind::Zf | BaselineKind::Mmse => {
                let rows = u * channels.mr();
                let delta = if kind == BaselineKind::Zf {
                    if rows > width {
                        return Err(infeasible(rows));
                    }
                    0.0
                } else {
                    let budget: f64 = cluster.slots(i).iter().map(|&k| manifold.powers()[k]).sum();
                    problem.noise_power() * total_streams as f64 / budget
                };
                let x = regularized_inverse(&vstack(&g), delta, kind)?;
                let own = x.columns(i * channels.mr(), channels.mr()).into_owned();
                &own * &combiners[i]
            }
            BaselineKind::Ezf => {
                if total_streams > width {
                    return Err(infeasible(total_streams));
                }
                let rows: Vec<CMat> = (0..u).map(|j| combiners[j].ad_mul(&g[j])).collect();
                let x = regularized_inverse(&vstack(&rows), 0.0, kind)?;
                let offset: usize = streams[..i].iter().sum();
                x.columns(offset, streams[i]).into_owned()
            }
            BaselineKind::Bd => {
                let basis = if u == 1 {
                    CMat::identity(width, width)
                } else {
                    let others: Vec<CMat> = (0..u).filter(|&j| j != i).map(|j| g[j].clone()).collect();
                    null_space(&vstack(&others))
                };
                if basis.ncols() < streams[i] {
                    return Err(infeasible(width - basis.ncols() + streams[i]));
                }
                let eff = &g[i] * &basis;
                let (_, right) = hermitian_eigen(&eff.ad_mul(&eff));
                &basis * right.columns(0, streams[i])
            }
            BaselineKind::Mrt => unreachable!(),
        };
        per_ut.push(split_slots(&unit_columns(precoder), mt));
    }
    manifold.normalize(&Blocks::from_blocks(per_ut)).map_err(|e| match e {
        Error::DegenerateRetraction { bs, .. } => {
            Error::BaselineInfeasible { kind: kind.name(), reason: format!("base station {bs} receives no power") }
        }
        other => other,
    })
}
