//! Network topology: channel realizations, user-centric serving clusters and
//! the index maps that stand in for the 0/1 selection matrices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blocks::Blocks;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::linalg::{frob_sq, CMat};

/// Channel blocks `H[i,k]` (`Mr × Mt`) for every user `i` and base station `k`,
/// plus the large-scale gain of each link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    num_bs: usize,
    num_ut: usize,
    mt: usize,
    mr: usize,
    blocks: Vec<CMat>,
    gains: Vec<f64>,
}

impl ChannelSet {
    /// `blocks` and `gains` are indexed user-major: entry `i * num_bs + k`.
    pub fn new(num_bs: usize, num_ut: usize, mt: usize, mr: usize, blocks: Vec<CMat>, gains: Vec<f64>) -> Result<Self> {
        let n = num_bs * num_ut;
        if blocks.len() != n || gains.len() != n {
            return Err(Error::Dimension(format!(
                "{} blocks and {} gains for {num_ut} users x {num_bs} base stations",
                blocks.len(),
                gains.len()
            )));
        }
        if let Some(b) = blocks.iter().position(|h| h.shape() != (mr, mt)) {
            return Err(Error::Dimension(format!("channel block {b} has shape {:?}", blocks[b].shape())));
        }
        if blocks.iter().any(|h| h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Numerical("non-finite channel entry".into()));
        }
        if gains.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
            return Err(Error::Config("large-scale gains must be finite and nonnegative".into()));
        }
        Ok(Self { num_bs, num_ut, mt, mr, blocks, gains })
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_ut(&self) -> usize {
        self.num_ut
    }

    pub fn mt(&self) -> usize {
        self.mt
    }

    pub fn mr(&self) -> usize {
        self.mr
    }

    pub fn block(&self, ut: usize, bs: usize) -> &CMat {
        &self.blocks[ut * self.num_bs + bs]
    }

    pub fn gain(&self, ut: usize, bs: usize) -> f64 {
        self.gains[ut * self.num_bs + bs]
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }
}

fn bs_positions(num_bs: usize, radius: f64) -> Vec<(f64, f64)> {
    if num_bs == 1 {
        return vec![(0.0, 0.0)];
    }
    (0..num_bs)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / num_bs as f64;
            (0.5 * radius * libm::cos(theta), 0.5 * radius * libm::sin(theta))
        })
        .collect()
}

/// Draws one channel realization.
///
/// User positions are uniform in the disc, gains follow the layout's
/// log-distance law and every entry of `H[i,k]` is circularly-symmetric
/// complex Gaussian with variance `gain(i,k)`.
pub fn generate_channels(config: &NetworkConfig, seed: u64) -> Result<ChannelSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = &config.layout;
    let bs = bs_positions(config.num_bs, layout.cell_radius);
    let ref_gain = libm::pow(10.0, layout.ref_gain_db / 10.0);

    let mut gains = Vec::with_capacity(config.num_ut * config.num_bs);
    for _ in 0..config.num_ut {
        let r = layout.cell_radius * libm::sqrt(rng.random::<f64>());
        let theta = 2.0 * PI * rng.random::<f64>();
        let (x, y) = (r * libm::cos(theta), r * libm::sin(theta));
        for &(bx, by) in &bs {
            let dist = libm::hypot(x - bx, y - by);
            gains.push(ref_gain * libm::pow(1.0 + dist / layout.ref_distance, -layout.pathloss_exponent));
        }
    }

    let blocks = gains
        .iter()
        .map(|&g| {
            let s = libm::sqrt(g / 2.0);
            CMat::from_fn(config.mr, config.mt, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
        })
        .collect();
    ChannelSet::new(config.num_bs, config.num_ut, config.mt, config.mr, blocks, gains)
}

/// One member of a served group: user `ut` with its block at `slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Served {
    pub ut: usize,
    pub slot: usize,
}

/// Serving clusters per user and the dual served groups per base station.
///
/// `serving(i)` keeps the ranking order used to form the cluster. Blocks are
/// stored in ascending base-station order (`slots(i)`), so two maps holding
/// the same sets produce identical arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterMap {
    num_bs: usize,
    serving: Vec<Vec<usize>>,
    slots: Vec<Vec<usize>>,
    served: Vec<Vec<Served>>,
}

impl ClusterMap {
    /// Builds a map from ranked serving lists. Every list must have the same
    /// length, no duplicates and in-range indices.
    pub fn from_serving(num_bs: usize, serving: Vec<Vec<usize>>) -> Result<Self> {
        let size = serving.first().map_or(0, Vec::len);
        if size == 0 || size > num_bs {
            return Err(Error::Config(format!("cluster size {size} outside 1..={num_bs}")));
        }
        let mut slots = Vec::with_capacity(serving.len());
        for (i, list) in serving.iter().enumerate() {
            if list.len() != size {
                return Err(Error::Config(format!("user {i} has {} serving stations, expected {size}", list.len())));
            }
            let mut sorted = list.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) || sorted.last().is_some_and(|&k| k >= num_bs) {
                return Err(Error::Config(format!("user {i} has an invalid serving list {list:?}")));
            }
            slots.push(sorted);
        }
        let mut served = vec![Vec::new(); num_bs];
        for (ut, row) in slots.iter().enumerate() {
            for (slot, &k) in row.iter().enumerate() {
                served[k].push(Served { ut, slot });
            }
        }
        Ok(Self { num_bs, serving, slots, served })
    }

    /// Every user served by every base station (conventional network MIMO).
    pub fn conventional(num_bs: usize, num_ut: usize) -> Self {
        Self::from_serving(num_bs, vec![(0..num_bs).collect(); num_ut]).expect("full clusters are valid")
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_ut(&self) -> usize {
        self.serving.len()
    }

    pub fn cluster_size(&self) -> usize {
        self.serving[0].len()
    }

    /// Serving stations of `ut` in ranking order.
    pub fn serving(&self, ut: usize) -> &[usize] {
        &self.serving[ut]
    }

    /// Serving stations of `ut` in block-storage order (ascending).
    pub fn slots(&self, ut: usize) -> &[usize] {
        &self.slots[ut]
    }

    pub fn served(&self, bs: usize) -> &[Served] {
        &self.served[bs]
    }

    pub fn is_active(&self, bs: usize) -> bool {
        !self.served[bs].is_empty()
    }

    /// Slot of `bs` in the cluster of `ut`, if it serves that user.
    pub fn slot_of(&self, ut: usize, bs: usize) -> Option<usize> {
        self.slots[ut].binary_search(&bs).ok()
    }
}

/// Ranks base stations per user by large-scale gain (then channel energy, then
/// index) and keeps the best `cluster_size`.
pub fn select_clusters(channels: &ChannelSet, cluster_size: usize) -> Result<ClusterMap> {
    let b = channels.num_bs();
    if cluster_size == 0 || cluster_size > b {
        return Err(Error::Config(format!("cluster size {cluster_size} outside 1..={b}")));
    }
    let serving = (0..channels.num_ut())
        .map(|i| {
            let energy: Vec<f64> = (0..b).map(|k| frob_sq(channels.block(i, k))).collect();
            let mut order: Vec<usize> = (0..b).collect();
            order.sort_by(|&x, &y| {
                channels
                    .gain(i, y)
                    .total_cmp(&channels.gain(i, x))
                    .then(energy[y].total_cmp(&energy[x]))
                    .then(x.cmp(&y))
            });
            order.truncate(cluster_size);
            order
        })
        .collect();
    ClusterMap::from_serving(b, serving)
}

/// Scatters the per-cluster blocks of `ut` into the full `B·Mt × d` stack;
/// rows of non-serving stations are zero.
pub fn embed(blocks: &[CMat], cluster: &ClusterMap, ut: usize) -> Result<CMat> {
    let slots = cluster.slots(ut);
    if blocks.len() != slots.len() || blocks.is_empty() {
        return Err(Error::Dimension(format!("{} blocks for a cluster of {}", blocks.len(), slots.len())));
    }
    let (mt, d) = blocks[0].shape();
    if blocks.iter().any(|b| b.shape() != (mt, d)) {
        return Err(Error::Dimension("blocks of one user must share a shape".into()));
    }
    let mut full = CMat::zeros(cluster.num_bs() * mt, d);
    for (b, &k) in blocks.iter().zip(slots) {
        full.view_mut((k * mt, 0), (mt, d)).copy_from(b);
    }
    Ok(full)
}

/// Inverse of [`embed`]: gathers the serving row blocks of a full stack.
pub fn extract(full: &CMat, cluster: &ClusterMap, ut: usize, mt: usize) -> Result<Vec<CMat>> {
    if full.nrows() != cluster.num_bs() * mt {
        return Err(Error::Dimension(format!("stack has {} rows, expected {}", full.nrows(), cluster.num_bs() * mt)));
    }
    Ok(cluster.slots(ut).iter().map(|&k| full.view((k * mt, 0), (mt, full.ncols())).into_owned()).collect())
}

/// Transmit power of each base station, `Σ_{i served by k} ‖P[i,k]‖²`.
pub fn per_bs_power(p: &Blocks, cluster: &ClusterMap) -> Vec<f64> {
    (0..cluster.num_bs()).map(|k| cluster.served(k).iter().map(|s| frob_sq(p.block(s.ut, s.slot))).sum()).collect()
}
