//! Block container shared by precoders and tangent vectors.
//!
//! Entry `(i, n)` holds the `Mt × d_i` block of user `i` at slot `n` of its
//! serving cluster, where slots follow [`ClusterMap::slots`]. Points of the
//! ambient space and tangent vectors have the same layout, so one type serves
//! both roles.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{frob_sq, re_inner, CMat};
use crate::network::ClusterMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    per_ut: Vec<Vec<CMat>>,
}

impl Blocks {
    pub fn from_blocks(per_ut: Vec<Vec<CMat>>) -> Self {
        Self { per_ut }
    }

    pub fn zeros(cluster: &ClusterMap, mt: usize, streams: &[usize]) -> Self {
        let per_ut = (0..cluster.num_ut())
            .map(|i| cluster.slots(i).iter().map(|_| CMat::zeros(mt, streams[i])).collect())
            .collect();
        Self { per_ut }
    }

    pub fn num_ut(&self) -> usize {
        self.per_ut.len()
    }

    pub fn ut(&self, i: usize) -> &[CMat] {
        &self.per_ut[i]
    }

    pub fn block(&self, i: usize, slot: usize) -> &CMat {
        &self.per_ut[i][slot]
    }

    pub fn block_mut(&mut self, i: usize, slot: usize) -> &mut CMat {
        &mut self.per_ut[i][slot]
    }

    pub fn into_inner(self) -> Vec<Vec<CMat>> {
        self.per_ut
    }

    /// Iterates `(user, slot, block)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &CMat)> {
        self.per_ut.iter().enumerate().flat_map(|(i, row)| row.iter().enumerate().map(move |(n, b)| (i, n, b)))
    }

    /// Checks that the layout matches `cluster`, `mt` and `streams`.
    pub fn check_shape(&self, cluster: &ClusterMap, mt: usize, streams: &[usize]) -> Result<()> {
        if self.per_ut.len() != cluster.num_ut() {
            return Err(Error::Dimension(format!("{} user blocks for {} users", self.per_ut.len(), cluster.num_ut())));
        }
        for (i, row) in self.per_ut.iter().enumerate() {
            if row.len() != cluster.slots(i).len() {
                return Err(Error::Dimension(format!(
                    "user {i}: {} blocks for a cluster of {}",
                    row.len(),
                    cluster.slots(i).len()
                )));
            }
            for b in row {
                if b.shape() != (mt, streams[i]) {
                    return Err(Error::Dimension(format!(
                        "user {i}: block {:?}, expected {:?}",
                        b.shape(),
                        (mt, streams[i])
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn same_layout(&self, other: &Blocks) -> bool {
        self.per_ut.len() == other.per_ut.len()
            && self
                .per_ut
                .iter()
                .zip(&other.per_ut)
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.shape() == y.shape()))
    }

    pub fn ensure_same_layout(&self, other: &Blocks) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::Dimension("block layouts differ".into()))
        }
    }

    /// `Σ Re tr(a^H b)` over all blocks. Layouts must match.
    pub fn inner(&self, other: &Blocks) -> f64 {
        self.iter().zip(other.iter()).map(|((_, _, a), (_, _, b))| re_inner(a, b)).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.iter().map(|(_, _, b)| frob_sq(b)).sum()
    }

    pub fn scale(&self, a: f64) -> Blocks {
        self.map(|b| b * num_complex::Complex64::new(a, 0.0))
    }

    pub fn map(&self, mut f: impl FnMut(&CMat) -> CMat) -> Blocks {
        Blocks { per_ut: self.per_ut.iter().map(|row| row.iter().map(&mut f).collect()).collect() }
    }

    /// Blockwise combination of two equally shaped containers.
    pub fn zip_map(&self, other: &Blocks, mut f: impl FnMut(&CMat, &CMat) -> CMat) -> Blocks {
        Blocks {
            per_ut: self
                .per_ut
                .iter()
                .zip(&other.per_ut)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| f(a, b)).collect())
                .collect(),
        }
    }

    /// `a·x + b·y`.
    pub fn lincomb(a: f64, x: &Blocks, b: f64, y: &Blocks) -> Blocks {
        let (ca, cb) = (num_complex::Complex64::new(a, 0.0), num_complex::Complex64::new(b, 0.0));
        x.zip_map(y, |p, q| p * ca + q * cb)
    }

    pub fn max_abs_diff(&self, other: &Blocks) -> f64 {
        self.iter()
            .zip(other.iter())
            .flat_map(|((_, _, a), (_, _, b))| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }
}

impl Add for &Blocks {
    type Output = Blocks;
    fn add(self, rhs: &Blocks) -> Blocks {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Blocks {
    type Output = Blocks;
    fn sub(self, rhs: &Blocks) -> Blocks {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Blocks {
    type Output = Blocks;
    fn mul(self, rhs: f64) -> Blocks {
        self.scale(rhs)
    }
}

impl Neg for &Blocks {
    type Output = Blocks;
    fn neg(self) -> Blocks {
        self.map(|b| -b)
    }
}
