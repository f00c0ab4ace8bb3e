//! Small dense complex linear algebra used throughout the crate.
//!
//! Every Hermitian positive-definite factorization goes through
//! [`HpdFactor::new`], which records the factored dimension in a
//! [`FactorLog`]. The solver aggregates these logs so that callers can
//! assert the largest system it ever factored.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Count and largest dimension of the factorizations performed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FactorLog {
    pub count: usize,
    pub max_dim: usize,
}

impl FactorLog {
    pub fn record(&mut self, dim: usize) {
        self.count += 1;
        self.max_dim = self.max_dim.max(dim);
    }

    pub fn merge(&mut self, other: &FactorLog) {
        self.count += other.count;
        self.max_dim = self.max_dim.max(other.max_dim);
    }
}

/// Cholesky factor `A = L L^H` of a Hermitian positive-definite matrix.
///
/// Only the lower triangle of the input is read. A pivot that is not
/// strictly positive (or not finite) rejects the matrix.
#[derive(Debug, Clone)]
pub struct HpdFactor {
    l: CMat,
}

impl HpdFactor {
    pub fn new(m: CMat, log: &mut FactorLog) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err(Error::Dimension(format!("factorization of a {}x{} matrix", n, m.ncols())));
        }
        log.record(n);
        let mut l = m;
        for j in 0..n {
            let mut pivot = l[(j, j)].re;
            for k in 0..j {
                pivot -= l[(j, k)].norm_sqr();
            }
            if !(pivot > 0.0 && pivot.is_finite()) {
                return Err(Error::Numerical(format!("{n}x{n} matrix is not Hermitian positive definite")));
            }
            let d = libm::sqrt(pivot);
            l[(j, j)] = Complex64::new(d, 0.0);
            for i in j + 1..n {
                let mut s = l[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / d;
            }
            for i in 0..j {
                l[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn lower(&self) -> &CMat {
        &self.l
    }

    /// Solves `A x = b` by forward then backward substitution.
    pub fn solve(&self, b: &CMat) -> CMat {
        let n = self.dim();
        let mut x = b.clone();
        for c in 0..x.ncols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.l[(i, i)].re;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.l[(k, i)].conj() * x[(k, c)];
                }
                x[(i, c)] = s / self.l[(i, i)].re;
            }
        }
        x
    }

    pub fn inverse(&self) -> CMat {
        let n = self.dim();
        hermitize(&self.solve(&CMat::identity(n, n)))
    }

    /// Natural-log determinant, `2 Σ ln L_kk`.
    pub fn logdet(&self) -> f64 {
        (0..self.dim()).map(|k| 2.0 * libm::log(self.l[(k, k)].re)).sum()
    }
}

/// Real inner product `Re tr(a^H b)`.
pub fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn frob_sq(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Hermitian part `(m + m^H) / 2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order; column `k` of the returned matrix pairs with value `k`.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Largest relative entrywise deviation `‖a − b‖_F / max(‖b‖_F, floor)`.
pub fn rel_diff(a: &CMat, b: &CMat, floor: f64) -> f64 {
    libm::sqrt(frob_sq(&(a - b))) / libm::sqrt(frob_sq(b)).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn logdet_of_diagonal() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![c(2.0, 0.0), c(3.0, 0.0)]));
        let mut log = FactorLog::default();
        let f = HpdFactor::new(m, &mut log).unwrap();
        assert!((f.logdet() - libm::log(6.0)).abs() < 1e-14);
        assert_eq!(log, FactorLog { count: 1, max_dim: 2 });
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        let mut log = FactorLog::default();
        assert!(matches!(HpdFactor::new(m, &mut log), Err(Error::Numerical(_))));
    }

    #[test]
    fn solve_and_inverse_reconstruct() {
        let a = CMat::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.5),
                c(0.2, -1.0),
                c(0.0, 0.3),
                c(-0.4, 0.1),
                c(2.0, 0.0),
                c(0.5, 0.5),
                c(0.3, 0.0),
                c(0.1, -0.2),
                c(1.5, 1.0),
            ],
        );
        let m = &a * a.adjoint() + CMat::identity(3, 3);
        let f = HpdFactor::new(m.clone(), &mut FactorLog::default()).unwrap();
        assert!(rel_diff(&(f.lower() * f.lower().adjoint()), &m, 1.0) < 1e-14);
        let b = CMat::from_row_slice(3, 1, &[c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0)]);
        assert!(rel_diff(&(&m * f.solve(&b)), &b, 1.0) < 1e-13);
        assert!(rel_diff(&(&m * f.inverse()), &CMat::identity(3, 3), 1.0) < 1e-13);
        let det = m.clone().determinant().re;
        assert!((f.logdet() - libm::log(det)).abs() < 1e-12);
    }

    #[test]
    fn eigen_sorted_descending_and_reconstructs() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&m);
        assert!((vals[0] - 3.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(2, vals.iter().map(|&v| c(v, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!(rel_diff(&back, &m, 1.0) < 1e-12);
    }

    #[test]
    fn re_inner_matches_trace() {
        let a = CMat::from_row_slice(2, 1, &[c(1.0, 2.0), c(-0.5, 0.25)]);
        let b = CMat::from_row_slice(2, 1, &[c(0.3, -1.0), c(2.0, 1.0)]);
        let tr = (a.adjoint() * &b)[(0, 0)].re;
        assert!((re_inner(&a, &b) - tr).abs() < 1e-15);
    }
}
