//! Dense symmetric kernels: eigendecomposition, shifted solves and
//! minimum-norm least squares.
//!
//! Everything here is a pure function of its inputs. Matrices are
//! `nalgebra::DMatrix<f64>`; the [`SymMatrix`] newtype marks the ones that
//! are known to be exactly symmetric.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Default relative singular-value cutoff for pseudo-inverses.
pub const DEFAULT_PINV_TOL: f64 = 1e-12;

/// A square matrix whose stored entries satisfy `a[(i, j)] == a[(j, i)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps `m` after checking that it is square, non-empty and exactly
    /// symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square(&m)?;
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::arg(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SymMatrix(m))
    }

    /// Replaces `m` by `(m + m^T) / 2`.
    pub fn symmetrize(mut m: DMatrix<f64>) -> Result<Self> {
        check_square(&m)?;
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(SymMatrix(m))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// `x^T x` for an `n x p` matrix.
    pub fn gram(x: &DMatrix<f64>) -> Self {
        let g = x.transpose() * x;
        SymMatrix::symmetrize(g).expect("gram matrix is square")
    }

    /// `x x^T` for an `n x p` matrix.
    pub fn kernel(x: &DMatrix<f64>) -> Self {
        let k = x * x.transpose();
        SymMatrix::symmetrize(k).expect("kernel matrix is square")
    }

    /// `v diag(values) v^T`.
    pub fn from_eigen(values: &[f64], basis: &DMatrix<f64>) -> Self {
        let mut scaled = basis.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        SymMatrix::symmetrize(scaled * basis.transpose()).expect("square")
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() == 0 {
        return Err(Error::arg("matrix must have dimension >= 1"));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            what: "square matrix columns",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    Ok(())
}

/// Eigenvalues in descending order with the matching orthonormal
/// eigenvectors stored as columns of `basis`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub eigenvalues: DVector<f64>,
    pub basis: DMatrix<f64>,
}

impl EigenPair {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `basis * diag(f(eigenvalues)) * basis^T`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&v| f(v)).collect();
        SymMatrix::from_eigen(&values, &self.basis)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|v| v)
    }
}

/// Symmetric eigendecomposition, eigenvalues sorted descending.
pub fn sym_eig(a: &SymMatrix) -> Result<EigenPair> {
    let n = a.dim();
    if a.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    let max_iter = 1000 + 100 * n;
    let eig = SymmetricEigen::try_new(a.0.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::EigenNotConverged { dim: n })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut basis = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        basis.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenPair { eigenvalues, basis })
}

/// Solves `(a + shift I) x = rhs` for a positive definite shifted matrix.
pub fn solve_shifted(a: &SymMatrix, shift: f64, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !(shift >= 0.0) {
        return Err(Error::arg(format!("shift must be nonnegative, got {shift}")));
    }
    if rhs.nrows() != a.dim() {
        return Err(Error::DimensionMismatch {
            what: "rhs rows",
            expected: a.dim(),
            got: rhs.nrows(),
        });
    }
    let chol = shifted_cholesky(a, shift)?;
    Ok(chol.solve(rhs))
}

pub fn solve_shifted_vec(a: &SymMatrix, shift: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let x = solve_shifted(a, shift, &DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()))?;
    Ok(x.column(0).into_owned())
}

/// `(a + shift I)^{-1}` as a dense matrix.
pub fn inverse_shifted(a: &SymMatrix, shift: f64) -> Result<DMatrix<f64>> {
    Ok(shifted_cholesky(a, shift)?.inverse())
}

fn shifted_cholesky(a: &SymMatrix, shift: f64) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let mut m = a.0.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += shift;
    }
    // pivots at roundoff level mean the matrix is numerically singular
    let floor = m.diagonal().amax() * f64::EPSILON * m.nrows() as f64;
    match m.clone().cholesky() {
        Some(c) if c.l_dirty().diagonal().iter().all(|&v| v * v > floor) => Ok(c),
        _ => {
            let min_eigenvalue = sym_eig(&SymMatrix(m))
                .map(|e| e.eigenvalues[e.dim() - 1])
                .unwrap_or(f64::NAN);
            Err(Error::NotPositiveDefinite { min_eigenvalue })
        }
    }
}

/// The minimum-norm least-squares operator of a design matrix.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    /// `p x n` matrix mapping responses to the minimum-norm coefficients.
    pub matrix: DMatrix<f64>,
    /// Number of singular values kept.
    pub rank: usize,
}

/// Moore-Penrose pseudo-inverse of an `n x p` design, computed from the
/// eigendecomposition of the smaller of `X^T X` and `X X^T`.
///
/// Singular values below `tol * s_max` are treated as zero. Through a Gram
/// matrix, singular values below `sqrt(k * eps) * s_max` (k the Gram size)
/// cannot be resolved, so `tol` is raised to that floor.
pub fn pseudo_inverse(design: &DMatrix<f64>, tol: f64) -> Result<PseudoInverse> {
    let (n, p) = design.shape();
    if n == 0 || p == 0 {
        return Err(Error::arg("design must be non-empty"));
    }
    if !(tol >= 0.0) {
        return Err(Error::arg(format!("tolerance must be nonnegative, got {tol}")));
    }
    let tall = n >= p;
    let gram = if tall {
        SymMatrix::gram(design)
    } else {
        SymMatrix::kernel(design)
    };
    let k = gram.dim();
    let eig = sym_eig(&gram)?;
    let top = eig.eigenvalues[0];
    if !(top > 0.0) {
        return Ok(PseudoInverse {
            matrix: DMatrix::zeros(p, n),
            rank: 0,
        });
    }
    let rel = tol.max((k as f64 * f64::EPSILON).sqrt());
    let cut = rel * rel * top;
    let rank = eig.eigenvalues.iter().take_while(|&&l| l > cut).count();

    // basis_r * diag(1/l) * basis_r^T, then composed with the design.
    let basis_r = eig.basis.columns(0, rank);
    let mut scaled = basis_r.clone_owned();
    for j in 0..rank {
        scaled.column_mut(j).scale_mut(1.0 / eig.eigenvalues[j]);
    }
    let matrix = if tall {
        // (X^T X)^+ X^T
        let inv = scaled * basis_r.transpose();
        inv * design.transpose()
    } else {
        // X^T (X X^T)^+
        let left = design.transpose() * scaled;
        left * basis_r.transpose()
    };
    Ok(PseudoInverse { matrix, rank })
}

/// Minimum Euclidean norm minimiser of `|y - design w|^2`.
///
/// An all-zero design yields the zero vector.
pub fn min_norm_fit(design: &DMatrix<f64>, y: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    if y.len() != design.nrows() {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: design.nrows(),
            got: y.len(),
        });
    }
    Ok(pseudo_inverse(design, tol)?.matrix * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_spd(n: usize, seed: u64) -> SymMatrix {
        let x = random_matrix(n + 3, n, seed);
        SymMatrix::gram(&x)
    }

    #[test]
    fn eig_identity() {
        let e = sym_eig(&SymMatrix::identity(3)).unwrap();
        for v in e.eigenvalues.iter() {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let g = e.basis.transpose() * &e.basis;
        assert!((g - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn eig_rotated_diag() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = DMatrix::from_row_slice(2, 2, &[h, -h, h, h]);
        let a = SymMatrix::from_eigen(&[2.0, 0.0], &r);
        let e = sym_eig(&a).unwrap();
        assert!((e.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!(e.eigenvalues[1].abs() < 1e-14);
        let v = e.basis.column(0);
        assert!((v[0].abs() - h).abs() < 1e-12 && (v[1].abs() - h).abs() < 1e-12);
        assert!(v[0] * v[1] > 0.0);
    }

    #[test]
    fn eig_random_reconstructs() {
        let m = random_matrix(8, 8, 3);
        let a = SymMatrix::symmetrize(m).unwrap();
        let e = sym_eig(&a).unwrap();
        for w in e.eigenvalues.as_slice().windows(2) {
            assert!(w[0] >= w[1]);
        }
        let rec = e.reconstruct();
        let err = (rec.as_matrix() - a.as_matrix()).norm() / a.as_matrix().norm();
        assert!(err <= 1e-8, "reconstruction error {err}");
        let g = e.basis.transpose() * &e.basis;
        assert!((g - DMatrix::identity(8, 8)).amax() <= 1e-10);
    }

    #[test]
    fn eig_rejects_nan() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 0)] = f64::NAN;
        let a = SymMatrix::new(m).unwrap();
        assert!(sym_eig(&a).is_err());
    }

    #[test]
    fn symmetric_check() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.5, 1.0]);
        assert!(SymMatrix::new(m.clone()).is_err());
        assert!(SymMatrix::new(DMatrix::zeros(0, 0)).is_err());
        assert_eq!(SymMatrix::symmetrize(m).unwrap().as_matrix()[(0, 1)], 2.25);
    }

    #[test]
    fn shifted_identity() {
        let mut rhs = DMatrix::zeros(4, 1);
        rhs[(0, 0)] = 1.0;
        let x = solve_shifted(&SymMatrix::identity(4), 1.0, &rhs).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(x.rows(1, 3).amax(), 0.0);
    }

    #[test]
    fn shifted_diagonal() {
        let a = SymMatrix::from_diagonal(&[1.0, 2.0]);
        let x = solve_shifted_vec(&a, 0.0, &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shifted_random_spd_residual() {
        let a = random_spd(6, 11);
        let rhs = random_matrix(6, 3, 12);
        let x = solve_shifted(&a, 0.0, &rhs).unwrap();
        let res = (a.as_matrix() * &x - &rhs).norm();
        assert!(res <= 1e-10 * rhs.norm());
    }

    #[test]
    fn shifted_indefinite_reports_eigenvalue() {
        let a = SymMatrix::from_diagonal(&[1.0, -2.0]);
        match solve_shifted(&a, 0.5, &DMatrix::identity(2, 2)) {
            Err(Error::NotPositiveDefinite { min_eigenvalue }) => {
                assert!((min_eigenvalue + 1.5).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(solve_shifted(&SymMatrix::from_diagonal(&[1.0, 0.0]), 0.0, &DMatrix::identity(2, 2)).is_err());
        assert!(solve_shifted(&SymMatrix::identity(2), -1.0, &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn shift_moves_between_matrix_and_argument() {
        for seed in 0..10 {
            let a = random_spd(5, 100 + seed);
            let lmin = sym_eig(&a).unwrap().eigenvalues[4];
            let lam = 0.5 * lmin;
            let mut shifted = a.as_matrix().clone();
            for i in 0..5 {
                shifted[(i, i)] -= lam;
            }
            let shifted = SymMatrix::new(shifted).unwrap();
            let rhs = random_matrix(5, 2, 200 + seed);
            let x0 = solve_shifted(&a, 0.0, &rhs).unwrap();
            let x1 = solve_shifted(&shifted, lam, &rhs).unwrap();
            assert!((&x0 - &x1).norm() <= 1e-9 * x0.norm());
        }
    }

    #[test]
    fn min_norm_identity_design() {
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let w = min_norm_fit(&DMatrix::identity(3, 3), &y, DEFAULT_PINV_TOL).unwrap();
        assert!((w - y).amax() < 1e-14);
    }

    #[test]
    fn min_norm_single_row() {
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let w = min_norm_fit(&x, &DVector::from_vec(vec![2.0]), DEFAULT_PINV_TOL).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn min_norm_zero_design() {
        let w = min_norm_fit(&DMatrix::zeros(3, 4), &DVector::from_element(3, 1.0), 1e-12).unwrap();
        assert_eq!(w, DVector::zeros(4));
    }

    #[test]
    fn min_norm_matches_svd_pseudo_inverse() {
        for (rows, cols) in [(5, 9), (9, 5)] {
            let x = random_matrix(rows, cols, 42);
            let y = DVector::from_iterator(rows, random_matrix(rows, 1, 43).iter().copied());
            let w = min_norm_fit(&x, &y, DEFAULT_PINV_TOL).unwrap();
            let oracle = x.clone().pseudo_inverse(1e-14).unwrap() * &y;
            assert!((&w - &oracle).norm() <= 1e-8 * oracle.norm());
        }
    }

    #[test]
    fn min_norm_normal_equations_and_row_space() {
        // rank-deficient tall design: 7 x 5 of rank 3
        let x = random_matrix(7, 3, 5) * random_matrix(3, 5, 6);
        let y = DVector::from_iterator(7, random_matrix(7, 1, 7).iter().copied());
        let pinv = pseudo_inverse(&x, DEFAULT_PINV_TOL).unwrap();
        assert_eq!(pinv.rank, 3);
        let w = &pinv.matrix * &y;
        let normal = x.transpose() * (&x * &w - &y);
        assert!(normal.norm() <= 1e-8 * y.norm());
        let e = sym_eig(&SymMatrix::gram(&x)).unwrap();
        for j in 3..5 {
            assert!(e.basis.column(j).dot(&w).abs() <= 1e-8 * w.norm());
        }
    }
}
