use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::instance::ProblemInstance;
use crate::numkernel::{pseudo_inverse, solve_shifted, sym_eig, SymMatrix, DEFAULT_PINV_TOL};
use crate::{Error, Result};

/// Excess risk of one fitted estimator, averaged over the noise only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalRisk {
    pub bias: f64,
    pub variance: f64,
}

impl ConditionalRisk {
    pub fn total(&self) -> f64 {
        self.bias + self.variance
    }
}

fn check_design(inst: &ProblemInstance, x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != inst.n {
        return Err(Error::DimensionMismatch { what: "design rows", expected: inst.n, got: x.nrows() });
    }
    if x.ncols() != inst.d() {
        return Err(Error::DimensionMismatch { what: "design columns", expected: inst.d(), got: x.ncols() });
    }
    Ok(())
}

/// Risk of a linear estimator `theta_hat = L y` with `y = X theta + eps`:
/// bias `|Sigma^{1/2}(L X theta - theta)|^2`, variance `sigma^2 |Sigma^{1/2} L|_F^2`.
fn linear_estimator_risk(inst: &ProblemInstance, x: &DMatrix<f64>, l: &DMatrix<f64>) -> ConditionalRisk {
    let y0 = x * inst.theta_star();
    let resid = l * y0 - inst.theta_star();
    let bias = inst.sqrt_cov_mul_vec(&resid).norm_squared();
    let variance = inst.sigma_noise.powi(2) * inst.sqrt_cov_mul(l).norm_squared();
    ConditionalRisk { bias, variance }
}

/// Minimum-norm least squares on the projected features `X S`, mapped back
/// through `S`: `theta_hat = S (X S)^+ y`.
///
/// Fails with [`Error::RankDeficient`] when `X S` has numerical rank below
/// `min(n, m, d)`.
pub fn conditional_risk_projected(inst: &ProblemInstance, x: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<ConditionalRisk> {
    Ok(projected_parts(inst, x, s, false)?.0)
}

/// Optionally also returns `S^T Sigma S`, which the replication harness reuses for the
/// empirical `kappa_m`.
pub(crate) fn projected_parts(
    inst: &ProblemInstance,
    x: &DMatrix<f64>,
    s: &DMatrix<f64>,
    with_sketch_cov: bool,
) -> Result<(ConditionalRisk, Option<DMatrix<f64>>)> {
    check_design(inst, x)?;
    if s.nrows() != inst.d() {
        return Err(Error::DimensionMismatch { what: "projection rows", expected: inst.d(), got: s.nrows() });
    }
    let m = s.ncols();
    let g = x * s;
    let pinv = pseudo_inverse(&g, DEFAULT_PINV_TOL)?;
    let required = inst.n.min(m).min(inst.d());
    if pinv.rank < required {
        return Err(Error::RankDeficient { rank: pinv.rank, required });
    }
    let w = pinv.matrix;
    let f = inst.sqrt_cov_mul(s);
    let variance = inst.sigma_noise.powi(2) * (&f * &w).norm_squared();
    let coef = &w * (x * inst.theta_star());
    let resid = s * coef - inst.theta_star();
    let bias = inst.sqrt_cov_mul_vec(&resid).norm_squared();
    let sketch_cov = with_sketch_cov.then(|| f.transpose() * f);
    Ok((ConditionalRisk { bias, variance }, sketch_cov))
}

/// Ridge regression `(X^T X + n lambda I)^{-1} X^T y`, solved through
/// whichever of `X^T X` and `X X^T` is smaller. At `lambda = 0` this is
/// ordinary least squares for `d < n` and the minimum-norm interpolator
/// `X^T (X X^T)^{-1} y` for `d > n`; a singular system is reported as
/// [`Error::NotPositiveDefinite`].
pub fn conditional_risk_ridge(inst: &ProblemInstance, x: &DMatrix<f64>, lambda: f64) -> Result<ConditionalRisk> {
    check_design(inst, x)?;
    if !(lambda >= 0.0) {
        return Err(Error::arg(format!("lambda must be nonnegative, got {lambda}")));
    }
    let n = inst.n as f64;
    if lambda.is_infinite() {
        return Ok(ConditionalRisk { bias: inst.signal_energy(), variance: 0.0 });
    }
    let l = if inst.d() <= inst.n {
        solve_shifted(&SymMatrix::gram(x), n * lambda, &x.transpose())?
    } else {
        solve_shifted(&SymMatrix::kernel(x), n * lambda, x)?.transpose()
    };
    Ok(linear_estimator_risk(inst, x, &l))
}

/// Conditional ridge risks along a penalty path for one design, from a single
/// eigendecomposition of the smaller Gram matrix.
///
/// With `X = U diag(sqrt(l)) W^T` restricted to the numerically nonzero
/// `l`, the ridge estimator is `W diag(l / (l + n lambda)) W^T theta` plus
/// noise, so every penalty costs `O(d k)`.
#[derive(Debug, Clone)]
pub struct RidgePath {
    n: usize,
    sigma_noise: f64,
    ell: Vec<f64>,
    full_rank: bool,
    /// `Sigma^{1/2} W`.
    sw: DMatrix<f64>,
    sw_col_sq: Vec<f64>,
    /// `W^T theta`.
    u: DVector<f64>,
    /// `Sigma^{1/2} (theta - W W^T theta)`.
    null_part: DVector<f64>,
}

impl RidgePath {
    pub fn new(inst: &ProblemInstance, x: &DMatrix<f64>) -> Result<Self> {
        check_design(inst, x)?;
        let (n, d) = (inst.n, inst.d());
        let theta = inst.theta_star();
        let (w, ell, full_rank, null) = if d <= n {
            let eig = sym_eig(&SymMatrix::gram(x))?;
            let top = eig.eigenvalues[0].max(0.0);
            let cut = d as f64 * f64::EPSILON * top;
            let ell: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
            let full_rank = top > 0.0 && ell[d - 1] > cut;
            (eig.basis, ell, full_rank, DVector::zeros(d))
        } else {
            let eig = sym_eig(&SymMatrix::kernel(x))?;
            let top = eig.eigenvalues[0].max(0.0);
            let cut = n as f64 * f64::EPSILON * top;
            let kept = eig.eigenvalues.iter().take_while(|&&l| l > cut).count();
            let ell: Vec<f64> = eig.eigenvalues.iter().take(kept).copied().collect();
            let mut w = x.transpose() * eig.basis.columns(0, kept);
            for (j, l) in ell.iter().enumerate() {
                w.column_mut(j).scale_mut(l.sqrt().recip());
            }
            let null = theta - &w * (w.transpose() * theta);
            (w, ell, kept == n, null)
        };
        let u = w.transpose() * theta;
        let sw = inst.sqrt_cov_mul(&w);
        let sw_col_sq = sw.column_iter().map(|c| c.norm_squared()).collect();
        let null_part = inst.sqrt_cov_mul_vec(&null);
        Ok(RidgePath { n, sigma_noise: inst.sigma_noise, ell, full_rank, sw, sw_col_sq, u, null_part })
    }

    pub fn risk(&self, lambda: f64) -> Result<ConditionalRisk> {
        if !(lambda >= 0.0) {
            return Err(Error::arg(format!("lambda must be nonnegative, got {lambda}")));
        }
        if lambda == 0.0 && !self.full_rank {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: self.ell.last().copied().unwrap_or(0.0) });
        }
        let nl = self.n as f64 * lambda;
        let shrink = |l: f64| if lambda.is_infinite() { 1.0 } else { nl / (l + nl) };
        let c = DVector::from_iterator(self.ell.len(), self.ell.iter().zip(self.u.iter()).map(|(&l, &u)| shrink(l) * u));
        let bias = (&self.null_part + &self.sw * c).norm_squared();
        let variance = if lambda.is_infinite() {
            0.0
        } else {
            let sum: f64 = self.ell.iter().zip(&self.sw_col_sq).map(|(&l, &q)| l / ((l + nl) * (l + nl)) * q).sum();
            self.sigma_noise.powi(2) * sum
        };
        Ok(ConditionalRisk { bias, variance })
    }
}
