use nalgebra::DMatrix;

use crate::numkernel::{inverse_shifted, SymMatrix};
use crate::{Error, Result};

/// `1 / tr[(X X^T + n lambda I)^{-1}]`, the finite-sample counterpart of
/// `kappa(lambda)`.
pub fn empirical_kappa_lambda(x: &DMatrix<f64>, n: usize, lambda: f64) -> Result<f64> {
    if x.nrows() != n {
        return Err(Error::DimensionMismatch { what: "design rows", expected: n, got: x.nrows() });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::arg(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    let inv = inverse_shifted(&SymMatrix::kernel(x), n as f64 * lambda)?;
    Ok(1.0 / inv.trace())
}

/// `1 / tr[(S^T Sigma S)^{-1}]` for one projection draw. Averaging the
/// reciprocal over draws estimates `kappa_m`.
pub fn empirical_kappa_m(sigma: &SymMatrix, s: &DMatrix<f64>) -> Result<f64> {
    if s.nrows() != sigma.dim() {
        return Err(Error::DimensionMismatch { what: "projection rows", expected: sigma.dim(), got: s.nrows() });
    }
    let sketch_cov = SymMatrix::symmetrize(s.transpose() * sigma.as_matrix() * s)?;
    kappa_from_sketch_cov(&sketch_cov)
}

pub(crate) fn kappa_from_sketch_cov(sketch_cov: &SymMatrix) -> Result<f64> {
    Ok(1.0 / inverse_shifted(sketch_cov, 0.0)?.trace())
}
