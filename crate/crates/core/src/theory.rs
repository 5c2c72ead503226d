//! Asymptotic bias/variance equivalents.
//!
//! All functions take the spectral measure, the signal measure, the sample
//! size `n` and the noise level `sigma`, and return a [`RiskBreakdown`].
//! Points where a denominator vanishes are reported with `diverged = true`
//! and infinite risk instead of an error, so that sweeps keep the grid point.

use serde::Serialize;

use crate::selfconsistent::{kappa_at_dof, kappa_of_lambda, Regime};
use crate::spectrum::{signal_energy, signal_functional, SignalMeasure, Spectrum};
use crate::{Error, Result};

/// Relative floor below which an explosion denominator counts as zero.
pub const DIVERGENCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskBreakdown {
    pub bias: f64,
    pub variance: f64,
    pub total: f64,
    pub kappa: f64,
    pub df1_at_kappa: f64,
    pub df2_at_kappa: f64,
    pub regime: Regime,
    pub diverged: bool,
}

impl RiskBreakdown {
    fn new(bias: f64, variance: f64, kappa: f64, s: &Spectrum, regime: Regime) -> Self {
        RiskBreakdown {
            bias,
            variance,
            total: bias + variance,
            kappa,
            df1_at_kappa: s.df1_unchecked(kappa),
            df2_at_kappa: s.df2_unchecked(kappa),
            regime,
            diverged: false,
        }
    }

    /// A blown-up point. Each term is infinite unless its prefactor
    /// (signal energy for the bias, noise level for the variance) is zero.
    fn diverged(kappa: f64, s: &Spectrum, v: &SignalMeasure, sigma: f64, regime: Regime) -> Result<Self> {
        let bias = if signal_energy(s, v)? > 0.0 { f64::INFINITY } else { 0.0 };
        let variance = if sigma != 0.0 { f64::INFINITY } else { 0.0 };
        Ok(RiskBreakdown {
            diverged: true,
            ..RiskBreakdown::new(bias, variance, kappa, s, regime)
        })
    }
}

fn check_common(s: &Spectrum, v: &SignalMeasure, n: usize, sigma: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::arg("n must be >= 1"));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::arg(format!("noise level must be finite and nonnegative, got {sigma}")));
    }
    if v.len() != s.len() {
        return Err(Error::DimensionMismatch {
            what: "signal masses vs spectrum atoms",
            expected: s.len(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Expected in-sample excess risk of ridge for a fixed design, given the
/// spectrum and signal of the empirical covariance. Exact, no asymptotics.
///
/// The spectrum may come from [`Spectrum::from_empirical_eigenvalues`]; its
/// dropped null directions contribute nothing for `lambda > 0`, and make
/// `lambda = 0` an error.
pub fn fixed_design_ridge_risk(
    empirical_spec: &Spectrum,
    empirical_signal: &SignalMeasure,
    n: usize,
    sigma: f64,
    lambda: f64,
) -> Result<RiskBreakdown> {
    check_common(empirical_spec, empirical_signal, n, sigma)?;
    if !(lambda >= 0.0) {
        return Err(Error::arg(format!("lambda must be nonnegative, got {lambda}")));
    }
    let s = empirical_spec;
    if lambda == 0.0 && s.total_weight() < s.d() as f64 * (1.0 - 1e-12) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: 0.0 });
    }
    let regime = Regime::of(s.d(), n);
    if lambda.is_infinite() {
        let bias = signal_energy(s, empirical_signal)?;
        return Ok(RiskBreakdown::new(bias, 0.0, lambda, s, regime));
    }
    let bias = lambda * lambda * signal_functional(s, empirical_signal, lambda, 2)?;
    let variance = sigma * sigma / n as f64 * s.df2_unchecked(lambda);
    Ok(RiskBreakdown::new(bias, variance, lambda, s, regime))
}

/// Random-design ridge regression with penalty `lambda` (`lambda = 0` is
/// the minimum-norm estimator).
pub fn ridge_risk(s: &Spectrum, v: &SignalMeasure, n: usize, sigma: f64, lambda: f64) -> Result<RiskBreakdown> {
    check_common(s, v, n, sigma)?;
    let sol = kappa_of_lambda(s, n, lambda)?;
    if sol.diverged {
        return RiskBreakdown::diverged(sol.kappa, s, v, sigma, sol.regime);
    }
    ridge_at_kappa(s, v, n, sigma, sol.kappa, sol.regime)
}

fn ridge_at_kappa(s: &Spectrum, v: &SignalMeasure, n: usize, sigma: f64, kappa: f64, regime: Regime) -> Result<RiskBreakdown> {
    let nf = n as f64;
    let df2 = s.df2_unchecked(kappa);
    let denom = 1.0 - df2 / nf;
    if denom < DIVERGENCE_FLOOR {
        return RiskBreakdown::diverged(kappa, s, v, sigma, regime);
    }
    let variance = sigma * sigma / nf * df2 / denom;
    let bias = if kappa == 0.0 {
        0.0
    } else {
        kappa * kappa * signal_functional(s, v, kappa, 2)? / denom
    };
    Ok(RiskBreakdown::new(bias, variance, kappa, s, regime))
}

/// Minimum-norm least squares: ordinary least squares when `d < n`, the
/// ridgeless interpolator when `d > n`.
pub fn minnorm_risk(s: &Spectrum, v: &SignalMeasure, n: usize, sigma: f64) -> Result<RiskBreakdown> {
    check_common(s, v, n, sigma)?;
    let d = s.d();
    match Regime::of(d, n) {
        Regime::UnderParameterized => {
            let df = d as f64;
            let variance = sigma * sigma * df / (n as f64 - df);
            Ok(RiskBreakdown::new(0.0, variance, 0.0, s, Regime::UnderParameterized))
        }
        Regime::Critical => RiskBreakdown::diverged(0.0, s, v, sigma, Regime::Critical),
        Regime::OverParameterized => ridge_risk(s, v, n, sigma, 0.0),
    }
}

/// Minimum-norm least squares on `m` random projections of the covariates.
///
/// When `m >= d` and `d < n` the projection is onto almost surely, the
/// estimator coincides with ordinary least squares and that risk is
/// returned.
pub fn rp_risk(s: &Spectrum, v: &SignalMeasure, n: usize, m: usize, sigma: f64) -> Result<RiskBreakdown> {
    check_common(s, v, n, sigma)?;
    if m == 0 {
        return Err(Error::arg("number of projections must be >= 1"));
    }
    let d = s.d();
    if m >= d && d < n {
        return minnorm_risk(s, v, n, sigma);
    }
    let nf = n as f64;
    let mf = m as f64;
    let regime = Regime::of(m, n);
    match regime {
        Regime::Critical => RiskBreakdown::diverged(f64::NAN, s, v, sigma, regime),
        Regime::UnderParameterized => {
            let kappa = kappa_at_dof(s, mf)?.kappa;
            let gap = (nf - mf) / nf;
            if gap < DIVERGENCE_FLOOR {
                return RiskBreakdown::diverged(kappa, s, v, sigma, regime);
            }
            let variance = sigma * sigma * mf / (nf - mf);
            let bias = kappa * signal_functional(s, v, kappa, 1)? / gap;
            Ok(RiskBreakdown::new(bias, variance, kappa, s, regime))
        }
        Regime::OverParameterized => {
            let kappa = kappa_at_dof(s, nf)?.kappa;
            let gap = (mf - nf) / nf;
            if gap < DIVERGENCE_FLOOR {
                return RiskBreakdown::diverged(kappa, s, v, sigma, regime);
            }
            let base = ridge_at_kappa(s, v, n, sigma, kappa, regime)?;
            if base.diverged {
                return Ok(base);
            }
            let variance = base.variance + sigma * sigma / gap;
            let bias = base.bias + kappa * signal_functional(s, v, kappa, 1)? / gap;
            Ok(RiskBreakdown::new(bias, variance, kappa, s, regime))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{sym_eig, SymMatrix};
    use crate::spectrum::{make_inverse_index, make_isotropic, make_two_dirac, signal_from_vector};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn fixed_design_limits() {
        let s = make_two_dirac(10, 0.5, 1.0, 4.0).unwrap();
        let v = SignalMeasure::new(vec![0.2, 0.3]).unwrap();
        let inf = fixed_design_ridge_risk(&s, &v, 20, 1.0, f64::INFINITY).unwrap();
        assert_eq!(inf.variance, 0.0);
        assert!((inf.bias - (0.2 + 1.2)).abs() < 1e-14);
        let big = fixed_design_ridge_risk(&s, &v, 20, 1.0, 1e9).unwrap();
        assert!(rel(big.bias, 1.4) < 1e-6 && big.variance < 1e-12);
        let zero = fixed_design_ridge_risk(&s, &v, 20, 1.0, 0.0).unwrap();
        assert_eq!(zero.bias, 0.0);
        assert!((zero.variance - 10.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn fixed_design_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (n, d) = (30, 10);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let theta = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let hat = SymMatrix::gram(&x).as_matrix() / n as f64;
        let hat = SymMatrix::symmetrize(hat).unwrap();
        let eig = sym_eig(&hat).unwrap();
        let (spec, kept) = Spectrum::from_empirical_eigenvalues(eig.eigenvalues.as_slice(), 1e-12).unwrap();
        assert_eq!(kept.len(), d);
        let signal = signal_from_vector(&eig, theta.as_slice()).unwrap();
        let (sigma, lambda) = (0.7, 0.3);
        let got = fixed_design_ridge_risk(&spec, &signal, n, sigma, lambda).unwrap();

        let mut shifted = hat.as_matrix().clone();
        for i in 0..d {
            shifted[(i, i)] += lambda;
        }
        let inv = shifted.try_inverse().unwrap();
        let inv2 = &inv * &inv;
        let bias = lambda * lambda * theta.dot(&(&inv2 * hat.as_matrix() * &theta));
        let var = sigma * sigma / n as f64 * (hat.as_matrix() * hat.as_matrix() * &inv2).trace();
        assert!(rel(got.bias, bias) < 1e-10);
        assert!(rel(got.variance, var) < 1e-10);
    }

    #[test]
    fn fixed_design_singular_lambda_zero() {
        let (spec, kept) = Spectrum::from_empirical_eigenvalues(&[2.0, 1.0, 0.0], 1e-12).unwrap();
        assert_eq!(kept, vec![0, 1]);
        let v = SignalMeasure::new(vec![1.0, 1.0]).unwrap();
        assert!(fixed_design_ridge_risk(&spec, &v, 2, 1.0, 0.0).is_err());
        assert!(fixed_design_ridge_risk(&spec, &v, 2, 1.0, 0.5).is_ok());
    }

    #[test]
    fn ridge_large_lambda() {
        let s = make_inverse_index(50).unwrap();
        let v = SignalMeasure::uniform(&s, 3.0).unwrap();
        let r = ridge_risk(&s, &v, 100, 1.0, 1e8).unwrap();
        assert!(rel(r.bias, signal_energy(&s, &v).unwrap()) < 1e-6);
        assert!(r.variance < 1e-10);
    }

    #[test]
    fn ridge_small_lambda_matches_ols() {
        let s = make_isotropic(100, 1.0).unwrap();
        let v = SignalMeasure::uniform(&s, 1.0).unwrap();
        let r = ridge_risk(&s, &v, 200, 1.0, 1e-9).unwrap();
        assert!(rel(r.variance, 1.0) < 1e-6);
        let ols = minnorm_risk(&s, &v, 200, 1.0).unwrap();
        assert_eq!(ols.variance, 1.0);
        assert_eq!(ols.bias, 0.0);
    }

    #[test]
    fn ridge_two_dirac_formula_assembly() {
        let s = make_two_dirac(400, 0.5, 1.0, 4.0).unwrap();
        let v = SignalMeasure::new(vec![0.6, 0.4]).unwrap();
        let (n, sigma, lambda) = (200usize, 0.8, 0.1);
        let r = ridge_risk(&s, &v, n, sigma, lambda).unwrap();
        // assemble from scratch: solve kappa by plain bisection on the atoms
        let df1 = |k: f64| 200.0 / (1.0 + k) + 200.0 * 4.0 / (4.0 + k);
        let (mut lo, mut hi) = (lambda, lambda + 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (1.0 - df1(mid) / 200.0) > lambda {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let k = lo;
        let df2 = 200.0 / (1.0 + k).powi(2) + 200.0 * 16.0 / (4.0 + k).powi(2);
        let sf2 = 0.6 / (1.0 + k).powi(2) + 0.4 * 4.0 / (4.0 + k).powi(2);
        let infl = 1.0 / (1.0 - df2 / n as f64);
        assert!(rel(r.variance, sigma * sigma / n as f64 * df2 * infl) < 1e-9);
        assert!(rel(r.bias, k * k * sf2 * infl) < 1e-9);
        assert_eq!(r.total, r.bias + r.variance);
    }

    #[test]
    fn minnorm_examples() {
        let s = make_isotropic(100, 1.0).unwrap();
        let v = SignalMeasure::uniform(&s, 1.0).unwrap();
        let r = minnorm_risk(&s, &v, 200, 1.0).unwrap();
        assert_eq!((r.bias, r.variance), (0.0, 1.0));

        let s = make_isotropic(400, 1.0).unwrap();
        let v = SignalMeasure::uniform(&s, 1.0).unwrap();
        let r = minnorm_risk(&s, &v, 200, 1.0).unwrap();
        assert!(rel(r.kappa, 1.0) < 1e-10);
        assert!(rel(r.variance, 1.0) < 1e-10);

        let noiseless = minnorm_risk(&s, &v, 200, 0.0).unwrap();
        assert_eq!(noiseless.variance, 0.0);
        assert!(noiseless.bias > 0.0);
        let k = noiseless.kappa;
        let expected = k * k * signal_functional(&s, &v, k, 2).unwrap() / (1.0 - s.df2(k).unwrap() / 200.0);
        assert!(rel(noiseless.bias, expected) < 1e-12);

        let crit = minnorm_risk(&make_isotropic(200, 1.0).unwrap(), &SignalMeasure::new(vec![1.0]).unwrap(), 200, 1.0).unwrap();
        assert!(crit.diverged && crit.total.is_infinite());
    }

    #[test]
    fn rp_examples() {
        let s = make_inverse_index(400).unwrap();
        let v = SignalMeasure::uniform(&s, 1.0).unwrap();
        let half = rp_risk(&s, &v, 200, 100, 1.0).unwrap();
        assert_eq!(half.variance, 1.0);

        let far = rp_risk(&s, &v, 200, 200 * 1_000_000_000, 1.0).unwrap();
        let mn = minnorm_risk(&s, &v, 200, 1.0).unwrap();
        assert!(rel(far.total, mn.total) < 1e-6);
        assert!(rel(far.bias, mn.bias) < 1e-6 && rel(far.variance, mn.variance) < 1e-6);

        let n = 10_000;
        let one = rp_risk(&s, &v, n, 1, 1.0).unwrap();
        assert!(rel(one.variance, 1.0 / (n as f64 - 1.0)) < 1e-12);
        let energy = signal_energy(&s, &v).unwrap();
        assert!(one.bias <= energy / (1.0 - 1.0 / n as f64) && one.bias > 0.9 * energy);

        let crit = rp_risk(&s, &v, 200, 200, 1.0).unwrap();
        assert!(crit.diverged && crit.total.is_infinite());
        assert!(rp_risk(&s, &v, 200, 0, 1.0).is_err());
    }

    #[test]
    fn rp_collapses_to_ols_when_projection_is_onto() {
        let s = make_inverse_index(50).unwrap();
        let v = SignalMeasure::uniform(&s, 2.0).unwrap();
        let ols = minnorm_risk(&s, &v, 100, 0.5).unwrap();
        for m in [50, 70, 99, 100, 150] {
            assert_eq!(rp_risk(&s, &v, 100, m, 0.5).unwrap(), ols);
        }
    }

    #[test]
    fn rp_over_parameterized_tail_is_monotone() {
        let s = make_inverse_index(400).unwrap();
        let v = SignalMeasure::uniform(&s, 1.0).unwrap();
        let mut prev = rp_risk(&s, &v, 200, 201, 1.0).unwrap();
        for m in (210..=2000).step_by(10) {
            let r = rp_risk(&s, &v, 200, m, 1.0).unwrap();
            assert!(r.bias <= prev.bias && r.variance <= prev.variance);
            prev = r;
        }
    }

    #[test]
    fn variance_ignores_signal_and_bias_ignores_noise() {
        let s = make_two_dirac(300, 0.3, 0.5, 2.0).unwrap();
        let v1 = SignalMeasure::new(vec![1.0, 0.0]).unwrap();
        let v2 = SignalMeasure::new(vec![0.2, 5.0]).unwrap();
        for m in [20, 80, 120, 250, 600] {
            let a = rp_risk(&s, &v1, 100, m, 1.0).unwrap();
            let b = rp_risk(&s, &v2, 100, m, 1.0).unwrap();
            let c = rp_risk(&s, &v1, 100, m, 3.0).unwrap();
            assert_eq!(a.variance, b.variance);
            assert_eq!(a.bias, c.bias);
        }
        for lambda in [0.0, 0.01, 1.0] {
            let a = ridge_risk(&s, &v1, 100, 1.0, lambda).unwrap();
            let b = ridge_risk(&s, &v2, 100, 1.0, lambda).unwrap();
            let c = ridge_risk(&s, &v1, 100, 2.0, lambda).unwrap();
            assert_eq!(a.variance, b.variance);
            assert_eq!(a.bias, c.bias);
        }
    }
}
