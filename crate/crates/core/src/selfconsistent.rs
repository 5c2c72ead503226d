//! Implicit regularisation.
//!
//! For a ridge penalty `lambda`, the effective penalty `kappa(lambda)` is the
//! root of `kappa * (1 - df1(kappa) / n) = lambda`. The same degrees of
//! freedom inversion, `df1(kappa_m) = m`, drives the projection estimator.

use serde::{Deserialize, Serialize};

use crate::spectrum::Spectrum;
use crate::{Error, Result};

const MAX_BISECTION_STEPS: usize = 4000;
const REL_WIDTH: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    UnderParameterized,
    OverParameterized,
    Critical,
}

impl Regime {
    /// Regime of `params` parameters fitted on `n` observations.
    pub fn of(params: usize, n: usize) -> Self {
        match params.cmp(&n) {
            std::cmp::Ordering::Less => Regime::UnderParameterized,
            std::cmp::Ordering::Greater => Regime::OverParameterized,
            std::cmp::Ordering::Equal => Regime::Critical,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::UnderParameterized => "under_parameterized",
            Regime::OverParameterized => "over_parameterized",
            Regime::Critical => "critical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSolution {
    pub kappa: f64,
    /// Value of the defining equation at `kappa`.
    pub residual: f64,
    pub iterations: usize,
    pub regime: Regime,
    /// Set at `d = n, lambda = 0`, where `kappa'(0)` is infinite and every
    /// downstream risk formula blows up.
    pub diverged: bool,
}

/// Bisection for an increasing function with `f(lo) <= 0 <= f(hi)`.
fn bisect_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<(f64, usize)> {
    let mut steps = 0;
    while steps < MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= REL_WIDTH * hi.abs() || mid <= lo || mid >= hi {
            return Ok((mid, steps));
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Err(Error::RootFinding(format!(
        "bisection did not reach relative width {REL_WIDTH} in {MAX_BISECTION_STEPS} steps (bracket [{lo:e}, {hi:e}])"
    )))
}

/// Solves `kappa * (1 - df1(kappa) / n) = lambda`.
///
/// At `lambda = 0` the solution is `0` when `d < n`, the root of
/// `df1(kappa) = n` when `d > n`, and a flagged critical `0` when `d = n`.
pub fn kappa_of_lambda(s: &Spectrum, n: usize, lambda: f64) -> Result<KappaSolution> {
    if n == 0 {
        return Err(Error::arg("n must be >= 1"));
    }
    if !(lambda >= 0.0) || lambda.is_infinite() {
        return Err(Error::arg(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    let regime = Regime::of(s.d(), n);
    let nf = n as f64;
    let equation = |k: f64| k * (1.0 - s.df1_unchecked(k) / nf) - lambda;

    if lambda == 0.0 {
        return match regime {
            Regime::UnderParameterized => Ok(KappaSolution {
                kappa: 0.0,
                residual: 0.0,
                iterations: 0,
                regime,
                diverged: false,
            }),
            Regime::Critical => Ok(KappaSolution {
                kappa: 0.0,
                residual: 0.0,
                iterations: 0,
                regime,
                diverged: true,
            }),
            Regime::OverParameterized => {
                let sol = kappa_at_dof(s, nf)?;
                Ok(KappaSolution {
                    residual: equation(sol.kappa),
                    regime,
                    ..sol
                })
            }
        };
    }

    let hi = lambda + s.trace() / nf;
    let hi = hi * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let (kappa, iterations) = bisect_increasing(equation, lambda, hi)?;
    Ok(KappaSolution {
        kappa,
        residual: equation(kappa),
        iterations,
        regime,
        diverged: false,
    })
}

/// Solves `df1(kappa) = target` for `0 < target < rank`.
pub fn kappa_at_dof(s: &Spectrum, target: f64) -> Result<KappaSolution> {
    let rank = s.total_weight();
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::arg(format!("dof target must be positive, got {target}")));
    }
    if target >= rank {
        return Err(Error::TargetExceedsRank { target, rank });
    }
    // df1(k) < tr(S) / k, so the root lies below tr(S) / target.
    let hi = s.trace() / target * (1.0 + 1e-12);
    let (kappa, iterations) = bisect_increasing(|k| target - s.df1_unchecked(k), 0.0, hi)?;
    Ok(KappaSolution {
        kappa,
        residual: s.df1_unchecked(kappa) - target,
        iterations,
        regime: Regime::OverParameterized,
        diverged: false,
    })
}

/// Positive root of `k^2 - b k - c = 0` with `c >= 0`, without cancellation.
fn positive_root(b: f64, c: f64) -> f64 {
    let disc = (b * b + 4.0 * c).sqrt();
    if b >= 0.0 {
        0.5 * (b + disc)
    } else if c == 0.0 {
        0.0
    } else {
        2.0 * c / (disc - b)
    }
}

/// Closed form of `kappa(lambda)` for an isotropic covariance `sigma I` with
/// `d / n = gamma`.
pub fn kappa_isotropic_closed(sigma: f64, gamma: f64, lambda: f64) -> Result<f64> {
    if !(sigma >= 0.0 && gamma >= 0.0 && lambda >= 0.0) {
        return Err(Error::arg(format!(
            "isotropic closed form needs nonnegative inputs (sigma {sigma}, gamma {gamma}, lambda {lambda})"
        )));
    }
    // kappa^2 - (lambda - sigma (1 - gamma)) kappa - lambda sigma = 0
    Ok(positive_root(lambda - sigma * (1.0 - gamma), lambda * sigma))
}

/// Closed form of `kappa_m` for the two-atom law `pi1 delta_{sigma1} +
/// pi2 delta_{sigma2}` with `d / n = gamma` and `m / n = delta`.
///
/// Returns `+inf` at `delta = 0`. Requires `gamma / delta > 1`, i.e. fewer
/// projections than dimensions.
pub fn kappa_two_dirac_closed(
    pi1: f64,
    pi2: f64,
    sigma1: f64,
    sigma2: f64,
    gamma: f64,
    delta: f64,
) -> Result<f64> {
    if !(pi1 >= 0.0 && pi2 >= 0.0) || (pi1 + pi2 - 1.0).abs() > 1e-12 {
        return Err(Error::arg(format!("weights must be nonnegative and sum to 1 (got {pi1}, {pi2})")));
    }
    if !(sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(Error::arg("atom locations must be positive"));
    }
    if !(gamma > 0.0) {
        return Err(Error::arg(format!("gamma must be positive, got {gamma}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::arg(format!("delta must be nonnegative, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ratio = gamma / delta;
    if ratio <= 1.0 {
        return Err(Error::TargetExceedsRank {
            target: delta,
            rank: gamma,
        });
    }
    let b = ratio * (pi1 * sigma1 + pi2 * sigma2) - sigma1 - sigma2;
    Ok(positive_root(b, sigma1 * sigma2 * (ratio - 1.0)))
}
