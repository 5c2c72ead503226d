//! Deterministic equivalents for the excess risk of ridge regression,
//! minimum-norm least squares and least squares on random projections,
//! together with an exact-conditional Monte Carlo harness that checks them.
//!
//! The crate is organised bottom-up:
//!
//! - [`numkernel`]: dense symmetric eigendecomposition, shifted solves and
//!   minimum-norm least squares.
//! - [`spectrum`]: spectral and signal measures, degrees of freedom.
//! - [`selfconsistent`]: the implicit regularisation `kappa(lambda)` and the
//!   degrees-of-freedom inversion `kappa_m`.
//! - [`theory`]: bias/variance equivalents for every estimator.
//! - [`empirical`]: finite-sample instances, conditional risks, trace probes
//!   and the replication harness.
//! - [`cli`]: sweep configuration, figure presets, CSV/JSON output and the
//!   `ddlab` command line.
//!
//! ```
//! use ddlab::spectrum::{make_isotropic, SignalMeasure};
//! use ddlab::theory::rp_risk;
//!
//! let spec = make_isotropic(400, 1.0 / 400.0).unwrap();
//! let signal = SignalMeasure::uniform(&spec, 400.0).unwrap();
//! let risk = rp_risk(&spec, &signal, 200, 100, 1.0).unwrap();
//! assert!((risk.variance - 1.0).abs() < 1e-12);
//! ```

pub mod cli;
pub mod empirical;
mod error;
pub mod numkernel;
pub mod selfconsistent;
pub mod spectrum;
pub mod theory;

pub use error::{Error, Result};
