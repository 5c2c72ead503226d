//! Spectral measure of the covariance and the signal measure of the target,
//! both stored as finite atom lists, and the degrees-of-freedom functionals
//! evaluated on them.
//!
//! Weights use the counting convention: they sum to the ambient dimension
//! `d`, so `df1(0) = df2(0) = d` for a full-rank spectrum.

use serde::{Deserialize, Serialize};

use crate::numkernel::EigenPair;
use crate::{Error, Result};

/// Default number of atoms used to discretise a continuous spectral law.
pub const DEFAULT_QUANTILE_ATOMS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    d: usize,
    atoms: Vec<(f64, f64)>,
}

impl Spectrum {
    /// Builds a population spectrum. Eigenvalues and weights must be positive
    /// and the weights must sum to `d`.
    pub fn new(d: usize, atoms: Vec<(f64, f64)>) -> Result<Self> {
        let s = Self::unchecked_total(d, atoms)?;
        let total = s.total_weight();
        if (total - d as f64).abs() > 1e-9 * d as f64 {
            return Err(Error::arg(format!(
                "atom weights sum to {total}, expected d = {d}"
            )));
        }
        Ok(s)
    }

    fn unchecked_total(d: usize, atoms: Vec<(f64, f64)>) -> Result<Self> {
        if d == 0 {
            return Err(Error::arg("spectrum dimension must be >= 1"));
        }
        if atoms.is_empty() {
            return Err(Error::arg("spectrum needs at least one atom"));
        }
        for &(ev, w) in &atoms {
            if !(ev > 0.0 && ev.is_finite()) {
                return Err(Error::arg(format!("eigenvalue {ev} is not positive")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::arg(format!("atom weight {w} is not positive")));
            }
        }
        Ok(Spectrum { d, atoms })
    }

    /// One unit-weight atom per eigenvalue.
    pub fn from_eigenvalues(eigenvalues: &[f64]) -> Result<Self> {
        Self::new(
            eigenvalues.len(),
            eigenvalues.iter().map(|&e| (e, 1.0)).collect(),
        )
    }

    /// Spectrum of an empirical covariance. Eigenvalues at or below
    /// `rel_tol * max` are dropped, so the total weight is the numerical
    /// rank and may be smaller than `d`.
    ///
    /// Returns the spectrum together with the indices of the kept
    /// eigenvalues, for aligning a signal measure.
    pub fn from_empirical_eigenvalues(eigenvalues: &[f64], rel_tol: f64) -> Result<(Self, Vec<usize>)> {
        let top = eigenvalues.iter().cloned().fold(0.0, f64::max);
        if !(top > 0.0) {
            return Err(Error::arg("empirical spectrum is identically zero"));
        }
        let kept: Vec<usize> = (0..eigenvalues.len())
            .filter(|&i| eigenvalues[i] > rel_tol * top)
            .collect();
        let atoms = kept.iter().map(|&i| (eigenvalues[i], 1.0)).collect();
        Ok((Self::unchecked_total(eigenvalues.len(), atoms)?, kept))
    }

    /// Discretises the law of `quantile(U)`, `U` uniform on `[0, 1]`, at
    /// `atoms` midpoint quantiles, each carrying weight `d / atoms`.
    pub fn from_quantile_fn(d: usize, atoms: usize, quantile: impl Fn(f64) -> f64) -> Result<Self> {
        if atoms == 0 {
            return Err(Error::arg("need at least one atom"));
        }
        let w = d as f64 / atoms as f64;
        let list = (0..atoms)
            .map(|k| (quantile((k as f64 + 0.5) / atoms as f64), w))
            .collect();
        Self::new(d, list)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Sum of weights: the rank of the represented matrix.
    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn trace(&self) -> f64 {
        self.atoms.iter().map(|&(e, w)| e * w).sum()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.atoms.iter().map(|a| a.0).fold(0.0, f64::max)
    }

    /// `d / n`.
    pub fn gamma(&self, n: usize) -> f64 {
        self.d as f64 / n as f64
    }

    /// Rescales eigenvalues by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::unchecked_total(
            self.d,
            self.atoms.iter().map(|&(e, w)| (e * factor, w)).collect(),
        )
    }

    /// `df1(kappa) = tr[S (S + kappa I)^{-1}]`.
    pub fn df1(&self, kappa: f64) -> Result<f64> {
        check_kappa(kappa)?;
        Ok(self.df1_unchecked(kappa))
    }

    /// `df2(kappa) = tr[S^2 (S + kappa I)^{-2}]`.
    pub fn df2(&self, kappa: f64) -> Result<f64> {
        check_kappa(kappa)?;
        Ok(self.df2_unchecked(kappa))
    }

    pub(crate) fn df1_unchecked(&self, kappa: f64) -> f64 {
        if kappa.is_infinite() {
            return 0.0;
        }
        self.atoms.iter().map(|&(e, w)| w * e / (e + kappa)).sum()
    }

    pub(crate) fn df2_unchecked(&self, kappa: f64) -> f64 {
        if kappa.is_infinite() {
            return 0.0;
        }
        self.atoms
            .iter()
            .map(|&(e, w)| {
                let r = e / (e + kappa);
                w * r * r
            })
            .sum()
    }

    /// `tr[S (S + kappa I)^{-2}]`.
    pub fn resolvent_trace_sq(&self, kappa: f64) -> Result<f64> {
        check_kappa(kappa)?;
        Ok(self
            .atoms
            .iter()
            .map(|&(e, w)| w * e / ((e + kappa) * (e + kappa)))
            .sum())
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa >= 0.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("kappa must be nonnegative, got {kappa}")))
    }
}

/// Signal mass `(v_i^T theta)^2` carried by each spectrum atom.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMeasure {
    masses: Vec<f64>,
}

impl SignalMeasure {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if let Some(m) = masses.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
            return Err(Error::arg(format!("signal mass {m} is not a finite nonnegative number")));
        }
        Ok(SignalMeasure { masses })
    }

    /// Total mass `total`, spread over atoms in proportion to their weight.
    pub fn uniform(spectrum: &Spectrum, total: f64) -> Result<Self> {
        let tw = spectrum.total_weight();
        Self::new(spectrum.atoms.iter().map(|&(_, w)| total * w / tw).collect())
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// `|theta|^2`.
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.masses.iter().map(|m| m * factor).collect())
    }
}

/// `theta^T S (S + kappa I)^{-power} theta`, for `power` 1 or 2.
pub fn signal_functional(s: &Spectrum, v: &SignalMeasure, kappa: f64, power: u32) -> Result<f64> {
    check_kappa(kappa)?;
    if v.len() != s.len() {
        return Err(Error::DimensionMismatch {
            what: "signal masses vs spectrum atoms",
            expected: s.len(),
            got: v.len(),
        });
    }
    if power != 1 && power != 2 {
        return Err(Error::arg(format!("power must be 1 or 2, got {power}")));
    }
    if kappa.is_infinite() {
        return Ok(0.0);
    }
    Ok(s
        .atoms
        .iter()
        .zip(&v.masses)
        .map(|(&(e, _), &m)| m * e / (e + kappa).powi(power as i32))
        .sum())
}

/// `theta^T S theta`.
pub fn signal_energy(s: &Spectrum, v: &SignalMeasure) -> Result<f64> {
    if v.len() != s.len() {
        return Err(Error::DimensionMismatch {
            what: "signal masses vs spectrum atoms",
            expected: s.len(),
            got: v.len(),
        });
    }
    Ok(s.atoms.iter().zip(&v.masses).map(|(&(e, _), &m)| e * m).sum())
}

pub fn make_isotropic(d: usize, sigma: f64) -> Result<Spectrum> {
    Spectrum::new(d, vec![(sigma, d as f64)])
}

/// Eigenvalues proportional to `1/k`, `k = 1..d`, normalised to unit trace.
pub fn make_inverse_index(d: usize) -> Result<Spectrum> {
    if d == 0 {
        return Err(Error::arg("d must be >= 1"));
    }
    let harmonic: f64 = (1..=d).map(|k| 1.0 / k as f64).sum();
    Spectrum::from_eigenvalues(&(1..=d).map(|k| 1.0 / (k as f64 * harmonic)).collect::<Vec<_>>())
}

/// Eigenvalues `tau / k^alpha`, `k = 1..d`, with `alpha > 1`.
pub fn make_power_law(d: usize, alpha: f64, tau: f64) -> Result<Spectrum> {
    if !(alpha > 1.0) {
        return Err(Error::arg(format!("power-law exponent must exceed 1, got {alpha}")));
    }
    if !(tau > 0.0) {
        return Err(Error::arg(format!("power-law scale must be positive, got {tau}")));
    }
    Spectrum::from_eigenvalues(&(1..=d).map(|k| tau / (k as f64).powf(alpha)).collect::<Vec<_>>())
}

/// Weight `pi1 * d` on `sigma1` and `(1 - pi1) * d` on `sigma2`. Atoms of
/// zero weight are omitted.
pub fn make_two_dirac(d: usize, pi1: f64, sigma1: f64, sigma2: f64) -> Result<Spectrum> {
    if !(0.0..=1.0).contains(&pi1) {
        return Err(Error::arg(format!("pi1 must lie in [0, 1], got {pi1}")));
    }
    let mut atoms = Vec::with_capacity(2);
    if pi1 > 0.0 {
        atoms.push((sigma1, pi1 * d as f64));
    }
    if pi1 < 1.0 {
        atoms.push((sigma2, (1.0 - pi1) * d as f64));
    }
    Spectrum::new(d, atoms)
}

/// Signal measure of `theta` in the eigenbasis of `eig`, aligned with
/// `Spectrum::from_eigenvalues(eig.eigenvalues)`.
pub fn signal_from_vector(eig: &EigenPair, theta: &[f64]) -> Result<SignalMeasure> {
    if theta.len() != eig.dim() {
        return Err(Error::DimensionMismatch {
            what: "theta length",
            expected: eig.dim(),
            got: theta.len(),
        });
    }
    let theta = nalgebra::DVector::from_column_slice(theta);
    let coords = eig.basis.transpose() * theta;
    SignalMeasure::new(coords.iter().map(|c| c * c).collect())
}

/// On-disk form: `{"d": int, "atoms": [[eigenvalue, weight], ...], "signal": [mass, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpectrumFile {
    pub d: usize,
    pub atoms: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<Vec<f64>>,
}

impl SpectrumFile {
    pub fn new(spectrum: &Spectrum, signal: Option<&SignalMeasure>) -> Self {
        SpectrumFile {
            d: spectrum.d,
            atoms: spectrum.atoms.clone(),
            signal: signal.map(|s| s.masses.clone()),
        }
    }

    pub fn into_measures(self) -> Result<(Spectrum, Option<SignalMeasure>)> {
        let spectrum = Spectrum::new(self.d, self.atoms)?;
        let signal = match self.signal {
            Some(m) => {
                if m.len() != spectrum.len() {
                    return Err(Error::DimensionMismatch {
                        what: "signal masses vs spectrum atoms",
                        expected: spectrum.len(),
                        got: m.len(),
                    });
                }
                Some(SignalMeasure::new(m)?)
            }
            None => None,
        };
        Ok((spectrum, signal))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
