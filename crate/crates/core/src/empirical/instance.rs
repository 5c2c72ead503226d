use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;
use rand::Rng;

use super::sampling::{child_seed, rng, sample_matrix, Sampler};
use crate::numkernel::SymMatrix;
use crate::spectrum::{SignalMeasure, Spectrum};
use crate::{Error, Result};

/// One fixed regression problem: covariance `basis diag(eigs) basis^T`,
/// target `theta_star`, noise level and sample size.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub n: usize,
    pub sigma_noise: f64,
    /// `None` stands for the identity.
    basis: Option<DMatrix<f64>>,
    eigs: DVector<f64>,
    theta_star: DVector<f64>,
    sqrt_cov: Option<DMatrix<f64>>,
}

impl ProblemInstance {
    pub fn new(
        n: usize,
        sigma_noise: f64,
        basis: Option<DMatrix<f64>>,
        eigs: Vec<f64>,
        theta_star: Vec<f64>,
    ) -> Result<Self> {
        let d = eigs.len();
        if n == 0 || d == 0 {
            return Err(Error::arg("n and d must be >= 1"));
        }
        if !(sigma_noise >= 0.0 && sigma_noise.is_finite()) {
            return Err(Error::arg(format!("noise level must be finite and nonnegative, got {sigma_noise}")));
        }
        if let Some(e) = eigs.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::arg(format!("covariance eigenvalue {e} is not positive")));
        }
        if theta_star.len() != d {
            return Err(Error::DimensionMismatch { what: "theta_star length", expected: d, got: theta_star.len() });
        }
        if let Some(b) = &basis {
            if b.shape() != (d, d) {
                return Err(Error::DimensionMismatch { what: "basis size", expected: d, got: b.nrows() });
            }
            let err = (b.transpose() * b - DMatrix::identity(d, d)).amax();
            if err > 1e-8 {
                return Err(Error::arg(format!("basis is not orthonormal (deviation {err:e})")));
            }
        }
        let eigs = DVector::from_vec(eigs);
        let sqrt_cov = basis.as_ref().map(|b| {
            let sqrt: Vec<f64> = eigs.iter().map(|e| e.sqrt()).collect();
            SymMatrix::from_eigen(&sqrt, b).into_inner()
        });
        Ok(ProblemInstance { n, sigma_noise, basis, eigs, theta_star: DVector::from_vec(theta_star), sqrt_cov })
    }

    /// Builds the instance from the coordinates of the target in the
    /// covariance eigenbasis.
    pub fn from_eigen_coordinates(
        n: usize,
        sigma_noise: f64,
        basis: Option<DMatrix<f64>>,
        eigs: Vec<f64>,
        theta_eigen: &[f64],
    ) -> Result<Self> {
        let t = DVector::from_column_slice(theta_eigen);
        let theta = match &basis {
            Some(b) if b.nrows() == t.len() => b * t,
            _ => t,
        };
        Self::new(n, sigma_noise, basis, eigs, theta.as_slice().to_vec())
    }

    /// Target drawn as a standard Gaussian vector and rescaled so that
    /// `theta^T Sigma theta = 1`. With `haar`, the eigenbasis is uniform on
    /// the orthogonal group; otherwise it is the identity.
    pub fn random_normalized(n: usize, sigma_noise: f64, eigs: Vec<f64>, haar: bool, seed: u64) -> Result<Self> {
        let d = eigs.len();
        let mut r = rng(child_seed(seed, &[1]));
        let mut t: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
        let energy: f64 = t.iter().zip(&eigs).map(|(c, e)| c * c * e).sum();
        if !(energy > 0.0) {
            return Err(Error::arg("drawn target has zero energy"));
        }
        let scale = energy.sqrt().recip();
        t.iter_mut().for_each(|c| *c *= scale);
        let basis = if haar { Some(haar_basis(d, child_seed(seed, &[0]))) } else { None };
        Self::from_eigen_coordinates(n, sigma_noise, basis, eigs, &t)
    }

    pub fn d(&self) -> usize {
        self.eigs.len()
    }

    pub fn eigs(&self) -> &DVector<f64> {
        &self.eigs
    }

    pub fn basis(&self) -> Option<&DMatrix<f64>> {
        self.basis.as_ref()
    }

    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    /// Coordinates of the target in the covariance eigenbasis.
    pub fn theta_eigen(&self) -> DVector<f64> {
        match &self.basis {
            Some(b) => b.transpose() * &self.theta_star,
            None => self.theta_star.clone(),
        }
    }

    pub fn with_theta(&self, theta_star: DVector<f64>) -> Result<Self> {
        if theta_star.len() != self.d() {
            return Err(Error::DimensionMismatch { what: "theta_star length", expected: self.d(), got: theta_star.len() });
        }
        Ok(ProblemInstance { theta_star, ..self.clone() })
    }

    pub fn covariance(&self) -> SymMatrix {
        match &self.basis {
            Some(b) => SymMatrix::from_eigen(self.eigs.as_slice(), b),
            None => SymMatrix::from_diagonal(self.eigs.as_slice()),
        }
    }

    pub fn trace(&self) -> f64 {
        self.eigs.sum()
    }

    /// `theta^T Sigma theta`.
    pub fn signal_energy(&self) -> f64 {
        self.theta_eigen().iter().zip(self.eigs.iter()).map(|(c, e)| c * c * e).sum()
    }

    /// One atom per eigenvalue, aligned with [`Self::signal`].
    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::from_eigenvalues(self.eigs.as_slice())
    }

    pub fn signal(&self) -> Result<SignalMeasure> {
        SignalMeasure::new(self.theta_eigen().iter().map(|c| c * c).collect())
    }

    /// `Sigma^{1/2} m`.
    pub fn sqrt_cov_mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.sqrt_cov {
            Some(s) => s * m,
            None => {
                let mut out = m.clone();
                for (i, e) in self.eigs.iter().enumerate() {
                    out.row_mut(i).scale_mut(e.sqrt());
                }
                out
            }
        }
    }

    /// `Sigma^{1/2} v`.
    pub fn sqrt_cov_mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.sqrt_cov {
            Some(s) => s * v,
            None => v.component_mul(&self.eigs.map(f64::sqrt)),
        }
    }

    /// `Sigma m`.
    pub fn cov_mul(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let half = self.sqrt_cov_mul(m);
        self.sqrt_cov_mul(&half)
    }

    /// Draws `Z` (`n x d`) and returns the design `X = Z Sigma^{1/2}`.
    pub fn sample_design(&self, sampler: Sampler, seed: u64) -> DMatrix<f64> {
        let z = sample_matrix(self.n, self.d(), sampler, seed);
        self.design_from(&z)
    }

    fn design_from(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.sqrt_cov {
            Some(s) => z * s,
            None => {
                let mut x = z.clone();
                for (j, e) in self.eigs.iter().enumerate() {
                    x.column_mut(j).scale_mut(e.sqrt());
                }
                x
            }
        }
    }
}

/// `X = Z Sigma^{1/2}` for an `n x d` matrix `Z`.
pub fn build_design(inst: &ProblemInstance, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if z.ncols() != inst.d() {
        return Err(Error::DimensionMismatch { what: "Z columns", expected: inst.d(), got: z.ncols() });
    }
    Ok(inst.design_from(z))
}

/// Orthogonal matrix drawn from the Haar measure: the `Q` factor of a
/// Gaussian matrix with the signs of `R`'s diagonal absorbed.
pub fn haar_basis(d: usize, seed: u64) -> DMatrix<f64> {
    let g = sample_matrix(d, d, Sampler::Gaussian, seed);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Rescales eigenvalues to unit trace.
pub fn unit_trace(eigs: &[f64]) -> Vec<f64> {
    let t: f64 = eigs.iter().sum();
    eigs.iter().map(|e| e / t).collect()
}
