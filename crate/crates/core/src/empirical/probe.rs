use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::instance::ProblemInstance;
use crate::numkernel::{sym_eig, SymMatrix};
use crate::selfconsistent::kappa_of_lambda;
use crate::{Error, Result};

/// Names of the six probed traces, in output order.
pub const PROBE_NAMES: [&str; 6] = ["trA1", "trAB1", "trA2", "trAB2", "trA1K", "trAB1K"];

/// An empirical trace next to its deterministic equivalent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceGap {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl TraceGap {
    pub fn rel_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs()
    }
}

/// Empirical traces of resolvents of `Sigma_hat = X^T X / n` against `A` and
/// `B`, with their deterministic equivalents:
///
/// | name     | empirical side                                        |
/// |----------|-------------------------------------------------------|
/// | `trA1`   | `tr[A Sh (Sh + l)^{-1}]`                              |
/// | `trAB1`  | `tr[A Sh (Sh + l)^{-1} B Sh (Sh + l)^{-1}]`           |
/// | `trA2`   | `tr[A (Sh + l)^{-1}]`                                 |
/// | `trAB2`  | `tr[A (Sh + l)^{-1} B (Sh + l)^{-1}]`                 |
/// | `trA1K`  | `tr[A Z^T (X X^T + n l)^{-1} Z]`                      |
/// | `trAB1K` | `tr[A Z^T (X X^T + n l)^{-1} Z B Z^T (X X^T + n l)^{-1} Z]` |
///
/// with `Z = X Sigma^{-1/2}`. Everything is expressed through the
/// eigendecomposition `X X^T = U diag(l) U^T`, computed once and reused for
/// every penalty.
#[derive(Debug, Clone)]
pub struct TraceProbe {
    n: usize,
    ell: DVector<f64>,
    ax: DMatrix<f64>,
    bx: DMatrix<f64>,
    abx_diag: DVector<f64>,
    az: DMatrix<f64>,
    bz: DMatrix<f64>,
    tr_a: f64,
    tr_ab: f64,
    spectrum: crate::spectrum::Spectrum,
    eigs: DVector<f64>,
    /// `V^T A V` and `V^T B V` in the covariance eigenbasis.
    a_rot: DMatrix<f64>,
    b_rot: DMatrix<f64>,
}

fn sandwich(y: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    (y * m) * y.transpose()
}

fn sandwich_diag(y: &DMatrix<f64>, m: &DMatrix<f64>) -> DVector<f64> {
    let ym = y * m;
    DVector::from_iterator(y.nrows(), (0..y.nrows()).map(|j| ym.row(j).dot(&y.row(j))))
}

/// `sum_jk P_jk D_k Q_kj D_j` for symmetric `P`, `Q`.
fn weighted_pair_trace(p: &DMatrix<f64>, q: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for k in 0..p.ncols() {
        let mut col = 0.0;
        for j in 0..p.nrows() {
            col += p[(j, k)] * q[(j, k)] * w[j];
        }
        acc += col * w[k];
    }
    acc
}

impl TraceProbe {
    pub fn new(inst: &ProblemInstance, x: &DMatrix<f64>, a: &SymMatrix, b: &SymMatrix) -> Result<Self> {
        let (n, d) = (inst.n, inst.d());
        if x.shape() != (n, d) {
            return Err(Error::DimensionMismatch { what: "design shape", expected: n * d, got: x.len() });
        }
        for m in [a, b] {
            if m.dim() != d {
                return Err(Error::DimensionMismatch { what: "probe matrix size", expected: d, got: m.dim() });
            }
        }
        let eig = sym_eig(&SymMatrix::kernel(x))?;
        let ell = eig.eigenvalues.map(|l| l.max(0.0));
        let ut = eig.basis.transpose();

        let inv_sqrt: Vec<f64> = inst.eigs().iter().map(|e| e.sqrt().recip()).collect();
        let z = match inst.basis() {
            Some(v) => x * SymMatrix::from_eigen(&inv_sqrt, v).as_matrix(),
            None => {
                let mut z = x.clone();
                for (j, s) in inv_sqrt.iter().enumerate() {
                    z.column_mut(j).scale_mut(*s);
                }
                z
            }
        };
        let yx = &ut * x;
        let yz = &ut * z;
        let (am, bm) = (a.as_matrix(), b.as_matrix());
        let ab = am * bm;
        let (a_rot, b_rot) = match inst.basis() {
            Some(v) => (v.transpose() * am * v, v.transpose() * bm * v),
            None => (am.clone(), bm.clone()),
        };
        Ok(TraceProbe {
            n,
            ax: sandwich(&yx, am),
            bx: sandwich(&yx, bm),
            abx_diag: sandwich_diag(&yx, &ab),
            az: sandwich(&yz, am),
            bz: sandwich(&yz, bm),
            tr_a: am.trace(),
            tr_ab: ab.trace(),
            ell,
            spectrum: inst.spectrum()?,
            eigs: inst.eigs().clone(),
            a_rot,
            b_rot,
        })
    }

    /// All six pairs at penalty `lambda > 0`.
    pub fn at(&self, lambda: f64) -> Result<Vec<TraceGap>> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::arg(format!("probe penalty must be positive and finite, got {lambda}")));
        }
        let nf = self.n as f64;
        let w = self.ell.map(|l| 1.0 / (l + nf * lambda));
        let tr_ah = self.ax.diagonal().dot(&w);
        let tr_ahbh = weighted_pair_trace(&self.ax, &self.bx, &w);
        let tr_abh = self.abx_diag.dot(&w);
        let lhs = [
            tr_ah,
            tr_ahbh,
            (self.tr_a - tr_ah) / lambda,
            (self.tr_ab - 2.0 * tr_abh + tr_ahbh) / (lambda * lambda),
            self.az.diagonal().dot(&w),
            weighted_pair_trace(&self.az, &self.bz, &w),
        ];

        let kappa = kappa_of_lambda(&self.spectrum, self.n, lambda)?.kappa;
        let df2 = self.spectrum.df2(kappa)?;
        let r = self.eigs.map(|s| 1.0 / (s + kappa));
        let sr = self.eigs.component_mul(&r);
        let diag_dot = |m: &DMatrix<f64>, v: &DVector<f64>| m.diagonal().dot(v);
        let r2 = r.component_mul(&r);
        let sr2 = sr.component_mul(&r);
        let (ca, cb) = (diag_dot(&self.a_rot, &sr2), diag_dot(&self.b_rot, &sr2));
        let (ka, kb) = (diag_dot(&self.a_rot, &r2), diag_dot(&self.b_rot, &r2));
        let k2 = kappa * kappa;
        let tail = nf - df2;
        let rhs = [
            diag_dot(&self.a_rot, &sr),
            weighted_pair_trace(&self.a_rot, &self.b_rot, &sr) + k2 * ca * cb / tail,
            kappa / lambda * diag_dot(&self.a_rot, &r),
            k2 / (lambda * lambda) * (weighted_pair_trace(&self.a_rot, &self.b_rot, &r) + ca * cb / tail),
            diag_dot(&self.a_rot, &r),
            weighted_pair_trace(&self.a_rot, &self.b_rot, &r) + k2 * ka * kb / tail,
        ];
        Ok(PROBE_NAMES.iter().zip(lhs.iter().zip(rhs)).map(|(&name, (&lhs, rhs))| TraceGap { name, lhs, rhs }).collect())
    }
}

/// One-shot form of [`TraceProbe`].
pub fn probe_trace_equivalents(
    inst: &ProblemInstance,
    x: &DMatrix<f64>,
    a: &SymMatrix,
    b: &SymMatrix,
    lambda: f64,
) -> Result<Vec<TraceGap>> {
    TraceProbe::new(inst, x, a, b)?.at(lambda)
}
