//! Dense symmetric kernels: eigendecomposition, shifted solves and
//! minimum-norm least squares.

use ddlab::empirical::{sample_matrix, Sampler};
use ddlab::numkernel::{min_norm_fit, pseudo_inverse, solve_shifted_vec, sym_eig, SymMatrix, DEFAULT_PINV_TOL};
use nalgebra::DVector;

fn main() -> ddlab::Result<()> {
    let x = sample_matrix(6, 10, Sampler::Gaussian, 1);
    let kernel = SymMatrix::kernel(&x);
    let eig = sym_eig(&kernel)?;
    let eigs: Vec<String> = eig.eigenvalues.iter().map(|l| format!("{l:.4}")).collect();
    println!("eigenvalues of X X^T: {}", eigs.join(" "));
    let err = (eig.reconstruct().as_matrix() - kernel.as_matrix()).norm();
    println!("reconstruction error {err:.2e}");

    let y = DVector::from_fn(6, |i, _| i as f64);
    let w = min_norm_fit(&x, &y, DEFAULT_PINV_TOL)?;
    println!("min-norm fit: residual {:.2e}, norm {:.4}", (&x * &w - &y).norm(), w.norm());
    let pinv = pseudo_inverse(&x, DEFAULT_PINV_TOL)?;
    println!("pseudo-inverse rank {}", pinv.rank);

    let z = solve_shifted_vec(&kernel, 0.5, &y)?;
    println!("(X X^T + 0.5 I) z = y residual {:.2e}", ((kernel.as_matrix() * &z) + 0.5 * &z - &y).norm());
    Ok(())
}
