//! Finite-sample estimates of `kappa` from the design and from the sketch.

use ddlab::empirical::{empirical_kappa_lambda, empirical_kappa_m, sample_matrix, ProblemInstance, Sampler};
use ddlab::selfconsistent::{kappa_at_dof, kappa_of_lambda};

fn main() -> ddlab::Result<()> {
    let (n, d) = (500, 1000);
    let eigs: Vec<f64> = (1..=d).map(|k| (k as f64).powf(-1.2)).collect();
    let inst = ProblemInstance::random_normalized(n, 1.0, eigs, false, 8)?;
    let spec = inst.spectrum()?;
    let x = inst.sample_design(Sampler::Gaussian, 4);
    for lambda in [1e-3, 1e-2, 1e-1] {
        let est = empirical_kappa_lambda(&x, n, lambda)?;
        println!("lambda {lambda:>6}: estimate {est:.5e}, theory {:.5e}", kappa_of_lambda(&spec, n, lambda)?.kappa);
    }
    let cov = inst.covariance();
    for m in [50, 200, 400] {
        let s = sample_matrix(d, m, Sampler::Gaussian, m as u64);
        let est = empirical_kappa_m(&cov, &s)?;
        println!("m {m:>4}: estimate {est:.5e}, theory {:.5e}", kappa_at_dof(&spec, m as f64)?.kappa);
    }
    Ok(())
}
