//! Exact risks of one design, conditional on `X` and `S`, against the
//! asymptotic values.

use ddlab::empirical::{
    conditional_risk_projected, conditional_risk_ridge, sample_matrix, unit_trace, ProblemInstance, Sampler,
};
use ddlab::theory::{ridge_risk, rp_risk};

fn main() -> ddlab::Result<()> {
    let (n, d) = (200, 400);
    let eigs = unit_trace(&(1..=d).map(|k| 1.0 / k as f64).collect::<Vec<_>>());
    let inst = ProblemInstance::random_normalized(n, 1.0, eigs, true, 11)?;
    let (spec, signal) = (inst.spectrum()?, inst.signal()?);
    let x = inst.sample_design(Sampler::Gaussian, 1);

    for m in [50, 150, 300, 800] {
        let s = sample_matrix(d, m, Sampler::Gaussian, 100 + m as u64);
        let emp = conditional_risk_projected(&inst, &x, &s)?;
        let th = rp_risk(&spec, &signal, n, m, 1.0)?;
        println!("m = {m:>3}: bias {:.4} (theory {:.4}), variance {:.4} (theory {:.4})", emp.bias, th.bias, emp.variance, th.variance);
    }
    for lambda in [1e-3, 1e-1] {
        let emp = conditional_risk_ridge(&inst, &x, lambda)?;
        let th = ridge_risk(&spec, &signal, n, 1.0, lambda)?;
        println!("lambda = {lambda}: total {:.4} (theory {:.4})", emp.total(), th.total);
    }
    Ok(())
}
