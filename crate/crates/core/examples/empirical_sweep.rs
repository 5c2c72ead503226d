//! Monte Carlo replications over an m grid with the parallel harness.
//! Set `DDLAB_THREADS` to cap the worker count.

use ddlab::empirical::{run_replications, unit_trace, ProblemInstance, ReplicationPlan, Sampler};
use ddlab::theory::rp_risk;

fn main() -> ddlab::Result<()> {
    let (n, d) = (100, 200);
    let eigs = unit_trace(&(1..=d).map(|k| 1.0 / k as f64).collect::<Vec<_>>());
    let inst = ProblemInstance::random_normalized(n, 1.0, eigs, true, 5)?;
    let mut plan = ReplicationPlan::projections(vec![20, 50, 80, 120, 200, 400], 20, Sampler::Rademacher, 42);
    plan.estimate_kappa = true;
    let reps = run_replications(&inst, &plan)?;
    let (spec, signal) = (inst.spectrum()?, inst.signal()?);
    println!("{:>4} {:>10} {:>10} {:>10} {:>10} {:>11} {:>11}", "m", "bias", "theory", "variance", "theory", "kappa_hat", "kappa");
    for a in &reps.aggregates {
        let m = a.m.expect("projection grid");
        let th = rp_risk(&spec, &signal, n, m, 1.0)?;
        println!(
            "{m:>4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>11.4e} {:>11.4e}",
            a.bias_mean.unwrap_or(f64::NAN),
            th.bias,
            a.var_mean.unwrap_or(f64::NAN),
            th.variance,
            a.kappa_hat.unwrap_or(f64::NAN),
            th.kappa,
        );
    }
    Ok(())
}
