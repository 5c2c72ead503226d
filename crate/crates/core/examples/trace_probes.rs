//! Random traces of resolvents against their deterministic equivalents.

use ddlab::empirical::{ProblemInstance, Sampler, TraceProbe};
use ddlab::numkernel::SymMatrix;

fn main() -> ddlab::Result<()> {
    let (n, d) = (400, 800);
    let eigs: Vec<f64> = (0..d).map(|i| if i < d / 2 { 1.0 } else { 4.0 }).collect();
    let inst = ProblemInstance::random_normalized(n, 1.0, eigs, false, 1)?;
    let x = inst.sample_design(Sampler::Rademacher, 2);
    let probe = TraceProbe::new(&inst, &x, &SymMatrix::identity(d), &inst.covariance())?;
    for lambda in [0.1, 1.0] {
        println!("lambda = {lambda}");
        for g in probe.at(lambda)? {
            println!("  {:<7} lhs {:>14.6e}  rhs {:>14.6e}  gap {:.3}%", g.name, g.lhs, g.rhs, 100.0 * g.rel_gap());
        }
    }
    Ok(())
}
