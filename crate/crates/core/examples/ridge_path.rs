//! Conditional ridge risk over a whole penalty path from one
//! eigendecomposition.

use ddlab::empirical::{ProblemInstance, RidgePath, Sampler};
use ddlab::theory::ridge_risk;

fn main() -> ddlab::Result<()> {
    let (n, d) = (400, 200);
    let inst = ProblemInstance::random_normalized(n, 0.5, vec![1.0; d], false, 3)?;
    let x = inst.sample_design(Sampler::Rademacher, 9);
    let path = RidgePath::new(&inst, &x)?;
    let spec = inst.spectrum()?;
    let signal = inst.signal()?;
    for lambda in [0.0, 0.01, 0.03, 0.1, 0.3, 1.0] {
        let emp = path.risk(lambda)?;
        let th = ridge_risk(&spec, &signal, n, 0.5, lambda)?;
        println!("lambda {lambda:>5}: empirical {:.5}, theory {:.5}", emp.total(), th.total);
    }
    Ok(())
}
