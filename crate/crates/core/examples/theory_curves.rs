//! Asymptotic bias and variance of the random-projection estimator as the
//! number of projections grows, showing the peak at `m = n`.

use ddlab::spectrum::{make_inverse_index, SignalMeasure};
use ddlab::theory::{minnorm_risk, rp_risk};

fn main() -> ddlab::Result<()> {
    let (n, d, sigma) = (200, 400, 0.5);
    let spec = make_inverse_index(d)?;
    let signal = SignalMeasure::uniform(&spec, 1.0)?;
    println!("{:>5} {:>12} {:>12} {:>12}", "m", "bias", "variance", "total");
    for m in (20..=800).step_by(60).chain([200]) {
        let r = rp_risk(&spec, &signal, n, m, sigma)?;
        let flag = if r.diverged { "  diverged" } else { "" };
        println!("{m:>5} {:>12.5} {:>12.5} {:>12.5}{flag}", r.bias, r.variance, r.total);
    }
    let mn = minnorm_risk(&spec, &signal, n, sigma)?;
    println!("minimum-norm interpolator on all {d} features: total {:.5}", mn.total);
    Ok(())
}
