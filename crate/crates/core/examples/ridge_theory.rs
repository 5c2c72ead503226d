//! Ridge risk along a penalty path, random design against fixed design.

use ddlab::spectrum::{make_power_law, SignalMeasure};
use ddlab::theory::{fixed_design_ridge_risk, ridge_risk};

fn main() -> ddlab::Result<()> {
    let (n, d, sigma) = (300, 600, 1.0);
    let spec = make_power_law(d, 1.5, 1.0)?;
    let signal = SignalMeasure::uniform(&spec, 1.0)?;
    println!("{:>9} {:>10} {:>12} {:>12} {:>14}", "lambda", "kappa", "bias", "variance", "fixed total");
    for lambda in [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
        let r = ridge_risk(&spec, &signal, n, sigma, lambda)?;
        let fixed = if lambda > 0.0 {
            format!("{:.6}", fixed_design_ridge_risk(&spec, &signal, n, sigma, lambda)?.total)
        } else {
            "singular".into()
        };
        println!("{lambda:>9} {:>10.3e} {:>12.6} {:>12.6} {fixed:>14}", r.kappa, r.bias, r.variance);
    }
    Ok(())
}
