//! Self-induced regularization `kappa` for ridge penalties and projection
//! sizes, on a few spectra.

use ddlab::selfconsistent::{kappa_at_dof, kappa_isotropic_closed, kappa_of_lambda};
use ddlab::spectrum::{make_inverse_index, make_isotropic, make_two_dirac};

fn main() -> ddlab::Result<()> {
    let n = 1000;
    println!("isotropic sigma = 1");
    println!("{:>6} {:>8} {:>14} {:>14}  regime", "gamma", "lambda", "kappa", "closed form");
    for gamma in [0.5, 1.0, 2.0] {
        let spec = make_isotropic((gamma * n as f64) as usize, 1.0)?;
        for lambda in [0.0, 0.01, 0.1, 1.0] {
            let sol = kappa_of_lambda(&spec, n, lambda)?;
            let closed = kappa_isotropic_closed(1.0, gamma, lambda)?;
            println!("{gamma:>6} {lambda:>8} {:>14.8} {closed:>14.8}  {}", sol.kappa, sol.regime.as_str());
        }
    }

    println!("\nkappa_m solving df1(kappa) = m, n = 200, d = 400");
    let inv = make_inverse_index(400)?;
    let dirac = make_two_dirac(400, 0.5, 1.0, 4.0)?;
    for m in [20, 100, 180, 300, 399] {
        let a = kappa_at_dof(&inv, m as f64)?;
        let b = kappa_at_dof(&dirac, m as f64)?;
        println!("m = {m:>4}: 1/k spectrum {:.6e}, two atoms {:.6e}", a.kappa, b.kappa);
    }
    Ok(())
}
