//! Spectra and signal measures stored as JSON, then used for theory curves.

use ddlab::spectrum::{make_two_dirac, SignalMeasure, SpectrumFile};
use ddlab::theory::rp_risk;

fn main() -> ddlab::Result<()> {
    let spec = make_two_dirac(1000, 0.3, 1.0, 10.0)?;
    let signal = SignalMeasure::new(vec![0.9, 0.1])?;
    let json = SpectrumFile::new(&spec, Some(&signal)).to_json()?;
    println!("{json}");
    let (spec, signal) = SpectrumFile::from_json(&json)?.into_measures()?;
    let signal = signal.expect("file carries a signal");
    for m in [100, 250, 400] {
        println!("m = {m}: total {:.5}", rp_risk(&spec, &signal, 500, m, 1.0)?.total);
    }
    Ok(())
}
