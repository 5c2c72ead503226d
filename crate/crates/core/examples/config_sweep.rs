//! A sweep described by a JSON config, written as CSV to standard output.

use ddlab::cli::{run_sweep, write_curve_csv, SweepConfig};

fn main() -> ddlab::Result<()> {
    let cfg = SweepConfig::from_json(
        r#"{
            "n": 100, "d": 50, "sigma_noise": 0.5,
            "spectrum": {"kind": "power_law", "params": [1.5, 1.0]},
            "lambda_grid": [0.0, 0.01, 0.1, 1.0],
            "replications": 10, "mode": "both", "master_seed": 3
        }"#,
    )?;
    let out = run_sweep(&cfg)?;
    write_curve_csv(std::io::stdout().lock(), &out.rows)
}
