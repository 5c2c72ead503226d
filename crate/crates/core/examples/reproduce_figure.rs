//! Runs a built-in experiment preset. Defaults to the `kappa(lambda)`
//! curves; pass `fig1` .. `fig5` as the first argument and an output
//! directory as the second.

use std::path::PathBuf;

use clap::ValueEnum;
use ddlab::cli::{reproduce, Figure};

fn main() -> ddlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let fig = args
        .next()
        .map(|s| Figure::from_str(&s, true).map_err(ddlab::Error::InvalidArgument))
        .transpose()?
        .unwrap_or(Figure::Fig3);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ddlab-results"));
    std::fs::create_dir_all(&dir)?;
    for path in reproduce(fig, &dir, None, 1, &format!("reproduce {}", fig.name()))? {
        println!("{}", path.display());
    }
    Ok(())
}
