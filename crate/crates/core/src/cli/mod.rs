//! Command-line front end.
//!
//! Subcommands: `theory`, `empirical`, `kappa`, `probe-traces` and
//! `reproduce`. Curves are written as CSV with a `<stem>.meta.json` file
//! next to them. Exit codes are 0 on success, 1 for usage or configuration
//! errors and 2 for numerical failures.

pub mod config;
pub mod output;
pub mod presets;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{load_config, BasisKind, Mode, SignalConfig, SignalKind, SpectrumConfig, SpectrumKind, SweepConfig};
pub use output::{read_curve_csv, write_curve_csv, CurveRow, GridValue, Metadata, CURVE_COLUMNS};
pub use presets::Figure;
pub use sweep::{run_probes, run_sweep, ProbeMatrix, ProbeRow, SweepOutput};

use crate::empirical::Sampler;
use crate::selfconsistent::{kappa_at_dof, kappa_of_lambda};
use crate::spectrum::{make_inverse_index, make_isotropic, make_power_law, make_two_dirac, Spectrum, SpectrumFile};
use crate::{Error, Result};
use output::{create, fmt_real, sibling, write_json, write_replications_csv, write_table, InstanceSummary};

#[derive(Debug, Parser)]
#[command(name = "ddlab", version, about = "Deterministic equivalents for ridge, ridgeless and random-projection regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Theory curve over an m grid (random projections) or a lambda grid (ridge).
    Theory(SweepArgs),
    /// Theory curve plus Monte Carlo averages of the exact conditional risks.
    Empirical(SweepArgs),
    /// Solve the self-consistent equation for a penalty or a projection size.
    Kappa(KappaArgs),
    /// Compare random traces against their deterministic equivalents.
    ProbeTraces(ProbeArgs),
    /// Regenerate the data behind one of the built-in experiments.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, conflicts_with = "gamma")]
    d: Option<usize>,
    /// Sets d = round(gamma n).
    #[arg(long)]
    gamma: Option<f64>,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    /// `isotropic:S`, `inverse_index`, `power_law:A,T`, `two_dirac:P,S1,S2` or `file:PATH`.
    #[arg(long)]
    spectrum: Option<String>,
    /// Comma-separated projection sizes.
    #[arg(long, value_delimiter = ',', conflicts_with = "lambda")]
    m: Option<Vec<usize>>,
    /// Comma-separated ridge penalties.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long)]
    reps: Option<usize>,
    /// `gaussian` or `rademacher`.
    #[arg(long)]
    sampler: Option<Sampler>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seed of the random target.
    #[arg(long)]
    signal_seed: Option<u64>,
    #[arg(long, value_enum)]
    basis: Option<BasisKind>,
    /// CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KappaArgs {
    #[arg(long, default_value = "isotropic:1")]
    spectrum: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, conflicts_with = "gamma")]
    d: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, required_unless_present = "m", conflicts_with = "m")]
    lambda: Option<f64>,
    /// Projection size: solves df1(kappa) = m.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, value_enum, default_value = "identity")]
    a: ProbeMatrix,
    #[arg(long, value_enum, default_value = "sigma")]
    b: ProbeMatrix,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    figure: Figure,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Replications (realizations for fig2); defaults to the preset value.
    #[arg(long)]
    reps: Option<usize>,
    /// Keep every k-th point of the m grid.
    #[arg(long, default_value_t = 1)]
    thin: usize,
}

/// Runs the command line and returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let command = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect::<Vec<_>>().join(" ");
    match run(cli.command, &command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() { 2 } else { 1 }
}

fn run(command: Command, line: &str) -> Result<()> {
    match command {
        Command::Theory(a) => sweep_command(&a, Mode::Theory, line),
        Command::Empirical(a) => sweep_command(&a, Mode::Both, line),
        Command::Kappa(a) => kappa_command(&a),
        Command::ProbeTraces(a) => probe_command(&a, line),
        Command::Reproduce(a) => reproduce_command(&a, line),
    }
}

/// Parses `kind[:p1,p2,...]`.
pub fn parse_spectrum(text: &str) -> Result<SpectrumConfig> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let kind: SpectrumKind = serde_json::from_value(serde_json::Value::String(kind.into()))
        .map_err(|_| Error::Config { path: "spectrum.kind".into(), message: format!("unknown spectrum kind `{kind}`") })?;
    if kind == SpectrumKind::File {
        return Ok(SpectrumConfig { kind, params: vec![], path: Some(PathBuf::from(rest)) });
    }
    let params = rest
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| Error::Config {
                path: "spectrum.params".into(),
                message: format!("cannot parse `{s}`"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumConfig { kind, params, path: None })
}

fn gamma_to_d(n: usize, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Config { path: "gamma".into(), message: "must be positive".into() });
    }
    Ok(((gamma * n as f64).round() as usize).max(1))
}

fn build_config(a: &SweepArgs, mode: Mode) -> Result<SweepConfig> {
    let mut cfg = match &a.config {
        Some(path) => config::load_config_unchecked(path)?,
        None => {
            let n = a.n.ok_or_else(|| Error::Config { path: "n".into(), message: "give --n or --config".into() })?;
            let d = match (a.d, a.gamma) {
                (Some(d), _) => d,
                (None, Some(g)) => gamma_to_d(n, g)?,
                (None, None) => {
                    return Err(Error::Config { path: "d".into(), message: "give --d, --gamma or --config".into() })
                }
            };
            SweepConfig::new(n, d)
        }
    };
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(d) = a.d {
        cfg.d = d;
    }
    if let Some(g) = a.gamma {
        cfg.d = gamma_to_d(cfg.n, g)?;
    }
    if let Some(s) = a.sigma {
        cfg.sigma_noise = s;
    }
    if let Some(s) = &a.spectrum {
        cfg.spectrum = parse_spectrum(s)?;
    }
    if let Some(m) = &a.m {
        cfg.m_grid = m.clone();
        cfg.lambda_grid.clear();
    }
    if let Some(l) = &a.lambda {
        cfg.lambda_grid = l.clone();
        if mode != Mode::Probe {
            cfg.m_grid.clear();
        }
    }
    if let Some(r) = a.reps {
        cfg.replications = r;
    }
    if let Some(s) = a.sampler {
        cfg.sampler = s;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(s) = a.signal_seed {
        cfg.signal.seed = s;
    }
    if let Some(b) = a.basis {
        cfg.basis = b;
    }
    cfg.mode = match (mode, cfg.mode) {
        (Mode::Theory, _) => Mode::Theory,
        (Mode::Probe, _) => Mode::Probe,
        (_, Mode::Empirical) => Mode::Empirical,
        _ => Mode::Both,
    };
    cfg.finish()
}

fn sweep_command(a: &SweepArgs, mode: Mode, line: &str) -> Result<()> {
    let cfg = build_config(a, mode)?;
    let out = run_sweep(&cfg)?;
    match &a.out {
        Some(path) => write_sweep(path, line, &cfg, &out, vec![]),
        None => write_curve_csv(std::io::stdout().lock(), &out.rows),
    }
}

fn write_sweep(path: &Path, line: &str, cfg: &SweepConfig, out: &SweepOutput, assumptions: Vec<String>) -> Result<()> {
    write_curve_csv(create(path)?, &out.rows)?;
    if let Some(reps) = &out.replications {
        write_replications_csv(create(&sibling(path, "reps.csv"))?, &reps.results)?;
    }
    let mut meta = Metadata::new(line, cfg);
    meta.instance = Some(InstanceSummary::of(&out.instance));
    meta.assumptions = assumptions;
    write_json(&sibling(path, "meta.json"), &meta)
}

/// Spectrum of the `kappa` subcommand, kept at atom level.
fn kappa_spectrum(cfg: &SpectrumConfig, d: usize) -> Result<Spectrum> {
    let p = &cfg.params;
    let need = |k: usize| {
        if p.len() == k {
            Ok(())
        } else {
            Err(Error::Config { path: "spectrum.params".into(), message: format!("expected {k} values, got {}", p.len()) })
        }
    };
    match cfg.kind {
        SpectrumKind::Isotropic => need(1).and_then(|_| make_isotropic(d, p[0])),
        SpectrumKind::InverseIndex => need(0).and_then(|_| make_inverse_index(d)),
        SpectrumKind::PowerLaw => need(2).and_then(|_| make_power_law(d, p[0], p[1])),
        SpectrumKind::TwoDirac => need(3).and_then(|_| make_two_dirac(d, p[0], p[1], p[2])),
        SpectrumKind::File => {
            let path = cfg.path.as_ref().expect("file spectra carry a path");
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config { path: "spectrum.path".into(), message: format!("{}: {e}", path.display()) })?;
            Ok(SpectrumFile::from_json(&text)?.into_measures()?.0)
        }
    }
}

/// Rounds to 12 significant digits for display.
fn significant(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn kappa_command(a: &KappaArgs) -> Result<()> {
    let spec_cfg = parse_spectrum(&a.spectrum)?;
    let d = match (a.d, a.gamma) {
        (Some(d), _) => d,
        (None, Some(g)) => gamma_to_d(a.n, g)?,
        (None, None) if spec_cfg.kind == SpectrumKind::File => 0,
        (None, None) => a.n,
    };
    let spec = kappa_spectrum(&spec_cfg, d)?;
    let sol = match (a.lambda, a.m) {
        (Some(l), _) => kappa_of_lambda(&spec, a.n, l)?,
        (None, Some(m)) => kappa_at_dof(&spec, m as f64)?,
        (None, None) => unreachable!("clap requires one of --lambda, --m"),
    };
    let mut out = std::io::stdout().lock();
    writeln!(out, "kappa={}", significant(sol.kappa))?;
    writeln!(out, "regime={}", sol.regime.as_str())?;
    writeln!(out, "diverged={}", sol.diverged)?;
    writeln!(out, "residual={:e}", sol.residual)?;
    Ok(())
}

fn probe_command(a: &ProbeArgs, line: &str) -> Result<()> {
    let cfg = build_config(&a.sweep, Mode::Probe)?;
    let (instance, rows) = run_probes(&cfg, a.a, a.b)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.rep.to_string(),
                fmt_real(r.lambda),
                r.name.to_string(),
                fmt_real(r.lhs),
                fmt_real(r.rhs),
                fmt_real(r.rel_gap),
            ]
        })
        .collect();
    let head = ["rep", "lambda", "name", "lhs", "rhs", "rel_gap"];
    match &a.sweep.out {
        Some(path) => {
            write_table(create(path)?, &head, &table)?;
            let mut meta = Metadata::new(line, &cfg);
            meta.instance = Some(InstanceSummary::of(&instance));
            meta.assumptions = vec![format!("A = {:?}, B = {:?}", a.a, a.b)];
            write_json(&sibling(path, "meta.json"), &meta)
        }
        None => write_table(std::io::stdout().lock(), &head, &table),
    }
}

fn reproduce_command(a: &ReproduceArgs, line: &str) -> Result<()> {
    if a.thin == 0 {
        return Err(Error::Config { path: "thin".into(), message: "must be >= 1".into() });
    }
    std::fs::create_dir_all(&a.out)?;
    let written = reproduce(a.figure, &a.out, a.reps, a.thin, line)?;
    let mut out = std::io::stdout().lock();
    for p in written {
        writeln!(out, "{}", p.display())?;
    }
    Ok(())
}

/// Runs one preset and writes its files under `dir`. Returns the paths
/// written.
pub fn reproduce(fig: Figure, dir: &Path, reps: Option<usize>, thin: usize, line: &str) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    match fig {
        Figure::Fig1 | Figure::Fig4 | Figure::Fig5 => {
            let mut cfg = match fig {
                Figure::Fig1 => presets::fig1_config(),
                Figure::Fig4 => presets::fig4_config(),
                _ => presets::fig5_config(),
            };
            if let Some(r) = reps {
                cfg.replications = r;
            }
            cfg.m_grid = cfg.m_grid.iter().copied().skip(thin - 1).step_by(thin).collect();
            let out = run_sweep(&cfg)?;
            let path = dir.join(format!("{}.csv", fig.name()));
            write_sweep(&path, line, &cfg, &out, presets::assumptions(fig))?;
            written.push(path.clone());
            written.push(sibling(&path, "reps.csv"));
            written.push(sibling(&path, "meta.json"));
        }
        Figure::Fig2 => {
            let mut p = presets::Fig2Preset::default();
            if let Some(r) = reps {
                p.realizations = r;
            }
            let curves = presets::run_fig2(&p)?;
            let mut gaps = Vec::new();
            for c in &curves {
                let path = dir.join(format!("fig2_n{}.csv", c.n));
                write_curve_csv(create(&path)?, &c.rows)?;
                written.push(path);
                for g in &c.gaps {
                    gaps.push(vec![
                        g.n.to_string(),
                        fmt_real(g.delta),
                        g.m.to_string(),
                        fmt_real(g.bias_theory),
                        fmt_real(g.var_theory),
                        fmt_real(g.bias_gap_of_means),
                        fmt_real(g.bias_mean_abs_gap),
                        fmt_real(g.var_gap_of_means),
                        fmt_real(g.var_mean_abs_gap),
                        g.used.to_string(),
                    ]);
                }
            }
            let path = dir.join("fig2_gaps.csv");
            let head = [
                "n",
                "delta",
                "m",
                "bias_theory",
                "var_theory",
                "bias_gap_of_means",
                "bias_mean_abs_gap",
                "var_gap_of_means",
                "var_mean_abs_gap",
                "used",
            ];
            write_table(create(&path)?, &head, &gaps)?;
            written.push(path);
            let mut meta = Metadata::new(line, &p);
            meta.assumptions = presets::assumptions(fig);
            let path = dir.join("fig2.meta.json");
            write_json(&path, &meta)?;
            written.push(path);
        }
        Figure::Fig3 => {
            let p = presets::Fig3Preset::default();
            let rows: Vec<Vec<String>> = presets::run_fig3(&p)?
                .iter()
                .map(|r| {
                    vec![
                        fmt_real(r.gamma),
                        fmt_real(r.lambda),
                        fmt_real(r.kappa),
                        fmt_real(r.kappa_closed),
                        r.regime.as_str().to_string(),
                        if r.diverged { "1" } else { "0" }.to_string(),
                    ]
                })
                .collect();
            let path = dir.join("fig3.csv");
            write_table(create(&path)?, &["gamma", "lambda", "kappa", "kappa_closed", "regime", "diverged_flag"], &rows)?;
            written.push(path.clone());
            let mut meta = Metadata::new(line, &p);
            meta.assumptions = presets::assumptions(fig);
            let path = sibling(&path, "meta.json");
            write_json(&path, &meta)?;
            written.push(path);
        }
    }
    Ok(written)
}
