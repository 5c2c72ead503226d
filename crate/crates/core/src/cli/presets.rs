//! Built-in experiment presets.
//!
//! `fig1`, `fig4` and `fig5` are plain [`SweepConfig`]s on a fixed
//! `n = 200`, `d = 400` problem. `fig2` (convergence in `n` on a two-atom
//! spectrum) and `fig3` (`kappa(lambda)` curves) have their own drivers.

use serde::Serialize;

use super::config::{BasisKind, Mode, SignalConfig, SignalKind, SpectrumConfig, SpectrumKind, SweepConfig};
use super::output::{CurveRow, GridValue};
use super::sweep::curve_row;
use crate::empirical::{child_seed, run_replications, ReplicationStatus, Sampler};
use crate::selfconsistent::{kappa_isotropic_closed, kappa_of_lambda, Regime};
use crate::spectrum::{make_isotropic, make_two_dirac, SignalMeasure};
use crate::theory::rp_risk;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

fn projection_preset(spectrum: SpectrumConfig, sigma_noise: f64, replications: usize) -> SweepConfig {
    SweepConfig {
        n: 200,
        d: 400,
        sigma_noise,
        spectrum,
        signal: SignalConfig { kind: SignalKind::RandomGaussianNormalized, seed: 1, path: None },
        m_grid: (1..=80).map(|k| 10 * k).collect(),
        lambda_grid: vec![],
        replications,
        sampler: Sampler::Rademacher,
        master_seed: 2023,
        mode: Mode::Both,
        basis: BasisKind::Haar,
        estimate_kappa: false,
        sketches_per_design: 1,
    }
}

fn inverse_index() -> SpectrumConfig {
    SpectrumConfig { kind: SpectrumKind::InverseIndex, params: vec![], path: None }
}

/// Double descent: `1/k` spectrum, noise `1/2`, 20 designs times 20
/// projections.
pub fn fig1_config() -> SweepConfig {
    SweepConfig { sketches_per_design: 20, ..projection_preset(inverse_index(), 0.5, 400) }
}

/// Bias and variance on the `1/k` spectrum, 40 replications.
pub fn fig4_config() -> SweepConfig {
    SweepConfig { estimate_kappa: true, ..projection_preset(inverse_index(), 1.0, 40) }
}

/// Bias and variance on the isotropic unit-trace spectrum, 40 replications.
pub fn fig5_config() -> SweepConfig {
    let iso = SpectrumConfig { kind: SpectrumKind::Isotropic, params: vec![1.0 / 400.0], path: None };
    SweepConfig { estimate_kappa: true, ..projection_preset(iso, 1.0, 40) }
}

pub fn assumptions(fig: Figure) -> Vec<String> {
    let mut a: Vec<String> = match fig {
        Figure::Fig1 | Figure::Fig4 | Figure::Fig5 => vec![
            "m grid is 10, 20, ..., 4n".into(),
            "Z and S are Rademacher".into(),
            "eigenbasis drawn from the Haar measure, target standard Gaussian rescaled to theta^T Sigma theta = 1".into(),
            "trace of Sigma normalised to 1".into(),
            "theory curves use the realised spectrum and target of the instance".into(),
        ],
        Figure::Fig2 => vec![
            "two atoms with pi1 = 0.5, sigma1 = 1, sigma2 = 4; gamma = 2; noise level 1".into(),
            "target has covariance I/d so that its signal measure matches the spectral measure".into(),
            "identity eigenbasis with Gaussian Z and S, equal in law to a Haar basis".into(),
            "delta grid 0.25, 0.5, 0.75, 1.5, 2 with m = round(delta n)".into(),
            "gap of means and mean absolute gap are both reported".into(),
        ],
        Figure::Fig3 => vec!["isotropic sigma = 1, n = 1000, lambda grid is 0 plus 60 log-spaced points in [1e-3, 3]".into()],
    };
    if fig == Figure::Fig1 {
        a.push("400 replications: 20 designs, 20 projections each".into());
    }
    a
}

/// Convergence study on a two-atom spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig2Preset {
    pub gamma: f64,
    pub pi1: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma_noise: f64,
    pub deltas: Vec<f64>,
    pub ns: Vec<usize>,
    pub realizations: usize,
    pub master_seed: u64,
}

impl Default for Fig2Preset {
    fn default() -> Self {
        Fig2Preset {
            gamma: 2.0,
            pi1: 0.5,
            sigma1: 1.0,
            sigma2: 4.0,
            sigma_noise: 1.0,
            deltas: vec![0.25, 0.5, 0.75, 1.5, 2.0],
            ns: vec![10, 100, 1000],
            realizations: 10,
            master_seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig2Gap {
    pub n: usize,
    pub delta: f64,
    pub m: usize,
    pub bias_theory: f64,
    pub var_theory: f64,
    /// `|mean(empirical) - theory|`.
    pub bias_gap_of_means: f64,
    /// `mean(|empirical - theory|)`.
    pub bias_mean_abs_gap: f64,
    pub var_gap_of_means: f64,
    pub var_mean_abs_gap: f64,
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Curve {
    pub n: usize,
    pub rows: Vec<CurveRow>,
    pub gaps: Vec<Fig2Gap>,
}

impl Fig2Curve {
    /// Mean absolute gaps averaged over the delta grid, `(bias, variance)`.
    pub fn average_abs_gaps(&self) -> (f64, f64) {
        let k = self.gaps.len() as f64;
        (
            self.gaps.iter().map(|g| g.bias_mean_abs_gap).sum::<f64>() / k,
            self.gaps.iter().map(|g| g.var_mean_abs_gap).sum::<f64>() / k,
        )
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std(v: &[f64]) -> Option<f64> {
    (v.len() > 1).then(|| {
        let m = mean(v);
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    })
}

pub fn run_fig2(p: &Fig2Preset) -> Result<Vec<Fig2Curve>> {
    p.ns.iter().map(|&n| fig2_for_n(p, n)).collect()
}

fn fig2_for_n(p: &Fig2Preset, n: usize) -> Result<Fig2Curve> {
    let d = (p.gamma * n as f64).round() as usize;
    let spec = make_two_dirac(d, p.pi1, p.sigma1, p.sigma2)?;
    let signal = SignalMeasure::uniform(&spec, 1.0)?;
    let ms: Vec<usize> = p.deltas.iter().map(|&delta| ((delta * n as f64).round() as usize).max(1)).collect();

    // samples[g] = (bias, variance) over realizations
    let mut samples: Vec<Vec<(f64, f64)>> = vec![Vec::new(); ms.len()];
    for r in 0..p.realizations {
        let cfg = SweepConfig {
            n,
            d,
            sigma_noise: p.sigma_noise,
            spectrum: SpectrumConfig {
                kind: SpectrumKind::TwoDirac,
                params: vec![p.pi1, p.sigma1, p.sigma2],
                path: None,
            },
            signal: SignalConfig {
                kind: SignalKind::RandomGaussian,
                seed: child_seed(p.master_seed, &[n as u64, r as u64, 0]),
                path: None,
            },
            m_grid: ms.clone(),
            lambda_grid: vec![],
            replications: 1,
            sampler: Sampler::Gaussian,
            master_seed: child_seed(p.master_seed, &[n as u64, r as u64, 1]),
            mode: Mode::Empirical,
            basis: BasisKind::Identity,
            estimate_kappa: false,
            sketches_per_design: 1,
        };
        let inst = cfg.instance(false)?;
        let reps = run_replications(&inst, &cfg.plan())?;
        for res in reps.results.iter().filter(|x| x.status != ReplicationStatus::Excluded) {
            samples[res.grid_index].push((res.bias, res.variance));
        }
    }

    let mut rows = Vec::with_capacity(ms.len());
    let mut gaps = Vec::with_capacity(ms.len());
    for (g, (&m, &delta)) in ms.iter().zip(&p.deltas).enumerate() {
        let t = rp_risk(&spec, &signal, n, m, p.sigma_noise)?;
        let b: Vec<f64> = samples[g].iter().map(|s| s.0).collect();
        let v: Vec<f64> = samples[g].iter().map(|s| s.1).collect();
        let used = b.len();
        let agg = crate::empirical::GridAggregate {
            grid_index: g,
            m: Some(m),
            lambda: None,
            bias_mean: (used > 0).then(|| mean(&b)),
            bias_std: std(&b),
            var_mean: (used > 0).then(|| mean(&v)),
            var_std: std(&v),
            used,
            excluded: p.realizations - used,
            clamped: 0,
            kappa_hat: None,
        };
        rows.push(curve_row(n, GridValue::M(m), &t, Some(&agg)));
        let abs_gap = |xs: &[f64], th: f64| mean(&xs.iter().map(|x| (x - th).abs()).collect::<Vec<_>>());
        gaps.push(Fig2Gap {
            n,
            delta,
            m,
            bias_theory: t.bias,
            var_theory: t.variance,
            bias_gap_of_means: (mean(&b) - t.bias).abs(),
            bias_mean_abs_gap: abs_gap(&b, t.bias),
            var_gap_of_means: (mean(&v) - t.variance).abs(),
            var_mean_abs_gap: abs_gap(&v, t.variance),
            used,
        });
    }
    Ok(Fig2Curve { n, rows, gaps })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3Preset {
    pub gammas: Vec<f64>,
    pub sigma: f64,
    pub n: usize,
    pub lambdas: Vec<f64>,
}

impl Default for Fig3Preset {
    fn default() -> Self {
        let k = 60;
        let (lo, hi) = (1e-3f64.ln(), 3f64.ln());
        let lambdas = std::iter::once(0.0)
            .chain((0..k).map(|i| (lo + (hi - lo) * i as f64 / (k - 1) as f64).exp()))
            .collect();
        Fig3Preset { gammas: vec![0.5, 1.0, 2.0], sigma: 1.0, n: 1000, lambdas }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3Row {
    pub gamma: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub kappa_closed: f64,
    pub regime: Regime,
    pub diverged: bool,
}

pub fn run_fig3(p: &Fig3Preset) -> Result<Vec<Fig3Row>> {
    let mut rows = Vec::new();
    for &gamma in &p.gammas {
        let d = (gamma * p.n as f64).round() as usize;
        let spec = make_isotropic(d, p.sigma)?;
        for &lambda in &p.lambdas {
            let sol = kappa_of_lambda(&spec, p.n, lambda)?;
            rows.push(Fig3Row {
                gamma,
                lambda,
                kappa: sol.kappa,
                kappa_closed: kappa_isotropic_closed(p.sigma, gamma, lambda)?,
                regime: sol.regime,
                diverged: sol.diverged,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_files_match_builtins() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
        for (name, cfg) in [("fig1", fig1_config()), ("fig4", fig4_config()), ("fig5", fig5_config())] {
            let loaded = crate::cli::config::load_config(&dir.join(format!("{name}.json"))).unwrap();
            assert_eq!(loaded, cfg, "{name}");
        }
    }

    #[test]
    fn fig3_curves_agree_with_closed_form() {
        for row in run_fig3(&Fig3Preset::default()).unwrap() {
            if row.diverged {
                assert_eq!(row.gamma, 1.0);
                assert_eq!(row.lambda, 0.0);
                continue;
            }
            let scale = row.kappa_closed.max(1e-300);
            assert!((row.kappa - row.kappa_closed).abs() <= 1e-9 * scale, "{row:?}");
        }
    }

    #[test]
    fn fig2_small() {
        let p = Fig2Preset { ns: vec![10, 40], realizations: 3, ..Fig2Preset::default() };
        let curves = run_fig2(&p).unwrap();
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[0].gaps.iter().map(|g| g.m).collect::<Vec<_>>(), vec![3, 5, 8, 15, 20]);
        assert!(curves.iter().all(|c| c.rows.iter().all(|r| r.reps_used == Some(3))));
    }
}
