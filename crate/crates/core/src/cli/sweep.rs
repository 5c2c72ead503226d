use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::SweepConfig;
use super::output::{CurveRow, GridValue};
use crate::empirical::{child_seed, run_replications, GridAggregate, ProblemInstance, Replications, SweepGrid, TraceProbe};
use crate::numkernel::SymMatrix;
use crate::spectrum::{SignalMeasure, Spectrum};
use crate::theory::{ridge_risk, rp_risk, RiskBreakdown};
use crate::Result;

const STREAM_PROBE: u64 = 2;

pub struct SweepOutput {
    pub instance: ProblemInstance,
    pub rows: Vec<CurveRow>,
    pub replications: Option<Replications>,
}

fn theory_point(spec: &Spectrum, signal: &SignalMeasure, cfg: &SweepConfig, grid: GridValue) -> Result<RiskBreakdown> {
    match grid {
        GridValue::M(m) => rp_risk(spec, signal, cfg.n, m, cfg.sigma_noise),
        GridValue::Lambda(l) => ridge_risk(spec, signal, cfg.n, cfg.sigma_noise, l),
    }
}

/// Builds one curve row from the theory point and, when present, the
/// replication aggregate of the same grid point.
pub fn curve_row(n: usize, grid: GridValue, theory: &RiskBreakdown, agg: Option<&GridAggregate>) -> CurveRow {
    CurveRow {
        grid,
        delta: match grid {
            GridValue::M(m) => Some(m as f64 / n as f64),
            GridValue::Lambda(_) => None,
        },
        bias_theory: theory.bias,
        var_theory: theory.variance,
        total_theory: theory.total,
        diverged: theory.diverged,
        bias_emp_mean: agg.and_then(|a| a.bias_mean),
        bias_emp_std: agg.and_then(|a| a.bias_std),
        var_emp_mean: agg.and_then(|a| a.var_mean),
        var_emp_std: agg.and_then(|a| a.var_std),
        reps_used: agg.map(|a| a.used),
        kappa: theory.kappa.is_finite().then_some(theory.kappa),
    }
}

/// Theory curve of the configured instance, plus replication averages when
/// the mode asks for them.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let empirical = cfg.mode.runs_empirical();
    let instance = cfg.instance(empirical)?;
    let spec = instance.spectrum()?;
    let signal = instance.signal()?;
    let grid: Vec<GridValue> = match cfg.sweep_grid() {
        SweepGrid::Projections(g) => g.into_iter().map(GridValue::M).collect(),
        SweepGrid::Penalties(g) => g.into_iter().map(GridValue::Lambda).collect(),
    };
    let replications = if empirical { Some(run_replications(&instance, &cfg.plan())?) } else { None };
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let t = theory_point(&spec, &signal, cfg, g)?;
            Ok(curve_row(cfg.n, g, &t, replications.as_ref().map(|r| &r.aggregates[i])))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutput { instance, rows, replications })
}

/// Matrices available as `A` and `B` for the trace probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMatrix {
    Identity,
    Sigma,
    /// `theta_star theta_star^T`.
    Target,
}

impl ProbeMatrix {
    pub fn build(self, inst: &ProblemInstance) -> SymMatrix {
        match self {
            ProbeMatrix::Identity => SymMatrix::identity(inst.d()),
            ProbeMatrix::Sigma => inst.covariance(),
            ProbeMatrix::Target => {
                let t = inst.theta_star();
                let outer: DMatrix<f64> = t * t.transpose();
                SymMatrix::symmetrize(outer).expect("outer product is square")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub rep: usize,
    pub lambda: f64,
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_gap: f64,
}

/// Trace probes on `cfg.replications` designs (at least one) for every
/// penalty in `cfg.lambda_grid`.
pub fn run_probes(cfg: &SweepConfig, a: ProbeMatrix, b: ProbeMatrix) -> Result<(ProblemInstance, Vec<ProbeRow>)> {
    let instance = cfg.instance(true)?;
    let (am, bm) = (a.build(&instance), b.build(&instance));
    let mut rows = Vec::new();
    for rep in 0..cfg.replications.max(1) {
        let x = instance.sample_design(cfg.sampler, child_seed(cfg.master_seed, &[STREAM_PROBE, rep as u64]));
        let probe = TraceProbe::new(&instance, &x, &am, &bm)?;
        for &lambda in &cfg.lambda_grid {
            for g in probe.at(lambda)? {
                rows.push(ProbeRow { rep, lambda, name: g.name, lhs: g.lhs, rhs: g.rhs, rel_gap: g.rel_gap() });
            }
        }
    }
    Ok((instance, rows))
}
