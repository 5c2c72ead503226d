use rayon::prelude::*;
use serde::Serialize;

use super::conditional::{projected_parts, ConditionalRisk, RidgePath};
use super::instance::ProblemInstance;
use super::kappa::{empirical_kappa_lambda, kappa_from_sketch_cov};
use super::sampling::{child_seed, sample_matrix, Sampler};
use crate::numkernel::SymMatrix;
use crate::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DDLAB_THREADS";

/// Values in `[-NEGATIVE_TOLERANCE, 0)` are roundoff and clamped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-10;

const STREAM_DESIGN: u64 = 0;
const STREAM_PROJECTION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepGrid {
    /// Number of random projections `m`.
    Projections(Vec<usize>),
    /// Ridge penalties `lambda`.
    Penalties(Vec<f64>),
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        match self {
            SweepGrid::Projections(g) => g.len(),
            SweepGrid::Penalties(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationPlan {
    pub grid: SweepGrid,
    pub replications: usize,
    /// Consecutive replications sharing one design `Z`, each with a fresh
    /// projection. `1` redraws both every time.
    pub sketches_per_design: usize,
    pub sampler: Sampler,
    pub master_seed: u64,
    /// Also estimate `kappa` from each draw.
    pub estimate_kappa: bool,
}

impl ReplicationPlan {
    pub fn projections(m_grid: Vec<usize>, replications: usize, sampler: Sampler, master_seed: u64) -> Self {
        ReplicationPlan {
            grid: SweepGrid::Projections(m_grid),
            replications,
            sketches_per_design: 1,
            sampler,
            master_seed,
            estimate_kappa: false,
        }
    }

    pub fn penalties(lambda_grid: Vec<f64>, replications: usize, sampler: Sampler, master_seed: u64) -> Self {
        ReplicationPlan { grid: SweepGrid::Penalties(lambda_grid), ..Self::projections(vec![], replications, sampler, master_seed) }
    }

    fn validate(&self) -> Result<()> {
        if self.sketches_per_design == 0 {
            return Err(Error::arg("sketches_per_design must be >= 1"));
        }
        match &self.grid {
            SweepGrid::Projections(g) if g.contains(&0) => Err(Error::arg("projection grid contains m = 0")),
            SweepGrid::Penalties(g) if g.iter().any(|l| !(*l >= 0.0 && l.is_finite())) => {
                Err(Error::arg("penalty grid must be finite and nonnegative"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicationStatus {
    Ok,
    /// A roundoff-level negative value was set to zero.
    Clamped,
    /// The draw failed a numerical check and is left out of the aggregates.
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub grid_index: usize,
    pub rep_index: usize,
    pub m: Option<usize>,
    pub lambda: Option<f64>,
    pub bias: f64,
    pub variance: f64,
    pub kappa_hat: Option<f64>,
    pub status: ReplicationStatus,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridAggregate {
    pub grid_index: usize,
    pub m: Option<usize>,
    pub lambda: Option<f64>,
    pub bias_mean: Option<f64>,
    pub bias_std: Option<f64>,
    pub var_mean: Option<f64>,
    pub var_std: Option<f64>,
    pub used: usize,
    pub excluded: usize,
    pub clamped: usize,
    /// Reciprocal of the mean of `1 / kappa_hat`.
    pub kappa_hat: Option<f64>,
}

impl GridAggregate {
    /// Standard error of the bias mean.
    pub fn bias_se(&self) -> Option<f64> {
        self.bias_std.map(|s| s / (self.used as f64).sqrt())
    }

    pub fn var_se(&self) -> Option<f64> {
        self.var_std.map(|s| s / (self.used as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replications {
    /// Ordered by grid index, then replication index.
    pub results: Vec<ReplicationResult>,
    pub aggregates: Vec<GridAggregate>,
}

/// Runs `plan` on `inst`: every replication draws `Z` (and for projection
/// sweeps one `S` per grid point) from seeds derived from the master seed,
/// and records the exact conditional bias and variance.
///
/// Replications run in parallel, capped by `DDLAB_THREADS`; the output does
/// not depend on scheduling.
pub fn run_replications(inst: &ProblemInstance, plan: &ReplicationPlan) -> Result<Replications> {
    plan.validate()?;
    let run = || -> Vec<Vec<ReplicationResult>> {
        (0..plan.replications).into_par_iter().map(|r| one_replication(inst, plan, r)).collect()
    };
    let per_rep = match thread_cap()? {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::arg(format!("cannot build thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let grid_len = plan.grid.len();
    let mut results = Vec::with_capacity(grid_len * plan.replications);
    for g in 0..grid_len {
        for rep in &per_rep {
            results.push(rep[g].clone());
        }
    }
    let aggregates = (0..grid_len).map(|g| aggregate(g, &results[g * plan.replications..(g + 1) * plan.replications], plan)).collect();
    Ok(Replications { results, aggregates })
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => Err(Error::arg(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn settle(v: f64) -> Result<(f64, bool)> {
    if v >= 0.0 {
        Ok((v, false))
    } else if v >= -NEGATIVE_TOLERANCE {
        Ok((0.0, true))
    } else {
        Err(Error::NegativeRisk(v))
    }
}

fn record(
    grid_index: usize,
    rep_index: usize,
    m: Option<usize>,
    lambda: Option<f64>,
    outcome: Result<(ConditionalRisk, Option<f64>)>,
) -> ReplicationResult {
    let settled = outcome.and_then(|(risk, kappa)| {
        let (bias, cb) = settle(risk.bias)?;
        let (variance, cv) = settle(risk.variance)?;
        Ok((bias, variance, kappa, cb || cv))
    });
    match settled {
        Ok((bias, variance, kappa_hat, clamped)) => ReplicationResult {
            grid_index,
            rep_index,
            m,
            lambda,
            bias,
            variance,
            kappa_hat,
            status: if clamped { ReplicationStatus::Clamped } else { ReplicationStatus::Ok },
            note: None,
        },
        Err(e) => ReplicationResult {
            grid_index,
            rep_index,
            m,
            lambda,
            bias: f64::NAN,
            variance: f64::NAN,
            kappa_hat: None,
            status: ReplicationStatus::Excluded,
            note: Some(e.to_string()),
        },
    }
}

fn one_replication(inst: &ProblemInstance, plan: &ReplicationPlan, r: usize) -> Vec<ReplicationResult> {
    let design_seed = child_seed(plan.master_seed, &[STREAM_DESIGN, (r / plan.sketches_per_design) as u64]);
    let x = inst.sample_design(plan.sampler, design_seed);
    match &plan.grid {
        SweepGrid::Projections(grid) => grid
            .iter()
            .enumerate()
            .map(|(g, &m)| {
                let s = sample_matrix(inst.d(), m, plan.sampler, child_seed(plan.master_seed, &[STREAM_PROJECTION, g as u64, r as u64]));
                let want = plan.estimate_kappa && m < inst.d();
                let outcome = projected_parts(inst, &x, &s, want).map(|(risk, sketch_cov)| {
                    let kappa = sketch_cov.and_then(|c| SymMatrix::symmetrize(c).and_then(|c| kappa_from_sketch_cov(&c)).ok());
                    (risk, kappa)
                });
                record(g, r, Some(m), None, outcome)
            })
            .collect(),
        SweepGrid::Penalties(grid) => {
            let path = RidgePath::new(inst, &x);
            grid.iter()
                .enumerate()
                .map(|(g, &lambda)| {
                    let outcome = match &path {
                        Ok(p) => p.risk(lambda).map(|risk| {
                            let kappa =
                                plan.estimate_kappa.then(|| empirical_kappa_lambda(&x, inst.n, lambda).ok()).flatten();
                            (risk, kappa)
                        }),
                        Err(e) => Err(Error::arg(e.to_string())),
                    };
                    record(g, r, None, Some(lambda), outcome)
                })
                .collect()
        }
    }
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let k = values.len();
    if k == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (Some(mean), None);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (Some(mean), Some((ss / (k - 1) as f64).sqrt()))
}

fn aggregate(grid_index: usize, results: &[ReplicationResult], plan: &ReplicationPlan) -> GridAggregate {
    let (m, lambda) = match &plan.grid {
        SweepGrid::Projections(g) => (Some(g[grid_index]), None),
        SweepGrid::Penalties(g) => (None, Some(g[grid_index])),
    };
    let used: Vec<&ReplicationResult> = results.iter().filter(|r| r.status != ReplicationStatus::Excluded).collect();
    let bias: Vec<f64> = used.iter().map(|r| r.bias).collect();
    let var: Vec<f64> = used.iter().map(|r| r.variance).collect();
    let (bias_mean, bias_std) = mean_std(&bias);
    let (var_mean, var_std) = mean_std(&var);
    let inv_kappa: Vec<f64> = used.iter().filter_map(|r| r.kappa_hat).map(|k| 1.0 / k).collect();
    let kappa_hat = (!inv_kappa.is_empty()).then(|| inv_kappa.len() as f64 / inv_kappa.iter().sum::<f64>());
    GridAggregate {
        grid_index,
        m,
        lambda,
        bias_mean,
        bias_std,
        var_mean,
        var_std,
        used: used.len(),
        excluded: results.len() - used.len(),
        clamped: results.iter().filter(|r| r.status == ReplicationStatus::Clamped).count(),
        kappa_hat,
    }
}
