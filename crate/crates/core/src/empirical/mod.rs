//! Finite-sample side: problem instances, samplers, exact conditional
//! risks, empirical implicit regularisation, trace probes and the
//! replication harness.
//!
//! Conditional risks average over the noise analytically, so each
//! replication only draws the design `Z` and, for projections, `S`.

mod conditional;
mod instance;
mod kappa;
mod probe;
mod replicate;
mod sampling;

pub use conditional::{conditional_risk_projected, conditional_risk_ridge, ConditionalRisk, RidgePath};
pub use instance::{build_design, haar_basis, unit_trace, ProblemInstance};
pub use kappa::{empirical_kappa_lambda, empirical_kappa_m};
pub use probe::{probe_trace_equivalents, TraceGap, TraceProbe, PROBE_NAMES};
pub use replicate::{
    run_replications, GridAggregate, ReplicationPlan, ReplicationResult, ReplicationStatus, Replications, SweepGrid,
    NEGATIVE_TOLERANCE, THREADS_ENV,
};
pub use sampling::{child_seed, sample_matrix, Sampler};
