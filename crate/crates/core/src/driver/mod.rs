//! Nonlinear front dynamics as a fixed-point iteration of the linear solver.
//!
//! The unknown is transplanted to wall-adapted coordinates (`seed`), the
//! initial time levels are lifted into a polynomial so the remainder starts
//! from zero data (`seed`), each sweep freezes the coefficients at the
//! previous iterate and solves one linear problem (`sweep`), and the whole
//! loop — admissibility gates, contraction monitoring, front recovery — is
//! packaged as a reproducible experiment (`experiment`).

mod experiment;
mod seed;
mod sweep;

pub use experiment::{
    run_stability_experiment, write_front_csv, ExperimentSpec, FrontSample, IterationReport,
};
pub use seed::{assemble_lift, build_seed, SeedInputs, TaylorSeed};
pub use sweep::{
    chained_operator, chained_rhs, curvature_terms, diff_norm, picard_sweep, raw_residual,
    ExperimentContext, IterateHistory, SeedCache, StatePoint, SweepOutcome,
};
