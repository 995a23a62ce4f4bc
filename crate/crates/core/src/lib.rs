//! Desk-scale numerical laboratory for the stability of transonic normal
//! shocks in a dihedral (wedge-bounded) domain.
//!
//! The library is organized along the pipeline it implements:
//!
//! - [`background`]: planar shock states, jump solve, admissibility.
//! - [`wall`]: wedge wall families, hodograph change of variables, wall jets.
//! - [`coeffs`]: interior/boundary coefficient assembly in shock-front
//!   coordinates, the jump functional and its linearization.
//! - [`stability`]: quadratic-form multiplier construction and the
//!   certification of the energy hypotheses.
//! - [`solver`]: explicit finite-difference solver for the linearized
//!   problem on the extended domain, energy-ledger instrumentation.
//! - [`driver`]: the nonlinear iteration (frozen-coefficient sweeps) and the
//!   perturbation-response experiment.
//! - [`cli`]: run configuration, reports, command-line entry points.

pub mod background;
pub mod coeffs;
pub mod driver;
pub mod dual;
pub mod error;
pub mod jet;
pub mod solver;
pub mod stability;
pub mod wall;

pub use error::{Error, Result};
