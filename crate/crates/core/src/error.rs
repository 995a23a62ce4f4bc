//! Error taxonomy shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The jump relations admit no downstream state for the given upstream data.
    #[error("no downstream state: {0}")]
    NoDownstreamState(String),

    /// Upstream state fails the supersonic requirement q² > c².
    #[error("upstream not supersonic: q^2 = {q2:.6e} <= c^2 = {c2:.6e}")]
    NotSupersonic { q2: f64, c2: f64 },

    /// Background fails the strict stability inequality required by the
    /// nonlinear driver.
    #[error("background fails strict stability inequality (margin {margin:.6e})")]
    UnstableBackground { margin: f64 },

    /// The hodograph change of variables is degenerate at a sample.
    #[error("degenerate hodograph map: |du/dy1| = {du1:.3e} below floor {floor:.3e}")]
    DegenerateMap { du1: f64, floor: f64 },

    /// An implicit coordinate solve did not converge.
    #[error("implicit solve failed after {iters} iterations (residual {residual:.3e})")]
    ImplicitSolveFailed { iters: usize, residual: f64 },

    /// A state sample left the physical regime (density/sound-speed floors).
    #[error("state sample outside physical regime: {0}")]
    DegenerateSample(String),

    /// The principal coefficient matrix lost invertibility at a sample.
    #[error("singular principal part: {0}")]
    SingularPrincipalPart(String),

    /// A quadratic-form certification failed.
    #[error("form not coercive: {0}")]
    FormNotCoercive(String),

    /// A coefficient required to vanish on the wall plane does not.
    #[error("wall-vanishing violation: {0}")]
    VanishingViolation(String),

    /// Configured time step exceeds the stability limit.
    #[error("time step {dt:.6e} exceeds CFL limit {limit:.6e}")]
    CflViolation { dt: f64, limit: f64 },

    /// The oblique boundary elimination lost its pivot.
    #[error("boundary solve degenerate: {0}")]
    BoundarySolveDegenerate(String),

    /// Initial data violate the discrete compatibility conditions.
    #[error("incompatible data: {0}")]
    IncompatibleData(String),

    /// The Taylor seed for the iteration could not be formed.
    #[error("seed degenerate: {0}")]
    SeedDegenerate(String),

    /// An iterate left the admissible regime mid-run.
    #[error("regime exit: {0}")]
    RegimeExit(String),

    /// The iteration stopped contracting.
    #[error("no contraction: {0}")]
    NoContraction(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
