//! Coefficient assembly in shock-front coordinates: the interior wave
//! operator after the hodograph change of variables, and the jump functional
//! on the front with its linearization.

mod interior;
mod jump;
mod upstream;

pub use interior::{atilde_matrix_oracle, eval_interior, CoefficientBundle};
pub use jump::{eval_g, eval_g_bracket, g_kernel, linearize_g, GLinearization};
pub use upstream::{Perturbation, UpstreamEval, UpstreamField};

use crate::background::Gas;
use crate::error::Result;
use crate::jet::Jet3;
use crate::wall::{weight_p, WallSpec, WeightJet};

/// Pointwise state in shock-front coordinates: everything the interior and
/// boundary assemblies need at one sample.
///
/// `x` is the physical point; its first component is the front-graph value u
/// at the corresponding y-point. `du` holds (∂_{y₀}u, …, ∂_{y₃}u).
#[derive(Clone, Copy, Debug)]
pub struct FlowSample {
    pub gas: Gas,
    pub bernoulli: f64,
    pub t: f64,
    pub x: [f64; 3],
    pub du: [f64; 4],
    pub wall: Jet3,
    pub p: WeightJet,
    pub upstream: UpstreamEval,
    /// Floor on |∂_{y₁}u| below which the hodograph map is degenerate.
    pub du1_floor: f64,
}

impl FlowSample {
    pub fn build(
        gas: Gas,
        bernoulli: f64,
        t: f64,
        x: [f64; 3],
        du: [f64; 4],
        wall_spec: &WallSpec,
        upstream: &UpstreamField,
    ) -> Result<Self> {
        let wall = wall_spec.jet3(x[0], x[1]);
        let p = weight_p(wall, x[2]);
        let up = upstream.eval(t, x, wall_spec);
        Ok(Self { gas, bernoulli, t, x, du, wall, p, upstream: up, du1_floor: 1e-8 })
    }
}
