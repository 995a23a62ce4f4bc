//! Initial traces compatible with the boundary conditions.
//!
//! The time levels `w_k = ∂₀ᵏw
//! |_{t=0}` are built recursively: w₀ and w₁
//! are data, w₂ is solved from the interior equation for the ∂₀₀ term.
//! Before returning, the wedge compatibility identities are verified: the
//! traces must satisfy the wall condition, and the oblique boundary
//! condition (differentiated in time through order one) must match `g` on
//! the shock face.  Trace input carries exact first and second space
//! derivatives so the checks are not polluted by grid-level differencing.

use super::field::CoefficientField;
use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Pointwise trace value with exact spatial derivatives.  `d2` is only
/// consulted for the order-zero trace (it feeds the ∂₀₀ solve); callers may
/// zero it for the order-one trace.
#[derive(Clone, Copy, Debug, Default)]
pub struct TraceJet {
    pub w: f64,
    pub d: [f64; 3],
    pub d2: [[f64; 3]; 3],
}

pub type TraceFn<'a> = &'a dyn Fn([f64; 3]) -> TraceJet;

/// Initial time levels on the dihedral grid, `traces[k][node] = ∂₀ᵏw(0)`.
#[derive(Clone, Debug)]
pub struct CompatibleData {
    pub traces: Vec<Vec<f64>>,
}

impl CompatibleData {
    pub fn order(&self) -> usize {
        self.traces.len() - 1
    }

    /// Homogeneous start for the zero-initial-data problem.
    pub fn zero(grid: &GridSpec) -> Self {
        CompatibleData { traces: vec![vec![0.0; grid.res_len()]; 3] }
    }
}

const IDENTITY_TOL: f64 = 1e-8;
/// Step for the time differencing of the data closures in the identity
/// checks; fine enough that the O(δ²) truncation stays below the tolerance.
const FD_T: f64 = 1e-5;

fn zero_jet(_y: [f64; 3]) -> TraceJet {
    TraceJet::default()
}

/// Solve the interior equation for ∂₀₀w at t = 0 from the given traces.
fn second_level(field: &dyn CoefficientField, y: [f64; 3], j0: &TraceJet, j1: &TraceJet) -> f64 {
    let c = field.interior(0.0, y);
    let mut rest = c.r0 * j0.w + c.r1[0] * j1.w;
    for a in 0..3 {
        rest += c.r1[a + 1] * j0.d[a];
        rest += 2.0 * c.r[0][a + 1] * j1.d[a];
        for b in 0..3 {
            rest += c.r[a + 1][b + 1] * j0.d2[a][b];
        }
    }
    (field.rhs_f(0.0, y) - rest) / c.r[0][0]
}

/// Build the k ≤ 2 initial levels and verify the wedge identities.
pub fn build_compatible_data(
    field: &dyn CoefficientField,
    grid: &GridSpec,
    w0: TraceFn,
    w1: TraceFn,
    k: usize,
) -> Result<CompatibleData> {
    if k > 2 {
        return Err(Error::Config(format!("compatibility order {k} not supported (max 2)")));
    }
    grid.validate()?;
    let (m1, m2, m3) = grid.res_dims();
    let mut traces = vec![vec![0.0; grid.res_len()]; 3];
    for i1 in 0..m1 {
        for i2 in 0..m2 {
            for i3 in 0..m3 {
                let y = [
                    i1 as f64 * grid.h1(),
                    -grid.l2 + i2 as f64 * grid.h2(),
                    i3 as f64 * grid.h3(),
                ];
                let p = grid.ridx(i1, i2, i3);
                let (j0, j1) = (w0(y), w1(y));
                traces[0][p] = j0.w;
                traces[1][p] = j1.w;
                traces[2][p] = second_level(field, y, &j0, &j1);
            }
        }
    }

    // Wall identities: ∂₃ of the order-0 and order-1 traces vanishes at y₃ = 0.
    let mut scale = 1.0f64;
    let mut worst = (0.0f64, [0.0; 3], "");
    for i1 in 0..m1 {
        for i2 in 0..m2 {
            let y = [i1 as f64 * grid.h1(), -grid.l2 + i2 as f64 * grid.h2(), 0.0];
            let (j0, j1) = (w0(y), w1(y));
            scale = scale.max(j0.w.abs()).max(j1.w.abs());
            for (r, tag) in [(j0.d[2].abs(), "d3 w0"), (j1.d[2].abs(), "d3 w1")] {
                if r > worst.0 {
                    worst = (r, y, tag);
                }
            }
        }
    }

    // Shock identities: ℬw = g and its first time derivative at t = 0,
    // using the constructed second level and centered differencing of the
    // data closures in time.
    for i2 in 0..m2 {
        for i3 in 0..m3 {
            let y2 = -grid.l2 + i2 as f64 * grid.h2();
            let y3 = i3 as f64 * grid.h3();
            let y = [0.0, y2, y3];
            let (j0, j1) = (w0(y), w1(y));
            let w2 = second_level(field, y, &j0, &j1);
            let bc = field.boundary(0.0, y2, y3);
            let grad0 = [j1.w, j0.d[0], j0.d[1], j0.d[2]];
            let grad1 = [w2, j1.d[0], j1.d[1], j1.d[2]];
            let apply = |b: &super::field::BoundaryCoeffs, grad: &[f64; 4], w: f64| {
                b.b[0] * grad[0] + b.b[1] * grad[1] + b.b[2] * grad[2] + b.b[3] * grad[3] + b.b_u * w
            };
            let g0 = field.rhs_g(0.0, y2, y3);
            scale = scale.max(g0.abs()).max(apply(&bc, &grad0, j0.w).abs());
            let r0 = (g0 - apply(&bc, &grad0, j0.w)).abs();
            if r0 > worst.0 {
                worst = (r0, y, "order-0 shock");
            }
            if k >= 2 {
                let bp = field.boundary(FD_T, y2, y3);
                let bm = field.boundary(-FD_T, y2, y3);
                let mut db = bc;
                for i in 0..4 {
                    db.b[i] = (bp.b[i] - bm.b[i]) / (2.0 * FD_T);
                }
                db.b_u = (bp.b_u - bm.b_u) / (2.0 * FD_T);
                let dg = (field.rhs_g(FD_T, y2, y3) - field.rhs_g(-FD_T, y2, y3)) / (2.0 * FD_T);
                let r1 =
                    (dg - apply(&db, &grad0, j0.w) - apply(&bc, &grad1, j1.w)).abs();
                if r1 > worst.0 {
                    worst = (r1, y, "order-1 shock");
                }
            }
        }
    }

    if worst.0 > IDENTITY_TOL * scale {
        return Err(Error::IncompatibleData(format!(
            "{} identity residual {:.3e} at y = {:?} exceeds {:.1e} x scale {:.3e}",
            worst.2, worst.0, worst.1, IDENTITY_TOL, scale
        )));
    }
    Ok(CompatibleData { traces })
}

/// Convenience wrapper for the homogeneous problem (still runs the checks,
/// catching inhomogeneous data that cannot match zero traces).
pub fn build_zero_data(field: &dyn CoefficientField, grid: &GridSpec) -> Result<CompatibleData> {
    build_compatible_data(field, grid, &zero_jet, &zero_jet, 2)
}
