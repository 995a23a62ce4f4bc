//! Interior coefficient assembly: the second-order wave operator for the
//! full potential, pushed through the hodograph change of variables so the
//! unknown is the front graph u(y).
//!
//! The equation assembled here is
//!   Σ ã_ij ∂²_{y_i y_j} u + a₂ ∂_{y₂} u + a₃ ∂_{y₃} u = f,
//! equivalent (for non-degenerate samples) to Σ A_ij ∂²_{x_i x_j} Φ = 0 for
//! the downstream potential Φ = Φ⁻ - φ.

use super::FlowSample;
use crate::error::Result;
use crate::wall::{dphi_from_du, map_factor_matrix};
use nalgebra::Matrix4;

#[derive(Clone, Copy, Debug)]
pub struct CoefficientBundle {
    /// Downstream density and squared sound speed at the sample.
    pub rho: f64,
    pub c2: f64,
    /// Front-potential derivatives (φ_t, ∇φ) recovered from du.
    pub dphi: [f64; 4],
    /// Physical-space wave-operator coefficients at the state.
    pub a: [[f64; 4]; 4],
    /// Principal coefficients in shock-front coordinates.
    pub atilde: [[f64; 4]; 4],
    /// First-order coefficients on ∂_{y₂}u and ∂_{y₃}u (map curvature).
    pub a2: f64,
    pub a3: f64,
    /// Source from upstream curvature: -u₁³ Σ A_ij ∂²_{x_i x_j} Φ⁻.
    pub f_rhs: f64,
}

/// Physical-space coefficients A for the wave operator at the downstream
/// state (Φ_t, ∇Φ): A₀₀ = 1, A₀ⱼ = Φⱼ, A_ij = ΦᵢΦⱼ - c²δ_ij.
fn a_matrix(grad: [f64; 3], c2: f64) -> [[f64; 4]; 4] {
    let mut a = [[0.0; 4]; 4];
    a[0][0] = 1.0;
    for i in 0..3 {
        a[0][1 + i] = grad[i];
        a[1 + i][0] = grad[i];
        for j in 0..3 {
            a[1 + i][1 + j] = grad[i] * grad[j] - if i == j { c2 } else { 0.0 };
        }
    }
    a
}

pub fn eval_interior(s: &FlowSample) -> Result<CoefficientBundle> {
    let dphi = dphi_from_du(s.wall, &s.p, s.du, s.du1_floor)?;
    let up = s.upstream.dphi;
    // Downstream state: Φ = Φ⁻ - φ.
    let phi_plus_t = up[0] - dphi[0];
    let grad = [up[1] - dphi[1], up[2] - dphi[2], up[3] - dphi[3]];
    let grad_sq = grad.iter().map(|g| g * g).sum::<f64>();
    let rho = s.gas.density_from_state(s.bernoulli, phi_plus_t, grad_sq)?;
    let c2 = s.gas.sound_speed_sq(rho);
    let a = a_matrix(grad, c2);

    let [u0, u1, u2, u3] = s.du;
    let (w1, w2) = (s.wall.d1, s.wall.d2);
    // Row vectors of the map Jacobian entering the transform.
    let m = [
        1.0 + w1 * u3 - s.p.p1 * u2,
        w2 * u3 - (1.0 + s.p.p2) * u2,
        -s.p.p3 * u2 - u3,
    ];
    let e = [s.p.p1, 1.0 + s.p.p2, s.p.p3];
    let n = [-w1, -w2, 1.0];
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let (gm, ge, gn) = (dot(grad, m), dot(grad, e), dot(grad, n));

    // Closed forms for Ã = JᵀAJ, expanded by hand.
    let mut at = [[0.0; 4]; 4];
    at[0][0] = u1 * u1;
    at[0][1] = u1 * (-u0 + gm);
    at[0][2] = u1 * u1 * ge;
    at[0][3] = u1 * u1 * gn;
    at[1][1] = u0 * u0 - 2.0 * u0 * gm + gm * gm - c2 * dot(m, m);
    at[1][2] = u1 * (-u0 * ge + gm * ge - c2 * dot(m, e));
    at[1][3] = u1 * (-u0 * gn + gm * gn - c2 * dot(m, n));
    at[2][2] = u1 * u1 * (ge * ge - c2 * dot(e, e));
    at[2][3] = u1 * u1 * (ge * gn - c2 * dot(e, n));
    at[3][3] = u1 * u1 * (gn * gn - c2 * dot(n, n));
    for i in 0..4 {
        for j in 0..i {
            at[i][j] = at[j][i];
        }
    }

    // First-order coefficients: second-derivative traces of the map,
    // a₂ = u₁² Σ A_ij ∂²p, a₃ = -u₁² Σ A_ij ∂²W (spatial indices).
    let pm = [
        [s.p.p11, s.p.p12, s.p.p13],
        [s.p.p12, s.p.p22, s.p.p23],
        [s.p.p13, s.p.p23, s.p.p33],
    ];
    let wm = [
        [s.wall.d11, s.wall.d12, 0.0],
        [s.wall.d12, s.wall.d22, 0.0],
        [0.0, 0.0, 0.0],
    ];
    let mut a2 = 0.0;
    let mut a3 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            a2 += a[1 + i][1 + j] * pm[i][j];
            a3 -= a[1 + i][1 + j] * wm[i][j];
        }
    }
    a2 *= u1 * u1;
    a3 *= u1 * u1;

    // Upstream curvature source.
    let mut trace_up = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            trace_up += a[i][j] * s.upstream.d2phi[i][j];
        }
    }
    let f_rhs = -u1 * u1 * u1 * trace_up;

    Ok(CoefficientBundle { rho, c2, dphi, a, atilde: at, a2, a3, f_rhs })
}

/// Independent route for the principal transform: assemble J = u₁Mᵀ and
/// multiply JᵀAJ with a general-purpose matrix kernel. Shares only the
/// state recovery with [`eval_interior`].
pub fn atilde_matrix_oracle(s: &FlowSample) -> Result<[[f64; 4]; 4]> {
    let dphi = dphi_from_du(s.wall, &s.p, s.du, s.du1_floor)?;
    let up = s.upstream.dphi;
    let phi_plus_t = up[0] - dphi[0];
    let grad = [up[1] - dphi[1], up[2] - dphi[2], up[3] - dphi[3]];
    let grad_sq = grad.iter().map(|g| g * g).sum::<f64>();
    let rho = s.gas.density_from_state(s.bernoulli, phi_plus_t, grad_sq)?;
    let c2 = s.gas.sound_speed_sq(rho);
    let a = a_matrix(grad, c2);
    let j = map_factor_matrix(s.wall, &s.p, s.du);
    let jm = Matrix4::from_fn(|r, c| j[r][c]);
    let am = Matrix4::from_fn(|r, c| a[r][c]);
    let res = jm.transpose() * am * jm;
    let mut out = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = res[(r, c)];
        }
    }
    Ok(out)
}
