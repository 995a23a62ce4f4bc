//! Mass-transport condition across the front and its linearization in the
//! front graph. The residual G vanishes identically on a planar background;
//! its gradient supplies the oblique boundary coefficients of the linearized
//! problem.

use super::FlowSample;
use crate::background::Gas;
use crate::dual::{Dual, Real};
use crate::error::Result;
use crate::wall::{dphi_from_du, dphi_from_du_gen};

/// Compact form of the transport residual,
///   G = (ρ⁺ - ρ⁻)(φ_t + ∇φ·∇Φ⁻) - |∇φ|² ρ⁺,
/// with both densities recovered from the shared Bernoulli constant.
/// `dphi` holds (φ_t, ∇φ), `dup` holds (∂ₜΦ⁻, ∇Φ⁻).
pub fn g_kernel<T: Real>(gas: Gas, bernoulli: f64, dphi: [T; 4], dup: [T; 4]) -> Result<T> {
    let up_sq = dup[1] * dup[1] + dup[2] * dup[2] + dup[3] * dup[3];
    let rho_minus = gas.density_from_state(bernoulli, dup[0], up_sq)?;
    let dn = [dup[0] - dphi[0], dup[1] - dphi[1], dup[2] - dphi[2], dup[3] - dphi[3]];
    let dn_sq = dn[1] * dn[1] + dn[2] * dn[2] + dn[3] * dn[3];
    let rho_plus = gas.density_from_state(bernoulli, dn[0], dn_sq)?;
    let transport = dphi[0] + dphi[1] * dup[1] + dphi[2] * dup[2] + dphi[3] * dup[3];
    let phi_sq = dphi[1] * dphi[1] + dphi[2] * dphi[2] + dphi[3] * dphi[3];
    Ok((rho_plus - rho_minus) * transport - phi_sq * rho_plus)
}

pub fn eval_g(s: &FlowSample) -> Result<f64> {
    let dphi = dphi_from_du(s.wall, &s.p, s.du, s.du1_floor)?;
    g_kernel(s.gas, s.bernoulli, dphi, s.upstream.dphi)
}

/// Bracket form of the same residual, [f] := f⁻ - f⁺:
///   [ρ] φ_t + Σⱼ [ρ ∂ⱼΦ] ∂ⱼφ.
/// Identically equal to -G; assembled independently as a sign-convention
/// cross-check.
pub fn eval_g_bracket(s: &FlowSample) -> Result<f64> {
    let dphi = dphi_from_du(s.wall, &s.p, s.du, s.du1_floor)?;
    let dup = s.upstream.dphi;
    let up_sq = dup[1] * dup[1] + dup[2] * dup[2] + dup[3] * dup[3];
    let rho_minus = s.gas.density_from_state(s.bernoulli, dup[0], up_sq)?;
    let dn = [dup[0] - dphi[0], dup[1] - dphi[1], dup[2] - dphi[2], dup[3] - dphi[3]];
    let dn_sq = dn[1] * dn[1] + dn[2] * dn[2] + dn[3] * dn[3];
    let rho_plus = s.gas.density_from_state(s.bernoulli, dn[0], dn_sq)?;
    let mut g = (rho_minus - rho_plus) * dphi[0];
    for j in 1..4 {
        g += (rho_minus * dup[j] - rho_plus * dn[j]) * dphi[j];
    }
    Ok(g)
}

/// Gradient of G with respect to the front graph: coefficients on the four
/// derivatives ∂u and on the value of u itself (through the x₁-dependence of
/// the wall slopes, the shear weight, and the upstream state; the transverse
/// point is held fixed — the wall-adapted change of unknown accounts for the
/// rest).
#[derive(Clone, Copy, Debug)]
pub struct GLinearization {
    pub b: [f64; 4],
    pub b_u: f64,
    pub value: f64,
}

pub fn linearize_g(s: &FlowSample) -> Result<GLinearization> {
    // Direction 4 is the u-direction; everything that depends on x₁ = u is
    // seeded with its ∂₁ there.
    let slope = |val: f64, d1: f64| {
        let mut d = Dual::<5>::constant(val);
        d.eps[4] = d1;
        d
    };
    let du = [
        Dual::<5>::var(s.du[0], 0),
        Dual::<5>::var(s.du[1], 1),
        Dual::<5>::var(s.du[2], 2),
        Dual::<5>::var(s.du[3], 3),
    ];
    let dphi = dphi_from_du_gen(
        slope(s.wall.d1, s.wall.d11),
        slope(s.wall.d2, s.wall.d12),
        slope(s.p.p1, s.p.p11),
        slope(s.p.p2, s.p.p12),
        slope(s.p.p3, s.p.p13),
        du,
        s.du1_floor,
    )?;
    let dup = [
        slope(s.upstream.dphi[0], s.upstream.d2phi[0][1]),
        slope(s.upstream.dphi[1], s.upstream.d2phi[1][1]),
        slope(s.upstream.dphi[2], s.upstream.d2phi[2][1]),
        slope(s.upstream.dphi[3], s.upstream.d2phi[3][1]),
    ];
    let g = g_kernel(s.gas, s.bernoulli, dphi, dup)?;
    Ok(GLinearization {
        b: [g.eps[0], g.eps[1], g.eps[2], g.eps[3]],
        b_u: g.eps[4],
        value: g.val,
    })
}
