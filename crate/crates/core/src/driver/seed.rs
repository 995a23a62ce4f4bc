//! Taylor start of the nonlinear iteration.
//!
//! The front graph u is replaced by the wall-adapted unknown
//! ū(y) = u + y₃ N(u, x₂*), where N is the wall-slope weight and x₂* solves
//! x₂* = y₂ − y₃ N(u, x₂*).  Given initial data (u₀, u₁) for the graph, the
//! seed produces the first three time levels of ū — the third one by reading
//! the interior equation at t = 0 — and lifts them into the polynomial
//! ψ(t, y) = ū₀ + t ū₁ + t²/2 ū₂, so the remaining unknown ũ = ū − ψ starts
//! from zero data that are compatible through second order.

use crate::background::Gas;
use crate::coeffs::{eval_interior, FlowSample, UpstreamField};
use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::solver::{SpaceTimeJet, TraceFn, TraceJet};
use crate::wall::{kappa_jet, normal_weight, physical_from_graph, u_bar_from_u, WallSpec};

use super::sweep::curvature_terms;

/// Floor on the ∂²_t coefficient κ_ū·ã₀₀ when solving for the second level.
const DIAG_FLOOR: f64 = 1e-10;

/// Step for the finite differences that supply the few derivative entries
/// with no closed-form route (second derivatives of implicitly defined
/// quantities).
const FD_H: f64 = 1e-5;

/// Everything the seed needs besides the data themselves.
#[derive(Clone, Copy)]
pub struct SeedInputs<'a> {
    pub gas: Gas,
    pub bernoulli: f64,
    pub wall: &'a WallSpec,
    pub upstream: &'a UpstreamField,
    /// Highest Taylor order carried by the lift (at most 2).
    pub k_max: usize,
}

/// Wall-adapted initial levels, evaluated on demand.
pub struct TaylorSeed<'a> {
    gas: Gas,
    bernoulli: f64,
    wall: &'a WallSpec,
    upstream: &'a UpstreamField,
    u0: TraceFn<'a>,
    u1: TraceFn<'a>,
    pub k_max: usize,
}

/// Validate the inputs and return the seed. Fails fast when the data are
/// already degenerate at the domain corner (for example a front graph with
/// no y₁-slope, which leaves the time-diagonal coefficient without a sign).
pub fn build_seed<'a>(
    u0: TraceFn<'a>,
    u1: TraceFn<'a>,
    inputs: SeedInputs<'a>,
) -> Result<TaylorSeed<'a>> {
    if inputs.k_max > 2 {
        return Err(Error::Config(format!(
            "the Taylor lift is truncated at order 2; got k_max = {}",
            inputs.k_max
        )));
    }
    let seed = TaylorSeed {
        gas: inputs.gas,
        bernoulli: inputs.bernoulli,
        wall: inputs.wall,
        upstream: inputs.upstream,
        u0,
        u1,
        k_max: inputs.k_max,
    };
    seed.levels([0.0, 0.0, 0.0])?;
    Ok(seed)
}

/// Wall-slope weight N with its partials at (u₀(y), x₂*(y)), together with
/// the exact gradient of the auxiliary argument x₂*.
struct WallChain {
    n: Jet2,
    dx2: [f64; 3],
    den: f64,
}

impl TaylorSeed<'_> {
    fn wall_chain(&self, y: [f64; 3], j0: &TraceJet) -> Result<WallChain> {
        let (_, x2s) = u_bar_from_u(self.wall, j0.w, y[1], y[2])?;
        let n = normal_weight(self.wall.jet3(j0.w, x2s));
        let den = 1.0 + y[2] * n.d2;
        if den.abs() < 0.5 {
            return Err(Error::SeedDegenerate(format!(
                "wall-adapted denominator {den:.3e} under floor 1/2 at y = {y:?}"
            )));
        }
        let mut dx2 = [0.0; 3];
        for k in 0..3 {
            let d2 = if k == 1 { 1.0 } else { 0.0 };
            let d3 = if k == 2 { 1.0 } else { 0.0 };
            dx2[k] = (d2 - d3 * n.v - y[2] * n.d1 * j0.d[k]) / den;
        }
        Ok(WallChain { n, dx2, den })
    }

    /// Zeroth level ū₀ = u₀ + y₃N, all derivatives in closed form.
    fn level0(&self, y: [f64; 3]) -> Result<TraceJet> {
        let j0 = (self.u0)(y);
        let wc = self.wall_chain(y, &j0)?;
        let (n, y3) = (wc.n, y[2]);
        let dn = |k: usize| n.d1 * j0.d[k] + n.d2 * wc.dx2[k];
        let dn1 = |k: usize| n.d11 * j0.d[k] + n.d12 * wc.dx2[k];
        let dn2 = |k: usize| n.d12 * j0.d[k] + n.d22 * wc.dx2[k];
        let dden = |k: usize| if k == 2 { n.d2 } else { 0.0 } + y3 * dn2(k);

        let mut out = TraceJet { w: j0.w + y3 * n.v, ..Default::default() };
        for k in 0..3 {
            let d3k = if k == 2 { 1.0 } else { 0.0 };
            out.d[k] = j0.d[k] + d3k * n.v + y3 * dn(k);
        }
        for k in 0..3 {
            for l in 0..3 {
                // Differentiate dx2[k]·den = δ_{k,y₂} − δ_{k,y₃}N − y₃N₁∂_k u₀.
                let d3l = if l == 2 { 1.0 } else { 0.0 };
                let rhs = -if k == 2 { dn(l) } else { 0.0 }
                    - (d3l * n.d1 + y3 * dn1(l)) * j0.d[k]
                    - y3 * n.d1 * j0.d2[k][l];
                let d2x2 = (rhs - wc.dx2[k] * dden(l)) / wc.den;
                let ddn = dn1(l) * j0.d[k] + n.d1 * j0.d2[k][l] + dn2(l) * wc.dx2[k] + n.d2 * d2x2;
                out.d2[k][l] = j0.d2[k][l]
                    + if k == 2 { dn(l) } else { 0.0 }
                    + if l == 2 { dn(k) } else { 0.0 }
                    + y3 * ddn;
            }
        }
        symmetrize(&mut out.d2);
        Ok(out)
    }

    /// Rate factor carrying u₁ to ∂_tū(0) = u₁·(1 + y₃N₁/(1 + y₃N₂)), with
    /// its exact gradient.
    fn lift_rate(&self, y: [f64; 3]) -> Result<(f64, [f64; 3])> {
        let j0 = (self.u0)(y);
        let wc = self.wall_chain(y, &j0)?;
        let (n, y3) = (wc.n, y[2]);
        let dn1 = |k: usize| n.d11 * j0.d[k] + n.d12 * wc.dx2[k];
        let dn2 = |k: usize| n.d12 * j0.d[k] + n.d22 * wc.dx2[k];
        let dden = |k: usize| if k == 2 { n.d2 } else { 0.0 } + y3 * dn2(k);
        let fac = 1.0 + y3 * n.d1 / wc.den;
        let mut dfac = [0.0; 3];
        for k in 0..3 {
            let d3k = if k == 2 { n.d1 } else { 0.0 };
            dfac[k] = d3k / wc.den + y3 * (dn1(k) * wc.den - n.d1 * dden(k)) / (wc.den * wc.den);
        }
        Ok((fac, dfac))
    }

    /// First level ū₁: value and gradient in closed form; the curvature of
    /// the rate factor (third derivatives of the wall) by differencing.
    fn level1(&self, y: [f64; 3]) -> Result<TraceJet> {
        let j1 = (self.u1)(y);
        let (fac, dfac) = self.lift_rate(y)?;
        let mut out = TraceJet { w: j1.w * fac, ..Default::default() };
        for k in 0..3 {
            out.d[k] = j1.d[k] * fac + j1.w * dfac[k];
        }
        let h = FD_H * (1.0 + norm_inf(y));
        for l in 0..3 {
            let (mut yp, mut ym) = (y, y);
            yp[l] += h;
            ym[l] -= h;
            let (_, dp) = self.lift_rate(yp)?;
            let (_, dm) = self.lift_rate(ym)?;
            for k in 0..3 {
                let d2fac = (dp[k] - dm[k]) / (2.0 * h);
                out.d2[k][l] =
                    j1.d2[k][l] * fac + j1.d[k] * dfac[l] + j1.d[l] * dfac[k] + j1.w * d2fac;
            }
        }
        symmetrize(&mut out.d2);
        Ok(out)
    }

    /// Second level ū₂, solved from the interior equation at t = 0: all
    /// terms of the transplanted operator are known from (ū₀, ū₁) except the
    /// ∂²_t one, whose coefficient κ_ū·ã₀₀ must keep its sign.
    fn accel_from(&self, y: [f64; 3], l0: &TraceJet, l1w: f64, l1d: [f64; 3]) -> Result<f64> {
        let kj = kappa_jet(self.wall, l0.w, y[1], y[2])?;
        let du = [
            kj.d[0] * l1w,
            kj.d[0] * l0.d[0],
            kj.d[0] * l0.d[1] + kj.d[1],
            kj.d[0] * l0.d[2] + kj.d[2],
        ];
        let diag = kj.d[0] * du[1] * du[1];
        if diag <= DIAG_FLOOR {
            return Err(Error::SeedDegenerate(format!(
                "time-diagonal coefficient {diag:.3e} not positive at y = {y:?}"
            )));
        }
        let x = physical_from_graph(self.wall, kj.u, y[1], y[2])?;
        let sample =
            FlowSample::build(self.gas, self.bernoulli, 0.0, x, du, self.wall, self.upstream)?;
        let bundle = eval_interior(&sample)?;
        let at = &bundle.atilde;
        let dv = [l1w, l0.d[0], l0.d[1], l0.d[2]];
        let bracket = curvature_terms(at, &kj, &dv);
        let forcing = bundle.f_rhs - bundle.a2 * du[2] - bundle.a3 * du[3] - bracket;
        let mut cross = 0.0;
        for j in 1..4 {
            cross += at[0][j] * l1d[j - 1];
        }
        let mut spat = 0.0;
        for i in 1..4 {
            for j in 1..4 {
                spat += at[i][j] * l0.d2[i - 1][j - 1];
            }
        }
        Ok((forcing - kj.d[0] * (2.0 * cross + spat)) / diag)
    }

    fn accel_value(&self, y: [f64; 3]) -> Result<f64> {
        let l0 = self.level0(y)?;
        let j1 = (self.u1)(y);
        let (fac, dfac) = self.lift_rate(y)?;
        let mut l1d = [0.0; 3];
        for k in 0..3 {
            l1d[k] = j1.d[k] * fac + j1.w * dfac[k];
        }
        self.accel_from(y, &l0, j1.w * fac, l1d)
    }

    fn level2(&self, y: [f64; 3]) -> Result<TraceJet> {
        let mut out = TraceJet { w: self.accel_value(y)?, ..Default::default() };
        let h = FD_H * (1.0 + norm_inf(y));
        let mut plus = [0.0; 3];
        let mut minus = [0.0; 3];
        for k in 0..3 {
            let (mut yp, mut ym) = (y, y);
            yp[k] += h;
            ym[k] -= h;
            plus[k] = self.accel_value(yp)?;
            minus[k] = self.accel_value(ym)?;
            out.d[k] = (plus[k] - minus[k]) / (2.0 * h);
        }
        // Second differences on a wider stencil to keep the rounding error
        // of the double limit in check.
        let h2 = 20.0 * h;
        for k in 0..3 {
            let (mut yp, mut ym) = (y, y);
            yp[k] += h2;
            ym[k] -= h2;
            out.d2[k][k] =
                (self.accel_value(yp)? - 2.0 * out.w + self.accel_value(ym)?) / (h2 * h2);
            for l in (k + 1)..3 {
                let mut q = [y; 4];
                q[0][k] += h2;
                q[0][l] += h2;
                q[1][k] += h2;
                q[1][l] -= h2;
                q[2][k] -= h2;
                q[2][l] += h2;
                q[3][k] -= h2;
                q[3][l] -= h2;
                let m = (self.accel_value(q[0])? - self.accel_value(q[1])?
                    - self.accel_value(q[2])?
                    + self.accel_value(q[3])?)
                    / (4.0 * h2 * h2);
                out.d2[k][l] = m;
                out.d2[l][k] = m;
            }
        }
        Ok(out)
    }

    /// One time level of the wall-adapted data (0, 1 or 2).
    pub fn level(&self, j: usize, y: [f64; 3]) -> Result<TraceJet> {
        match j {
            0 => self.level0(y),
            1 => self.level1(y),
            2 => self.level2(y),
            _ => Err(Error::Config(format!("no Taylor level {j}; the lift stops at 2"))),
        }
    }

    /// All levels carried by the lift; orders above `k_max` stay zero.
    pub fn levels(&self, y: [f64; 3]) -> Result<[TraceJet; 3]> {
        let mut out = [TraceJet::default(); 3];
        for j in 0..=self.k_max {
            out[j] = self.level(j, y)?;
        }
        Ok(out)
    }

    /// The polynomial lift ψ and its exact derivatives at (t, y).
    pub fn lift(&self, t: f64, y: [f64; 3]) -> Result<SpaceTimeJet> {
        Ok(assemble_lift(&self.levels(y)?, self.k_max, t))
    }
}

/// ψ(t, y) = Σ_{j ≤ k_max} t^j/j! · ū_j(y) as a full space-time jet. By
/// construction ψ(0, ·) = ū₀ and ∂_tψ(0, ·) = ū₁ hold exactly.
pub fn assemble_lift(levels: &[TraceJet; 3], k_max: usize, t: f64) -> SpaceTimeJet {
    let on = |j: usize| if j <= k_max { 1.0 } else { 0.0 };
    let (c1, c2) = (on(1), on(2));
    let w = [on(0), c1 * t, c2 * 0.5 * t * t];
    let l = levels;
    let mut out = SpaceTimeJet {
        w: w[0] * l[0].w + w[1] * l[1].w + w[2] * l[2].w,
        ..Default::default()
    };
    out.d[0] = c1 * l[1].w + c2 * t * l[2].w;
    out.d2[0][0] = c2 * l[2].w;
    for k in 0..3 {
        out.d[k + 1] = w[0] * l[0].d[k] + w[1] * l[1].d[k] + w[2] * l[2].d[k];
        out.d2[0][k + 1] = c1 * l[1].d[k] + c2 * t * l[2].d[k];
        out.d2[k + 1][0] = out.d2[0][k + 1];
        for m in 0..3 {
            out.d2[k + 1][m + 1] = w[0] * l[0].d2[k][m] + w[1] * l[1].d2[k][m] + w[2] * l[2].d2[k][m];
        }
    }
    out
}

fn symmetrize(m: &mut [[f64; 3]; 3]) {
    for i in 0..3 {
        for j in (i + 1)..3 {
            let s = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = s;
            m[j][i] = s;
        }
    }
}

fn norm_inf(y: [f64; 3]) -> f64 {
    y.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}
