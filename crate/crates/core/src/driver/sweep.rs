//! One pass of the frozen-coefficient iteration.
//!
//! A sweep evaluates the previous iterate ũ_m (plus the Taylor lift ψ),
//! freezes the interior coefficients at that state, moves every lower-order
//! and lift term to the right-hand side, and solves the resulting linear
//! problem for ũ_{m+1} with zero initial data.  The boundary operator stays
//! frozen at the background linearization; its data carry the full jump
//! functional of the current state, so the fixed point satisfies the exact
//! jump relation.

use std::cell::RefCell;

use crate::background::ShockBackground;
use crate::coeffs::{eval_g, eval_interior, CoefficientBundle, FlowSample, UpstreamField};
use crate::error::{Error, Result};
use crate::solver::{
    build_zero_data, solve_lp, BoundaryCoeffs, CoefficientField, GridSpec, InteriorCoeffs,
    LpSolution, SpaceTimeJet, TraceJet, Window,
};
use crate::wall::{kappa_jet, physical_from_graph, KappaJet, WallSpec};

use super::seed::{assemble_lift, TaylorSeed};

/// Frozen description of the run: gas state, geometry, upstream flow and the
/// boundary form the sweeps linearize against.
pub struct ExperimentContext<'a> {
    pub bg: ShockBackground,
    pub wall: &'a WallSpec,
    pub upstream: &'a UpstreamField,
    /// Background jump linearization (gradient part and trace part).
    pub frozen_b: [f64; 4],
    pub frozen_bu: f64,
    pub du1_floor: f64,
}

impl<'a> ExperimentContext<'a> {
    /// Freeze the boundary linearization at the exact background state.
    pub fn new(
        bg: &ShockBackground,
        wall: &'a WallSpec,
        upstream: &'a UpstreamField,
    ) -> Result<Self> {
        let uniform = UpstreamField::uniform(bg.q_minus);
        let sample = FlowSample::build(
            bg.gas,
            bg.bernoulli,
            0.0,
            [0.0, 0.0, 0.0],
            [0.0, bg.front_slope(), 0.0, 0.0],
            wall,
            &uniform,
        )?;
        let lin = crate::coeffs::linearize_g(&sample)?;
        Ok(ExperimentContext {
            bg: *bg,
            wall,
            upstream,
            frozen_b: lin.b,
            frozen_bu: lin.b_u,
            du1_floor: 1e-8,
        })
    }

    /// Full pointwise state at (t, y) for a given wall-adapted jet ū:
    /// inverse map, graph derivatives, physical point and the coefficient
    /// bundle of the interior operator.
    pub fn state_at(&self, t: f64, y: [f64; 3], ubar: &SpaceTimeJet) -> Result<StatePoint> {
        let kj = kappa_jet(self.wall, ubar.w, y[1], y[2])?;
        let du = [
            kj.d[0] * ubar.d[0],
            kj.d[0] * ubar.d[1],
            kj.d[0] * ubar.d[2] + kj.d[1],
            kj.d[0] * ubar.d[3] + kj.d[2],
        ];
        let x = physical_from_graph(self.wall, kj.u, y[1], y[2])?;
        let mut sample =
            FlowSample::build(self.bg.gas, self.bg.bernoulli, t, x, du, self.wall, self.upstream)?;
        sample.du1_floor = self.du1_floor;
        let bundle = eval_interior(&sample)?;
        Ok(StatePoint { ubar: *ubar, kj, du, x, sample, bundle })
    }
}

/// State of the flow at one sample, as seen through a wall-adapted jet.
pub struct StatePoint {
    pub ubar: SpaceTimeJet,
    pub kj: KappaJet,
    /// Four-gradient of the front graph u recovered through the inverse map.
    pub du: [f64; 4],
    pub x: [f64; 3],
    pub sample: FlowSample,
    pub bundle: CoefficientBundle,
}

/// Terms produced by the curvature of the inverse map κ when the operator is
/// transplanted onto the wall-adapted unknown: the κ-second-derivative
/// contractions against ã, evaluated on a first-derivative jet of ū.
pub fn curvature_terms(at: &[[f64; 4]; 4], kj: &KappaJet, dv: &[f64; 4]) -> f64 {
    let mut quad = 0.0;
    let mut row2 = 0.0;
    let mut row3 = 0.0;
    for i in 0..4 {
        row2 += at[2][i] * dv[i];
        row3 += at[3][i] * dv[i];
        for j in 0..4 {
            quad += at[i][j] * dv[i] * dv[j];
        }
    }
    kj.d2[0][0] * quad
        + 2.0 * kj.d2[0][1] * row2
        + 2.0 * kj.d2[0][2] * row3
        + at[2][2] * kj.d2[1][1]
        + 2.0 * at[2][3] * kj.d2[1][2]
        + at[3][3] * kj.d2[2][2]
}

/// Principal part applied to the wall-adapted jet: κ_ū Σ ã_ij ∂²_ij ū.
pub fn chained_operator(bundle: &CoefficientBundle, kj: &KappaJet, ubar: &SpaceTimeJet) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            s += bundle.atilde[i][j] * ubar.d2[i][j];
        }
    }
    kj.d[0] * s
}

/// Right-hand side of the transplanted equation, collected so that the
/// equation reads `chained_operator = chained_rhs`: the upstream source, the
/// first-order map-curvature terms acting on ∂u, and the κ-curvature
/// bracket, all moved off the principal part.
pub fn chained_rhs(bundle: &CoefficientBundle, kj: &KappaJet, ubar: &SpaceTimeJet) -> f64 {
    let du2 = kj.d[0] * ubar.d[2] + kj.d[1];
    let du3 = kj.d[0] * ubar.d[3] + kj.d[2];
    bundle.f_rhs - bundle.a2 * du2 - bundle.a3 * du3 - curvature_terms(&bundle.atilde, kj, &ubar.d)
}

/// Residual of the original graph equation, assembled independently by
/// pushing the full second-order chain rule through u = κ(ū, y₂, y₃):
/// `Σ ã_ij ∂²_ij u + a₂∂₂u + a₃∂₃u − f`.  For every jet (solution or not)
/// this equals `chained_operator − chained_rhs` identically; the two
/// routes share no intermediate algebra beyond the coefficient bundle.
pub fn raw_residual(bundle: &CoefficientBundle, kj: &KappaJet, ubar: &SpaceTimeJet) -> f64 {
    let is2 = |i: usize| if i == 2 { 1.0 } else { 0.0 };
    let is3 = |i: usize| if i == 3 { 1.0 } else { 0.0 };
    let du = |i: usize| kj.d[0] * ubar.d[i] + kj.d[1] * is2(i) + kj.d[2] * is3(i);
    let d2u = |i: usize, j: usize| {
        kj.d[0] * ubar.d2[i][j]
            + kj.d2[0][0] * ubar.d[i] * ubar.d[j]
            + kj.d2[0][1] * (ubar.d[i] * is2(j) + ubar.d[j] * is2(i))
            + kj.d2[0][2] * (ubar.d[i] * is3(j) + ubar.d[j] * is3(i))
            + kj.d2[1][1] * is2(i) * is2(j)
            + kj.d2[1][2] * (is2(i) * is3(j) + is3(i) * is2(j))
            + kj.d2[2][2] * is3(i) * is3(j)
    };
    let mut r = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            r += bundle.atilde[i][j] * d2u(i, j);
        }
    }
    r + bundle.a2 * du(2) + bundle.a3 * du(3) - bundle.f_rhs
}

/// Per-node table of the Taylor levels, so sweeps do not re-derive the lift
/// at every coefficient query.  Queries off the node lattice fall back to
/// the direct evaluation.
pub struct SeedCache<'a> {
    seed: &'a TaylorSeed<'a>,
    grid: GridSpec,
    levels: Vec<[TraceJet; 3]>,
}

impl<'a> SeedCache<'a> {
    pub fn build(seed: &'a TaylorSeed<'a>, grid: &GridSpec) -> Result<Self> {
        let (m1, m2, m3) = grid.res_dims();
        let mut levels = Vec::with_capacity(grid.res_len());
        for i1 in 0..m1 {
            for i2 in 0..m2 {
                for i3 in 0..m3 {
                    let y = grid.coord(i1, i2, i3 + grid.n3);
                    levels.push(seed.levels(y)?);
                }
            }
        }
        // Row-major loop order above matches ridx (i1-major); make sure.
        debug_assert_eq!(levels.len(), grid.res_len());
        Ok(SeedCache { seed, grid: *grid, levels })
    }

    pub fn lift(&self, t: f64, y: [f64; 3]) -> Result<SpaceTimeJet> {
        match snap(&self.grid, y) {
            Some((i1, i2, i3)) => {
                let l = &self.levels[self.grid.ridx(i1, i2, i3)];
                Ok(assemble_lift(l, self.seed.k_max, t))
            }
            None => self.seed.lift(t, y),
        }
    }
}

/// Nearest node of the restricted lattice, accepted only when y sits on it
/// to rounding accuracy.
fn snap(grid: &GridSpec, y: [f64; 3]) -> Option<(usize, usize, usize)> {
    let (m1, m2, m3) = grid.res_dims();
    let f1 = y[0] / grid.h1();
    let f2 = (y[1] + 0.5 * grid.h2() * grid.n2 as f64) / grid.h2();
    let f3 = y[2] / grid.h3();
    let (i1, i2, i3) = (f1.round(), f2.round(), f3.round());
    let tol = 1e-9 * (1.0 + y.iter().fold(0.0f64, |a, b| a.max(b.abs())));
    let on = |f: f64, i: f64, h: f64| (f - i).abs() * h <= tol;
    if !(on(f1, i1, grid.h1()) && on(f2, i2, grid.h2()) && on(f3, i3, grid.h3())) {
        return None;
    }
    let (i1, i2, i3) = (i1 as isize, i2 as isize, i3 as isize);
    if i1 < 0 || i2 < 0 || i3 < 0 {
        return None;
    }
    let (i1, i2, i3) = (i1 as usize, i2 as usize, i3 as usize);
    (i1 < m1 && i2 < m2 && i3 < m3).then_some((i1, i2, i3))
}

/// Restricted per-level slices of one iterate, with enough interpolation to
/// be re-read as a space-time profile: quadratic in time, second-order
/// differences in space.  Second derivatives are not reconstructed — the
/// sweeps never consume them (the new unknown's second derivatives live in
/// the scheme's stencils, the lift's in the seed).
pub struct IterateHistory {
    grid: GridSpec,
    levels: Vec<Vec<f64>>,
}

impl IterateHistory {
    pub fn zero(grid: &GridSpec) -> Self {
        IterateHistory {
            grid: *grid,
            levels: vec![vec![0.0; grid.res_len()]; grid.steps() + 1],
        }
    }

    pub fn from_solution(grid: &GridSpec, levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.len() != grid.steps() + 1 || levels.iter().any(|l| l.len() != grid.res_len()) {
            return Err(Error::Config(format!(
                "history shape {}x{} does not match the grid ({} levels of {})",
                levels.len(),
                levels.first().map_or(0, Vec::len),
                grid.steps() + 1,
                grid.res_len()
            )));
        }
        Ok(IterateHistory { grid: *grid, levels })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn value(&self, k: usize, i1: usize, i2: usize, i3: usize) -> f64 {
        self.levels[k][self.grid.ridx(i1, i2, i3)]
    }

    /// Value and first derivatives at (t, y); y must sit on the lattice.
    /// For t below 1.5·Δt the interpolant uses the basis {τ², τ³} through
    /// the first two computed levels, which keeps the zero value and zero
    /// time derivative of the iterate at t = 0 exact.
    pub fn jet(&self, t: f64, y: [f64; 3]) -> SpaceTimeJet {
        let (i1, i2, i3) = snap(&self.grid, y)
            .unwrap_or_else(|| panic!("iterate queried off the lattice at y = {y:?}"));
        let (lv, wv, wd) = self.time_weights(t);
        let mut out = SpaceTimeJet::default();
        for s in 0..3 {
            if wv[s] == 0.0 && wd[s] == 0.0 {
                continue;
            }
            let slice = &self.levels[lv[s]];
            let v = slice[self.grid.ridx(i1, i2, i3)];
            out.w += wv[s] * v;
            out.d[0] += wd[s] * v;
            let g = spatial_grad(&self.grid, slice, i1, i2, i3);
            for k in 0..3 {
                out.d[k + 1] += wv[s] * g[k];
            }
        }
        out
    }

    fn time_weights(&self, t: f64) -> ([usize; 3], [f64; 3], [f64; 3]) {
        let dt = self.grid.dt;
        let top = self.levels.len() - 1;
        let s = t / dt;
        if s < 1.5 {
            let tau = s;
            let c1 = tau * tau * (2.0 - tau);
            let c2 = 0.25 * tau * tau * (tau - 1.0);
            let d1 = tau * (4.0 - 3.0 * tau) / dt;
            let d2 = tau * (0.75 * tau - 0.5) / dt;
            ([1.min(top), 2.min(top), 0], [c1, c2, 0.0], [d1, d2, 0.0])
        } else {
            let k = (s.round() as usize).clamp(1, top.saturating_sub(1).max(1));
            let xi = s - k as f64;
            (
                [k - 1, k, (k + 1).min(top)],
                [0.5 * xi * (xi - 1.0), 1.0 - xi * xi, 0.5 * xi * (xi + 1.0)],
                [(xi - 0.5) / dt, -2.0 * xi / dt, (xi + 0.5) / dt],
            )
        }
    }
}

/// Second-order first differences on a restricted slice: centered inside,
/// one-sided at outer faces, and exploiting the even wall reflection on the
/// y₃ axis (so the wall derivative is exactly zero).
fn spatial_grad(grid: &GridSpec, slice: &[f64], i1: usize, i2: usize, i3: usize) -> [f64; 3] {
    let (m1, m2, m3) = grid.res_dims();
    let v = |a: usize, b: usize, c: usize| slice[grid.ridx(a, b, c)];
    let axis = |i: usize, m: usize, h: f64, at: &dyn Fn(usize) -> f64, mirror: bool| -> f64 {
        if i == 0 {
            if mirror {
                0.0
            } else {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            }
        } else if i + 1 == m {
            (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h)
        } else {
            (at(i + 1) - at(i - 1)) / (2.0 * h)
        }
    };
    [
        axis(i1, m1, grid.h1(), &|a| v(a, i2, i3), false),
        axis(i2, m2, grid.h2(), &|b| v(i1, b, i3), false),
        axis(i3, m3, grid.h3(), &|c| v(i1, i2, c), true),
    ]
}

/// Exponentially weighted first-order distance between two iterates over the
/// untainted window: the contraction monitor of the outer loop.
pub fn diff_norm(a: &IterateHistory, b: &IterateHistory, window: &Window) -> f64 {
    let g = a.grid;
    assert_eq!(a.levels.len(), b.levels.len(), "iterates live on different grids");
    let (m1, m2, m3) = g.res_dims();
    let vol = g.h1() * g.h2() * g.h3();
    let diffs: Vec<Vec<f64>> = a
        .levels
        .iter()
        .zip(&b.levels)
        .map(|(la, lb)| la.iter().zip(lb).map(|(x, y)| x - y).collect())
        .collect();
    let mut total = 0.0;
    for (k, d) in diffs.iter().enumerate() {
        let t = k as f64 * g.dt;
        let weight = (-2.0 * g.eta0 * t).exp() * g.dt;
        let next = diffs.get(k + 1).unwrap_or(d);
        let prevs = if k > 0 { &diffs[k - 1] } else { d };
        let mut slice = 0.0;
        for i1 in 0..m1 {
            for i2 in 0..m2 {
                for i3 in 0..m3 {
                    let y = g.coord(i1, i2, i3 + g.n3);
                    if !window.contains(y) {
                        continue;
                    }
                    let p = g.ridx(i1, i2, i3);
                    let grad = spatial_grad(&g, d, i1, i2, i3);
                    let dtv = (next[p] - prevs[p])
                        / (g.dt * if k > 0 && k + 1 < diffs.len() { 2.0 } else { 1.0 });
                    slice += d[p] * d[p]
                        + grad.iter().map(|x| x * x).sum::<f64>()
                        + dtv * dtv;
                }
            }
        }
        total += weight * vol * slice;
    }
    total.sqrt()
}

/// Coefficient provider for one sweep: everything is evaluated at the state
/// carried by the previous iterate plus the lift.  Evaluation failures mark
/// the sweep as having left the admissible regime (and fall back to the
/// background values so the march can finish); the caller turns the mark
/// into an error.
struct SweepField<'a> {
    ctx: &'a ExperimentContext<'a>,
    cache: &'a SeedCache<'a>,
    prev: &'a IterateHistory,
    bg_interior: InteriorCoeffs,
    bg_boundary: BoundaryCoeffs,
    slope: f64,
    regime: RefCell<Option<String>>,
}

impl SweepField<'_> {
    fn note(&self, e: &Error) {
        let mut flag = self.regime.borrow_mut();
        if flag.is_none() {
            *flag = Some(e.to_string());
        }
    }

    fn chain(&self, t: f64, y: [f64; 3]) -> Result<(StatePoint, SpaceTimeJet)> {
        let lift = self.cache.lift(t, y)?;
        let ubar = self.prev.jet(t, y).plus(&lift);
        Ok((self.ctx.state_at(t, y, &ubar)?, lift))
    }

    /// κ_ū frozen at the background face graph: the factor carrying the
    /// boundary linearization from the graph unknown to the adapted one.
    fn face_scale(&self, y2: f64, y3: f64) -> Result<f64> {
        Ok(kappa_jet(self.ctx.wall, 0.0, y2, y3)?.d[0])
    }

    /// Jump-functional value at the current iterate's state on the face.
    fn face_g(&self, t: f64, y2: f64, y3: f64) -> Result<f64> {
        let (sp, _) = self.chain(t, [0.0, y2, y3])?;
        eval_g(&sp.sample)
    }
}

impl CoefficientField for SweepField<'_> {
    fn interior(&self, t: f64, y: [f64; 3]) -> InteriorCoeffs {
        match self.chain(t, y) {
            Ok((sp, _)) => {
                let mut r = [[0.0; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        r[i][j] = sp.kj.d[0] * sp.bundle.atilde[i][j];
                    }
                }
                InteriorCoeffs { r, r1: [0.0; 4], r0: 0.0 }
            }
            Err(e) => {
                self.note(&e);
                self.bg_interior
            }
        }
    }

    fn boundary(&self, _t: f64, y2: f64, y3: f64) -> BoundaryCoeffs {
        match self.face_scale(y2, y3) {
            Ok(ks) => BoundaryCoeffs {
                b: self.ctx.frozen_b.map(|b| ks * b),
                b_u: ks * self.ctx.frozen_bu,
            },
            Err(e) => {
                self.note(&e);
                self.bg_boundary
            }
        }
    }

    fn rhs_f(&self, t: f64, y: [f64; 3]) -> f64 {
        match self.chain(t, y) {
            Ok((sp, lift)) => {
                let mut lift2 = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        lift2 += sp.bundle.atilde[i][j] * lift.d2[i][j];
                    }
                }
                chained_rhs(&sp.bundle, &sp.kj, &sp.ubar) - sp.kj.d[0] * lift2
            }
            Err(e) => {
                self.note(&e);
                0.0
            }
        }
    }

    fn rhs_g(&self, t: f64, y2: f64, y3: f64) -> f64 {
        let jt = self.prev.jet(t, [0.0, y2, y3]);
        let form = match self.face_scale(y2, y3) {
            Ok(ks) => {
                let mut s = self.ctx.frozen_bu * jt.w;
                for i in 0..4 {
                    s += self.ctx.frozen_b[i] * jt.d[i];
                }
                ks * s
            }
            Err(e) => {
                self.note(&e);
                0.0
            }
        };
        match self.face_g(t, y2, y3) {
            Ok(g) => form - g,
            Err(e) => {
                self.note(&e);
                form
            }
        }
    }

    fn state(&self, t: f64, y: [f64; 3]) -> f64 {
        match self.chain(t, y) {
            Ok((sp, _)) => sp.kj.u,
            Err(e) => {
                self.note(&e);
                self.slope * y[0]
            }
        }
    }
}

/// Result of one sweep: the linear solution (diagnostics, energies) and the
/// new iterate in replayable form.
pub struct SweepOutcome {
    pub solution: LpSolution,
    pub history: IterateHistory,
}

/// Solve one frozen-coefficient pass: zero-data compatibility check, linear
/// march, regime verification, and repackaging of the level history.
pub fn picard_sweep(
    ctx: &ExperimentContext,
    cache: &SeedCache,
    prev: &IterateHistory,
    grid: &GridSpec,
) -> Result<SweepOutcome> {
    let mut g = *grid;
    g.keep_history = true;
    // The estimate's data-norm probes sample off the node lattice; sweeps
    // only ever need the left-hand energies, so skip them.
    g.probe_data = false;
    let field = SweepField {
        ctx,
        cache,
        prev,
        bg_interior: InteriorCoeffs {
            r: ctx.bg.principal_coefficients(),
            r1: [0.0; 4],
            r0: 0.0,
        },
        bg_boundary: BoundaryCoeffs { b: ctx.bg.boundary_coefficients(), b_u: 0.0 },
        slope: ctx.bg.front_slope(),
        regime: RefCell::new(None),
    };
    let data = build_zero_data(&field, &g)?;
    let mut solution = solve_lp(&ctx.bg, &field, &g, &data, None)?;
    if let Some(msg) = field.regime.into_inner() {
        return Err(Error::RegimeExit(msg));
    }
    let slices = solution.field.history.take().expect("history kept by construction");
    let history = IterateHistory::from_solution(&g, slices)?;
    Ok(SweepOutcome { solution, history })
}
