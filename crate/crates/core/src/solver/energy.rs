//! Weighted space-time energies and the measured stability estimate.
//!
//! The ledger accumulates, for every weight η in the measurement grid and
//! every derivative order `k ≤ s_max`, the quantities entering the energy
//! estimate: η-weighted interior norms of `D^α w`, shock-face trace norms,
//! the running supremum of the unweighted slice norm, and the data norms of
//! `f`, `g` and the frozen state profile.  Time integrals use the interval
//! midpoint for the exponential weight and the trapezoid average for the
//! integrand.  All accumulators only ever grow.

use super::field::CoefficientField;
use super::grid::{GridSpec, Window};
use crate::error::{Error, Result};
use serde::Serialize;

pub const ETA_GRID_FACTORS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
pub const MAX_S: usize = 2;

/// Per-order squared norms of one time slice (interior window + shock trace).
#[derive(Clone, Copy, Debug, Default)]
pub struct SliceNorms {
    pub interior: [f64; MAX_S + 1],
    pub trace: [f64; MAX_S + 1],
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyLedger {
    pub etas: [f64; 4],
    pub s_max: usize,
    pub t_final: f64,
    /// `[eta][order]` of `∫ e^{−2ηt} Σ_{|α|=k} ‖D^α w‖²_{window} dt`.
    pub interior: Vec<Vec<f64>>,
    /// Same, over the shock face `y₁ = 0, y₃ ≥ 0`.
    pub trace: Vec<Vec<f64>>,
    /// `[order]`: running sup over time of the unweighted slice norm.
    pub sup_slice: Vec<f64>,
    /// `[eta][order ≤ 3]` data norms of `f` over the space-time box.
    pub f_norms: Vec<Vec<f64>>,
    /// `[eta][order ≤ 2]` data norms of `g` over the shock face.
    pub g_norms: Vec<Vec<f64>>,
    /// `[eta][order ≤ 2]` norms of the frozen state profile.
    pub u_norms: Vec<Vec<f64>>,
    #[serde(skip)]
    prev: Option<(f64, SliceNorms)>,
}

impl EnergyLedger {
    pub fn new(eta0: f64, s_max: usize, t_final: f64) -> Result<Self> {
        if s_max > MAX_S {
            return Err(Error::Config(format!("ledger order {s_max} exceeds supported {MAX_S}")));
        }
        Ok(EnergyLedger {
            etas: ETA_GRID_FACTORS.map(|f| f * eta0),
            s_max,
            t_final,
            interior: vec![vec![0.0; MAX_S + 1]; 4],
            trace: vec![vec![0.0; MAX_S + 1]; 4],
            sup_slice: vec![0.0; MAX_S + 1],
            f_norms: vec![vec![0.0; 4]; 4],
            g_norms: vec![vec![0.0; 3]; 4],
            u_norms: vec![vec![0.0; 3]; 4],
            prev: None,
        })
    }

    /// Fold one time slice into the accumulators.
    pub fn absorb(&mut self, t: f64, s: SliceNorms) {
        for k in 0..=MAX_S {
            let total: f64 = s.interior[..=k].iter().sum();
            self.sup_slice[k] = self.sup_slice[k].max(total);
        }
        if let Some((tp, sp)) = self.prev.take() {
            let dt = t - tp;
            let tm = 0.5 * (t + tp);
            for (ei, &eta) in self.etas.iter().enumerate() {
                let w = dt * (-2.0 * eta * tm).exp();
                for k in 0..=MAX_S {
                    self.interior[ei][k] += w * 0.5 * (sp.interior[k] + s.interior[k]);
                    self.trace[ei][k] += w * 0.5 * (sp.trace[k] + s.trace[k]);
                }
            }
        }
        self.prev = Some((t, s));
    }

    /// Left-hand side of the estimate at weight index `ei`, orders ≤ `s`:
    /// η-weighted interior energy, end-weighted sup slice, and face trace.
    pub fn lhs(&self, ei: usize, s: usize) -> f64 {
        let eta = self.etas[ei];
        let mut lhs = 0.0;
        for k in 0..=s.min(self.s_max) {
            lhs += eta * self.interior[ei][k]
                + (-2.0 * eta * self.t_final).exp() * self.sup_slice[k]
                + self.trace[ei][k];
        }
        lhs
    }
}

// ---------------------------------------------------------------------------
// slice norms on the solution arrays

struct Derivs<'a> {
    grid: &'a GridSpec,
    w: &'a [f64],
}

impl<'a> Derivs<'a> {
    /// First derivative along `axis` at an extended-grid node; centered where
    /// possible, second-order one-sided at array edges.
    fn d1(&self, i: [usize; 3], axis: usize) -> f64 {
        let g = self.grid;
        let (m1, m2, m3) = g.ext_dims();
        let (n, h) = match axis {
            0 => (m1, g.h1()),
            1 => (m2, g.h2()),
            _ => (m3, g.h3()),
        };
        let at = |k: usize| {
            let mut j = i;
            j[axis] = k;
            self.w[g.idx(j[0], j[1], j[2])]
        };
        let c = i[axis];
        if c == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
        } else if c == n - 1 {
            (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
        } else {
            (at(c + 1) - at(c - 1)) / (2.0 * h)
        }
    }

    fn d2_same(&self, i: [usize; 3], axis: usize) -> f64 {
        let g = self.grid;
        let (m1, m2, m3) = g.ext_dims();
        let (n, h) = match axis {
            0 => (m1, g.h1()),
            1 => (m2, g.h2()),
            _ => (m3, g.h3()),
        };
        let at = |k: usize| {
            let mut j = i;
            j[axis] = k;
            self.w[g.idx(j[0], j[1], j[2])]
        };
        let c = i[axis].clamp(1, n - 2);
        (at(c + 1) - 2.0 * at(c) + at(c - 1)) / (h * h)
    }

    fn d2_mixed(&self, i: [usize; 3], a: usize, b: usize) -> f64 {
        let g = self.grid;
        let (m1, m2, m3) = g.ext_dims();
        let dims = [m1, m2, m3];
        let h = [g.h1(), g.h2(), g.h3()];
        let ca = i[a].clamp(1, dims[a] - 2);
        let cb = i[b].clamp(1, dims[b] - 2);
        let at = |ka: usize, kb: usize| {
            let mut j = i;
            j[a] = ka;
            j[b] = kb;
            self.w[g.idx(j[0], j[1], j[2])]
        };
        (at(ca + 1, cb + 1) - at(ca + 1, cb - 1) - at(ca - 1, cb + 1) + at(ca - 1, cb - 1))
            / (4.0 * h[a] * h[b])
    }
}

/// Squared per-order norms of the slice defined by `(w, wt, wtt)` on the
/// restricted window; `wt`/`wtt` are the discrete first/second time
/// derivatives at the same instant, on the extended grid.
pub fn slice_norms(
    grid: &GridSpec,
    window: &Window,
    w: &[f64],
    wt: &[f64],
    wtt: &[f64],
) -> SliceNorms {
    let dw = Derivs { grid, w };
    let dwt = Derivs { grid, w: wt };
    let vol = grid.h1() * grid.h2() * grid.h3();
    let area = grid.h2() * grid.h3();
    let (m1, m2, _) = grid.ext_dims();
    let mut out = SliceNorms::default();
    for i1 in 0..m1 {
        for i2 in 0..m2 {
            for i3 in grid.wall()..grid.ext_dims().2 {
                let y = grid.coord(i1, i2, i3);
                if !window.contains(y) {
                    continue;
                }
                let i = [i1, i2, i3];
                let p = grid.idx(i1, i2, i3);
                let g0 = w[p] * w[p];
                let mut g1 = wt[p] * wt[p];
                let mut g2 = wtt[p] * wtt[p];
                for a in 0..3 {
                    let d = dw.d1(i, a);
                    g1 += d * d;
                    let dt1 = dwt.d1(i, a);
                    g2 += dt1 * dt1;
                    let dd = dw.d2_same(i, a);
                    g2 += dd * dd;
                    for b in (a + 1)..3 {
                        let dm = dw.d2_mixed(i, a, b);
                        g2 += dm * dm;
                    }
                }
                out.interior[0] += vol * g0;
                out.interior[1] += vol * g1;
                out.interior[2] += vol * g2;
                if i1 == 0 {
                    out.trace[0] += area * g0;
                    out.trace[1] += area * g1;
                    out.trace[2] += area * g2;
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// data norms by finite differencing of the analytic closures

fn stencil(order: usize, h: f64) -> Vec<(isize, f64)> {
    match order {
        0 => vec![(0, 1.0)],
        1 => vec![(-1, -0.5 / h), (1, 0.5 / h)],
        2 => {
            let h2 = h * h;
            vec![(-1, 1.0 / h2), (0, -2.0 / h2), (1, 1.0 / h2)]
        }
        3 => {
            let h3 = 2.0 * h * h * h;
            vec![(-2, -1.0 / h3), (-1, 2.0 / h3), (1, -2.0 / h3), (2, 1.0 / h3)]
        }
        _ => unreachable!("derivative order beyond data-norm range"),
    }
}

fn fd_nd<const D: usize>(
    fun: &dyn Fn([f64; D]) -> f64,
    c: [f64; D],
    steps: [f64; D],
    alpha: [usize; D],
) -> f64 {
    let st: Vec<Vec<(isize, f64)>> =
        (0..D).map(|a| stencil(alpha[a], steps[a])).collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; D];
    'outer: loop {
        let mut x = c;
        let mut coef = 1.0;
        for a in 0..D {
            let (off, cc) = st[a][idx[a]];
            x[a] += off as f64 * steps[a];
            coef *= cc;
        }
        total += coef * fun(x);
        for a in 0..D {
            idx[a] += 1;
            if idx[a] < st[a].len() {
                continue 'outer;
            }
            idx[a] = 0;
        }
        break;
    }
    total
}

fn multi_indices<const D: usize>(max_order: usize) -> Vec<[usize; D]> {
    let mut out = Vec::new();
    let mut cur = [0usize; D];
    fn rec<const D: usize>(a: usize, left: usize, cur: &mut [usize; D], out: &mut Vec<[usize; D]>) {
        if a == D {
            out.push(*cur);
            return;
        }
        for v in 0..=left {
            cur[a] = v;
            rec(a + 1, left - v, cur, out);
        }
    }
    rec(0, max_order, &mut cur, &mut out);
    out
}

/// Lattice resolution of the data-norm probe (independent of the solver grid:
/// `f`, `g` and the state profile are given analytic data).
const PROBE_T: usize = 24;
const PROBE_1: usize = 12;
const PROBE_2: usize = 4;
const PROBE_3: usize = 12;

/// Measure the η-weighted data norms of `f`, `g` and the state profile and
/// store them in the ledger.  Works on an inset lattice so the differencing
/// stencils never leave the box.
pub fn probe_data_norms(
    ledger: &mut EnergyLedger,
    field: &dyn CoefficientField,
    grid: &GridSpec,
) {
    let t_probe = |k: usize| -> (f64, f64) {
        let d = grid.t_final / (PROBE_T + 4) as f64;
        ((2 + k) as f64 * d, d)
    };
    let x_probe = |k: usize, n: usize, lo: f64, len: f64| -> (f64, f64) {
        let d = len / (n + 4) as f64;
        (lo + (2 + k) as f64 * d, d)
    };

    let f_alphas = multi_indices::<4>(3);
    let u_alphas = multi_indices::<4>(2);
    let g_alphas = multi_indices::<3>(2);

    for kt in 0..PROBE_T {
        let (t, dt) = t_probe(kt);
        let mut f_by_order = [0.0f64; 4];
        let mut u_by_order = [0.0f64; 3];
        let mut g_by_order = [0.0f64; 3];
        for k1 in 0..PROBE_1 {
            let (y1, d1) = x_probe(k1, PROBE_1, 0.0, grid.l1);
            for k2 in 0..PROBE_2 {
                let (y2, d2) = x_probe(k2, PROBE_2, -grid.l2, 2.0 * grid.l2);
                for k3 in 0..PROBE_3 {
                    let (y3, d3) = x_probe(k3, PROBE_3, 0.0, grid.l3);
                    let volw = d1 * d2 * d3;
                    let steps = [dt, d1, d2, d3];
                    let ff = |x: [f64; 4]| field.rhs_f(x[0], [x[1], x[2], x[3]]);
                    let uu = |x: [f64; 4]| field.state(x[0], [x[1], x[2], x[3]]);
                    if !field.homogeneous() {
                        for a in &f_alphas {
                            let v = fd_nd(&ff, [t, y1, y2, y3], steps, *a);
                            f_by_order[a.iter().sum::<usize>()] += volw * v * v;
                        }
                    }
                    for a in &u_alphas {
                        let v = fd_nd(&uu, [t, y1, y2, y3], steps, *a);
                        u_by_order[a.iter().sum::<usize>()] += volw * v * v;
                    }
                    if k1 == 0 && !field.homogeneous() {
                        let gg = |x: [f64; 3]| field.rhs_g(x[0], x[1], x[2]);
                        let gsteps = [dt, d2, d3];
                        for a in &g_alphas {
                            let v = fd_nd(&gg, [t, y2, y3], gsteps, *a);
                            g_by_order[a.iter().sum::<usize>()] += d2 * d3 * v * v;
                        }
                    }
                }
            }
        }
        for (ei, &eta) in ledger.etas.iter().enumerate() {
            let w = dt * (-2.0 * eta * t).exp();
            for k in 0..4 {
                ledger.f_norms[ei][k] += w * f_by_order[k];
            }
            for k in 0..3 {
                ledger.g_norms[ei][k] += w * g_by_order[k];
                ledger.u_norms[ei][k] += w * u_by_order[k];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// the measured estimate

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EstimateRow {
    pub eta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub s: usize,
    pub rows: Vec<EstimateRow>,
    /// max/min of the nonzero ratios over the η grid (0 when all vanish).
    pub ratio_spread: f64,
    /// Smallest η in the grid from which the tail ratios stay within the
    /// spread bound — the measured onset of the absorption regime.
    pub eta_onset: f64,
}

pub const RATIO_SPREAD_BOUND: f64 = 3.0;

/// Assemble LHS/RHS of the energy estimate per measurement weight and order
/// `s`, and report their ratios across the η grid.
pub fn measure_estimate(ledger: &EnergyLedger, s: usize) -> Result<EstimateReport> {
    if s == 0 || s > ledger.s_max {
        return Err(Error::Config(format!(
            "estimate order s = {s} outside the recorded range 1..={}",
            ledger.s_max
        )));
    }
    let tt = ledger.t_final;
    let mut rows = Vec::new();
    for (ei, &eta) in ledger.etas.iter().enumerate() {
        let lhs = ledger.lhs(ei, s);
        let fs: f64 = ledger.f_norms[ei][..=3].iter().sum();
        let fl: f64 = ledger.f_norms[ei][..=s - 1].iter().sum();
        let gl: f64 = ledger.g_norms[ei][..=s - 1].iter().sum();
        let us: f64 = ledger.u_norms[ei][..=s.min(2)].iter().sum();
        let rhs = ((2.0 * eta * tt).exp() * us * fs + fl) / eta + gl;
        let ratio = if lhs == 0.0 && rhs == 0.0 { 0.0 } else { lhs / rhs };
        rows.push(EstimateRow { eta, lhs, rhs, ratio });
    }
    let nz: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|&r| r > 0.0).collect();
    let ratio_spread = if nz.is_empty() {
        0.0
    } else {
        let mx = nz.iter().cloned().fold(f64::MIN, f64::max);
        let mn = nz.iter().cloned().fold(f64::MAX, f64::min);
        mx / mn
    };
    let mut eta_onset = ledger.etas[0];
    for start in 0..rows.len() {
        let tail: Vec<f64> = rows[start..].iter().map(|r| r.ratio).filter(|&r| r > 0.0).collect();
        if tail.is_empty() {
            break;
        }
        let mx = tail.iter().cloned().fold(f64::MIN, f64::max);
        let mn = tail.iter().cloned().fold(f64::MAX, f64::min);
        if mx / mn <= RATIO_SPREAD_BOUND {
            eta_onset = rows[start].eta;
            break;
        }
    }
    Ok(EstimateReport { s, rows, ratio_spread, eta_onset })
}
