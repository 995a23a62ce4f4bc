//! Space-time grid over the dihedral box and its reflection-extended twin.
//!
//! The dihedral domain is the box `[0, L₁] × [−L₂, L₂] × [0, L₃]`; the
//! extension doubles the y₃ axis to `[−L₃, L₃]` with a grid node landing
//! exactly on the wall plane `y₃ = 0`.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridSpec {
    /// Box extents: y₁ ∈ [0, l1], y₂ ∈ [−l2, l2], y₃ ∈ [0, l3].
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Cells per direction on the dihedral box.
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub dt: f64,
    pub t_final: f64,
    /// Base exponential weight; the estimate is measured on {η₀, 2η₀, 4η₀, 8η₀}.
    pub eta0: f64,
    /// Fraction of the stability limit the time step must respect.
    pub cfl_safety: f64,
    /// Keep a per-step history of restricted slices (needed by the
    /// fixed-point driver, off by default to save memory).
    pub keep_history: bool,
    /// Probe the data norms (f, g, state) on the inset lattice.  The probes
    /// difference the coefficient-field closures at off-grid points, which is
    /// meaningless (and expensive) when the field is itself backed by a
    /// sampled iterate, so drivers can switch them off.
    pub probe_data: bool,
}

impl GridSpec {
    pub fn new(l: [f64; 3], n: [usize; 3], dt: f64, t_final: f64, eta0: f64) -> Self {
        GridSpec {
            l1: l[0],
            l2: l[1],
            l3: l[2],
            n1: n[0],
            n2: n[1],
            n3: n[2],
            dt,
            t_final,
            eta0,
            cfl_safety: 0.5,
            keep_history: false,
            probe_data: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l1 > 0.0 && self.l2 > 0.0 && self.l3 > 0.0) {
            return Err(Error::Config("grid extents must be positive".into()));
        }
        if self.n1 < 4 || self.n2 < 2 || self.n3 < 4 {
            return Err(Error::Config("grid too coarse: need n1,n3 >= 4 and n2 >= 2".into()));
        }
        if !(self.dt > 0.0 && self.t_final > self.dt) {
            return Err(Error::Config("need 0 < dt < t_final".into()));
        }
        if !(self.eta0 > 0.0) {
            return Err(Error::Config("eta0 must be positive".into()));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config("cfl_safety must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn h1(&self) -> f64 {
        self.l1 / self.n1 as f64
    }
    pub fn h2(&self) -> f64 {
        2.0 * self.l2 / self.n2 as f64
    }
    pub fn h3(&self) -> f64 {
        self.l3 / self.n3 as f64
    }
    pub fn h_min(&self) -> f64 {
        self.h1().min(self.h2()).min(self.h3())
    }
    pub fn h_max(&self) -> f64 {
        self.h1().max(self.h2()).max(self.h3())
    }
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().max(1.0) as usize
    }

    /// Node counts on the extended grid (y₃ doubled, node at y₃ = 0).
    pub fn ext_dims(&self) -> (usize, usize, usize) {
        (self.n1 + 1, self.n2 + 1, 2 * self.n3 + 1)
    }
    pub fn ext_len(&self) -> usize {
        let (m1, m2, m3) = self.ext_dims();
        m1 * m2 * m3
    }
    /// Node counts on the restricted (dihedral) grid.
    pub fn res_dims(&self) -> (usize, usize, usize) {
        (self.n1 + 1, self.n2 + 1, self.n3 + 1)
    }
    pub fn res_len(&self) -> usize {
        let (m1, m2, m3) = self.res_dims();
        m1 * m2 * m3
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize, i3: usize) -> usize {
        let (_, m2, m3) = self.ext_dims();
        (i1 * m2 + i2) * m3 + i3
    }
    #[inline]
    pub fn ridx(&self, i1: usize, i2: usize, i3: usize) -> usize {
        let (_, m2, m3) = self.res_dims();
        (i1 * m2 + i2) * m3 + i3
    }

    /// Coordinates of an extended-grid node.
    #[inline]
    pub fn coord(&self, i1: usize, i2: usize, i3: usize) -> [f64; 3] {
        [
            i1 as f64 * self.h1(),
            -self.l2 + i2 as f64 * self.h2(),
            (i3 as f64 - self.n3 as f64) * self.h3(),
        ]
    }

    /// Extended index of the wall plane y₃ = 0.
    #[inline]
    pub fn wall(&self) -> usize {
        self.n3
    }

    /// Restrict an extended-grid array onto the dihedral grid (y₃ ≥ 0).
    pub fn restrict(&self, ext: &[f64]) -> Vec<f64> {
        let (m1, m2, _) = self.res_dims();
        let mut out = vec![0.0; self.res_len()];
        for i1 in 0..m1 {
            for i2 in 0..m2 {
                for i3r in 0..=self.n3 {
                    out[self.ridx(i1, i2, i3r)] = ext[self.idx(i1, i2, self.n3 + i3r)];
                }
            }
        }
        out
    }
}

/// Axis-aligned measurement window inside the dihedral box; norms reported
/// by the energy ledger are restricted to it so artificial-boundary
/// truncation never pollutes them.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Window {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Window {
    /// Shrink the artificial faces by the domain-of-dependence margin
    /// `v_max · T + 2 h_max`.  The shock face (y₁ = 0) and the wall
    /// (y₃ = 0) are genuine boundaries and keep their full extent.  On
    /// pencil-thin y₂ grids the margin would consume the whole axis; the
    /// full width is kept there and callers are expected to run
    /// y₂-uniform data in that regime (the rim extrapolation is exact for
    /// such fields).
    pub fn for_run(grid: &GridSpec, v_max: f64) -> Window {
        let margin = v_max * grid.t_final + 2.0 * grid.h_max();
        let hi1 = (grid.l1 - margin).max(4.0 * grid.h1());
        let hi3 = (grid.l3 - margin).max(4.0 * grid.h3());
        let l2 = if grid.l2 - margin >= 2.0 * grid.h2() { grid.l2 - margin } else { grid.l2 };
        Window { lo: [0.0, -l2, 0.0], hi: [hi1, l2, hi3] }
    }

    pub fn contains(&self, y: [f64; 3]) -> bool {
        (0..3).all(|a| y[a] >= self.lo[a] - 1e-12 && y[a] <= self.hi[a] + 1e-12)
    }
}
