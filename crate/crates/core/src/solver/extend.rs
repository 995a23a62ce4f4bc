//! Reflection of the dihedral problem onto the half space.
//!
//! The wall condition `∂₃w = 0` is absorbed by extending the problem evenly
//! across `y₃ = 0`: the coupling coefficients r₀₃, r₁₃, r₂₃ and the boundary
//! coefficient b₃ flip sign (odd extension), every other coefficient and the
//! data f, g extend evenly.  Odd-extended fields must vanish on the wall
//! plane for the reflected problem to stay consistent; the constructor
//! verifies this and the wrapper then zeroes them there exactly.

use super::field::{BoundaryCoeffs, CoefficientField, InteriorCoeffs};
use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Relative tolerance for the wall-vanishing scan.
pub const VANISHING_TOL: f64 = 1e-8;

pub struct ExtendedField<'a> {
    inner: &'a dyn CoefficientField,
}

impl<'a> ExtendedField<'a> {
    #[inline]
    fn fold(y: [f64; 3]) -> ([f64; 3], f64) {
        if y[2] < 0.0 {
            ([y[0], y[1], -y[2]], -1.0)
        } else {
            (y, 1.0)
        }
    }
}

impl<'a> CoefficientField for ExtendedField<'a> {
    fn interior(&self, t: f64, y: [f64; 3]) -> InteriorCoeffs {
        let (yr, sign) = Self::fold(y);
        let mut c = self.inner.interior(t, yr);
        for i in 0..3 {
            c.r[i][3] *= sign;
            c.r[3][i] *= sign;
        }
        if y[2] == 0.0 {
            for i in 0..3 {
                c.r[i][3] = 0.0;
                c.r[3][i] = 0.0;
            }
        }
        c
    }

    fn boundary(&self, t: f64, y2: f64, y3: f64) -> BoundaryCoeffs {
        let mut b = if y3 < 0.0 {
            let mut b = self.inner.boundary(t, y2, -y3);
            b.b[3] = -b.b[3];
            b
        } else {
            self.inner.boundary(t, y2, y3)
        };
        if y3 == 0.0 {
            b.b[3] = 0.0;
        }
        b
    }

    fn rhs_f(&self, t: f64, y: [f64; 3]) -> f64 {
        self.inner.rhs_f(t, Self::fold(y).0)
    }

    fn rhs_g(&self, t: f64, y2: f64, y3: f64) -> f64 {
        self.inner.rhs_g(t, y2, y3.abs())
    }

    fn state(&self, t: f64, y: [f64; 3]) -> f64 {
        self.inner.state(t, Self::fold(y).0)
    }

    fn homogeneous(&self) -> bool {
        self.inner.homogeneous()
    }
}

/// Wrap a dihedral-side field for half-space stepping after checking that
/// every odd-extended coefficient vanishes on the wall plane.
pub fn extend_problem<'a>(
    field: &'a dyn CoefficientField,
    grid: &GridSpec,
) -> Result<ExtendedField<'a>> {
    let times = [0.0, 0.5 * grid.t_final, grid.t_final];
    let mut r_scale = 0.0f64;
    let mut b_scale = 0.0f64;
    let mut worst_r = (0.0f64, [0.0; 3], 0usize);
    let mut worst_b = (0.0f64, 0.0f64);
    for &t in &times {
        for i1 in 0..=grid.n1 {
            for i2 in 0..=grid.n2 {
                let y = [i1 as f64 * grid.h1(), -grid.l2 + i2 as f64 * grid.h2(), 0.0];
                let c = field.interior(t, y);
                for row in &c.r {
                    for v in row {
                        r_scale = r_scale.max(v.abs());
                    }
                }
                for i in 0..3 {
                    let v = c.r[i][3].abs().max(c.r[3][i].abs());
                    if v > worst_r.0 {
                        worst_r = (v, y, i);
                    }
                }
                if i1 == 0 {
                    let b = field.boundary(t, y[1], 0.0);
                    for v in &b.b {
                        b_scale = b_scale.max(v.abs());
                    }
                    if b.b[3].abs() > worst_b.0 {
                        worst_b = (b.b[3].abs(), y[1]);
                    }
                }
            }
        }
    }
    if worst_r.0 > VANISHING_TOL * r_scale {
        return Err(Error::VanishingViolation(format!(
            "wall coupling r[{}][3] = {:.3e} at y = {:?} exceeds {:.1e} of the coefficient scale {:.3e}",
            worst_r.2, worst_r.0, worst_r.1, VANISHING_TOL, r_scale
        )));
    }
    if worst_b.0 > VANISHING_TOL * b_scale {
        return Err(Error::VanishingViolation(format!(
            "boundary coefficient b3 = {:.3e} at y2 = {:.3} on the wall exceeds {:.1e} of the scale {:.3e}",
            worst_b.0, worst_b.1, VANISHING_TOL, b_scale
        )));
    }
    Ok(ExtendedField { inner: field })
}
