//! Coefficient providers for the linear problem.
//!
//! The solver consumes a [`CoefficientField`]: interior operator coefficients
//! `Σ r_ij ∂_ij + Σ r_i ∂_i + r`, the oblique boundary operator
//! `Σ b_i ∂_i + b` on the shock face `y₁ = 0`, and the data `(f, g)`.  All
//! queries are posed on the dihedral side `y₃ ≥ 0`; reflection onto the half
//! space is the extension wrapper's job.

use crate::background::ShockBackground;

#[derive(Clone, Copy, Debug)]
pub struct InteriorCoeffs {
    /// Symmetric principal part, indices (y₀, y₁, y₂, y₃).
    pub r: [[f64; 4]; 4],
    /// First-order coefficients (r₀, r₁, r₂, r₃).
    pub r1: [f64; 4],
    /// Zeroth-order coefficient.
    pub r0: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct BoundaryCoeffs {
    pub b: [f64; 4],
    pub b_u: f64,
}

pub trait CoefficientField {
    fn interior(&self, t: f64, y: [f64; 3]) -> InteriorCoeffs;
    fn boundary(&self, t: f64, y2: f64, y3: f64) -> BoundaryCoeffs;
    fn rhs_f(&self, t: f64, y: [f64; 3]) -> f64;
    fn rhs_g(&self, t: f64, y2: f64, y3: f64) -> f64;
    /// The state profile whose norm enters the right-hand side of the energy
    /// estimate (the unknown the coefficients were frozen at).
    fn state(&self, t: f64, y: [f64; 3]) -> f64;
    /// True when `f` and `g` vanish identically; lets norm probes shortcut.
    fn homogeneous(&self) -> bool {
        false
    }
}

/// Constant-coefficient field frozen at an exact background; `f = g = 0`.
pub struct BackgroundField {
    pub bg: ShockBackground,
    interior: InteriorCoeffs,
    boundary: BoundaryCoeffs,
}

impl BackgroundField {
    pub fn new(bg: &ShockBackground) -> Self {
        BackgroundField {
            bg: *bg,
            interior: InteriorCoeffs {
                r: bg.principal_coefficients(),
                r1: [0.0; 4],
                r0: 0.0,
            },
            boundary: BoundaryCoeffs { b: bg.boundary_coefficients(), b_u: 0.0 },
        }
    }
}

impl CoefficientField for BackgroundField {
    fn interior(&self, _t: f64, _y: [f64; 3]) -> InteriorCoeffs {
        self.interior
    }
    fn boundary(&self, _t: f64, _y2: f64, _y3: f64) -> BoundaryCoeffs {
        self.boundary
    }
    fn rhs_f(&self, _t: f64, _y: [f64; 3]) -> f64 {
        0.0
    }
    fn rhs_g(&self, _t: f64, _y2: f64, _y3: f64) -> f64 {
        0.0
    }
    fn state(&self, _t: f64, y: [f64; 3]) -> f64 {
        // Background hodograph profile: linear in y₁ with slope 1/(q₋ − q₊).
        y[0] * self.bg.front_slope()
    }
    fn homogeneous(&self) -> bool {
        true
    }
}

/// `(1 − s²)⁸` bump with two derivatives; identically zero outside |s| < 1.
pub fn poly_bump2(s: f64) -> (f64, f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = 1.0 - s * s;
    let u6 = u.powi(6);
    let v = u6 * u * u;
    let d1 = -16.0 * s * u6 * u;
    let d2 = u6 * (240.0 * s * s - 16.0);
    (v, d1, d2)
}

/// Value and derivatives of a scalar space-time field at one point, through
/// second order. Used wherever a profile has to be consumed together with its
/// exact derivatives: manufactured solutions, the Taylor lift of the
/// nonlinear iteration, and interpolated iterates.
#[derive(Clone, Copy, Debug, Default)]
pub struct SpaceTimeJet {
    pub w: f64,
    /// First partials (t, y₁, y₂, y₃).
    pub d: [f64; 4],
    /// Symmetric second partials.
    pub d2: [[f64; 4]; 4],
}

impl SpaceTimeJet {
    pub fn plus(&self, other: &SpaceTimeJet) -> SpaceTimeJet {
        let mut out = *self;
        out.w += other.w;
        for i in 0..4 {
            out.d[i] += other.d[i];
            for j in 0..4 {
                out.d2[i][j] += other.d2[i][j];
            }
        }
        out
    }
}

/// Closed-form space-time profile used by the manufactured-solution studies:
/// `w*(t, y) = sin(ω t) · bump((y₁ − c₁)/s₁) · bump(y₃/s₃)`, independent of
/// y₂, even in y₃ (so the wall condition holds exactly).
#[derive(Clone, Copy, Debug)]
pub struct Manufactured {
    pub omega: f64,
    pub c1: f64,
    pub s1: f64,
    pub s3: f64,
}

impl Manufactured {
    pub fn jet(&self, t: f64, y: [f64; 3]) -> SpaceTimeJet {
        let (st, ct) = (self.omega * t).sin_cos();
        let (b1, b1p, b1pp) = poly_bump2((y[0] - self.c1) / self.s1);
        let (b3, b3p, b3pp) = poly_bump2(y[2] / self.s3);
        let (b1p, b1pp) = (b1p / self.s1, b1pp / (self.s1 * self.s1));
        let (b3p, b3pp) = (b3p / self.s3, b3pp / (self.s3 * self.s3));
        let w = self.omega;
        let mut j = SpaceTimeJet { w: st * b1 * b3, ..Default::default() };
        j.d[0] = w * ct * b1 * b3;
        j.d[1] = st * b1p * b3;
        j.d[3] = st * b1 * b3p;
        j.d2[0][0] = -w * w * st * b1 * b3;
        j.d2[0][1] = w * ct * b1p * b3;
        j.d2[0][3] = w * ct * b1 * b3p;
        j.d2[1][1] = st * b1pp * b3;
        j.d2[1][3] = st * b1p * b3p;
        j.d2[3][3] = st * b1 * b3pp;
        for i in 0..4 {
            for k in 0..i {
                j.d2[i][k] = j.d2[k][i];
            }
        }
        j
    }

    pub fn value(&self, t: f64, y: [f64; 3]) -> f64 {
        self.jet(t, y).w
    }
}

/// Background coefficients with data manufactured from a known profile:
/// `f = L'w*`, `g = Bw*`.
pub struct ManufacturedField {
    pub base: BackgroundField,
    pub profile: Manufactured,
}

impl ManufacturedField {
    pub fn new(bg: &ShockBackground, profile: Manufactured) -> Self {
        ManufacturedField { base: BackgroundField::new(bg), profile }
    }
}

impl CoefficientField for ManufacturedField {
    fn interior(&self, t: f64, y: [f64; 3]) -> InteriorCoeffs {
        self.base.interior(t, y)
    }
    fn boundary(&self, t: f64, y2: f64, y3: f64) -> BoundaryCoeffs {
        self.base.boundary(t, y2, y3)
    }
    fn rhs_f(&self, t: f64, y: [f64; 3]) -> f64 {
        let c = self.base.interior;
        let j = self.profile.jet(t, y);
        let mut f = c.r0 * j.w;
        for i in 0..4 {
            f += c.r1[i] * j.d[i];
            for k in 0..4 {
                f += c.r[i][k] * j.d2[i][k];
            }
        }
        f
    }
    fn rhs_g(&self, t: f64, y2: f64, y3: f64) -> f64 {
        let c = self.base.boundary;
        let j = self.profile.jet(t, [0.0, y2, y3]);
        c.b[0] * j.d[0] + c.b[1] * j.d[1] + c.b[2] * j.d[2] + c.b[3] * j.d[3] + c.b_u * j.w
    }
    fn state(&self, t: f64, y: [f64; 3]) -> f64 {
        self.base.state(t, y)
    }
}
