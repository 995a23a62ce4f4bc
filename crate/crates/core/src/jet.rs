//! Truncated Taylor algebra in two variables, to second and third order.
//!
//! Wall shapes enter the coefficient assembly through their derivatives up to
//! third order; quantities built from wall slopes (normal weight, hodograph
//! shear) need exact second derivatives. Carrying jets through the arithmetic
//! avoids hand-expanding quotient-rule trees.

use std::ops::{Add, Mul, Neg, Sub};

/// Value and derivatives up to second order in two variables.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
}

/// Value and derivatives up to third order in two variables.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet3 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
    pub d111: f64,
    pub d112: f64,
    pub d122: f64,
    pub d222: f64,
}

impl Jet2 {
    pub const fn constant(v: f64) -> Self {
        Self { v, d1: 0.0, d2: 0.0, d11: 0.0, d12: 0.0, d22: 0.0 }
    }

    /// Compose with a univariate function given as [f, f', f''] at `self.v`.
    pub fn compose(self, f: [f64; 3]) -> Self {
        let [f0, f1, f2] = f;
        Self {
            v: f0,
            d1: f1 * self.d1,
            d2: f1 * self.d2,
            d11: f2 * self.d1 * self.d1 + f1 * self.d11,
            d12: f2 * self.d1 * self.d2 + f1 * self.d12,
            d22: f2 * self.d2 * self.d2 + f1 * self.d22,
        }
    }

    pub fn recip(self) -> Self {
        let s = self.v;
        self.compose([1.0 / s, -1.0 / (s * s), 2.0 / (s * s * s)])
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            v: c * self.v,
            d1: c * self.d1,
            d2: c * self.d2,
            d11: c * self.d11,
            d12: c * self.d12,
            d22: c * self.d22,
        }
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        Self {
            v: self.v + r.v,
            d1: self.d1 + r.d1,
            d2: self.d2 + r.d2,
            d11: self.d11 + r.d11,
            d12: self.d12 + r.d12,
            d22: self.d22 + r.d22,
        }
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, r: Self) -> Self {
        self + r.neg()
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, g: Self) -> Self {
        let f = self;
        Self {
            v: f.v * g.v,
            d1: f.d1 * g.v + f.v * g.d1,
            d2: f.d2 * g.v + f.v * g.d2,
            d11: f.d11 * g.v + 2.0 * f.d1 * g.d1 + f.v * g.d11,
            d12: f.d12 * g.v + f.d1 * g.d2 + f.d2 * g.d1 + f.v * g.d12,
            d22: f.d22 * g.v + 2.0 * f.d2 * g.d2 + f.v * g.d22,
        }
    }
}

impl Jet3 {
    pub const fn constant(v: f64) -> Self {
        Self {
            v,
            d1: 0.0,
            d2: 0.0,
            d11: 0.0,
            d12: 0.0,
            d22: 0.0,
            d111: 0.0,
            d112: 0.0,
            d122: 0.0,
            d222: 0.0,
        }
    }

    /// Coordinate jet: x₁ if `axis == 0`, x₂ if `axis == 1`.
    pub fn coordinate(v: f64, axis: usize) -> Self {
        let mut j = Self::constant(v);
        if axis == 0 {
            j.d1 = 1.0;
        } else {
            j.d2 = 1.0;
        }
        j
    }

    /// First-derivative fields as second-order jets.
    pub fn grad1(self) -> Jet2 {
        Jet2 { v: self.d1, d1: self.d11, d2: self.d12, d11: self.d111, d12: self.d112, d22: self.d122 }
    }

    pub fn grad2(self) -> Jet2 {
        Jet2 { v: self.d2, d1: self.d12, d2: self.d22, d11: self.d112, d12: self.d122, d22: self.d222 }
    }

    /// Truncate to second order.
    pub fn lower(self) -> Jet2 {
        Jet2 { v: self.v, d1: self.d1, d2: self.d2, d11: self.d11, d12: self.d12, d22: self.d22 }
    }

    /// Compose with a univariate function given as [f, f', f'', f'''] at `self.v`.
    pub fn compose(self, f: [f64; 4]) -> Self {
        let [f0, f1, f2, f3] = f;
        let s = self;
        Self {
            v: f0,
            d1: f1 * s.d1,
            d2: f1 * s.d2,
            d11: f2 * s.d1 * s.d1 + f1 * s.d11,
            d12: f2 * s.d1 * s.d2 + f1 * s.d12,
            d22: f2 * s.d2 * s.d2 + f1 * s.d22,
            d111: f3 * s.d1 * s.d1 * s.d1 + 3.0 * f2 * s.d11 * s.d1 + f1 * s.d111,
            d112: f3 * s.d1 * s.d1 * s.d2
                + f2 * (s.d11 * s.d2 + 2.0 * s.d12 * s.d1)
                + f1 * s.d112,
            d122: f3 * s.d1 * s.d2 * s.d2
                + f2 * (2.0 * s.d12 * s.d2 + s.d22 * s.d1)
                + f1 * s.d122,
            d222: f3 * s.d2 * s.d2 * s.d2 + 3.0 * f2 * s.d22 * s.d2 + f1 * s.d222,
        }
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            v: c * self.v,
            d1: c * self.d1,
            d2: c * self.d2,
            d11: c * self.d11,
            d12: c * self.d12,
            d22: c * self.d22,
            d111: c * self.d111,
            d112: c * self.d112,
            d122: c * self.d122,
            d222: c * self.d222,
        }
    }
}

impl Add for Jet3 {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        Self {
            v: self.v + r.v,
            d1: self.d1 + r.d1,
            d2: self.d2 + r.d2,
            d11: self.d11 + r.d11,
            d12: self.d12 + r.d12,
            d22: self.d22 + r.d22,
            d111: self.d111 + r.d111,
            d112: self.d112 + r.d112,
            d122: self.d122 + r.d122,
            d222: self.d222 + r.d222,
        }
    }
}

impl Sub for Jet3 {
    type Output = Self;
    fn sub(self, r: Self) -> Self {
        self + r.scale(-1.0)
    }
}

impl Neg for Jet3 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Jet3 {
    type Output = Self;
    fn mul(self, g: Self) -> Self {
        let f = self;
        Self {
            v: f.v * g.v,
            d1: f.d1 * g.v + f.v * g.d1,
            d2: f.d2 * g.v + f.v * g.d2,
            d11: f.d11 * g.v + 2.0 * f.d1 * g.d1 + f.v * g.d11,
            d12: f.d12 * g.v + f.d1 * g.d2 + f.d2 * g.d1 + f.v * g.d12,
            d22: f.d22 * g.v + 2.0 * f.d2 * g.d2 + f.v * g.d22,
            d111: f.d111 * g.v + 3.0 * f.d11 * g.d1 + 3.0 * f.d1 * g.d11 + f.v * g.d111,
            d112: f.d112 * g.v
                + f.d11 * g.d2
                + 2.0 * f.d12 * g.d1
                + 2.0 * f.d1 * g.d12
                + f.d2 * g.d11
                + f.v * g.d112,
            d122: f.d122 * g.v
                + f.d22 * g.d1
                + 2.0 * f.d12 * g.d2
                + 2.0 * f.d2 * g.d12
                + f.d1 * g.d22
                + f.v * g.d122,
            d222: f.d222 * g.v + 3.0 * f.d22 * g.d2 + 3.0 * f.d2 * g.d22 + f.v * g.d222,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // f(x1,x2) = sin(x1) * (x2^2 + 0.3 x1) as a jet, assembled from primitives.
    fn sample_jet(x1: f64, x2: f64) -> Jet3 {
        let c1 = Jet3::coordinate(x1, 0);
        let c2 = Jet3::coordinate(x2, 1);
        let s = c1.compose([x1.sin(), x1.cos(), -x1.sin(), -x1.cos()]);
        s * (c2 * c2 + c1.scale(0.3))
    }

    fn sample_val(x1: f64, x2: f64) -> f64 {
        x1.sin() * (x2 * x2 + 0.3 * x1)
    }

    #[test]
    fn jet3_matches_finite_differences() {
        let (a, b) = (0.8, -0.45);
        let j = sample_jet(a, b);
        let h = 1e-4;
        let f = sample_val;
        let d1 = (f(a + h, b) - f(a - h, b)) / (2.0 * h);
        let d2 = (f(a, b + h) - f(a, b - h)) / (2.0 * h);
        let d11 = (f(a + h, b) - 2.0 * f(a, b) + f(a - h, b)) / (h * h);
        let d22 = (f(a, b + h) - 2.0 * f(a, b) + f(a, b - h)) / (h * h);
        let d12 = (f(a + h, b + h) - f(a + h, b - h) - f(a - h, b + h) + f(a - h, b - h))
            / (4.0 * h * h);
        let d111 = (f(a + 2.0 * h, b) - 2.0 * f(a + h, b) + 2.0 * f(a - h, b)
            - f(a - 2.0 * h, b))
            / (2.0 * h * h * h);
        let d222 = (f(a, b + 2.0 * h) - 2.0 * f(a, b + h) + 2.0 * f(a, b - h)
            - f(a, b - 2.0 * h))
            / (2.0 * h * h * h);
        // d112 via second difference in x1 of d2.
        let g2 = |x: f64| (f(x, b + h) - f(x, b - h)) / (2.0 * h);
        let d112 = (g2(a + h) - 2.0 * g2(a) + g2(a - h)) / (h * h);
        let g1 = |y: f64| (f(a + h, y) - f(a - h, y)) / (2.0 * h);
        let d122 = (g1(b + h) - 2.0 * g1(b) + g1(b - h)) / (h * h);

        assert!((j.v - f(a, b)).abs() < 1e-14);
        for (got, want, tol) in [
            (j.d1, d1, 1e-7),
            (j.d2, d2, 1e-7),
            (j.d11, d11, 1e-5),
            (j.d12, d12, 1e-5),
            (j.d22, d22, 1e-5),
            (j.d111, d111, 1e-3),
            (j.d112, d112, 1e-3),
            (j.d122, d122, 1e-3),
            (j.d222, d222, 1e-3),
        ] {
            assert!((got - want).abs() < tol, "{got} vs {want}");
        }
    }

    #[test]
    fn jet2_recip_identity() {
        let j = sample_jet(0.6, 0.2).lower() + Jet2::constant(2.0);
        let prod = j * j.recip();
        assert!((prod.v - 1.0).abs() < 1e-14);
        for d in [prod.d1, prod.d2, prod.d11, prod.d12, prod.d22] {
            assert!(d.abs() < 1e-13, "{d}");
        }
    }

    #[test]
    fn grad_jets_are_consistent() {
        let j = sample_jet(0.3, 0.9);
        let g1 = j.grad1();
        assert_eq!(g1.v, j.d1);
        assert_eq!(g1.d1, j.d11);
        assert_eq!(g1.d2, j.d12);
        assert_eq!(g1.d11, j.d111);
    }
}
