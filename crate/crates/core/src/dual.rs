//! Forward-mode dual numbers with a fixed number of derivative directions,
//! plus the scalar trait that lets the physics kernels run on `f64` and on
//! duals with the same code path.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar abstraction for kernels evaluated both in plain arithmetic and in
/// forward mode.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    /// Value part (derivatives stripped).
    fn value(self) -> f64;
    /// Power with a constant exponent.
    fn powf(self, e: f64) -> Self;
    fn sqrt(self) -> Self {
        self.powf(0.5)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn value(self) -> f64 {
        self
    }
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
}

/// Value plus gradient with respect to `N` seed directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub val: f64,
    pub eps: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(val: f64) -> Self {
        Self { val, eps: [0.0; N] }
    }

    /// Independent variable seeded in direction `i`.
    pub fn var(val: f64, i: usize) -> Self {
        let mut eps = [0.0; N];
        eps[i] = 1.0;
        Self { val, eps }
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (e, r) in eps.iter_mut().zip(rhs.eps) {
            *e += r;
        }
        Self { val: self.val + rhs.val, eps }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (e, r) in eps.iter_mut().zip(rhs.eps) {
            *e -= r;
        }
        Self { val: self.val - rhs.val, eps }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = self.eps[i] * rhs.val + self.val * rhs.eps[i];
        }
        Self { val: self.val * rhs.val, eps }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.val;
        let val = self.val * inv;
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = (self.eps[i] - val * rhs.eps[i]) * inv;
        }
        Self { val, eps }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut eps = self.eps;
        for e in &mut eps {
            *e = -*e;
        }
        Self { val: -self.val, eps }
    }
}

impl<const N: usize> Real for Dual<N> {
    fn from_f64(x: f64) -> Self {
        Self::constant(x)
    }
    fn value(self) -> f64 {
        self.val
    }
    fn powf(self, e: f64) -> Self {
        let val = self.val.powf(e);
        let scale = e * self.val.powf(e - 1.0);
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = scale * self.eps[i];
        }
        Self { val, eps }
    }
}
