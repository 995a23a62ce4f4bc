//! Planar normal-shock background states: jump solve, admissibility checks,
//! and the closed-form coefficient tables the rest of the laboratory is
//! calibrated against.

use crate::dual::Real;
use crate::error::{Error, Result};

/// Polytropic gas, pressure normalized so the sound speed is ρ^((γ-1)/2).
#[derive(Clone, Copy, Debug)]
pub struct Gas {
    pub gamma: f64,
}

impl Gas {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= 3.0) {
            return Err(Error::Config(format!("gamma must lie in (1, 3], got {gamma}")));
        }
        Ok(Self { gamma })
    }

    /// Specific enthalpy ı(ρ) = (ρ^(γ-1) - 1)/(γ-1).
    pub fn enthalpy<T: Real>(&self, rho: T) -> T {
        let gm1 = self.gamma - 1.0;
        (rho.powf(gm1) - T::from_f64(1.0)) / T::from_f64(gm1)
    }

    /// Squared sound speed c²(ρ) = ρ^(γ-1).
    pub fn sound_speed_sq<T: Real>(&self, rho: T) -> T {
        rho.powf(self.gamma - 1.0)
    }

    /// Density recovered from the Bernoulli relation:
    /// ρ = ((γ-1)(B₀ - ∂ₜΦ - |∇Φ|²/2) + 1)^(1/(γ-1)).
    ///
    /// Errors when the argument leaves the physical regime (density floor
    /// 1e-8); callers must not clamp.
    pub fn density_from_state<T: Real>(&self, bernoulli: f64, phi_t: T, grad_sq: T) -> Result<T> {
        let gm1 = self.gamma - 1.0;
        let base = T::from_f64(1.0)
            + (T::from_f64(bernoulli) - phi_t - grad_sq * T::from_f64(0.5)) * T::from_f64(gm1);
        if base.value() <= 0.0 {
            return Err(Error::DegenerateSample(format!(
                "Bernoulli argument {:.6e} not positive",
                base.value()
            )));
        }
        let rho = base.powf(1.0 / gm1);
        if rho.value() < 1e-8 {
            return Err(Error::DegenerateSample(format!(
                "density {:.6e} below floor 1e-8",
                rho.value()
            )));
        }
        Ok(rho)
    }
}

/// A piecewise-constant transonic normal-shock background.
///
/// Upstream of the front the potential is q₋x₁, downstream q₊x₁; the front
/// itself sits on the plane x₁ = 0 and in hodograph coordinates is the graph
/// y₁ ↦ y₁/(q₋-q₊).
#[derive(Clone, Copy, Debug)]
pub struct ShockBackground {
    pub gas: Gas,
    pub q_minus: f64,
    pub q_plus: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    /// Shared Bernoulli constant B₀.
    pub bernoulli: f64,
}

/// Outcome of the strict-stability check on a background.
#[derive(Clone, Copy, Debug)]
pub struct StabilityReport {
    /// Value of q₋ρ₊ - q₊ρ₋ - ρ₊; strict positivity is required.
    pub value: f64,
    pub strictly_stable: bool,
}

impl ShockBackground {
    pub fn c2_minus(&self) -> f64 {
        self.gas.sound_speed_sq(self.rho_minus)
    }

    pub fn c2_plus(&self) -> f64 {
        self.gas.sound_speed_sq(self.rho_plus)
    }

    pub fn mass_flux(&self) -> f64 {
        self.rho_minus * self.q_minus
    }

    /// Slope of the background front in hodograph coordinates: 1/(q₋-q₊).
    pub fn front_slope(&self) -> f64 {
        1.0 / (self.q_minus - self.q_plus)
    }

    /// Strict-stability inequality q₋ρ₊ - q₊ρ₋ - ρ₊ > 0.
    pub fn check_stability_condition(&self) -> StabilityReport {
        let value = self.q_minus * self.rho_plus - self.q_plus * self.rho_minus - self.rho_plus;
        StabilityReport { value, strictly_stable: value > 0.0 }
    }

    /// Closed-form symmetric coefficient table of the interior operator at
    /// the background, indices (t, y₁, y₂, y₃).
    pub fn principal_coefficients(&self) -> [[f64; 4]; 4] {
        let dq = self.q_minus - self.q_plus;
        let c2p = self.c2_plus();
        let r00 = 1.0 / (dq * dq);
        let r01 = self.q_plus / dq;
        let r11 = self.q_plus * self.q_plus - c2p;
        let r22 = -c2p / (dq * dq);
        [
            [r00, r01, 0.0, 0.0],
            [r01, r11, 0.0, 0.0],
            [0.0, 0.0, r22, 0.0],
            [0.0, 0.0, 0.0, r22],
        ]
    }

    /// Closed-form linearized jump-condition coefficients (b₀, b₁, b₂, b₃)
    /// at the background.
    pub fn boundary_coefficients(&self) -> [f64; 4] {
        let dq = self.q_minus - self.q_plus;
        let c2p = self.c2_plus();
        let b0 = dq * (-(self.rho_plus * self.q_plus / c2p) * dq - (self.rho_plus - self.rho_minus));
        let b1 = dq * dq * dq * self.rho_plus * (1.0 - self.q_plus * self.q_plus / c2p);
        [b0, b1, 0.0, 0.0]
    }

    /// Characteristic speeds of the background operator restricted to the
    /// (t, y₁) plane; used by the d'Alembert oracle and CFL bounds.
    pub fn characteristic_speeds_1d(&self) -> (f64, f64) {
        let r = self.principal_coefficients();
        let (r00, r01, r11) = (r[0][0], r[0][1], r[1][1]);
        let disc = (r01 * r01 - r00 * r11).sqrt();
        ((r01 + disc) / r00, (r01 - disc) / r00)
    }
}

/// Bernoulli residual along the mass-flux hyperbola: R(ρ) = j²/(2ρ²) + ı(ρ) - B₀.
fn jump_residual(gas: &Gas, j: f64, b0: f64, rho: f64) -> f64 {
    let v = j / rho;
    0.5 * v * v + gas.enthalpy(rho) - b0
}

fn jump_residual_deriv(gas: &Gas, j: f64, rho: f64) -> f64 {
    -j * j / (rho * rho * rho) + rho.powf(gas.gamma - 2.0)
}

/// Bisection to near machine precision followed by a damped Newton polish.
fn refine_root(gas: &Gas, j: f64, b0: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = jump_residual(gas, j, b0, lo);
    for _ in 0..200 {
        if (hi - lo) < 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = jump_residual(gas, j, b0, mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut rho = 0.5 * (lo + hi);
    for _ in 0..5 {
        let f = jump_residual(gas, j, b0, rho);
        let df = jump_residual_deriv(gas, j, rho);
        if df == 0.0 {
            break;
        }
        let mut step = f / df;
        // Stay inside the bracket.
        let max_step = 0.5 * (hi - lo).abs().max(1e-14 * rho);
        if step.abs() > max_step {
            step = step.signum() * max_step;
        }
        rho -= step;
    }
    rho
}

/// Solve the jump relations downstream of a supersonic upstream state.
pub fn solve_jump(gamma: f64, rho_minus: f64, q_minus: f64) -> Result<ShockBackground> {
    let gas = Gas::new(gamma)?;
    if !(rho_minus > 0.0) || !(q_minus > 0.0) {
        return Err(Error::Config(format!(
            "upstream state must have positive density and speed, got rho={rho_minus}, q={q_minus}"
        )));
    }
    let c2m = gas.sound_speed_sq(rho_minus);
    let q2 = q_minus * q_minus;
    if q2 <= c2m {
        return Err(Error::NotSupersonic { q2, c2: c2m });
    }
    let j = rho_minus * q_minus;
    let b0 = 0.5 * q2 + gas.enthalpy(rho_minus);
    // Stagnation density: largest ρ on the Bernoulli branch.
    let rho_max = (1.0 + (gamma - 1.0) * b0).powf(1.0 / (gamma - 1.0));
    let lo = rho_minus * (1.0 + 1e-12);
    if jump_residual(&gas, j, b0, lo) >= 0.0 {
        return Err(Error::NoDownstreamState(
            "residual not negative just past the upstream density; zero-strength shock".into(),
        ));
    }
    if jump_residual(&gas, j, b0, rho_max) <= 0.0 {
        return Err(Error::NoDownstreamState(
            "residual not positive at the stagnation density".into(),
        ));
    }
    let rho_plus = refine_root(&gas, j, b0, lo, rho_max);
    let q_plus = j / rho_plus;
    let bg = ShockBackground { gas, q_minus, q_plus, rho_minus, rho_plus, bernoulli: b0 };
    // The root beyond the sonic density is automatically subsonic; fail loudly
    // if numerics ever say otherwise.
    if q_plus * q_plus >= bg.c2_plus() || rho_plus <= rho_minus {
        return Err(Error::NoDownstreamState(format!(
            "downstream root not transonic: q+^2={:.6e}, c+^2={:.6e}",
            q_plus * q_plus,
            bg.c2_plus()
        )));
    }
    Ok(bg)
}

/// Reverse solve: recover the supersonic upstream state from a subsonic
/// downstream one. Together with [`solve_jump`] this is an involution.
pub fn upstream_of(gamma: f64, rho_plus: f64, q_plus: f64) -> Result<ShockBackground> {
    let gas = Gas::new(gamma)?;
    if !(rho_plus > 0.0) || !(q_plus > 0.0) {
        return Err(Error::Config(format!(
            "downstream state must have positive density and speed, got rho={rho_plus}, q={q_plus}"
        )));
    }
    let c2p = gas.sound_speed_sq(rho_plus);
    if q_plus * q_plus >= c2p {
        return Err(Error::NoDownstreamState(format!(
            "reverse solve needs a subsonic downstream state, got q^2={:.6e} >= c^2={:.6e}",
            q_plus * q_plus,
            c2p
        )));
    }
    let j = rho_plus * q_plus;
    let b0 = 0.5 * q_plus * q_plus + gas.enthalpy(rho_plus);
    // The residual attains its minimum at the sonic density; the supersonic
    // root lies below it.
    let rho_sonic = (j * j).powf(1.0 / (gamma + 1.0));
    let hi = rho_sonic * (1.0 - 1e-12);
    if jump_residual(&gas, j, b0, hi) >= 0.0 {
        return Err(Error::NoDownstreamState(
            "no supersonic branch: residual non-negative at the sonic density".into(),
        ));
    }
    let mut lo = rho_sonic * 1e-9;
    let mut expand = 0;
    while jump_residual(&gas, j, b0, lo) <= 0.0 {
        lo *= 1e-3;
        expand += 1;
        if expand > 10 {
            return Err(Error::NoDownstreamState(
                "could not bracket the supersonic root from below".into(),
            ));
        }
    }
    let rho_minus = refine_root(&gas, j, b0, lo, hi);
    let q_minus = j / rho_minus;
    Ok(ShockBackground { gas, q_minus, q_plus, rho_minus, rho_plus, bernoulli: b0 })
}

/// One-parameter normalized family with q₋ = λ, q₊ = 1. Transonic and
/// entropy-admissible for every λ > 1; strictly stable iff λ² - λ - 1 > 0.
pub fn normalized_family(gamma: f64, lambda: f64) -> Result<ShockBackground> {
    let gas = Gas::new(gamma)?;
    if !(lambda > 1.0 + 1e-10) {
        return Err(Error::Config(format!("family parameter must exceed 1, got {lambda}")));
    }
    let gm1 = gamma - 1.0;
    let rho_minus =
        (gm1 * (lambda * lambda - 1.0) / (2.0 * (lambda.powf(gm1) - 1.0))).powf(1.0 / gm1);
    let rho_plus = lambda * rho_minus;
    let bernoulli = 0.5 * lambda * lambda + gas.enthalpy(rho_minus);
    Ok(ShockBackground {
        gas,
        q_minus: lambda,
        q_plus: 1.0,
        rho_minus,
        rho_plus,
        bernoulli,
    })
}
