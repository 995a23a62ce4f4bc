//! Prescribed upstream potential fields: a uniform stream plus an optional
//! compactly supported, wall-slip-exact perturbation.

use crate::wall::WallSpec;

/// First and second derivatives of the upstream potential Φ⁻ at a point,
/// index order (t, x₁, x₂, x₃).
#[derive(Clone, Copy, Debug, Default)]
pub struct UpstreamEval {
    pub dphi: [f64; 4],
    pub d2phi: [[f64; 4]; 4],
}

/// Perturbation: Φ⁻ = q₋x₁ + ε ζ(t) (x₃-W)² B((x₁-c₁)/w₁) B(x₃/w₃) [B(x₂/w₂)].
///
/// The (x₃-W)² factor makes the perturbation and its gradient vanish on the
/// wall, so the slip condition of the perturbed part is exact for every wall
/// shape. The uniform part satisfies slip only on flat walls; drivers that
/// extend fields across the wall must use flat walls with this family.
#[derive(Clone, Copy, Debug)]
pub struct Perturbation {
    pub eps: f64,
    /// ζ ramps from 0 to 1 over [0, ramp_time] as a C⁴ smoothstep, so
    /// four derivatives vanish at both ends and difference probes across
    /// t = 0 see no kink.
    pub ramp_time: f64,
    pub center1: f64,
    pub width1: f64,
    pub width3: f64,
    /// None means x₂-independent.
    pub width2: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct UpstreamField {
    pub q_minus: f64,
    pub perturbation: Option<Perturbation>,
}

/// Ninth-order smoothstep: value and two derivatives, C⁴ at both ends.
fn ramp(t: f64, t_ramp: f64) -> [f64; 3] {
    if t <= 0.0 {
        return [0.0; 3];
    }
    if t >= t_ramp {
        return [1.0, 0.0, 0.0];
    }
    let s = t / t_ramp;
    let v = s * s * s * s * s * (126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + s * 70.0))));
    let sc = s * (1.0 - s);
    let d1 = 630.0 * sc * sc * sc * sc / t_ramp;
    let d2 = 2520.0 * sc * sc * sc * (1.0 - 2.0 * s) / (t_ramp * t_ramp);
    [v, d1, d2]
}

/// Value and two derivatives of B(x/w) or B((x-c)/w).
fn bump1(x: f64, c: f64, w: f64) -> [f64; 3] {
    let b = crate::wall::poly_bump((x - c) / w);
    [b[0], b[1] / w, b[2] / (w * w)]
}

impl UpstreamField {
    pub fn uniform(q_minus: f64) -> Self {
        Self { q_minus, perturbation: None }
    }

    /// Derivatives of Φ⁻ through second order at (t, x).
    pub fn eval(&self, t: f64, x: [f64; 3], wall: &WallSpec) -> UpstreamEval {
        let mut out = UpstreamEval::default();
        out.dphi[1] = self.q_minus;
        let Some(pert) = &self.perturbation else {
            return out;
        };
        let z = ramp(t, pert.ramp_time);
        let wj = wall.jet3(x[0], x[1]);
        // D = x₃ - W and its derivatives.
        let d = x[2] - wj.v;
        let dg = [-wj.d1, -wj.d2, 1.0];
        let dh = [[-wj.d11, -wj.d12, 0.0], [-wj.d12, -wj.d22, 0.0], [0.0, 0.0, 0.0]];
        // Profile R = B₁(x₁)·B₂(x₂)·B₃(x₃) (B₂ optional).
        let b1 = bump1(x[0], pert.center1, pert.width1);
        let b3 = bump1(x[2], 0.0, pert.width3);
        let b2 = match pert.width2 {
            Some(w2) => bump1(x[1], 0.0, w2),
            None => [1.0, 0.0, 0.0],
        };
        let r = b1[0] * b2[0] * b3[0];
        let rg = [b1[1] * b2[0] * b3[0], b1[0] * b2[1] * b3[0], b1[0] * b2[0] * b3[1]];
        let rh = [
            [b1[2] * b2[0] * b3[0], b1[1] * b2[1] * b3[0], b1[1] * b2[0] * b3[1]],
            [b1[1] * b2[1] * b3[0], b1[0] * b2[2] * b3[0], b1[0] * b2[1] * b3[1]],
            [b1[1] * b2[0] * b3[1], b1[0] * b2[1] * b3[1], b1[0] * b2[0] * b3[2]],
        ];
        // χ = D²R.
        let chi = d * d * r;
        let mut chig = [0.0; 3];
        for i in 0..3 {
            chig[i] = 2.0 * d * dg[i] * r + d * d * rg[i];
        }
        let mut chih = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                chih[i][j] = 2.0 * dg[i] * dg[j] * r
                    + 2.0 * d * dh[i][j] * r
                    + 2.0 * d * (dg[i] * rg[j] + dg[j] * rg[i])
                    + d * d * rh[i][j];
            }
        }
        let e = pert.eps;
        out.dphi[0] = e * z[1] * chi;
        for i in 0..3 {
            out.dphi[1 + i] += e * z[0] * chig[i];
        }
        out.d2phi[0][0] = e * z[2] * chi;
        for i in 0..3 {
            out.d2phi[0][1 + i] = e * z[1] * chig[i];
            out.d2phi[1 + i][0] = out.d2phi[0][1 + i];
            for j in 0..3 {
                out.d2phi[1 + i][1 + j] = e * z[0] * chih[i][j];
            }
        }
        out
    }
}
