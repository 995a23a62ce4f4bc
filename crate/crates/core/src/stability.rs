//! Energy multipliers and the quadratic-form certificates behind the
//! a-priori estimates.
//!
//! Multiplying the interior operator by `Q·∇w` and integrating by parts
//! produces one flux form per boundary face, each a quadratic form in the
//! gradient co-vector ξ = Dw:
//!
//! ```text
//!     H_i(ξ; Q) = 2 (r_i · ξ)(Q · ξ) − Q_i ξᵀ R ξ,     i ∈ {0, 1, 3},
//! ```
//!
//! with `R = [r_ij]` the symmetric principal part and `r_i` its i-th row.
//! `H_0` is the time-slice energy density, `H_1` the flux through the shock
//! face `y₁ = 0`, `H_3` the flux through the wall face `y₃ = 0`.  Estimates
//! hold when a multiplier `Q` makes these forms coercive in the right
//! directions; this module constructs the three canonical multipliers,
//! certifies their coercivity shapes exactly (symmetric eigen-solves, no
//! sampling gap), and screens the structural hypotheses a coefficient field
//! must satisfy before the solver trusts it.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::background::ShockBackground;
use crate::error::{Error, Result};

/// Pointwise data the certificates depend on: principal part of the interior
/// operator plus the linearized jump condition on the shock face.
#[derive(Clone, Copy, Debug)]
pub struct StabilityBundle {
    /// Symmetric principal coefficients, indices (y₀, y₁, y₂, y₃).
    pub r: [[f64; 4]; 4],
    /// First-order coefficients of the shock boundary operator.
    pub b: [f64; 4],
    /// Zeroth-order coefficient of the shock boundary operator.
    pub b_u: f64,
}

impl StabilityBundle {
    pub fn background(bg: &ShockBackground) -> Self {
        StabilityBundle {
            r: bg.principal_coefficients(),
            b: bg.boundary_coefficients(),
            b_u: 0.0,
        }
    }

    /// Largest principal-coefficient magnitude; the natural size against
    /// which margins are measured.
    pub fn scale(&self) -> f64 {
        let mut s: f64 = 0.0;
        for row in &self.r {
            for &v in row {
                s = s.max(v.abs());
            }
        }
        s.max(f64::MIN_POSITIVE)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MultiplierKind {
    /// Interior/first-derivative estimate multiplier built from the boundary
    /// coefficients (the `B̃`/`ν` construction).
    FirstOrder,
    /// Multiplier for the doubly-Dirichlet corner problem.
    Dirichlet,
    /// Multiplier for the evenly-extended (Neumann-wall) problem.
    Extension,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MultiplierVector {
    pub q: [f64; 4],
    pub kind: MultiplierKind,
}

/// Symmetric matrix of the i-th flux form: `ξ ↦ 2(r_i·ξ)(Q·ξ) − Q_i ξᵀRξ`.
pub fn flux_form_matrix(r: &[[f64; 4]; 4], q: &[f64; 4], i: usize) -> [[f64; 4]; 4] {
    let ri = r[i];
    let mut m = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            m[a][b] = ri[a] * q[b] + q[a] * ri[b] - q[i] * r[a][b];
        }
    }
    m
}

/// Direct evaluation of the i-th flux form, bypassing the matrix assembly.
pub fn flux_form_value(r: &[[f64; 4]; 4], q: &[f64; 4], i: usize, xi: &[f64; 4]) -> f64 {
    let mut ri_xi = 0.0;
    let mut q_xi = 0.0;
    let mut quad = 0.0;
    for a in 0..4 {
        ri_xi += r[i][a] * xi[a];
        q_xi += q[a] * xi[a];
        for b in 0..4 {
            quad += r[a][b] * xi[a] * xi[b];
        }
    }
    2.0 * ri_xi * q_xi - q[i] * quad
}

/// Which flux form a certificate talks about, oriented so that positivity is
/// the useful direction (outward through each face).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FormKind {
    /// `H₀`: energy density on time slices.
    TimeSlice,
    /// `−H₁`: flux through the shock face.
    ShockFlux,
    /// `−H₃`: flux through the wall face.
    WallFlux,
}

impl FormKind {
    fn index(self) -> usize {
        match self {
            FormKind::TimeSlice => 0,
            FormKind::ShockFlux => 1,
            FormKind::WallFlux => 3,
        }
    }

    fn sign(self) -> f64 {
        match self {
            FormKind::TimeSlice => 1.0,
            _ => -1.0,
        }
    }

    /// Oriented form matrix for this kind.
    pub fn matrix(self, bundle: &StabilityBundle, q: &[f64; 4]) -> [[f64; 4]; 4] {
        let mut m = flux_form_matrix(&bundle.r, q, self.index());
        let s = self.sign();
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        m
    }
}

/// Coercivity shape a form is certified against.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum InequalityShape {
    /// `F(ξ) ≥ C₁|ξ|²` on all of ℝ⁴.
    Definite,
    /// `F(ξ) ≥ C₁ Σ_strong ξᵢ² − C₂ Σ_weak ξᵢ²`.
    Split { strong: [bool; 4] },
    /// ξ clamped to the wall normal (a vanishing trace kills the tangential
    /// slots): `F ≥ C₁ ξ₃²`.
    WallNormal,
    /// Jointly in (ξ, w): `F(ξ) ≥ C₁|ξ|² − C₂(w² + (b·ξ + b_u w)²)`; the
    /// allowance is exactly what the boundary condition supplies.
    BoundaryModulated,
}

/// The inequality shapes each multiplier is responsible for.
pub fn inequality_set(kind: MultiplierKind) -> Vec<(FormKind, InequalityShape)> {
    let spatial = [false, true, true, true];
    match kind {
        MultiplierKind::FirstOrder => vec![
            (FormKind::TimeSlice, InequalityShape::Definite),
            (FormKind::ShockFlux, InequalityShape::BoundaryModulated),
        ],
        MultiplierKind::Dirichlet => vec![
            (FormKind::TimeSlice, InequalityShape::Split { strong: spatial }),
            (FormKind::ShockFlux, InequalityShape::Split { strong: [false, true, false, false] }),
            (FormKind::WallFlux, InequalityShape::WallNormal),
        ],
        MultiplierKind::Extension => vec![
            (FormKind::TimeSlice, InequalityShape::Split { strong: spatial }),
            (FormKind::ShockFlux, InequalityShape::Split { strong: [false, false, false, true] }),
            (FormKind::WallFlux, InequalityShape::WallNormal),
        ],
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FormCertificate {
    pub form: FormKind,
    pub shape: InequalityShape,
    /// Certified coercivity constant (exact linear algebra, not sampling).
    pub c1: f64,
    /// Allowance constant on the weak directions (0 when none is needed).
    pub c2: f64,
    /// Smallest sampled value of the oriented form on the unit sphere of its
    /// admissible directions; raw data recorded next to the certificate.
    pub sampled_min: f64,
    /// Largest entry magnitude of the form matrix.
    pub scale: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadraticFormReport {
    pub multiplier: MultiplierVector,
    pub entries: Vec<FormCertificate>,
    pub samples_per_form: usize,
}

impl QuadraticFormReport {
    /// Worst certified constant relative to its form's natural scale.
    pub fn min_margin(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.c1 / e.scale.max(f64::MIN_POSITIVE))
            .fold(f64::INFINITY, f64::min)
    }
}

fn dmat(m: &[[f64; 4]; 4]) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| m[i][j])
}

fn eig_min(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    // Symmetrize first: the inputs are symmetric up to round-off only.
    let s = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(s)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

fn matrix_scale(m: &[[f64; 4]; 4]) -> f64 {
    let mut s: f64 = 0.0;
    for row in m {
        for &v in row {
            s = s.max(v.abs());
        }
    }
    s.max(f64::MIN_POSITIVE)
}

/// `C₁(C₂) = λ_min(M_SS − M_SN (M_NN + C₂ I)⁻¹ M_NS)` grows monotonically to
/// `λ_min(M_SS)`; double `C₂` from above the Gershgorin radius (keeping the
/// shifted block positive definite) until half the limit is reached.
fn certify_split(m: &[[f64; 4]; 4], strong: &[bool; 4]) -> (f64, f64) {
    let s_idx: Vec<usize> = (0..4).filter(|&i| strong[i]).collect();
    let n_idx: Vec<usize> = (0..4).filter(|&i| !strong[i]).collect();
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[rows[i]][cols[j]])
    };
    let mss = pick(&s_idx, &s_idx);
    let target = eig_min(&mss);
    if !(target > 0.0) || n_idx.is_empty() {
        return (target, 0.0);
    }
    let msn = pick(&s_idx, &n_idx);
    let mnn = pick(&n_idx, &n_idx);
    let mut c2 = 1.0 + 4.0 * matrix_scale(m);
    let mut c1 = f64::NEG_INFINITY;
    for _ in 0..64 {
        let shifted = &mnn + DMatrix::identity(n_idx.len(), n_idx.len()) * c2;
        let inv = shifted
            .clone()
            .try_inverse()
            .expect("shifted weak block is positive definite by construction");
        let schur = &mss - &msn * inv * msn.transpose();
        c1 = eig_min(&schur);
        if c1 >= 0.5 * target {
            return (c1, c2);
        }
        c2 *= 2.0;
    }
    (c1, c2)
}

/// Schur-complement in the scalar `w` slot reduces the joint inequality to
/// `λ_min(M + C₂/(1 + b_u²) · b bᵀ) ≥ C₁`, whose `C₂ → ∞` limit is the
/// compression of `M` to the hyperplane `b·ξ = 0`.
fn certify_boundary_modulated(m: &[[f64; 4]; 4], b: &[f64; 4], b_u: f64) -> (f64, f64) {
    let md = dmat(m);
    let bnorm = (b.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if bnorm == 0.0 {
        return (eig_min(&md), 0.0);
    }
    let bn = DMatrix::from_fn(4, 1, |i, _| b[i] / bnorm);
    let proj = DMatrix::identity(4, 4) - &bn * bn.transpose();
    let se = SymmetricEigen::new(proj);
    let cols: Vec<usize> = (0..4).filter(|&i| se.eigenvalues[i] > 0.5).collect();
    let z = DMatrix::from_fn(4, cols.len(), |i, j| se.eigenvectors[(i, cols[j])]);
    let target = eig_min(&(z.transpose() * &md * &z));
    if !(target > 0.0) {
        return (target, 0.0);
    }
    let bb = DMatrix::from_fn(4, 4, |i, j| b[i] * b[j]);
    let mut c2 = 1.0 + 4.0 * matrix_scale(m);
    let mut c1 = f64::NEG_INFINITY;
    for _ in 0..64 {
        c1 = eig_min(&(&md + &bb * (c2 / (1.0 + b_u * b_u))));
        if c1 >= 0.5 * target {
            return (c1, c2);
        }
        c2 *= 2.0;
    }
    (c1, c2)
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; rejection keeps the log argument away from zero.
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        if u1 > 1e-12 {
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

fn unit4(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let v = [gauss(rng), gauss(rng), gauss(rng), gauss(rng)];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n, v[3] / n];
        }
    }
}

fn quad(m: &[[f64; 4]; 4], xi: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            s += m[a][b] * xi[a] * xi[b];
        }
    }
    s
}

const SPHERE_SAMPLES: usize = 4096;
const SAMPLE_SEED: u64 = 0x5f0c_94a1;

fn sampled_min(m: &[[f64; 4]; 4], shape: &InequalityShape, rng: &mut ChaCha8Rng) -> f64 {
    match shape {
        InequalityShape::WallNormal => m[3][3],
        _ => {
            let mut min = f64::INFINITY;
            for _ in 0..SPHERE_SAMPLES {
                min = min.min(quad(m, &unit4(rng)));
            }
            min
        }
    }
}

/// Evaluate and certify each requested inequality for the given multiplier.
/// Certification is exact (eigen-solves); the sampled minima are recorded as
/// independent raw data, not used for the constants.
pub fn verify_forms(
    bundle: &StabilityBundle,
    q: &MultiplierVector,
    set: &[(FormKind, InequalityShape)],
) -> QuadraticFormReport {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut entries = Vec::with_capacity(set.len());
    for &(form, shape) in set {
        let m = form.matrix(bundle, &q.q);
        let (c1, c2) = match shape {
            InequalityShape::Definite => (eig_min(&dmat(&m)), 0.0),
            InequalityShape::Split { strong } => certify_split(&m, &strong),
            InequalityShape::WallNormal => (m[3][3], 0.0),
            InequalityShape::BoundaryModulated => {
                certify_boundary_modulated(&m, &bundle.b, bundle.b_u)
            }
        };
        entries.push(FormCertificate {
            form,
            shape,
            c1,
            c2,
            sampled_min: sampled_min(&m, &shape, &mut rng),
            scale: matrix_scale(&m),
        });
    }
    QuadraticFormReport { multiplier: *q, entries, samples_per_form: SPHERE_SAMPLES }
}

/// Extension-kind admission threshold for the leading entry: `Q₀` must exceed
/// `max{(−2r₁₀Q₁ + r₁₀|Q₂| + r₁₀Q₃)/(−r₁₁), r₁₀|Q₂|/(−r₂₂), r₁₀Q₃/(−r₃₃)}`,
/// the diagonal-dominance reserve of the construction.
pub fn extension_threshold(r: &[[f64; 4]; 4], q: &[f64; 4]) -> f64 {
    let r10 = r[1][0];
    let e1 = (-2.0 * r10 * q[1] + r10 * q[2].abs() + r10 * q[3]) / (-r[1][1]);
    let e2 = r10 * q[2].abs() / (-r[2][2]);
    let e3 = r10 * q[3] / (-r[3][3]);
    e1.max(e2).max(e3)
}

/// Check the kind's structural gates, then certify; any non-positive
/// certified constant is a hard failure.
pub fn certify_multiplier(
    bundle: &StabilityBundle,
    q: &MultiplierVector,
) -> Result<QuadraticFormReport> {
    match q.kind {
        MultiplierKind::Dirichlet => {
            if !(q.q[0] > 0.0 && q.q[1] > 0.0 && q.q[3] > 0.0) {
                return Err(Error::FormNotCoercive(format!(
                    "dirichlet multiplier needs Q0, Q1, Q3 > 0, got {:?}",
                    q.q
                )));
            }
        }
        MultiplierKind::Extension => {
            if !(q.q[1] < 0.0 && q.q[3] > 0.0) {
                return Err(Error::FormNotCoercive(format!(
                    "extension multiplier needs Q1 < 0 and Q3 > 0, got {:?}",
                    q.q
                )));
            }
            let thr = extension_threshold(&bundle.r, &q.q);
            if !(q.q[0] > thr) {
                return Err(Error::FormNotCoercive(format!(
                    "extension leading entry {:.6e} below its reserve threshold {:.6e}",
                    q.q[0], thr
                )));
            }
        }
        MultiplierKind::FirstOrder => {}
    }
    let report = verify_forms(bundle, q, &inequality_set(q.kind));
    for e in &report.entries {
        if !(e.c1 > 0.0) {
            return Err(Error::FormNotCoercive(format!(
                "{:?} form not coercive: certified constant {:.6e}",
                e.form, e.c1
            )));
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifiedMultiplier {
    pub multiplier: MultiplierVector,
    pub report: QuadraticFormReport,
}

/// Solve `R x = v` by LU with a relative singularity guard.
fn solve_principal(r: &[[f64; 4]; 4], v: &[f64; 4]) -> Result<[f64; 4]> {
    let scale = matrix_scale(r);
    let lu = dmat(r).lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() < 1e-12 * scale.powi(4) {
        return Err(Error::SingularPrincipalPart(format!(
            "det = {det:.3e} at scale {scale:.3e}"
        )));
    }
    let rhs = DMatrix::from_fn(4, 1, |i, _| v[i]);
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularPrincipalPart("LU solve failed".into()))?;
    Ok([x[0], x[1], x[2], x[3]])
}

/// The construction behind the first-order multiplier: the boundary-aligned
/// direction `B̃ᵢ = (r₁₁/b₁) bᵢ − r_{i1}`, the conormal `N̂ᵢ = −r_{i1}`, and
/// the inverse-weighted size `ν = Σ r^{ij} B̃ᵢ B̃ⱼ`.
fn boundary_direction(bundle: &StabilityBundle) -> Result<([f64; 4], [f64; 4], f64)> {
    let bscale = bundle.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if bundle.b[1].abs() <= 1e-12 * bscale.max(f64::MIN_POSITIVE) {
        return Err(Error::FormNotCoercive(format!(
            "boundary pivot b1 = {:.3e} vanishes relative to scale {:.3e}",
            bundle.b[1], bscale
        )));
    }
    let ratio = bundle.r[1][1] / bundle.b[1];
    let mut btilde = [0.0; 4];
    let mut nhat = [0.0; 4];
    for i in 0..4 {
        btilde[i] = ratio * bundle.b[i] - bundle.r[i][1];
        nhat[i] = -bundle.r[i][1];
    }
    let x = solve_principal(&bundle.r, &btilde)?;
    let nu = (0..4).map(|i| btilde[i] * x[i]).sum::<f64>();
    Ok((btilde, nhat, nu))
}

/// First-order multiplier `Q = B̃ + ν(B̃ − N̂) + |ν r₀₁ / B̃₀| B̃`.  The last
/// coefficient divides by the time component of `B̃`; we read `B̃₀` as exactly
/// that component.
pub fn build_first_order(bundle: &StabilityBundle) -> Result<CertifiedMultiplier> {
    let (btilde, nhat, nu) = boundary_direction(bundle)?;
    if btilde[0].abs() <= 1e-12 * bundle.scale() {
        return Err(Error::FormNotCoercive(format!(
            "time component of the boundary direction vanishes ({:.3e})",
            btilde[0]
        )));
    }
    let lift = (nu * bundle.r[0][1] / btilde[0]).abs();
    let mut q = [0.0; 4];
    for i in 0..4 {
        q[i] = btilde[i] + nu * (btilde[i] - nhat[i]) + lift * btilde[i];
    }
    let mv = MultiplierVector { q, kind: MultiplierKind::FirstOrder };
    let report = certify_multiplier(bundle, &mv)?;
    Ok(CertifiedMultiplier { multiplier: mv, report })
}

/// Dirichlet-corner multiplier: seed `(1, 1, 0, 1)`, line-search the middle
/// entry over a dyadic grid, keep the candidate with the best worst margin.
pub fn build_qd(bundle: &StabilityBundle) -> Result<CertifiedMultiplier> {
    let mut best: Option<(f64, CertifiedMultiplier)> = None;
    for k in -3..=3 {
        let s = 2.0f64.powi(k);
        let mv = MultiplierVector { q: [1.0, s, 0.0, 1.0], kind: MultiplierKind::Dirichlet };
        let Ok(report) = certify_multiplier(bundle, &mv) else { continue };
        let margin = report.min_margin();
        if best.as_ref().map_or(true, |(m, _)| margin > *m) {
            best = Some((margin, CertifiedMultiplier { multiplier: mv, report }));
        }
    }
    match best {
        Some((margin, cert)) if margin > 0.0 => Ok(cert),
        _ => Err(Error::FormNotCoercive(
            "no dirichlet candidate achieves positive certified minima".into(),
        )),
    }
}

/// Extension multiplier: `(Q₁, Q₂, Q₃) = (−1, 0, 1)` with the leading entry
/// set 10% above its reserve threshold.
pub fn build_qe(bundle: &StabilityBundle) -> Result<CertifiedMultiplier> {
    let mut q = [0.0, -1.0, 0.0, 1.0];
    q[0] = 1.1 * extension_threshold(&bundle.r, &q);
    let mv = MultiplierVector { q, kind: MultiplierKind::Extension };
    let report = certify_multiplier(bundle, &mv)?;
    Ok(CertifiedMultiplier { multiplier: mv, report })
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustnessProbe {
    /// Largest observed sensitivity |ΔC₁|/δ across forms and trials.
    pub k: f64,
    /// Largest tested perturbation size below which every certified constant
    /// stayed positive (0 if even the smallest failed).
    pub delta_star: f64,
    pub trials_per_delta: usize,
}

/// Perturb the bundle by δ in sup-norm (symmetric principal perturbations,
/// boundary coefficients too) while keeping the multiplier fixed, and watch
/// the certified constants.  This operationalizes the smallness budget: the
/// background-built multiplier keeps working on every nearby field.
pub fn probe_robustness(
    bundle: &StabilityBundle,
    q: &MultiplierVector,
    deltas: &[f64],
    trials: usize,
    seed: u64,
) -> RobustnessProbe {
    let set = inequality_set(q.kind);
    let base = verify_forms(bundle, q, &set);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k: f64 = 0.0;
    let mut delta_star = 0.0;
    let mut sorted: Vec<f64> = deltas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    'outer: for &delta in &sorted {
        for _ in 0..trials {
            let mut p = *bundle;
            for i in 0..4 {
                for j in i..4 {
                    let e = delta * rng.gen_range(-1.0..1.0);
                    p.r[i][j] += e;
                    if j != i {
                        p.r[j][i] = p.r[i][j];
                    }
                }
                p.b[i] += delta * rng.gen_range(-1.0..1.0);
            }
            p.b_u += delta * rng.gen_range(-1.0..1.0);
            let rep = verify_forms(&p, q, &set);
            for (e, e0) in rep.entries.iter().zip(base.entries.iter()) {
                k = k.max((e.c1 - e0.c1).abs() / delta);
                if !(e.c1 > 0.0) {
                    break 'outer;
                }
            }
        }
        delta_star = delta;
    }
    RobustnessProbe { k, delta_star, trials_per_delta: trials }
}

/// The three boundary-ratio quantities the estimates need bounded away from
/// zero: `|b₁|`, `r₁₁ b₀/b₁ − r₀₁`, and `Σ r^{ij}(r₁₁ bᵢ/b₁ − r_{i1})(r₁₁
/// bⱼ/b₁ − r_{j1})`.
pub fn boundary_ratio_quantities(bundle: &StabilityBundle) -> Result<[f64; 3]> {
    let (btilde, _, nu) = boundary_direction(bundle)?;
    let second = btilde[0]; // r₁₁ b₀/b₁ − r₀₁ by definition of B̃₀
    Ok([bundle.b[1].abs(), second, nu])
}

/// One grid point of a coefficient field, as seen by the hypothesis screen.
#[derive(Clone, Copy, Debug)]
pub struct HypothesisSample {
    pub r: [[f64; 4]; 4],
    /// First-order interior coefficient multiplying ∂₂ (must die on the wall).
    pub r2: f64,
    /// Shock boundary linearization (first-order vector, zeroth-order), when
    /// the sample lies on the shock face.
    pub b: Option<([f64; 4], f64)>,
    /// Sample lies on the wall plane y₃ = 0.
    pub on_wall: bool,
    /// Caller-computed sup of derivative norms of the deviation from the
    /// background at this sample.
    pub deviation: f64,
}

impl HypothesisSample {
    pub fn background(bg: &ShockBackground) -> Self {
        HypothesisSample {
            r: bg.principal_coefficients(),
            r2: 0.0,
            b: Some((bg.boundary_coefficients(), 0.0)),
            on_wall: true,
            deviation: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct H1Report {
    /// Background signature: r₀₁ > 0, r₁₁ < 0, r₂₂ = r₃₃ < 0, all other
    /// off-diagonal couplings zero.
    pub background_signs_ok: bool,
    pub r01: f64,
    pub r11: f64,
    pub r22: f64,
    pub r33: f64,
    /// Time direction stays positive and the spatial block negative definite
    /// at every sample.
    pub hyperbolic_ok: bool,
    pub wall_max_r30: f64,
    pub wall_max_r31: f64,
    pub wall_max_r32: f64,
    pub wall_max_r2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct H2Report {
    /// Largest |b₃| over shock samples on the wall plane.
    pub wall_max_b3: f64,
    /// Largest magnitudes of the coefficients that vanish at the background.
    pub max_zero_order: f64,
    pub max_b2: f64,
    pub max_b3: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct H3Report {
    pub sup_deviation: f64,
    pub budget: f64,
    pub within_budget: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct H4Report {
    /// Background values of the three boundary-ratio quantities.
    pub abs_b1: f64,
    pub second: f64,
    pub third: f64,
    /// Worst values over all shock samples (background included).
    pub worst_abs_b1: f64,
    pub worst_second: f64,
    pub worst_third: f64,
    /// Achieved uniform margin: the smallest of the worst three.
    pub gamma0: f64,
    /// Strict-stability flag of the background (the admissibility gate).
    pub strictly_stable: bool,
    /// Intermediate quotient in the hand derivation tying strict stability to
    /// the second quantity, and its final lower bound; both flip sign when
    /// the gate fails, while the quantity itself may stay positive.
    pub screen_diagnostic: f64,
    pub screen_lower_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesesReport {
    pub h1: H1Report,
    pub h2: H2Report,
    pub h3: H3Report,
    pub h4: H4Report,
}

fn spatial_block_max_eig(r: &[[f64; 4]; 4]) -> f64 {
    let m = DMatrix::from_fn(3, 3, |i, j| r[i + 1][j + 1]);
    let s = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(s)
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

/// Screen the four structural hypotheses over a sampled coefficient field.
/// Background-only quantities come from the closed forms; field quantities
/// are maxima over the samples.
pub fn check_hypotheses(
    bg: &ShockBackground,
    samples: &[HypothesisSample],
    delta: f64,
) -> Result<HypothesesReport> {
    let r = bg.principal_coefficients();
    let (r01, r11, r22, r33) = (r[0][1], r[1][1], r[2][2], r[3][3]);
    let off_zero = r[0][2] == 0.0
        && r[0][3] == 0.0
        && r[1][2] == 0.0
        && r[1][3] == 0.0
        && r[2][3] == 0.0;
    let background_signs_ok =
        r[0][0] > 0.0 && r01 > 0.0 && r11 < 0.0 && r22 < 0.0 && r33 < 0.0 && off_zero;

    let mut h1 = H1Report {
        background_signs_ok,
        r01,
        r11,
        r22,
        r33,
        hyperbolic_ok: true,
        wall_max_r30: 0.0,
        wall_max_r31: 0.0,
        wall_max_r32: 0.0,
        wall_max_r2: 0.0,
    };
    let mut h2 =
        H2Report { wall_max_b3: 0.0, max_zero_order: 0.0, max_b2: 0.0, max_b3: 0.0 };
    let mut sup_deviation: f64 = 0.0;

    let bg_bundle = StabilityBundle::background(bg);
    let bg_ratios = boundary_ratio_quantities(&bg_bundle)?;
    let mut worst = bg_ratios;

    for s in samples {
        // r^{ij} must exist everywhere; probe invertibility even where the
        // ratios are not evaluated.
        solve_principal(&s.r, &[1.0, 0.0, 0.0, 0.0])?;
        if !(s.r[0][0] > 0.0) || spatial_block_max_eig(&s.r) >= 0.0 {
            h1.hyperbolic_ok = false;
        }
        if s.on_wall {
            h1.wall_max_r30 = h1.wall_max_r30.max(s.r[3][0].abs());
            h1.wall_max_r31 = h1.wall_max_r31.max(s.r[3][1].abs());
            h1.wall_max_r32 = h1.wall_max_r32.max(s.r[3][2].abs());
            h1.wall_max_r2 = h1.wall_max_r2.max(s.r2.abs());
        }
        if let Some((b, b_u)) = s.b {
            if s.on_wall {
                h2.wall_max_b3 = h2.wall_max_b3.max(b[3].abs());
            }
            h2.max_zero_order = h2.max_zero_order.max(b_u.abs());
            h2.max_b2 = h2.max_b2.max(b[2].abs());
            h2.max_b3 = h2.max_b3.max(b[3].abs());
            let ratios =
                boundary_ratio_quantities(&StabilityBundle { r: s.r, b, b_u })?;
            for i in 0..3 {
                if ratios[i] < worst[i] {
                    worst[i] = ratios[i];
                }
            }
        }
        sup_deviation = sup_deviation.max(s.deviation);
    }

    let stab = bg.check_stability_condition();
    let dq = bg.q_minus - bg.q_plus;
    let c2p = bg.c2_plus();
    let (qp, rho_m, rho_p) = (bg.q_plus, bg.rho_minus, bg.rho_plus);
    let screen_diagnostic = (-qp * rho_p - c2p * (rho_m - rho_p)
        - qp * (bg.q_plus - bg.q_minus) * rho_p)
        / (dq * rho_p);
    let screen_lower_bound = stab.value / (dq * rho_p);

    Ok(HypothesesReport {
        h1,
        h2,
        h3: H3Report {
            sup_deviation,
            budget: delta,
            within_budget: sup_deviation <= delta,
        },
        h4: H4Report {
            abs_b1: bg_ratios[0],
            second: bg_ratios[1],
            third: bg_ratios[2],
            worst_abs_b1: worst[0],
            worst_second: worst[1],
            worst_third: worst[2],
            gamma0: worst[0].min(worst[1]).min(worst[2]),
            strictly_stable: stab.strictly_stable,
            screen_diagnostic,
            screen_lower_bound,
        },
    })
}

/// Everything the estimates need from one background, bundled for the run
/// report: hypothesis screen, the three certified multipliers, and the
/// perturbation budget under which the certificates keep holding.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityCertificate {
    pub hypotheses: HypothesesReport,
    pub first_order: CertifiedMultiplier,
    pub dirichlet: CertifiedMultiplier,
    pub extension: CertifiedMultiplier,
    pub robustness: RobustnessProbe,
}

pub fn certify_background(bg: &ShockBackground, delta: f64) -> Result<StabilityCertificate> {
    let bundle = StabilityBundle::background(bg);
    let hypotheses = check_hypotheses(bg, &[HypothesisSample::background(bg)], delta)?;
    let first_order = build_first_order(&bundle)?;
    let dirichlet = build_qd(&bundle)?;
    let extension = build_qe(&bundle)?;
    let deltas = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2];
    let robustness = probe_robustness(&bundle, &dirichlet.multiplier, &deltas, 8, 7);
    Ok(StabilityCertificate { hypotheses, first_order, dirichlet, extension, robustness })
}
