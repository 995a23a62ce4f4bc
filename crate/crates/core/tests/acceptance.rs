//! Release gates for the laboratory.  Each test is one criterion, runs the
//! full pipeline behind it, prints a single verdict line with the measured
//! numbers, and pins the tolerances in code.  Run with `--show-output` (or
//! `--nocapture`) to see the verdict lines of passing criteria.

use std::time::{Duration, Instant};

use dihedral_shock::background::{normalized_family, solve_jump};
use dihedral_shock::coeffs::{
    atilde_matrix_oracle, eval_interior, linearize_g, FlowSample, Perturbation, UpstreamEval,
    UpstreamField,
};
use dihedral_shock::driver::{run_stability_experiment, ExperimentSpec};
use dihedral_shock::solver::{
    build_compatible_data, build_zero_data, measure_estimate, poly_bump2, solve_lp,
    BackgroundField, BoundaryCoeffs, CoefficientField, GridSpec, InteriorCoeffs, Manufactured,
    ManufacturedField, TraceJet,
};
use dihedral_shock::stability::{build_qd, build_qe, probe_robustness, StabilityBundle};
use dihedral_shock::wall::{normal_weight, weight_p, CubicProfile, WallKind, WallSpec};
use dihedral_shock::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn verdict(n: usize, name: &str, pass: bool, took: Duration, detail: &str) {
    println!(
        "criterion {n} ({name}): {} [{:.2}s] — {detail}",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn fmt_list(v: &[f64], prec: usize) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.prec$}")).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_sci(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.1e}")).collect();
    format!("[{}]", items.join(", "))
}

fn budget(n: usize, name: &str, took: Duration, limit: Duration) {
    assert!(
        took <= limit,
        "criterion {n} ({name}) overran its budget: {:.1}s > {:.1}s",
        took.as_secs_f64(),
        limit.as_secs_f64()
    );
}

#[test]
fn criterion_1_jump_family_closed_forms() {
    let t0 = Instant::now();
    let golden = 0.5 * (1.0 + 5.0f64.sqrt());
    let mut worst_jump = 0.0f64;
    let mut worst_val = 0.0f64;
    let mut pass = true;
    for &gamma in &[1.4, 5.0 / 3.0] {
        for &lambda in &[1.1, 1.3, 1.5] {
            let fam = normalized_family(gamma, lambda).unwrap();
            let solved = solve_jump(gamma, fam.rho_minus, fam.q_minus).unwrap();
            worst_jump = worst_jump
                .max(rel(solved.q_plus, 1.0))
                .max(rel(solved.rho_plus, fam.rho_plus));
            let report = fam.check_stability_condition();
            let closed = (lambda * lambda - lambda - 1.0) * fam.rho_minus;
            worst_val = worst_val.max(rel(report.value, closed));
            pass &= report.strictly_stable == (lambda > golden);
            pass &= (report.value < 0.0) == (lambda < golden);
        }
    }
    pass &= worst_jump <= 1e-10 && worst_val <= 1e-12;
    let took = t0.elapsed();
    verdict(
        1,
        "jump family closed forms",
        pass,
        took,
        &format!("jump reconstruction defect {worst_jump:.2e}, condition-value defect {worst_val:.2e}"),
    );
    budget(1, "jump family closed forms", took, Duration::from_secs(1));
}

#[test]
fn criterion_2_background_coefficient_table() {
    let t0 = Instant::now();
    let bg = normalized_family(1.4, 1.7).unwrap();
    let wall = WallSpec::flat();
    let upstream = UpstreamField::uniform(bg.q_minus);
    let slope = bg.front_slope();
    let s = FlowSample::build(
        bg.gas,
        bg.bernoulli,
        0.0,
        [0.3, 0.0, 0.2],
        [0.0, slope, 0.0, 0.0],
        &wall,
        &upstream,
    )
    .unwrap();
    let bundle = eval_interior(&s).unwrap();
    let mut table = [[0.0f64; 4]; 4];
    table[0][0] = 2.040816326530613;
    table[0][1] = 1.428571428571429;
    table[1][0] = table[0][1];
    table[1][1] = -0.976588717817101;
    table[2][2] = -4.033854526157350;
    table[3][3] = table[2][2];
    let scale = 4.033854526157350;
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let d = (bundle.atilde[i][j] - table[i][j]).abs();
            worst = worst.max(if table[i][j] == 0.0 { d / scale } else { d / table[i][j].abs() });
        }
    }
    let lin = linearize_g(&s).unwrap();
    let b_defect = rel(lin.b[0], -2.944873723987933).max(rel(lin.b[1], 0.930851260018201));
    let pass = worst <= 1e-12
        && b_defect <= 1e-12
        && lin.b[0] < 0.0
        && lin.b[1] > 0.0
        && lin.b[2].abs() <= 1e-12
        && lin.b[3].abs() <= 1e-12;
    let took = t0.elapsed();
    verdict(
        2,
        "background coefficient table",
        pass,
        took,
        &format!("principal-table defect {worst:.2e}, boundary-pair defect {b_defect:.2e}"),
    );
    budget(2, "background coefficient table", took, Duration::from_secs(1));
}

fn random_wall(rng: &mut ChaCha8Rng, trial: usize) -> WallSpec {
    let amplitude = rng.gen_range(0.002..0.01);
    let center1 = rng.gen_range(0.3..0.7);
    let width1 = rng.gen_range(0.25..0.5);
    let width2 = rng.gen_range(0.3..0.6);
    let kind = match trial % 3 {
        0 => WallKind::EvenBump { amplitude, center1, width1, width2 },
        1 => WallKind::Ridge { amplitude, center1, width1, width2 },
        _ => {
            let knots: Vec<f64> = (0..=8).map(|i| 0.1 + 0.1 * i as f64).collect();
            let vals: Vec<f64> = knots
                .iter()
                .map(|&x| amplitude * ((x - 0.1) * (0.9 - x)).max(0.0) * (7.0 * x + trial as f64).sin())
                .collect();
            WallKind::Profile { profile: CubicProfile::new(knots, vals).unwrap(), width2 }
        }
    };
    WallSpec { kind }
}

#[test]
fn criterion_3_wall_vanishing_identity_suite() {
    let t0 = Instant::now();
    let bg = normalized_family(1.4, 1.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce55);
    let mut worst_a = 0.0f64;
    let mut worst_b = 0.0f64;
    let mut worst_p = 0.0f64;
    for trial in 0..500 {
        let wall = random_wall(&mut rng, trial);
        let x1 = rng.gen_range(0.2..0.8);
        let x2 = rng.gen_range(-0.3..0.3);
        let jet = wall.jet3(x1, x2);
        let x = [x1, x2, jet.v];
        let p = weight_p(jet, x[2]);

        // Shear-weight tangency conditions on the wall.
        let cond1 = jet.d1 * p.p1 + jet.d2 * (p.p2 + 1.0) - p.p3;
        let cond2 = p.p3 * (1.0 + jet.d2 * jet.d2) - p.p1 * jet.d1 - jet.d2;
        worst_p = worst_p.max(cond1.abs()).max(cond2.abs());

        // Slip-consistent state: wall-normal graph derivative locked to the
        // normal weight, upstream velocity projected tangentially.
        let nw = normal_weight(jet);
        let du = [
            rng.gen_range(-0.2..0.2),
            rng.gen_range(0.8..2.0),
            rng.gen_range(-0.25..0.25),
            -nw.v,
        ];
        let n = [-jet.d1, -jet.d2, 1.0];
        let n2 = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
        let vn = bg.q_minus * n[0] / n2;
        let vt = [bg.q_minus - vn * n[0], -vn * n[1], -vn * n[2]];
        let s = FlowSample {
            gas: bg.gas,
            bernoulli: bg.bernoulli,
            t: 0.0,
            x,
            du,
            wall: jet,
            p,
            upstream: UpstreamEval { dphi: [0.0, vt[0], vt[1], vt[2]], d2phi: [[0.0; 4]; 4] },
            du1_floor: 1e-8,
        };
        let bundle = eval_interior(&s).unwrap();
        let mut scale = 1.0f64;
        for row in &bundle.atilde {
            for v in row {
                scale = scale.max(v.abs());
            }
        }
        for &(i, j) in &[(0usize, 3usize), (1, 3), (2, 3)] {
            worst_a = worst_a.max(bundle.atilde[i][j].abs() / scale);
        }
        let lin = linearize_g(&s).unwrap();
        let bscale = 1.0 + lin.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst_b = worst_b.max(lin.b[3].abs() / bscale);
    }
    let pass = worst_a <= 1e-10 && worst_b <= 1e-10 && worst_p <= 1e-12;
    let took = t0.elapsed();
    verdict(
        3,
        "wall vanishing identity suite",
        pass,
        took,
        &format!(
            "500 samples: normal couplings {worst_a:.2e}, boundary b3 {worst_b:.2e}, \
             weight conditions {worst_p:.2e}"
        ),
    );
    budget(3, "wall vanishing identity suite", took, Duration::from_secs(30));
}

#[test]
fn criterion_4_transform_matrix_oracle() {
    let t0 = Instant::now();
    let bg = normalized_family(1.4, 1.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acce);
    let uniform = UpstreamField::uniform(bg.q_minus);
    let perturbed = UpstreamField {
        q_minus: bg.q_minus,
        perturbation: Some(Perturbation {
            eps: 0.05,
            ramp_time: 0.1,
            center1: 0.5,
            width1: 0.35,
            width3: 0.3,
            width2: Some(0.5),
        }),
    };
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let wall = random_wall(&mut rng, trial);
        let t = rng.gen_range(0.15..0.4);
        let x = [
            rng.gen_range(0.25..0.75),
            rng.gen_range(-0.3..0.3),
            rng.gen_range(0.03..0.25),
        ];
        let du = [
            rng.gen_range(-0.2..0.2),
            rng.gen_range(0.8..2.0),
            rng.gen_range(-0.25..0.25),
            rng.gen_range(-0.25..0.25),
        ];
        let field = if trial % 2 == 0 { &uniform } else { &perturbed };
        let s = FlowSample::build(bg.gas, bg.bernoulli, t, x, du, &wall, field).unwrap();
        let bundle = eval_interior(&s).unwrap();
        let oracle = atilde_matrix_oracle(&s).unwrap();
        let mut scale = 1.0f64;
        for row in &oracle {
            for v in row {
                scale = scale.max(v.abs());
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((bundle.atilde[i][j] - oracle[i][j]).abs() / scale);
            }
        }
    }
    let pass = worst <= 1e-10;
    let took = t0.elapsed();
    verdict(
        4,
        "transform matrix oracle",
        pass,
        took,
        &format!("1000 samples: closed form vs assembled product, worst defect {worst:.2e}"),
    );
    budget(4, "transform matrix oracle", took, Duration::from_secs(30));
}

#[test]
fn criterion_5_multiplier_certificates() {
    let t0 = Instant::now();
    let mut worst_margin = f64::INFINITY;
    let mut worst_delta = f64::INFINITY;
    let mut pass = true;
    for &(gamma, lambda) in &[(1.4, 1.65), (1.4, 1.7), (1.4, 2.0), (5.0 / 3.0, 1.7), (5.0 / 3.0, 1.9)] {
        let bg = normalized_family(gamma, lambda).unwrap();
        pass &= bg.check_stability_condition().strictly_stable;
        let bundle = StabilityBundle::background(&bg);
        for (cert, seed) in [(build_qd(&bundle).unwrap(), 0x5d), (build_qe(&bundle).unwrap(), 0x5e)] {
            worst_margin = worst_margin.min(cert.report.min_margin());
            let probe = probe_robustness(
                &bundle,
                &cert.multiplier,
                &[1e-4, 3e-4, 1e-3, 3e-3, 1e-2],
                40,
                seed,
            );
            worst_delta = worst_delta.min(probe.delta_star);
        }
    }
    pass &= worst_margin >= 1e-3 && worst_delta > 0.0;
    let took = t0.elapsed();
    verdict(
        5,
        "multiplier certificates",
        pass,
        took,
        &format!("min margin {worst_margin:.3e} (floor 1e-3), perturbation threshold {worst_delta:.1e}"),
    );
    budget(5, "multiplier certificates", took, Duration::from_secs(10));
}

fn mms_grid(n: usize) -> GridSpec {
    let mut grid = GridSpec::new([1.0, 0.15, 1.0], [n, 4, n], 1.0, 0.2, 1.0);
    let dt = 0.45 * grid.h_min() / 2.2705377161396347;
    grid.dt = grid.t_final / (grid.t_final / dt).ceil();
    grid
}

fn mms_run(n: usize) -> dihedral_shock::solver::LpSolution {
    let bg = normalized_family(1.4, 1.7).unwrap();
    let profile = Manufactured { omega: 3.0, c1: 0.15, s1: 0.6, s3: 0.6 };
    let field = ManufacturedField::new(&bg, profile);
    let grid = mms_grid(n);
    let zero = |_: [f64; 3]| TraceJet::default();
    let w1 = move |y: [f64; 3]| -> TraceJet {
        let (b1, b1p, _) = poly_bump2((y[0] - profile.c1) / profile.s1);
        let (b3, b3p, _) = poly_bump2(y[2] / profile.s3);
        TraceJet {
            w: profile.omega * b1 * b3,
            d: [
                profile.omega * b1p / profile.s1 * b3,
                0.0,
                profile.omega * b1 * b3p / profile.s3,
            ],
            d2: [[0.0; 3]; 3],
        }
    };
    let data = build_compatible_data(&field, &grid, &zero, &w1, 2).unwrap();
    let oracle = move |t: f64, y: [f64; 3]| profile.value(t, y);
    solve_lp(&bg, &field, &grid, &data, Some(&oracle)).unwrap()
}

#[test]
fn criterion_6_manufactured_convergence() {
    let t0 = Instant::now();
    let runs: Vec<_> = [16usize, 32, 64].iter().map(|&n| mms_run(n)).collect();
    let errs: Vec<f64> = runs.iter().map(|s| s.final_error_l2.unwrap()).collect();
    let neus: Vec<f64> = runs.iter().map(|s| s.field.max_neumann_residual).collect();
    let evens: Vec<f64> = runs.iter().map(|s| s.field.max_evenness_defect).collect();

    let mut pass = true;
    let mut orders = Vec::new();
    for pair in errs.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        pass &= (1.8..=2.2).contains(&order);
        orders.push(order);
    }
    // Wall diagnostics: order >= 1.8 decay, or already at roundoff.
    let decayed = |v: &[f64]| -> bool {
        v.windows(2).all(|p| p[0] / p[1] >= 2.0f64.powf(1.8) || p[1] < 1e-12)
    };
    pass &= decayed(&neus) && decayed(&evens);

    // Finite propagation: a localized pulse must not leak past the inflated
    // cone (continuous speed plus the per-step stencil reach).
    let bg = normalized_family(1.4, 1.7).unwrap();
    let field = BackgroundField::new(&bg);
    let mut grid = GridSpec::new([3.8, 0.15, 0.6], [86, 4, 12], 1.0, 0.12, 1.0);
    let dt = 0.45 * grid.h_min() / 2.2705377161396347;
    grid.dt = grid.t_final / (grid.t_final / dt).ceil();
    let (c, s) = (1.0, 0.12);
    let w0 = move |y: [f64; 3]| -> TraceJet {
        let (v, d, dd) = poly_bump2((y[0] - c) / s);
        let mut j = TraceJet { w: v, d: [d / s, 0.0, 0.0], ..Default::default() };
        j.d2[0][0] = dd / (s * s);
        j
    };
    let zero = |_: [f64; 3]| TraceJet::default();
    let data = build_compatible_data(&field, &grid, &w0, &zero, 2).unwrap();
    let sol = solve_lp(&bg, &field, &grid, &data, None).unwrap();
    let reach = sol.v_max * grid.t_final + 2.0 * grid.h_max() * grid.steps() as f64;
    let (m1, m2, m3) = grid.res_dims();
    let mut leak = 0.0f64;
    let mut outside = 0usize;
    for i1 in 0..m1 {
        let y1 = i1 as f64 * grid.h1();
        if (y1 - c).abs() <= s + reach {
            continue;
        }
        for i2 in 0..m2 {
            for i3 in 0..m3 {
                leak = leak.max(sol.field.final_restricted[grid.ridx(i1, i2, i3)].abs());
                outside += 1;
            }
        }
    }
    pass &= outside > 0 && leak <= 1e-10;

    let took = t0.elapsed();
    verdict(
        6,
        "manufactured convergence",
        pass,
        took,
        &format!(
            "interior orders {}, Neumann {}, evenness {}, cone leakage {leak:.1e} over {outside} outside nodes",
            fmt_list(&orders, 2),
            fmt_sci(&neus),
            fmt_sci(&evens)
        ),
    );
    budget(6, "manufactured convergence", took, Duration::from_secs(600));
}

struct BoundaryDriven {
    inner: BackgroundField,
    omega: f64,
    s3: f64,
}

impl CoefficientField for BoundaryDriven {
    fn interior(&self, t: f64, y: [f64; 3]) -> InteriorCoeffs {
        self.inner.interior(t, y)
    }
    fn boundary(&self, t: f64, y2: f64, y3: f64) -> BoundaryCoeffs {
        self.inner.boundary(t, y2, y3)
    }
    fn rhs_f(&self, _t: f64, _y: [f64; 3]) -> f64 {
        0.0
    }
    fn rhs_g(&self, t: f64, _y2: f64, y3: f64) -> f64 {
        let s = (self.omega * t).sin();
        s * s * poly_bump2(y3 / self.s3).0
    }
    fn state(&self, t: f64, y: [f64; 3]) -> f64 {
        self.inner.state(t, y)
    }
}

#[test]
fn criterion_7_energy_ratio_stability() {
    let t0 = Instant::now();
    let bg = normalized_family(1.4, 1.7).unwrap();
    let field = BoundaryDriven { inner: BackgroundField::new(&bg), omega: 4.0, s3: 0.5 };
    let mut grid = GridSpec::new([1.0, 0.15, 1.0], [24, 4, 24], 1.0, 0.25, 1.0);
    let dt = 0.45 * grid.h_min() / 2.2705377161396347;
    grid.dt = grid.t_final / (grid.t_final / dt).ceil();
    let data = build_zero_data(&field, &grid).unwrap();
    let sol = solve_lp(&bg, &field, &grid, &data, None).unwrap();
    let mut pass = sol.field.records.last().unwrap().interior_l2 > 0.0;
    let mut spreads = Vec::new();
    for s in [1usize, 2] {
        let rep = measure_estimate(&sol.ledger, s).unwrap();
        pass &= rep.ratio_spread <= 3.0;
        pass &= rep.rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0);
        spreads.push(rep.ratio_spread);
    }
    let took = t0.elapsed();
    verdict(
        7,
        "energy ratio stability",
        pass,
        took,
        &format!("bound-to-observed spread across the weight grid: {} (cap 3)", fmt_list(&spreads, 3)),
    );
    budget(7, "energy ratio stability", took, Duration::from_secs(600));
}

#[test]
fn criterion_8_nonlinear_contraction() {
    let t0 = Instant::now();
    let full = run_stability_experiment(&ExperimentSpec::standard(1e-3)).unwrap();
    let half = run_stability_experiment(&ExperimentSpec::standard(5e-4)).unwrap();
    let ratio = full.front_deviation_max / half.front_deviation_max;
    let pass = full.converged
        && full.sweeps <= 30
        && full.sigma0 < 0.9
        && full.residual <= 1e-8
        && half.converged
        && (1.8..=2.2).contains(&ratio);
    let took = t0.elapsed();
    verdict(
        8,
        "nonlinear contraction",
        pass,
        took,
        &format!(
            "sweeps {}, sigma0 {:.3e}, residual {:.2e}, front sup {:.3e}, eps ratio {ratio:.3}",
            full.sweeps, full.sigma0, full.residual, full.front_deviation_max
        ),
    );
    budget(8, "nonlinear contraction", took, Duration::from_secs(1800));
}

struct InjectedWallCoupling {
    inner: BackgroundField,
}

impl CoefficientField for InjectedWallCoupling {
    fn interior(&self, t: f64, y: [f64; 3]) -> InteriorCoeffs {
        self.inner.interior(t, y)
    }
    fn boundary(&self, t: f64, y2: f64, y3: f64) -> BoundaryCoeffs {
        let mut b = self.inner.boundary(t, y2, y3);
        b.b[3] = 0.02;
        b
    }
    fn rhs_f(&self, _t: f64, _y: [f64; 3]) -> f64 {
        0.0
    }
    fn rhs_g(&self, _t: f64, _y2: f64, _y3: f64) -> f64 {
        0.0
    }
    fn state(&self, t: f64, y: [f64; 3]) -> f64 {
        self.inner.state(t, y)
    }
}

struct ConstantG {
    inner: BackgroundField,
}

impl CoefficientField for ConstantG {
    fn interior(&self, t: f64, y: [f64; 3]) -> InteriorCoeffs {
        self.inner.interior(t, y)
    }
    fn boundary(&self, t: f64, y2: f64, y3: f64) -> BoundaryCoeffs {
        self.inner.boundary(t, y2, y3)
    }
    fn rhs_f(&self, _t: f64, _y: [f64; 3]) -> f64 {
        0.0
    }
    fn rhs_g(&self, _t: f64, _y2: f64, _y3: f64) -> f64 {
        1e-3
    }
    fn state(&self, t: f64, y: [f64; 3]) -> f64 {
        self.inner.state(t, y)
    }
}

#[test]
fn criterion_9_negative_controls() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut notes = Vec::new();

    // Marginal family member: flagged false and refused before any solve.
    let bg13 = normalized_family(1.4, 1.3).unwrap();
    let flag = bg13.check_stability_condition();
    pass &= !flag.strictly_stable && flag.value < 0.0;
    let mut spec = ExperimentSpec::standard(1e-3);
    spec.lambda = 1.3;
    match run_stability_experiment(&spec) {
        Err(Error::UnstableBackground { margin }) => {
            pass &= margin < 0.0;
            notes.push(format!("unstable background refused (margin {margin:.3})"));
        }
        other => {
            pass = false;
            notes.push(format!("expected a background rejection, got {other:?}"));
        }
    }

    // Injected wall coupling in the boundary operator.
    let bg = normalized_family(1.4, 1.7).unwrap();
    let field = InjectedWallCoupling { inner: BackgroundField::new(&bg) };
    let grid = mms_grid(16);
    let data = build_zero_data(&BackgroundField::new(&bg), &grid).unwrap();
    match solve_lp(&bg, &field, &grid, &data, None) {
        Err(Error::VanishingViolation(msg)) => {
            notes.push("injected b3 caught".into());
            pass &= msg.contains("b3");
        }
        other => {
            pass = false;
            notes.push(format!("expected a vanishing violation, got {other:?}"));
        }
    }

    // Incompatible boundary data, at the solver and at the driver.
    let bad = ConstantG { inner: BackgroundField::new(&bg) };
    match build_zero_data(&bad, &grid) {
        Err(Error::IncompatibleData(_)) => notes.push("constant g rejected".into()),
        other => {
            pass = false;
            notes.push(format!("expected incompatible data, got {other:?}"));
        }
    }
    let mut abrupt = ExperimentSpec::standard(1e-3);
    abrupt.ramp_time = 0.0;
    match run_stability_experiment(&abrupt) {
        Err(Error::IncompatibleData(_)) => notes.push("abrupt onset rejected".into()),
        other => {
            pass = false;
            notes.push(format!("expected incompatible data from the driver, got {other:?}"));
        }
    }

    let took = t0.elapsed();
    verdict(9, "negative controls", pass, took, &notes.join("; "));
    budget(9, "negative controls", took, Duration::from_secs(60));
}
