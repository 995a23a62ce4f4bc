//! Jump-solve and background-state tests against independently frozen values.

use dihedral_shock::background::{normalized_family, solve_jump, upstream_of};
use dihedral_shock::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Frozen reference densities for the normalized family, computed with an
/// independent arbitrary-precision script: (gamma, lambda, rho_minus).
const FAMILY_TABLE: &[(f64, f64, f64)] = &[
    (1.4, 1.1, 1.214403279476815),
    (1.4, 1.3, 1.737065359083203),
    (1.4, 1.5, 2.402044092177770),
    (1.4, 1.7, 3.231036461299810),
    (5.0 / 3.0, 1.1, 1.102222035376130),
    (5.0 / 3.0, 1.3, 1.319987287918776),
    (5.0 / 3.0, 1.5, 1.555471542069238),
    (5.0 / 3.0, 1.7, 1.808608188387244),
];

#[test]
fn normalized_family_matches_frozen_table() {
    for &(gamma, lambda, rho_minus) in FAMILY_TABLE {
        let bg = normalized_family(gamma, lambda).unwrap();
        assert!(rel(bg.rho_minus, rho_minus) < 1e-12, "gamma={gamma} lambda={lambda}");
        assert!(rel(bg.rho_plus, lambda * rho_minus) < 1e-12);
        assert_eq!(bg.q_minus, lambda);
        assert_eq!(bg.q_plus, 1.0);
    }
}

#[test]
fn solve_jump_reproduces_family() {
    for &(gamma, lambda, _) in FAMILY_TABLE {
        let fam = normalized_family(gamma, lambda).unwrap();
        let bg = solve_jump(gamma, fam.rho_minus, lambda).unwrap();
        assert!(rel(bg.q_plus, 1.0) < 1e-12, "gamma={gamma} lambda={lambda} q+={}", bg.q_plus);
        assert!(rel(bg.rho_plus, fam.rho_plus) < 1e-12);
        assert!(rel(bg.bernoulli, fam.bernoulli) < 1e-12);
    }
}

#[test]
fn solved_jumps_satisfy_conservation_and_admissibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2b);
    for _ in 0..300 {
        let gamma = rng.gen_range(1.15..2.2);
        let rho_minus: f64 = rng.gen_range(0.3..4.0);
        let mach = rng.gen_range(1.02..3.0);
        let c_minus = rho_minus.powf((gamma - 1.0) / 2.0);
        let q_minus = mach * c_minus;
        let bg = solve_jump(gamma, rho_minus, q_minus).unwrap();
        // Mass flux and Bernoulli conservation.
        assert!(rel(bg.rho_plus * bg.q_plus, rho_minus * q_minus) < 1e-12);
        let down_bernoulli =
            0.5 * bg.q_plus * bg.q_plus + bg.gas.enthalpy(bg.rho_plus);
        assert!(rel(down_bernoulli, bg.bernoulli) < 1e-12);
        // Entropy and transonicity.
        assert!(bg.rho_plus > bg.rho_minus);
        assert!(bg.q_minus * bg.q_minus > bg.c2_minus());
        assert!(bg.q_plus * bg.q_plus < bg.c2_plus());
    }
}

#[test]
fn reverse_solve_is_an_involution() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3c4d);
    for _ in 0..200 {
        let gamma = rng.gen_range(1.15..2.2);
        let rho_minus: f64 = rng.gen_range(0.3..4.0);
        let mach = rng.gen_range(1.05..3.0);
        let q_minus = mach * rho_minus.powf((gamma - 1.0) / 2.0);
        let bg = solve_jump(gamma, rho_minus, q_minus).unwrap();
        let back = upstream_of(gamma, bg.rho_plus, bg.q_plus).unwrap();
        assert!(rel(back.rho_minus, rho_minus) < 1e-10, "rho: {} vs {rho_minus}", back.rho_minus);
        assert!(rel(back.q_minus, q_minus) < 1e-10);
    }
}

#[test]
fn subsonic_upstream_is_rejected() {
    let gamma = 1.4;
    let rho_minus: f64 = 1.5;
    let c_minus = rho_minus.powf((gamma - 1.0) / 2.0);
    match solve_jump(gamma, rho_minus, 0.9 * c_minus) {
        Err(Error::NotSupersonic { q2, c2 }) => assert!(q2 < c2),
        other => panic!("expected NotSupersonic, got {other:?}"),
    }
}

#[test]
fn sonic_upstream_has_no_downstream_state() {
    // Exactly sonic: the two Bernoulli roots merge; there is no shock.
    let gamma = 1.4;
    let rho_minus: f64 = 1.5;
    let c_minus = rho_minus.powf((gamma - 1.0) / 2.0);
    assert!(matches!(
        solve_jump(gamma, rho_minus, c_minus * (1.0 + 1e-14)),
        Err(Error::NoDownstreamState(_))
    ));
}

#[test]
fn reverse_solve_rejects_supersonic_downstream() {
    let gamma = 1.4;
    let rho: f64 = 2.0;
    let c = rho.powf((gamma - 1.0) / 2.0);
    assert!(matches!(upstream_of(gamma, rho, 1.5 * c), Err(Error::NoDownstreamState(_))));
}

#[test]
fn stability_flag_follows_the_family_sign() {
    // Strict stability for the normalized family is λ² - λ - 1 > 0.
    for &(lambda, expect) in
        &[(1.1, false), (1.3, false), (1.5, false), (1.617, false), (1.619, true), (1.7, true)]
    {
        let bg = normalized_family(1.4, lambda).unwrap();
        let report = bg.check_stability_condition();
        assert_eq!(report.strictly_stable, expect, "lambda={lambda}");
        let closed = (lambda * lambda - lambda - 1.0) * bg.rho_minus;
        assert!(rel(report.value, closed) < 1e-12);
    }
    // Frozen values.
    let r13 = normalized_family(1.4, 1.3).unwrap().check_stability_condition();
    assert!((r13.value - -1.059609869040754).abs() < 1e-12);
    let r17 = normalized_family(1.4, 1.7).unwrap().check_stability_condition();
    assert!((r17.value - 0.613896927646964).abs() < 1e-12);
}

#[test]
fn background_tables_match_frozen_values() {
    // gamma = 1.4, lambda = 1.7 (the reference stable background).
    let bg = normalized_family(1.4, 1.7).unwrap();
    let r = bg.principal_coefficients();
    assert!((r[0][0] - 2.040816326530613).abs() < 1e-12);
    assert!((r[0][1] - 1.428571428571429).abs() < 1e-12);
    assert!((r[1][1] - -0.976588717817101).abs() < 1e-12);
    assert!((r[2][2] - -4.033854526157350).abs() < 1e-12);
    assert!((r[3][3] - r[2][2]).abs() < 1e-15);
    for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        assert_eq!(r[i][j], 0.0);
        assert_eq!(r[j][i], 0.0);
    }
    let b = bg.boundary_coefficients();
    assert!((b[0] - -2.944873723987933).abs() < 1e-12);
    assert!((b[1] - 0.930851260018201).abs() < 1e-12);
    assert_eq!(b[2], 0.0);
    assert_eq!(b[3], 0.0);

    // gamma = 1.4, lambda = 1.3 (entropy-admissible but not strictly stable).
    let bg = normalized_family(1.4, 1.3).unwrap();
    let r = bg.principal_coefficients();
    assert!((r[0][0] - 100.0 / 9.0).abs() < 1e-12);
    assert!((r[0][1] - 10.0 / 3.0).abs() < 1e-12);
    assert!((r[1][1] - -0.385172321054915).abs() < 1e-12);
    assert!((r[2][2] - -15.390803567276832).abs() < 1e-11);
    let b = bg.boundary_coefficients();
    assert!((b[0] - -0.303058888490435).abs() < 1e-12);
    assert!((b[1] - 0.016954092251937).abs() < 1e-12);
}

#[test]
fn characteristic_speeds_match_frozen_values() {
    let bg = normalized_family(1.4, 1.7).unwrap();
    let (sp, sm) = bg.characteristic_speeds_1d();
    assert!((sp - 1.684138441343686).abs() < 1e-12);
    assert!((sm - -0.284138441343686).abs() < 1e-12);
    // Both speeds must be real and the plus-branch positive for the
    // downstream subsonic state.
    assert!(sp > 0.0 && sm < 0.0);
}

#[test]
fn invalid_gas_and_family_parameters_are_config_errors() {
    assert!(matches!(normalized_family(1.0, 1.5), Err(Error::Config(_))));
    assert!(matches!(normalized_family(1.4, 1.0), Err(Error::Config(_))));
    assert!(matches!(solve_jump(1.4, -1.0, 2.0), Err(Error::Config(_))));
}
