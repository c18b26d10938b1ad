mod common;

use bioconv::numkernel::{build_angular_quadrature, expint};
use bioconv::radiative::*;
use common::discrete_ordinates;
use proptest::prelude::*;

#[test]
fn pure_absorption_matches_exponential_integrals() {
    for &(kappa, b) in &[(0.5, 0.43), (1.0, 0.77), (0.25, 1.0)] {
        let p = solve_fie(0.0, kappa, b, 512).unwrap();
        for i in 0..=40 {
            let tau = kappa * i as f64 / 40.0;
            let u = 2.0 * b * expint(2, tau).unwrap();
            let q = 2.0 * b * expint(3, tau).unwrap();
            assert!((p.nystrom_value(tau) - u).abs() < 1e-10, "Υ at τ = {tau}");
            assert!((p.flux_at(tau) - q).abs() < 1e-10, "q at τ = {tau}");
        }
    }
}

#[test]
fn integral_equation_agrees_with_discrete_ordinates() {
    for &omega in &[0.4, 0.7, 1.0] {
        for &kappa in &[0.5, 1.0] {
            let p = solve_fie(omega, kappa, 0.6, 512).unwrap();
            let (tau, ups) = discrete_ordinates(omega, kappa, 0.6, 4000, 48);
            for (t, u) in tau.iter().zip(&ups).step_by(50) {
                let rel = (p.value(*t) - u).abs() / u;
                assert!(rel < 1e-4, "ω = {omega}, κ = {kappa}, τ = {t}: relative gap {rel:.2e}");
            }
        }
    }
}

#[test]
fn flux_closed_form_matches_angular_moment() {
    let p = solve_fie(0.7, 1.0, 0.74, 512).unwrap();
    let quad = build_angular_quadrature(48, 8).unwrap();
    let z: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
    let field = steady_intensity(&p, &z, |z| 1.0 - z, &quad).unwrap();
    let moment = field.flux_moment();
    for (q, m) in field.flux.iter().zip(&moment) {
        assert!((q - m).abs() < 1e-6, "closed form {q}, moment {m}");
    }
    let g = field.total_intensity();
    for (t, gv) in field.tau.iter().zip(&g) {
        assert!((p.value(*t) - gv).abs() < 1e-5 * gv);
    }
}

#[test]
fn total_intensity_decreases_with_depth_for_table_parameters() {
    for &kappa in &[0.5, 1.0] {
        for &b in &[0.42, 0.43, 0.5, 0.54, 0.55, 0.57, 0.59, 0.6, 0.61, 0.62, 0.625, 0.63, 0.631, 0.632, 0.67, 0.7, 0.72, 0.74, 0.75, 0.76, 0.77] {
            let p = solve_fie(0.7, kappa, b, 512).unwrap();
            let v = p.nodal_values();
            assert!(v.windows(2).all(|w| w[1] < w[0]), "κ = {kappa}, B = {b}");
            assert!(steady_flux(&p).is_ok());
        }
    }
}

#[test]
fn solver_reports_residual_and_rejects_bad_input() {
    let p = solve_fie(0.7, 0.5, 0.55, 512).unwrap();
    assert!(p.residual() <= 1e-9);
    assert!(solve_fie(1.5, 0.5, 0.55, 512).is_err());
    assert!(solve_fie(0.7, -0.5, 0.55, 512).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn intensity_scales_linearly_with_illumination(b in 0.05f64..1.0, omega in 0.0f64..1.0) {
        let p1 = solve_fie(omega, 0.7, 1.0, 256).unwrap();
        let pb = solve_fie(omega, 0.7, b, 256).unwrap();
        for &t in &[0.0, 0.1, 0.35, 0.7] {
            prop_assert!((pb.nystrom_value(t) - b * p1.nystrom_value(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_residual_is_small(tau in 0.0f64..1.0, omega in 0.0f64..1.0) {
        let p = solve_fie(omega, 1.0, 0.7, 512).unwrap();
        prop_assert!(p.equation_residual(tau).abs() < 1e-9);
    }
}
