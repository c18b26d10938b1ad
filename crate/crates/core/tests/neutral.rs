use std::f64::consts::PI;
use std::sync::OnceLock;

use bioconv::basic_state::*;
use bioconv::neutral::*;
use bioconv::stability::{Branch, StabilityOptions, StabilityProblem};
use bioconv::Error;

fn coarse() -> NeutralOptions {
    NeutralOptions {
        k_min: 1.0,
        k_max: 5.0,
        n_k: 16,
        stability: StabilityOptions { grids: vec![32, 48], ..StabilityOptions::default() },
        ..NeutralOptions::default()
    }
}

fn case() -> &'static (BasicState, NeutralCurve, CriticalPoint) {
    static CASE: OnceLock<(BasicState, NeutralCurve, CriticalPoint)> = OnceLock::new();
    CASE.get_or_init(|| {
        let bs = solve_basic_state(&Params::new(20.0, 0.5, 0.7, 0.55), 1001).unwrap();
        let (curve, crit) = trace_with(&bs, &coarse()).unwrap();
        (bs, curve, crit)
    })
}

#[test]
fn curve_is_sorted_and_well_formed() {
    let (_, curve, crit) = case();
    assert!(curve.points.windows(2).all(|w| w[0].k <= w[1].k));
    assert!(curve.points.iter().all(|p| p.r > 0.0));
    assert!(curve.points.iter().filter(|p| p.branch == Branch::Stationary).all(|p| p.im_sigma == 0.0));
    assert!((crit.lambda_c * crit.k_c - 2.0 * PI).abs() <= 1e-12);
    assert!(!crit.boundary_minimum);
    let lowest = curve.points.iter().map(|p| p.r).fold(f64::INFINITY, f64::min);
    assert_eq!(crit.r_c, lowest);
    let again = find_critical(curve).unwrap();
    assert_eq!(again.r_c, crit.r_c);
    assert_eq!(again.k_c, crit.k_c);
}

#[test]
fn reversed_sweep_gives_same_curve() {
    let (bs, curve, _) = case();
    let (rev, _) = trace_with(bs, &NeutralOptions { descending: true, ..coarse() }).unwrap();
    assert_eq!(rev.points.len(), curve.points.len());
    for (a, b) in curve.points.iter().zip(&rev.points) {
        assert_eq!(a.k, b.k);
        assert!((a.r - b.r).abs() <= 1e-6 * a.r, "k = {}: {} vs {}", a.k, a.r, b.r);
    }
}

#[test]
fn resolving_recorded_points_is_idempotent() {
    let (bs, curve, _) = case();
    let problem = StabilityProblem::new(bs, &coarse().stability).unwrap();
    for p in curve.points.iter().step_by(5) {
        let s = section(&problem, p.k).unwrap();
        let again = match p.branch {
            Branch::Stationary => s.stationary.unwrap(),
            Branch::Oscillatory => s.oscillatory.unwrap(),
        };
        assert!((again.r - p.r).abs() <= 1e-6 * p.r);
    }
}

#[test]
fn halving_the_wavenumber_tolerance_barely_moves_the_minimum() {
    let (bs, _, crit) = case();
    let (_, fine) = trace_with(bs, &NeutralOptions { k_tolerance: 5e-4, ..coarse() }).unwrap();
    assert!((fine.r_c / crit.r_c - 1.0).abs() < 5e-4);
}

#[test]
fn minimum_at_the_sweep_edge_is_flagged() {
    let (bs, _, _) = case();
    let opts = NeutralOptions { k_min: 4.0, k_max: 8.0, ..coarse() };
    let (_, crit) = trace_with(bs, &opts).unwrap();
    assert!(crit.boundary_minimum);
    assert_eq!(crit.k_c, 4.0);
}

#[test]
fn invalid_sweeps_are_rejected() {
    let (bs, _, _) = case();
    assert!(matches!(trace_neutral_curve(bs, 1.0, 5.0, 8), Err(Error::Domain(_))));
    assert!(matches!(trace_neutral_curve(bs, 5.0, 1.0, 20), Err(Error::Domain(_))));
    assert!(matches!(trace_neutral_curve(bs, 0.0, 1.0, 20), Err(Error::Domain(_))));
}

#[test]
fn deep_sublayer_curve_has_oscillatory_companion_but_stationary_minimum() {
    let bs = solve_basic_state(&Params::new(20.0, 0.5, 0.7, 0.62), 1001).unwrap();
    let (curve, crit) = trace_with(&bs, &NeutralOptions::default()).unwrap();
    assert!(curve.points.iter().any(|p| p.branch == Branch::Oscillatory && p.im_sigma > 0.0));
    assert_eq!(crit.branch, Branch::Stationary);
}
