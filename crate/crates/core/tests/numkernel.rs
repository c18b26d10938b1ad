use std::f64::consts::PI;

use bioconv::numkernel::*;
use bioconv::Error;
use proptest::prelude::*;

/// Adaptive Simpson on `[a, b]`.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `E_n(x) = ∫₀¹ e^{−x/u} u^{n−2} du`.
fn expint_oracle(n: u32, x: f64) -> f64 {
    let f = move |u: f64| if u <= 0.0 { 0.0 } else { (-x / u).exp() * u.powi(n as i32 - 2) };
    simpson(&f, 0.0, 1.0, 1e-15)
}

#[test]
fn expint_matches_quadrature_oracle() {
    for n in 1..=3 {
        for &x in &[0.01, 0.1, 0.5, 0.99, 1.0, 1.5, 3.0, 7.0] {
            let got = expint(n, x).unwrap();
            let want = expint_oracle(n, x);
            assert!(((got - want) / want).abs() < 1e-9, "E{n}({x}) = {got}, oracle {want}");
        }
    }
}

#[test]
fn expint_endpoint_values() {
    assert_eq!(expint(2, 0.0).unwrap(), 1.0);
    assert!((expint(3, 0.0).unwrap() - 0.5).abs() < 1e-15);
    assert!(matches!(expint(1, 0.0), Err(Error::Singularity(_))));
    assert!(matches!(expint(2, -1.0), Err(Error::Domain(_))));
    assert!(matches!(expint(4, 1.0), Err(Error::Domain(_))));
}

#[test]
fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
    for n in [2usize, 5, 12, 24] {
        let (x, w) = gauss_legendre(n).unwrap();
        for d in 0..(2 * n) {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
            let want = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            assert!((got - want).abs() < 1e-13, "n = {n}, degree {d}");
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }
}

#[test]
fn angular_quadrature_moments() {
    let q = build_angular_quadrature(12, 24).unwrap();
    assert_eq!(q.len(), 2 * 12 * 24);
    assert!((q.moment(|_| 1.0) - 4.0 * PI).abs() < 1e-12);
    assert!(q.moment(|o| o.gamma).abs() < 1e-12);
    assert!(q.moment(|o| o.alpha).abs() < 1e-12);
    for f in [|o: &Ordinate| o.alpha * o.alpha, |o: &Ordinate| o.beta * o.beta, |o: &Ordinate| o.gamma * o.gamma] {
        assert!((q.moment(f) - 4.0 * PI / 3.0).abs() < 1e-12);
    }
    assert!(build_angular_quadrature(3, 24).is_err());
}

#[test]
fn chebyshev_second_derivative_of_exponential() {
    let g = ChebyshevGrid::new(32).unwrap();
    let f: Vec<f64> = g.z.iter().map(|z| (2.0 * z).exp()).collect();
    for i in 0..g.z.len() {
        let d2: f64 = (0..f.len()).map(|j| g.d2[(i, j)] * f[j]).sum();
        assert!((d2 - 4.0 * f[i]).abs() < 1e-8 * f[i].max(1.0));
    }
}

proptest! {
    #[test]
    fn expint_recurrence(x in 0.01f64..20.0, n in 1u32..3) {
        let lhs = n as f64 * expint(n + 1, x).unwrap();
        let rhs = (-x).exp() - x * expint(n, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (-x).exp().max(1e-300) * 10.0 + 1e-14);
    }

    #[test]
    fn expint_decreasing_in_x(x in 0.01f64..10.0, dx in 1e-3f64..1.0, n in 1u32..4) {
        prop_assert!(expint(n, x + dx).unwrap() < expint(n, x).unwrap());
    }

    #[test]
    fn monotone_cubic_stays_within_data(ys in proptest::collection::vec(0.0f64..1.0, 4..12), t in 0.0f64..1.0) {
        let mut ys = ys;
        ys.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let n = ys.len();
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let p = MonotoneCubic::new(xs.clone(), ys.clone()).unwrap();
        let v = p.eval(t);
        prop_assert!(v <= ys[0] + 1e-12 && v >= ys[n - 1] - 1e-12);
        let i = xs.partition_point(|&x| x <= t).clamp(1, n - 1);
        prop_assert!(v <= ys[i - 1] + 1e-12 && v >= ys[i] - 1e-12);
    }
}
