//! Special functions, quadrature rules and spectral collocation primitives.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E_n(x) = ∫₁^∞ e^(−xt)/tⁿ dt` for `n ∈ {1, 2, 3}`.
///
/// Power series below `x = 1`, modified Lentz continued fraction above.
pub fn expint(n: u32, x: f64) -> Result<f64> {
    if !(1..=3).contains(&n) {
        return Err(Error::Domain(format!("expint order {n} not in 1..=3")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("expint argument {x} is negative")));
    }
    if x == 0.0 {
        if n == 1 {
            return Err(Error::Singularity("E1 diverges at 0".into()));
        }
        return Ok(1.0 / (n - 1) as f64);
    }
    Ok(expint_unchecked(n, x))
}

/// `expint` without validation; callers guarantee `n ∈ {1,2,3}` and `x > 0`
/// (or `x = 0` with `n > 1`).
#[inline]
pub fn expint_unchecked(n: u32, x: f64) -> f64 {
    let nm1 = n as i64 - 1;
    if x == 0.0 {
        return 1.0 / nm1 as f64;
    }
    if x > 700.0 {
        return 0.0;
    }
    if x >= 1.0 {
        let tiny = 1e-300;
        let mut b = x + n as f64;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (nm1 as f64 + i as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    } else {
        let mut ans = if nm1 != 0 {
            1.0 / nm1 as f64
        } else {
            -x.ln() - EULER_GAMMA
        };
        let mut fact = 1.0;
        for i in 1..200i64 {
            fact *= -x / i as f64;
            let del = if i != nm1 {
                -fact / (i - nm1) as f64
            } else {
                let psi = -EULER_GAMMA + (1..=nm1).map(|k| 1.0 / k as f64).sum::<f64>();
                fact * (-x.ln() + psi)
            };
            ans += del;
            if del.abs() < ans.abs() * 1e-17 {
                break;
            }
        }
        ans
    }
}

/// Gauss–Legendre nodes (ascending) and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Domain("Gauss–Legendre rule needs n ≥ 1".into()));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w) = gauss_legendre(n)?;
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    Ok((
        x.iter().map(|t| c + h * t).collect(),
        w.iter().map(|v| h * v).collect(),
    ))
}

/// One discrete direction on the unit sphere with its solid-angle weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ordinate {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature {
    pub ordinates: Vec<Ordinate>,
    pub n_polar: usize,
    pub n_azimuth: usize,
}

impl AngularQuadrature {
    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }

    /// Distinct values of γ in ascending order.
    pub fn polar_cosines(&self) -> Vec<f64> {
        let mut g: Vec<f64> = self.ordinates.iter().map(|o| o.gamma).collect();
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        g.dedup();
        g
    }

    pub fn moment(&self, f: impl Fn(&Ordinate) -> f64) -> f64 {
        self.ordinates.iter().map(|o| o.w * f(o)).sum()
    }
}

/// Product rule: Gauss–Legendre in γ on each open hemisphere times uniform
/// azimuths `φ_j = (j + ½)·2π/n_azimuth`.
pub fn build_angular_quadrature(n_polar: usize, n_azimuth: usize) -> Result<AngularQuadrature> {
    if n_polar < 4 || n_azimuth < 4 {
        return Err(Error::Domain(format!(
            "angular quadrature needs n_polar ≥ 4 and n_azimuth ≥ 4, got {n_polar} × {n_azimuth}"
        )));
    }
    let (x, w) = gauss_legendre_on(n_polar, 0.0, 1.0)?;
    let dphi = 2.0 * PI / n_azimuth as f64;
    let mut ordinates = Vec::with_capacity(2 * n_polar * n_azimuth);
    for sign in [-1.0, 1.0] {
        for (g, wg) in x.iter().zip(&w) {
            let gamma = sign * g;
            let s = (1.0 - gamma * gamma).sqrt();
            for j in 0..n_azimuth {
                let phi = (j as f64 + 0.5) * dphi;
                ordinates.push(Ordinate {
                    alpha: s * phi.cos(),
                    beta: s * phi.sin(),
                    gamma,
                    w: wg * dphi,
                });
            }
        }
    }
    Ok(AngularQuadrature {
        ordinates,
        n_polar,
        n_azimuth,
    })
}

/// Lagrange basis values at `t` for the nodes `xs`.
pub fn lagrange_basis(xs: &[f64], t: f64, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let mut v = 1.0;
        for (m, xm) in xs.iter().enumerate() {
            if m != j {
                v *= (t - xm) / (xs[j] - xm);
            }
        }
        *o = v;
    }
}

/// Chebyshev–Lobatto collocation on `[0, 1]` with nodes in increasing order.
#[derive(Debug, Clone)]
pub struct ChebyshevGrid {
    pub z: Vec<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
}

impl ChebyshevGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Domain(format!("Chebyshev grid needs n ≥ 4, got {n}")));
        }
        let np = n + 1;
        // x_j = −cos(jπ/n) ascending on [−1, 1]
        let x: Vec<f64> = (0..np).map(|j| -(PI * j as f64 / n as f64).cos()).collect();
        let c: Vec<f64> = (0..np)
            .map(|j| {
                let e = if j == 0 || j == n { 2.0 } else { 1.0 };
                e * if j % 2 == 0 { 1.0 } else { -1.0 }
            })
            .collect();
        let mut d = DMatrix::<f64>::zeros(np, np);
        for i in 0..np {
            let mut row = 0.0;
            for j in 0..np {
                if i != j {
                    let v = c[i] / c[j] / (x[i] - x[j]);
                    d[(i, j)] = v;
                    row += v;
                }
            }
            d[(i, i)] = -row;
        }
        let d1 = d * 2.0;
        let d2 = &d1 * &d1;
        let z = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
        Ok(Self { z, d1, d2 })
    }

    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    /// Barycentric interpolation matrix from the nodes to `targets`.
    pub fn interpolation_matrix(&self, targets: &[f64]) -> DMatrix<f64> {
        let np = self.z.len();
        let n = np - 1;
        let wts: Vec<f64> = (0..np)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let mut p = DMatrix::<f64>::zeros(targets.len(), np);
        for (r, &t) in targets.iter().enumerate() {
            if let Some(j) = self.z.iter().position(|&zj| (t - zj).abs() < 1e-15) {
                p[(r, j)] = 1.0;
                continue;
            }
            let mut sum = 0.0;
            for j in 0..np {
                let v = wts[j] / (t - self.z[j]);
                p[(r, j)] = v;
                sum += v;
            }
            for j in 0..np {
                p[(r, j)] /= sum;
            }
        }
        p
    }
}

/// Piecewise-cubic monotone (Fritsch–Carlson) interpolant.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Domain("monotone cubic needs ≥ 2 matching samples".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("monotone cubic abscissae must increase".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = del[0];
            d[1] = del[0];
        } else {
            for i in 1..n - 1 {
                if del[i - 1] * del[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], del[0], del[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}
