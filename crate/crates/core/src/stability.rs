//! Normal-mode stability of the basic state.
//!
//! The vertical velocity `W` and concentration `Θ` of a mode `exp(σt + ikx)`
//! satisfy
//!
//! ```text
//! (σ/Sc + k² − D²)(D² − k²)W = R k² Θ
//! Γ₀ + (σ + k² + Γ₁)Θ + Vc M_s DΘ − D²Θ + Dn_s W = 0
//! ```
//!
//! with rigid bottom, stress-free top and zero cell flux at both walls. The
//! radiation closure enters through `Γ₀`, which is linear in `Θ`.
//!
//! Each level collocates the problem on a Chebyshev grid, giving the pencil
//! `(A₀ + R A₁) x = σ B x`. Two levels are combined by Richardson
//! extrapolation in `N⁻²`; the marginal Rayleigh number is the root of the
//! extrapolated growth rate, so that extrapolated growth rates and marginal
//! values stay mutually consistent.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::basic_state::BasicState;
use crate::error::{Error, Result};
use crate::numkernel::{build_angular_quadrature, ChebyshevGrid};
use crate::perturb_rte::{solve_perturbed_rte, ClosureGeometry, ClosureOperators, PerturbedRadiation};

type C = Complex64;

const SHIFT: f64 = -0.731;
const SIGMA_CAP: f64 = 1e5;
const PROBE_OFFSET: f64 = 1e-4;
const OSCILLATION_FLOOR: f64 = 1e-3;
const GROWTH_FLOOR: f64 = 1e-8;
const BISECTION_WIDTH: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Stationary,
    Oscillatory,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Stationary => "stationary",
            Branch::Oscillatory => "oscillatory",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityOptions {
    /// Chebyshev orders; two entries enable extrapolation.
    pub grids: Vec<usize>,
    /// Transfer sub-cells per collocation interval.
    pub sub_cells: usize,
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub r_tolerance: f64,
    pub r_max: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            grids: vec![64, 96],
            sub_cells: 2,
            n_polar: 12,
            n_azimuth: 24,
            r_tolerance: 1e-10,
            r_max: 1e5,
        }
    }
}

/// Basic-state data and radiation geometry on one Chebyshev grid.
#[derive(Debug, Clone)]
pub struct Level {
    pub grid: ChebyshevGrid,
    closure: ClosureGeometry,
    vc: f64,
    sc: f64,
    n: Vec<f64>,
    m: Vec<f64>,
    dm: Vec<f64>,
    d2m: Vec<f64>,
    dn: Vec<f64>,
    dg: Vec<f64>,
    q: Vec<f64>,
}

impl Level {
    pub fn new(basic: &BasicState, order: usize, opts: &StabilityOptions) -> Result<Self> {
        let grid = ChebyshevGrid::new(order)?;
        let quad = build_angular_quadrature(opts.n_polar, opts.n_azimuth)?;
        let closure = ClosureGeometry::new(basic, &grid, opts.sub_cells, &quad)?;
        let p = &basic.params;
        let n = closure.node_n().to_vec();
        let g = closure.node_g().to_vec();
        let tau = closure.node_tau();
        let m: Vec<f64> = g.iter().map(|&v| p.taxis.value(v)).collect();
        let dm = g.iter().map(|&v| p.taxis.derivative(v)).collect();
        let d2m = g.iter().map(|&v| p.taxis.second_derivative(v)).collect();
        let dn = n.iter().zip(&m).map(|(n, m)| p.vc * m * n).collect();
        let edge = 1e-14 * p.kappa_h;
        let dg = tau
            .iter()
            .zip(&n)
            .map(|(&t, &nv)| -p.kappa_h * nv * basic.light.derivative(t.clamp(edge, p.kappa_h - edge)))
            .collect();
        let q = tau.iter().map(|&t| basic.light.flux_at(t)).collect();
        Ok(Self {
            grid,
            closure,
            vc: p.vc,
            sc: p.sc,
            n,
            m,
            dm,
            d2m,
            dn,
            dg,
            q,
        })
    }

    pub fn order(&self) -> usize {
        self.grid.n()
    }

    pub fn size(&self) -> usize {
        2 * (self.grid.n() + 1)
    }

    /// `Γ₀` as a linear map acting on nodal `Θ`, with `k = l1`, `l2 = 0`.
    fn gamma0(&self, k: f64, cl: &ClosureOperators) -> DMatrix<C> {
        let np = self.grid.n() + 1;
        let vc = self.vc;
        DMatrix::from_fn(np, np, |i, j| {
            let d_nmp = self.dn[i] * self.dm[i] + self.n[i] * self.d2m[i] * self.dg[i];
            let nmp = self.n[i] * self.dm[i];
            let drift = self.n[i] * self.m[i] / self.q[i];
            vc * (d_nmp * cl.kg[(i, j)] + nmp * cl.kd[(i, j)]) - C::new(0.0, vc * drift * k) * cl.kp[(i, j)]
        })
    }

    pub fn operators(&self, k: f64) -> Result<LevelOperators> {
        if !(k > 0.0) {
            return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
        }
        let nn = self.grid.n();
        let np = nn + 1;
        let cl = self.closure.operators(k, 0.0)?;
        let d1 = &self.grid.d1;
        let d2 = &self.grid.d2;
        let k2 = k * k;
        let mut l2 = d2.clone();
        for i in 0..np {
            l2[(i, i)] -= k2;
        }
        let l4 = &l2 * &l2;
        let g0 = self.gamma0(k, &cl);

        let size = 2 * np;
        let mut a0 = DMatrix::<C>::zeros(size, size);
        let mut a1 = DMatrix::<C>::zeros(size, size);
        let mut b = DMatrix::<C>::zeros(size, size);
        for i in 0..np {
            for j in 0..np {
                a0[(i, j)] = C::from(-l4[(i, j)]);
                b[(i, j)] = C::from(-l2[(i, j)] / self.sc);
                let mut lt = g0[(i, j)] + self.vc * self.m[i] * d1[(i, j)] - d2[(i, j)];
                if i == j {
                    lt += k2 + self.vc * self.dm[i] * self.dg[i];
                }
                a0[(np + i, np + j)] = lt;
            }
            a1[(i, np + i)] = C::from(-k2);
            a0[(np + i, i)] = C::from(self.dn[i]);
            b[(np + i, np + i)] = C::from(-1.0);
        }
        let bc_w: [(usize, Vec<f64>); 4] = [
            (0, unit(np, 0)),
            (1, d1.row(0).iter().copied().collect()),
            (nn - 1, d2.row(nn).iter().copied().collect()),
            (nn, unit(np, nn)),
        ];
        for (r, row) in &bc_w {
            for j in 0..size {
                a0[(*r, j)] = C::from(0.0);
                a1[(*r, j)] = C::from(0.0);
                b[(*r, j)] = C::from(0.0);
            }
            for j in 0..np {
                a0[(*r, j)] = C::from(row[j]);
            }
        }
        for &r in &[0, nn] {
            let row = np + r;
            for j in 0..size {
                a0[(row, j)] = C::from(0.0);
                b[(row, j)] = C::from(0.0);
            }
            for j in 0..np {
                let mut v = C::from(d1[(r, j)]) - self.vc * self.n[r] * self.dm[r] * cl.kg[(r, j)];
                if j == r {
                    v -= self.vc * self.m[r];
                }
                a0[(row, np + j)] = v;
            }
        }
        Ok(LevelOperators { k, np, a0, a1, b, closure: cl })
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Collocated pencil `(A₀ + R A₁) x = σ B x` at one wavenumber, with
/// `x = [W; Θ]`.
#[derive(Debug, Clone)]
pub struct LevelOperators {
    pub k: f64,
    np: usize,
    pub a0: DMatrix<C>,
    pub a1: DMatrix<C>,
    pub b: DMatrix<C>,
    pub closure: ClosureOperators,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub sigma: C,
    pub x: DVector<C>,
}

impl LevelOperators {
    pub fn matrix(&self, r: f64) -> DMatrix<C> {
        &self.a0 + &self.a1 * C::from(r)
    }

    /// Stationary marginal values `R` with their modes, ascending. Obtained
    /// from the reduced problem `KΘ = Θ/R` after eliminating `W`.
    pub fn stationary_modes(&self, r_max: f64) -> Result<Vec<(f64, EigenPair)>> {
        let np = self.np;
        let k2 = self.k * self.k;
        let lw = self.a0.view((0, 0), (np, np)).into_owned();
        let mut e = DMatrix::<C>::identity(np, np);
        for r in [0, 1, np - 2, np - 1] {
            e[(r, r)] = C::from(0.0);
        }
        let gw = lw
            .lu()
            .solve(&e)
            .ok_or_else(|| Error::Convergence("velocity operator is singular".into()))?;
        let ltb = self.a0.view((np, np), (np, np)).into_owned();
        let eb = self.a0.view((np, 0), (np, np)).into_owned();
        let rhs = (&eb * &gw) * C::from(-k2);
        let kmat = ltb
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Convergence("concentration operator is singular".into()))?;
        let mus = eigenvalues(kmat.clone())?;
        let mut out = Vec::new();
        for mu in mus {
            if !(mu.re > 0.0) || mu.im.abs() > 1e-6 * mu.norm() {
                continue;
            }
            let r = 1.0 / mu.re;
            if r > r_max {
                continue;
            }
            let theta = inverse_iteration(&kmat, C::from(mu.re))?;
            let w = (&gw * &theta) * C::from(r * k2);
            let mut x = DVector::<C>::zeros(2 * np);
            x.rows_mut(0, np).copy_from(&w);
            x.rows_mut(np, np).copy_from(&theta);
            out.push((r, EigenPair { sigma: C::from(0.0), x }));
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(out)
    }

    /// Finite eigenvalues of the pencil at `r`, largest real part first.
    pub fn spectrum(&self, r: f64) -> Result<Vec<C>> {
        let a = self.matrix(r);
        let s = C::from(SHIFT);
        let t = (&a - &self.b * s)
            .lu()
            .solve(&self.b)
            .ok_or_else(|| Error::Convergence("shifted pencil is singular".into()))?;
        let mut out: Vec<C> = eigenvalues(t)?
            .into_iter()
            .filter(|nu| nu.norm() > 1.0 / SIGMA_CAP)
            .map(|nu| s + 1.0 / nu)
            .filter(|sg| sg.norm() < SIGMA_CAP)
            .collect();
        out.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
        Ok(out)
    }

    /// Eigenvector for an approximate eigenvalue, polished by Newton.
    pub fn eigenpair_near(&self, r: f64, sigma: C) -> Result<EigenPair> {
        let a = self.matrix(r);
        let shifted = &a - &self.b * sigma * C::new(1.0 + 1e-9, 1e-9);
        let lu = shifted.lu();
        let mut x = DVector::<C>::from_fn(a.nrows(), |i, _| C::new(1.0, 0.1 * i as f64));
        for _ in 0..3 {
            let rhs = &self.b * &x;
            x = lu
                .solve(&rhs)
                .ok_or_else(|| Error::Convergence("inverse iteration broke down".into()))?;
            let nrm = x.norm();
            x /= C::from(nrm);
        }
        self.refine(r, &EigenPair { sigma, x })
    }

    /// Newton iteration on `(A − σB)x = 0`, `cᴴx = 1` from a nearby pair.
    pub fn refine(&self, r: f64, guess: &EigenPair) -> Result<EigenPair> {
        let a = self.matrix(r);
        let n = a.nrows();
        let nrm2 = guess.x.norm_squared();
        let c = &guess.x / C::from(nrm2);
        let scale: Vec<f64> = (0..n)
            .map(|i| 1.0 / a.row(i).iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300))
            .collect();
        let mut x = guess.x.clone();
        let mut sigma = guess.sigma;
        let mut prev = f64::INFINITY;
        for _ in 0..40 {
            let m = &a - &self.b * sigma;
            let bx = &self.b * &x;
            let res = &m * &x;
            let mut j = DMatrix::<C>::zeros(n + 1, n + 1);
            let mut rhs = DVector::<C>::zeros(n + 1);
            for i in 0..n {
                for col in 0..n {
                    j[(i, col)] = m[(i, col)] * scale[i];
                }
                j[(i, n)] = -bx[i] * scale[i];
                j[(n, i)] = c[i].conj();
                rhs[i] = -res[i] * scale[i];
            }
            rhs[n] = C::from(1.0) - c.dotc(&x);
            let d = j
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Convergence("bordered Newton system is singular".into()))?;
            let dsig = d[n].norm();
            let dx = d.rows(0, n).norm() / x.norm();
            if !(dsig.is_finite() && dx.is_finite()) {
                break;
            }
            for i in 0..n {
                x[i] += d[i];
            }
            sigma += d[n];
            let size = dsig / (1.0 + sigma.norm()) + dx;
            // stop at the rounding floor: a tiny step, or a small one that no
            // longer contracts
            if size <= 1e-13 || (size <= 1e-8 && size > 0.5 * prev) {
                return Ok(EigenPair { sigma, x });
            }
            prev = size;
        }
        Err(Error::Convergence(format!(
            "eigenpair tracking failed near sigma = {:.6e}{:+.6e}i at R = {r:.6}",
            guess.sigma.re, guess.sigma.im
        )))
    }

    /// `‖(A − σB)x‖∞ / (‖A‖∞‖x‖∞)`.
    pub fn residual(&self, r: f64, pair: &EigenPair) -> f64 {
        let a = self.matrix(r);
        let res = (&a - &self.b * pair.sigma) * &pair.x;
        let an = (0..a.nrows())
            .map(|i| a.row(i).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let amax = |v: &DVector<C>| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        amax(&res) / (an * amax(&pair.x))
    }
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(m: DMatrix<C>) -> Result<Vec<C>> {
    let schur = Schur::try_new(m, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Convergence("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

fn inverse_iteration(m: &DMatrix<C>, lambda: C) -> Result<DVector<C>> {
    let n = m.nrows();
    let mut shifted = m.clone();
    let eps = 1e-10 * (1.0 + lambda.norm());
    for i in 0..n {
        shifted[(i, i)] -= lambda + eps;
    }
    let lu = shifted.lu();
    let mut v = DVector::<C>::from_fn(n, |i, _| C::new(1.0, 0.01 * i as f64));
    for _ in 0..3 {
        v = lu
            .solve(&v)
            .ok_or_else(|| Error::Convergence("inverse iteration broke down".into()))?;
        let nrm = v.norm();
        v /= C::from(nrm);
    }
    Ok(v)
}

/// Weights combining per-level values into the `N⁻²` extrapolation.
pub fn richardson_weights(orders: &[usize]) -> Vec<f64> {
    match orders {
        [_] => vec![1.0],
        [n1, n2] => {
            let (a, b) = ((*n1 as f64).powi(2), (*n2 as f64).powi(2));
            vec![-a / (b - a), b / (b - a)]
        }
        _ => panic!("extrapolation uses one or two levels"),
    }
}

fn combine(w: &[f64], v: &[C]) -> C {
    w.iter().zip(v).map(|(w, v)| v * *w).sum()
}

/// Interpolate a mode from one level's nodes to another's.
fn transfer(from: &Level, to: &Level, x: &DVector<C>) -> DVector<C> {
    let p = from.grid.interpolation_matrix(&to.grid.z);
    let (nf, nt) = (from.grid.n() + 1, to.grid.n() + 1);
    let mut out = DVector::<C>::zeros(2 * nt);
    for part in 0..2 {
        for i in 0..nt {
            let mut s = C::from(0.0);
            for j in 0..nf {
                s += x[part * nf + j] * p[(i, j)];
            }
            out[part * nt + i] = s;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct GammaTerms {
    pub gamma0: Vec<C>,
    pub gamma1: Vec<f64>,
}

/// Radiation-coupling terms on the basic-state grid for a resolved
/// perturbation field.
pub fn gamma_terms(basic: &BasicState, radiation: &PerturbedRadiation) -> GammaTerms {
    let p = &basic.params;
    let nz = basic.z.len();
    let dg: Vec<f64> = (0..nz)
        .map(|i| {
            let edge = 1e-14 * p.kappa_h;
            -p.kappa_h * basic.n_s[i] * basic.light.derivative(basic.tau[i].clamp(edge, p.kappa_h - edge))
        })
        .collect();
    let dgd = gradient(&basic.z, &radiation.g1);
    let (l1, l2) = radiation.wavenumbers;
    let gamma0 = (0..nz)
        .map(|i| {
            let n = basic.n_s[i];
            let m = basic.m_s[i];
            let m1 = basic.dm_dg[i];
            let m2 = p.taxis.second_derivative(basic.g_s[i]);
            let dn = p.vc * m * n;
            let horiz = radiation.p[i] * l1 + radiation.q[i] * l2;
            p.vc * ((dn * m1 + n * m2 * dg[i]) * radiation.g1[i] + n * m1 * dgd[i])
                - C::new(0.0, p.vc * n * m / basic.q_s[i]) * horiz
        })
        .collect();
    let gamma1 = (0..nz).map(|i| p.vc * basic.dm_dg[i] * dg[i]).collect();
    GammaTerms { gamma0, gamma1 }
}

fn gradient(z: &[f64], f: &[C]) -> Vec<C> {
    let n = z.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (f[1] - f[0]) / (z[1] - z[0])
            } else if i == n - 1 {
                (f[n - 1] - f[n - 2]) / (z[n - 1] - z[n - 2])
            } else {
                let (h0, h1) = (z[i] - z[i - 1], z[i + 1] - z[i]);
                (f[i + 1] * h0 * h0 - f[i - 1] * h1 * h1 + f[i] * (h1 * h1 - h0 * h0)) / (h0 * h1 * (h0 + h1))
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub k: f64,
    pub r: f64,
    pub sigma: C,
    /// Collocation nodes of the finest level.
    pub z: Vec<f64>,
    pub w: Vec<C>,
    pub theta: Vec<C>,
    pub branch: Branch,
    pub radiation: PerturbedRadiation,
    pub bc_residual: f64,
    pub ode_residual: f64,
}

impl EigenSolution {
    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k
    }

    /// `W` at arbitrary heights.
    pub fn w_at(&self, zs: &[f64]) -> Vec<C> {
        interpolate_nodes(&self.z, &self.w, zs)
    }

    pub fn theta_at(&self, zs: &[f64]) -> Vec<C> {
        interpolate_nodes(&self.z, &self.theta, zs)
    }
}

fn interpolate_nodes(nodes: &[f64], values: &[C], zs: &[f64]) -> Vec<C> {
    let grid = ChebyshevGrid::new(nodes.len() - 1).expect("solution grid");
    let p = grid.interpolation_matrix(zs);
    (0..zs.len())
        .map(|i| (0..values.len()).map(|j| values[j] * p[(i, j)]).sum())
        .collect()
}

/// Marginal state of every level at a common `R`.
#[derive(Debug, Clone)]
pub struct Tracked {
    pub r: f64,
    pub pairs: Vec<EigenPair>,
    pub sigma: C,
    /// Per-level stationary onsets, when known.
    pub level_r: Vec<f64>,
}

/// Stability problem at one wavenumber across all levels.
#[derive(Debug, Clone)]
pub struct WavenumberProblem<'a> {
    pub k: f64,
    problem: &'a StabilityProblem,
    pub ops: Vec<LevelOperators>,
}

/// Stability machinery shared by all wavenumbers of one basic state.
#[derive(Debug, Clone)]
pub struct StabilityProblem {
    pub basic: BasicState,
    pub levels: Vec<Level>,
    pub options: StabilityOptions,
    weights: Vec<f64>,
}

impl StabilityProblem {
    pub fn new(basic: &BasicState, options: &StabilityOptions) -> Result<Self> {
        if options.grids.is_empty() || options.grids.len() > 2 {
            return Err(Error::Domain("one or two collocation levels are supported".into()));
        }
        if options.grids.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("collocation orders must increase".into()));
        }
        let levels = options
            .grids
            .iter()
            .map(|&n| Level::new(basic, n, options))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            basic: basic.clone(),
            levels,
            weights: richardson_weights(&options.grids),
            options: options.clone(),
        })
    }

    pub fn at(&self, k: f64) -> Result<WavenumberProblem<'_>> {
        let ops = self
            .levels
            .iter()
            .map(|l| l.operators(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(WavenumberProblem { k, problem: self, ops })
    }
}

impl WavenumberProblem<'_> {
    fn extrapolate(&self, v: &[C]) -> C {
        combine(&self.problem.weights, v)
    }

    fn extrapolate_real(&self, v: &[f64]) -> f64 {
        self.problem.weights.iter().zip(v).map(|(w, v)| w * v).sum()
    }

    fn track(&self, r: f64, from: &[EigenPair]) -> Result<Vec<EigenPair>> {
        self.ops
            .iter()
            .zip(from)
            .map(|(op, p)| op.refine(r, p))
            .collect()
    }

    fn state(&self, r: f64, pairs: Vec<EigenPair>) -> Tracked {
        let s: Vec<C> = pairs.iter().map(|p| p.sigma).collect();
        Tracked { r, sigma: self.extrapolate(&s), pairs, level_r: Vec::new() }
    }

    /// Continue tracked pairs from `from.r` to `r`, halving the step when
    /// Newton fails.
    fn continue_to(&self, from: &Tracked, r: f64) -> Result<Tracked> {
        let mut cur = from.clone();
        let mut step = r - cur.r;
        let mut guard = 0;
        while (r - cur.r).abs() > 0.0 {
            guard += 1;
            if guard > 60 {
                return Err(Error::Convergence(format!("mode continuation stalled at R = {:.6}", cur.r)));
            }
            let target = if (r - cur.r).abs() <= step.abs() { r } else { cur.r + step };
            match self.track(target, &cur.pairs) {
                Ok(p) => {
                    cur = self.state(target, p);
                    step *= 1.5;
                }
                Err(e) => {
                    step *= 0.5;
                    if step.abs() < 1e-9 * r.abs() {
                        return Err(e);
                    }
                }
            }
        }
        Ok(cur)
    }

    /// Root of `Re σ_ext(R) = 0` starting from tracked pairs near it.
    fn marginal_root(&self, start: Tracked) -> Result<Tracked> {
        let tol = self.problem.options.r_tolerance;
        let r_max = self.problem.options.r_max;
        let mut a = start;
        let probe = self.continue_to(&a, a.r * (1.0 + 1e-4))?;
        let slope = (probe.sigma.re - a.sigma.re) / (probe.r - a.r);
        let dir = if (a.sigma.re > 0.0) == (slope > 0.0) { -1.0 } else { 1.0 };
        let mut h = if slope != 0.0 && slope.is_finite() {
            (1.2 * a.sigma.re.abs() / slope.abs()).clamp(1e-4 * a.r, 0.05 * a.r)
        } else {
            0.01 * a.r
        };
        let mut b;
        let mut history = vec![a.r];
        loop {
            let target = a.r + dir * h;
            if !(target > 0.0) || target > r_max {
                return Err(Error::NotFound(format!(
                    "no marginal crossing for R in (0, {r_max}] at k = {}",
                    self.k
                )));
            }
            b = self.continue_to(&a, target)?;
            history.push(b.r);
            if b.sigma.re == 0.0 || (b.sigma.re > 0.0) != (a.sigma.re > 0.0) {
                break;
            }
            a = b;
            h *= 2.0;
            if history.len() > 40 {
                return Err(Error::Convergence(format!("R bracket search diverged: {history:?}")));
            }
        }
        // Illinois false position on the bracket, tracking from the nearer end
        let (mut lo, mut hi) = if a.r < b.r { (a, b) } else { (b, a) };
        let (mut flo, mut fhi) = (lo.sigma.re, hi.sigma.re);
        let mut last_side = 0;
        for _ in 0..100 {
            let mut r = (lo.r * fhi - hi.r * flo) / (fhi - flo);
            if !(r > lo.r && r < hi.r) {
                r = 0.5 * (lo.r + hi.r);
            }
            let near = if (r - lo.r) < (hi.r - r) { &lo } else { &hi };
            let c = self.continue_to(near, r)?;
            let fc = c.sigma.re;
            if fc == 0.0 || (hi.r - lo.r) <= tol * r {
                return Ok(c);
            }
            if (fc > 0.0) == (flo > 0.0) {
                lo = c;
                flo = fc;
                if last_side == -1 {
                    fhi *= 0.5;
                }
                last_side = -1;
            } else {
                hi = c;
                fhi = fc;
                if last_side == 1 {
                    flo *= 0.5;
                }
                last_side = 1;
            }
            if (hi.r - lo.r) <= tol * hi.r {
                return Ok(if lo.sigma.re.abs() < hi.sigma.re.abs() { lo } else { hi });
            }
        }
        Err(Error::Convergence("marginal R iteration did not converge".into()))
    }

    /// Lowest stationary marginal state.
    pub fn stationary(&self) -> Result<Tracked> {
        let r_max = self.problem.options.r_max;
        let mut seeds = Vec::new();
        let mut rs = Vec::new();
        for op in &self.ops {
            let modes = op.stationary_modes(r_max)?;
            let (r, pair) = modes.into_iter().next().ok_or_else(|| {
                Error::NotFound(format!("no stationary mode with R in (0, {r_max}] at k = {}", self.k))
            })?;
            rs.push(r);
            seeds.push(op.refine(r, &pair)?);
        }
        let r0 = self.extrapolate_real(&rs);
        if seeds.len() == 1 {
            let mut t = self.state(rs[0], seeds);
            t.level_r = rs;
            return Ok(t);
        }
        if !(r0 > 0.0) {
            return Err(Error::Convergence(format!(
                "extrapolated stationary R is not positive at k = {}: levels give {rs:?}",
                self.k
            )));
        }
        let pairs: Vec<EigenPair> = self
            .ops
            .iter()
            .zip(rs.iter().zip(&seeds))
            .map(|(op, (&r, p))| {
                let single = WavenumberProblem {
                    k: self.k,
                    problem: self.problem,
                    ops: vec![op.clone()],
                };
                let start = Tracked { r, pairs: vec![p.clone()], sigma: p.sigma, level_r: Vec::new() };
                single.continue_to(&start, r0).map(|t| t.pairs[0].clone())
            })
            .collect::<Result<_>>()?;
        let mut t = self.marginal_root(self.state(r0, pairs))?;
        t.sigma.im = 0.0;
        t.level_r = rs;
        Ok(t)
    }

    /// Look for instability below the coarse level's stationary onset. When
    /// modes already grow there, the onset is located by bisection on the
    /// coarse spectrum and the leading complex pair just above it is
    /// returned with its `R`. A `seed` instead selects the eigenvalue nearest
    /// to it just below the stationary onset.
    pub fn oscillatory_probe(&self, stationary: &Tracked, seed: Option<C>) -> Result<Option<(f64, EigenPair)>> {
        let onset = stationary.level_r.first().copied().unwrap_or(stationary.r);
        let op = &self.ops[0];
        let mut hi = onset * (1.0 - PROBE_OFFSET);
        let spec = op.spectrum(hi)?;
        if let Some(s) = seed {
            let pick = spec
                .iter()
                .copied()
                .filter(|v| v.im >= 0.0)
                .min_by(|a, b| (a - s).norm().partial_cmp(&(b - s).norm()).unwrap());
            return match pick {
                None => Ok(None),
                Some(v) => Ok(Some((hi, op.eigenpair_near(hi, v)?))),
            };
        }
        let growing = |sp: &[C]| sp.first().map_or(false, |v| v.re > GROWTH_FLOOR);
        if !growing(&spec) {
            return Ok(None);
        }
        let mut hi_spec = spec;
        let mut lo = hi;
        loop {
            lo *= 0.5;
            if lo < 1e-3 * onset {
                return Ok(None);
            }
            let sp = op.spectrum(lo)?;
            if !growing(&sp) {
                break;
            }
            hi = lo;
            hi_spec = sp;
        }
        while hi - lo > BISECTION_WIDTH * hi {
            let mid = 0.5 * (lo + hi);
            let sp = op.spectrum(mid)?;
            if growing(&sp) {
                hi = mid;
                hi_spec = sp;
            } else {
                lo = mid;
            }
        }
        match hi_spec
            .iter()
            .copied()
            .find(|v| v.re > GROWTH_FLOOR && v.im > OSCILLATION_FLOOR)
        {
            None => Ok(None),
            Some(v) => Ok(Some((hi, op.eigenpair_near(hi, v)?))),
        }
    }

    /// Oscillatory marginal state grown from a probe pair.
    pub fn oscillatory(&self, r_probe: f64, coarse: &EigenPair) -> Result<Tracked> {
        let mut pairs = vec![coarse.clone()];
        for i in 1..self.ops.len() {
            let x = transfer(&self.problem.levels[0], &self.problem.levels[i], &coarse.x);
            pairs.push(self.ops[i].refine(r_probe, &EigenPair { sigma: coarse.sigma, x })?);
        }
        let t = self.marginal_root(self.state(r_probe, pairs))?;
        if t.sigma.im.abs() <= OSCILLATION_FLOOR {
            return Err(Error::NotFound(format!(
                "complex pair at k = {} turns real before reaching onset",
                self.k
            )));
        }
        Ok(t)
    }

    /// Mode number of the finest level's eigenfunction.
    pub fn mode(&self, t: &Tracked) -> usize {
        let fine = self.ops.len() - 1;
        let level = &self.problem.levels[fine];
        let np = level.grid.n() + 1;
        let w: Vec<C> = t.pairs[fine].x.rows(0, np).iter().copied().collect();
        let zs: Vec<f64> = (1..2000).map(|i| i as f64 / 2000.0).collect();
        classify_profile(&interpolate_nodes(&level.grid.z, &w, &zs))
    }

    /// Extrapolated growth rate with the largest real part at `r`.
    pub fn growth_rate(&self, r: f64) -> Result<(C, Vec<EigenPair>)> {
        let fine = self.ops.len() - 1;
        let spec = self.ops[fine].spectrum(r)?;
        let lead = *spec
            .first()
            .ok_or_else(|| Error::NotFound(format!("no finite growth rate at k = {}", self.k)))?;
        let mut pairs = vec![EigenPair { sigma: lead, x: DVector::zeros(0) }; self.ops.len()];
        pairs[fine] = self.ops[fine].eigenpair_near(r, lead)?;
        for i in 0..fine {
            let s = self.ops[i].spectrum(r)?;
            let near = s
                .into_iter()
                .min_by(|a, b| (a - lead).norm().partial_cmp(&(b - lead).norm()).unwrap())
                .ok_or_else(|| Error::NotFound("coarse spectrum empty".into()))?;
            pairs[i] = self.ops[i].eigenpair_near(r, near)?;
        }
        let s: Vec<C> = pairs.iter().map(|p| p.sigma).collect();
        Ok((self.extrapolate(&s), pairs))
    }

    /// Extrapolated growth rate of a tracked mode at `r`.
    pub fn tracked_growth(&self, from: &Tracked, r: f64) -> Result<Tracked> {
        self.continue_to(from, r)
    }

    /// Package a tracked state as a solution using the finest level's mode.
    pub fn solution(&self, t: &Tracked, branch: Branch) -> Result<EigenSolution> {
        let fine = self.ops.len() - 1;
        let op = &self.ops[fine];
        let level = &self.problem.levels[fine];
        let np = level.grid.n() + 1;
        let pair = &t.pairs[fine];
        let d2w0: C = (0..np).map(|j| pair.x[j] * level.grid.d2[(0, j)]).sum();
        if d2w0.norm() == 0.0 {
            return Err(Error::Convergence("mode has vanishing wall shear".into()));
        }
        let x = &pair.x / d2w0;
        let w: Vec<C> = x.rows(0, np).iter().copied().collect();
        let theta: Vec<C> = x.rows(np, np).iter().copied().collect();
        let normalized = EigenPair { sigma: pair.sigma, x: x.clone() };
        let ode_residual = op.residual(t.r, &normalized);
        let bc_residual = boundary_residual(level, &op.closure, &w, &theta);
        let theta_basic = interpolate_nodes(&level.grid.z, &theta, &self.problem.basic.z);
        let radiation = solve_perturbed_rte(&self.problem.basic, &theta_basic, self.k, 0.0)?;
        let sigma = match branch {
            Branch::Stationary => C::new(t.sigma.re, 0.0),
            Branch::Oscillatory => t.sigma,
        };
        Ok(EigenSolution {
            k: self.k,
            r: t.r,
            sigma,
            z: level.grid.z.clone(),
            w,
            theta,
            branch,
            radiation,
            bc_residual,
            ode_residual,
        })
    }
}

fn boundary_residual(level: &Level, cl: &ClosureOperators, w: &[C], theta: &[C]) -> f64 {
    let nn = level.grid.n();
    let d1 = &level.grid.d1;
    let d2 = &level.grid.d2;
    let dot = |m: &DMatrix<f64>, r: usize, v: &[C]| -> C { (0..v.len()).map(|j| v[j] * m[(r, j)]).sum() };
    let mut res = vec![w[0].norm(), dot(d1, 0, w).norm(), w[nn].norm(), dot(d2, nn, w).norm()];
    for &r in &[0, nn] {
        let g: C = (0..=nn).map(|j| cl.kg[(r, j)] * theta[j]).sum();
        let flux = dot(d1, r, theta) - level.vc * level.m[r] * theta[r] - level.vc * level.n[r] * level.dm[r] * g;
        res.push(flux.norm());
    }
    res.into_iter().fold(0.0, f64::max)
}

/// Marginal `(R, σ)` at wavenumber `k` on the requested branch. An
/// oscillatory solve is seeded from the complex pair nearest `init` just
/// below the stationary onset, or from the leading growing pair otherwise.
pub fn solve_marginal(basic: &BasicState, k: f64, branch: Branch, init: Option<C>) -> Result<EigenSolution> {
    solve_marginal_with(basic, k, branch, init, &StabilityOptions::default())
}

pub fn solve_marginal_with(
    basic: &BasicState,
    k: f64,
    branch: Branch,
    init: Option<C>,
    opts: &StabilityOptions,
) -> Result<EigenSolution> {
    let problem = StabilityProblem::new(basic, opts)?;
    let wp = problem.at(k)?;
    let st = wp.stationary()?;
    match branch {
        Branch::Stationary => wp.solution(&st, Branch::Stationary),
        Branch::Oscillatory => {
            let (r, pair) = wp
                .oscillatory_probe(&st, init)?
                .ok_or_else(|| Error::NotFound(format!("no oscillatory pair at k = {k}")))?;
            let t = wp.oscillatory(r, &pair)?;
            wp.solution(&t, Branch::Oscillatory)
        }
    }
}

/// Growth rate with the largest real part at `(R, k)`.
pub fn solve_growth_rate(basic: &BasicState, r: f64, k: f64) -> Result<C> {
    solve_growth_rate_with(basic, r, k, &StabilityOptions::default())
}

pub fn solve_growth_rate_with(basic: &BasicState, r: f64, k: f64, opts: &StabilityOptions) -> Result<C> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("Rayleigh number must be positive, got {r}")));
    }
    let problem = StabilityProblem::new(basic, opts)?;
    Ok(problem.at(k)?.growth_rate(r)?.0)
}

/// Number of stacked cells: one more than the interior sign changes of
/// `Re W`, at the phase where `∫|Re W|` is largest.
pub fn classify_mode(sol: &EigenSolution) -> usize {
    let zs: Vec<f64> = (1..2000).map(|i| i as f64 / 2000.0).collect();
    classify_profile(&sol.w_at(&zs))
}

/// Mode number of sampled interior values of a complex profile.
pub fn classify_profile(w: &[C]) -> usize {
    let mut best = (f64::MIN, 0.0);
    for j in 0..360 {
        let phi = PI * j as f64 / 360.0;
        let rot = C::from_polar(1.0, phi);
        let s: f64 = w.iter().map(|v| (v * rot).re.abs()).sum();
        if s > best.0 {
            best = (s, phi);
        }
    }
    let rot = C::from_polar(1.0, best.1);
    let re: Vec<f64> = w.iter().map(|v| (v * rot).re).collect();
    let scale = re.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = 1e-9 * scale;
    let mut changes = 0;
    let mut last = 0.0;
    for &v in &re {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            changes += 1;
        }
        last = v;
    }
    1 + changes
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// `values[iz][ix]`
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

fn uniform(n: usize, hi: f64, closed: bool) -> Vec<f64> {
    let den = if closed { (n.max(2) - 1) as f64 } else { n as f64 };
    (0..n).map(|i| hi * i as f64 / den).collect()
}

/// `w₁ = ε Re[W e^{i(kx+φ)}]` and `n₁ = ε Re[Θ e^{i(kx+φ)}]` over one
/// wavelength.
pub fn reconstruct_fields(sol: &EigenSolution, epsilon: f64, nx: usize, nz: usize, phase: f64) -> FieldGrid {
    let phase = phase.rem_euclid(2.0 * PI);
    let x = uniform(nx, sol.wavelength(), false);
    let z = uniform(nz, 1.0, true);
    let w = sol.w_at(&z);
    let th = sol.theta_at(&z);
    let wave: Vec<C> = x.iter().map(|&xv| C::from_polar(1.0, sol.k * xv + phase)).collect();
    let grid = |f: &[C]| -> Vec<Vec<f64>> {
        f.iter()
            .map(|v| wave.iter().map(|e| epsilon * (v * e).re).collect())
            .collect()
    };
    FieldGrid {
        first: grid(&w),
        second: grid(&th),
        x,
        z,
    }
}

fn lerp(xs: &[f64], ys: &[C], t: f64) -> C {
    let i = xs.partition_point(|&v| v < t).clamp(1, xs.len() - 1);
    let s = (t - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] * (1.0 - s) + ys[i] * s
}

fn lerp_real(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let i = xs.partition_point(|&v| v < t).clamp(1, xs.len() - 1);
    let s = (t - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] * (1.0 - s) + ys[i] * s
}

/// Mean swimming orientation `(⟨p_x⟩, ⟨p_z⟩)`, in `first` and `second`.
pub fn orientation_field(basic: &BasicState, sol: &EigenSolution, epsilon: f64, nx: usize, nz: usize) -> FieldGrid {
    let x = uniform(nx, sol.wavelength(), false);
    let z = uniform(nz, 1.0, true);
    let rad = &sol.radiation;
    let mut px = Vec::with_capacity(nz);
    let mut pz = Vec::with_capacity(nz);
    for &zv in &z {
        let m = lerp_real(&basic.z, &basic.m_s, zv);
        let dm = lerp_real(&basic.z, &basic.dm_dg, zv);
        let q = lerp_real(&basic.z, &basic.q_s, zv);
        let g1 = lerp(&rad.z, &rad.g1, zv);
        let p = lerp(&rad.z, &rad.p, zv);
        let mut rx = Vec::with_capacity(nx);
        let mut rz = Vec::with_capacity(nx);
        for &xv in &x {
            let e = C::from_polar(1.0, sol.k * xv);
            rz.push(m + epsilon * (g1 * dm * e).re);
            rx.push(-epsilon * (p * m / q * e).re);
        }
        px.push(rx);
        pz.push(rz);
    }
    FieldGrid { x, z, first: px, second: pz }
}
