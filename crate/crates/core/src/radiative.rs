//! Steady radiation field in a scattering slab lit by diffuse flux from above.
//!
//! The total intensity Υ(τ) solves
//!
//! ```text
//! Υ(τ) = (ω/2) ∫₀^κ E₁(|τ − t|) Υ(t) dt + 2B·E₂(τ)
//! ```
//!
//! discretized by a Nyström rule on graded Gauss panels. The logarithmic
//! kernel singularity is removed by subtraction and the panels adjacent to the
//! collocation point are integrated with a geometrically graded product rule.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numkernel::{
    expint_unchecked, gauss_legendre, lagrange_basis, AngularQuadrature, MonotoneCubic,
};

const PANEL_ORDER: usize = 8;
const GRADING_RATIO: f64 = 0.5;
const GRADING_LEVELS: usize = 36;

#[inline]
fn e1(x: f64) -> f64 {
    expint_unchecked(1, x)
}

#[inline]
fn e2(x: f64) -> f64 {
    expint_unchecked(2, x)
}

#[inline]
fn e3(x: f64) -> f64 {
    expint_unchecked(3, x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalGrid {
    pub tau: Vec<f64>,
    pub kappa_h: f64,
}

impl OpticalGrid {
    pub fn new(tau: Vec<f64>, kappa_h: f64) -> Result<Self> {
        if !(kappa_h > 0.0) {
            return Err(Error::Domain(format!("kappa_H must be positive, got {kappa_h}")));
        }
        if tau.first() != Some(&0.0) || tau.last() != Some(&kappa_h) {
            return Err(Error::Domain("optical grid must span [0, kappa_H]".into()));
        }
        if tau.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("optical grid must be strictly increasing".into()));
        }
        Ok(Self { tau, kappa_h })
    }
}

/// Composite Gauss panels on `[0, κ]`, cosine-graded toward both faces.
#[derive(Debug, Clone)]
struct Panels {
    edges: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    ref_x: Vec<f64>,
    ref_w: Vec<f64>,
}

impl Panels {
    fn new(kappa: f64, n_panels: usize) -> Self {
        let (ref_x, ref_w) = gauss_legendre(PANEL_ORDER).expect("fixed order");
        let edges: Vec<f64> = (0..=n_panels)
            .map(|p| 0.5 * kappa * (1.0 - (PI * p as f64 / n_panels as f64).cos()))
            .collect();
        let mut nodes = Vec::with_capacity(n_panels * PANEL_ORDER);
        let mut weights = Vec::with_capacity(n_panels * PANEL_ORDER);
        for p in 0..n_panels {
            let (a, b) = (edges[p], edges[p + 1]);
            for (x, w) in ref_x.iter().zip(&ref_w) {
                nodes.push(0.5 * (a + b) + 0.5 * (b - a) * x);
                weights.push(0.5 * (b - a) * w);
            }
        }
        Self {
            edges,
            nodes,
            weights,
            ref_x,
            ref_w,
        }
    }

    fn n_panels(&self) -> usize {
        self.edges.len() - 1
    }

    fn panel_nodes(&self, p: usize) -> &[f64] {
        &self.nodes[p * PANEL_ORDER..(p + 1) * PANEL_ORDER]
    }

    fn is_near(&self, p: usize, tau: f64) -> bool {
        let (a, b) = (self.edges[p], self.edges[p + 1]);
        let dist = if tau < a {
            a - tau
        } else if tau > b {
            tau - b
        } else {
            0.0
        };
        dist < b - a
    }

    fn contains(&self, p: usize, tau: f64) -> bool {
        tau > self.edges[p] && tau < self.edges[p + 1]
    }

    /// Quadrature on `[from, to]` whose pieces shrink geometrically toward `from`.
    fn graded_side(&self, from: f64, to: f64, out: &mut Vec<(f64, f64)>) {
        let d = to - from;
        if d == 0.0 {
            return;
        }
        let mut push = |lo: f64, hi: f64| {
            let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (x, w) in self.ref_x.iter().zip(&self.ref_w) {
                out.push((c + h * x, (h * w).abs()));
            }
        };
        let mut outer = 1.0;
        for _ in 0..GRADING_LEVELS {
            let inner = outer * GRADING_RATIO;
            push(from + d * inner, from + d * outer);
            outer = inner;
        }
        push(from, from + d * outer);
    }

    /// Graded rule on panel `p` clustered at `tau` (or at the edge nearest to it).
    fn graded_rule(&self, p: usize, tau: f64) -> Vec<(f64, f64)> {
        let (a, b) = (self.edges[p], self.edges[p + 1]);
        let mut out = Vec::with_capacity(2 * (GRADING_LEVELS + 1) * PANEL_ORDER);
        if tau > a && tau < b {
            self.graded_side(tau, a, &mut out);
            self.graded_side(tau, b, &mut out);
        } else if tau <= a {
            self.graded_side(a, b, &mut out);
        } else {
            self.graded_side(b, a, &mut out);
        }
        out
    }

    /// Weights `W_j` with `Σ W_j f(t_j) ≈ ∫₀^κ K(t − τ) f(t) dt` for smooth `f`.
    fn kernel_weights(&self, tau: f64, kernel: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut w = vec![0.0; self.nodes.len()];
        let mut basis = [0.0; PANEL_ORDER];
        for p in 0..self.n_panels() {
            let off = p * PANEL_ORDER;
            if self.is_near(p, tau) {
                let xs = self.panel_nodes(p);
                for (t, wt) in self.graded_rule(p, tau) {
                    if t == tau {
                        continue;
                    }
                    let k = wt * kernel(t - tau);
                    lagrange_basis(xs, t, &mut basis);
                    for (j, b) in basis.iter().enumerate() {
                        w[off + j] += k * b;
                    }
                }
            } else {
                for j in off..off + PANEL_ORDER {
                    w[j] = self.weights[j] * kernel(self.nodes[j] - tau);
                }
            }
        }
        w
    }
}

/// Solution Υ(τ) of the steady radiative integral equation.
#[derive(Debug, Clone)]
pub struct TotalIntensityProfile {
    pub grid: OpticalGrid,
    pub upsilon: Vec<f64>,
    pub omega: f64,
    pub b: f64,
    panels: Panels,
    nodal: Vec<f64>,
    interp: MonotoneCubic,
    residual: f64,
}

fn subtracted_integral(tau: f64, kappa: f64) -> f64 {
    2.0 - e2(tau) - e2(kappa - tau)
}

/// Nyström solution of the integral equation on `n_points` Gauss nodes (rounded
/// up to whole panels) plus the two faces.
pub fn solve_fie(omega: f64, kappa_h: f64, b: f64, n_points: usize) -> Result<TotalIntensityProfile> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::Domain(format!("omega = {omega} outside [0, 1]")));
    }
    if !(kappa_h > 0.0) {
        return Err(Error::Domain(format!("kappa_H = {kappa_h} must be positive")));
    }
    if !(b > 0.0) {
        return Err(Error::Domain(format!("B = {b} must be positive")));
    }
    if n_points < 64 {
        return Err(Error::Domain(format!("n_points = {n_points} below 64")));
    }
    let n_panels = n_points.div_ceil(PANEL_ORDER);
    let panels = Panels::new(kappa_h, n_panels);
    let n = panels.nodes.len();
    let half = 0.5 * omega;

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        let ti = panels.nodes[i];
        let w = panels.kernel_weights(ti, |u| e1(u.abs()));
        let mut off_sum = 0.0;
        for j in 0..n {
            if j != i {
                a[(i, j)] = -half * w[j];
                off_sum += w[j];
            }
        }
        a[(i, i)] = 1.0 - half * subtracted_integral(ti, kappa_h) + half * off_sum;
        rhs[i] = 2.0 * b * e2(ti);
    }
    let lu = a.clone().lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Convergence("singular Nyström matrix".into()))?;
    let mut residual = (&rhs - &a * &x).amax();
    for _ in 0..3 {
        if residual <= 1e-12 {
            break;
        }
        let r = &rhs - &a * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
        residual = (&rhs - &a * &x).amax();
    }
    if residual > 1e-9 {
        return Err(Error::Convergence(format!(
            "Nyström residual {residual:.3e} exceeds 1e-9"
        )));
    }
    let nodal: Vec<f64> = x.iter().copied().collect();

    let mut profile = TotalIntensityProfile {
        grid: OpticalGrid {
            tau: vec![0.0, kappa_h],
            kappa_h,
        },
        upsilon: Vec::new(),
        omega,
        b,
        panels,
        nodal,
        interp: MonotoneCubic::new(vec![0.0, 1.0], vec![0.0, 0.0])?,
        residual,
    };
    let top = profile.nystrom_value(0.0);
    let bottom = profile.nystrom_value(kappa_h);
    let mut tau = Vec::with_capacity(n + 2);
    let mut ups = Vec::with_capacity(n + 2);
    tau.push(0.0);
    ups.push(top);
    tau.extend_from_slice(&profile.panels.nodes);
    ups.extend_from_slice(&profile.nodal);
    tau.push(kappa_h);
    ups.push(bottom);
    profile.interp = MonotoneCubic::new(tau.clone(), ups.clone())?;
    profile.grid = OpticalGrid::new(tau, kappa_h)?;
    profile.upsilon = ups;
    Ok(profile)
}

impl TotalIntensityProfile {
    pub fn kappa_h(&self) -> f64 {
        self.grid.kappa_h
    }

    /// Max-norm residual of the discrete Nyström system.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Gauss nodes of the Nyström rule (grid without the faces).
    pub fn nodes(&self) -> &[f64] {
        &self.panels.nodes
    }

    pub fn nodal_values(&self) -> &[f64] {
        &self.nodal
    }

    /// Υ at any τ ∈ [0, κ] from the monotone cubic through the grid values.
    pub fn value(&self, tau: f64) -> f64 {
        self.interp.eval(tau.clamp(0.0, self.kappa_h()))
    }

    /// Υ at any τ ∈ [0, κ] from the Nyström interpolation formula.
    pub fn nystrom_value(&self, tau: f64) -> f64 {
        let kappa = self.kappa_h();
        let tau = tau.clamp(0.0, kappa);
        if let Some(j) = self.panels.nodes.iter().position(|&t| t == tau) {
            return self.nodal[j];
        }
        let half = 0.5 * self.omega;
        let w = self.panels.kernel_weights(tau, |u| e1(u.abs()));
        let sw: f64 = w.iter().sum();
        let num = half * w.iter().zip(&self.nodal).map(|(a, b)| a * b).sum::<f64>()
            + 2.0 * self.b * e2(tau);
        num / (1.0 - half * subtracted_integral(tau, kappa) + half * sw)
    }

    /// dΥ/dτ on the open interval (0, κ) from the differentiated integral equation.
    pub fn derivative(&self, tau: f64) -> f64 {
        let kappa = self.kappa_h();
        let u = self.nystrom_value(tau);
        let kernel = |s: f64| {
            let a = s.abs();
            s.signum() * (-a).exp() / a
        };
        let p = &self.panels;
        let mut integral = 0.0;
        let mut basis = [0.0; PANEL_ORDER];
        for q in 0..p.n_panels() {
            let off = q * PANEL_ORDER;
            let vals = &self.nodal[off..off + PANEL_ORDER];
            if p.is_near(q, tau) {
                let xs = p.panel_nodes(q);
                let c = if p.contains(q, tau) {
                    lagrange_basis(xs, tau, &mut basis);
                    let pt: f64 = basis.iter().zip(vals).map(|(a, b)| a * b).sum();
                    let pv = e1(tau - p.edges[q]) - e1(p.edges[q + 1] - tau);
                    integral += (pt - u) * pv;
                    pt
                } else {
                    u
                };
                for (t, wt) in p.graded_rule(q, tau) {
                    if t == tau {
                        continue;
                    }
                    lagrange_basis(xs, t, &mut basis);
                    let f: f64 = basis.iter().zip(vals).map(|(a, b)| a * b).sum();
                    integral += wt * kernel(t - tau) * (f - c);
                }
            } else {
                for j in off..off + PANEL_ORDER {
                    integral += p.weights[j] * kernel(p.nodes[j] - tau) * (self.nodal[j] - u);
                }
            }
        }
        -2.0 * self.b * e1(tau)
            + 0.5 * self.omega * (u * (e1(tau) - e1(kappa - tau)) + integral)
    }

    /// Net downward flux magnitude at optical depth τ (closed form).
    pub fn flux_at(&self, tau: f64) -> f64 {
        let tau = tau.clamp(0.0, self.kappa_h());
        let w = self
            .panels
            .kernel_weights(tau, |s| -s.signum() * e2(s.abs()));
        let integral: f64 = w.iter().zip(&self.nodal).map(|(a, b)| a * b).sum();
        2.0 * self.b * e3(tau) + 0.5 * self.omega * integral
    }

    /// Residual of the continuous equation at an arbitrary τ, with Υ taken from
    /// the Nyström interpolant; used as an accuracy diagnostic.
    pub fn equation_residual(&self, tau: f64) -> f64 {
        let u = self.nystrom_value(tau);
        let w = self.panels.kernel_weights(tau, |s| e1(s.abs()));
        let int: f64 = w.iter().zip(&self.nodal).map(|(a, b)| a * b).sum();
        u - 0.5 * self.omega * int - 2.0 * self.b * e2(tau)
    }
}

/// Closed-form flux `q_s` on the profile's grid; positive means net downward.
pub fn steady_flux(profile: &TotalIntensityProfile) -> Result<Vec<f64>> {
    let q: Vec<f64> = profile.grid.tau.iter().map(|&t| profile.flux_at(t)).collect();
    if let Some((i, v)) = q.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::ModelViolation(format!(
            "flux q_s = {v:.3e} is not positive at tau = {}",
            profile.grid.tau[i]
        )));
    }
    Ok(q)
}

/// Cell coefficients of the exact integrating factor with a linearly varying
/// source: `∫₀¹ e^(−A(1−s))·(1−s) ds` and `∫₀¹ e^(−A(1−s))·s ds`.
#[inline]
pub fn cell_coefficients(a: f64) -> (f64, f64, f64) {
    let e = (-a).exp();
    if a.abs() < 1e-3 {
        let c1 = 0.5 - a / 6.0 + a * a / 24.0 - a * a * a / 120.0;
        let c0f = 1.0 - a / 2.0 + a * a / 6.0 - a * a * a / 24.0;
        (e, c0f - c1, c1)
    } else {
        let c0f = (1.0 - e) / a;
        let c1 = c0f - (1.0 - e * (1.0 + a)) / (a * a);
        (e, c0f - c1, c1)
    }
}

const FINE_CELLS: usize = 4096;

/// Steady intensity along the direction with polar cosine `gamma`, evaluated at
/// arbitrary optical depths.
pub fn intensity_along(profile: &TotalIntensityProfile, gamma: f64, taus: &[f64]) -> Vec<f64> {
    let kappa = profile.kappa_h();
    let mu = gamma.abs();
    let mut grid: Vec<f64> = (0..=FINE_CELLS)
        .map(|i| kappa * i as f64 / FINE_CELLS as f64)
        .chain(taus.iter().map(|t| t.clamp(0.0, kappa)))
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let ups: Vec<f64> = grid.iter().map(|&t| profile.value(t)).collect();
    let src = profile.omega / (4.0 * PI);
    let m = grid.len();
    let mut l = vec![0.0; m];
    if gamma < 0.0 {
        l[0] = profile.b / PI;
        for i in 1..m {
            let a = (grid[i] - grid[i - 1]) / mu;
            let (e, c0, c1) = cell_coefficients(a);
            l[i] = e * l[i - 1] + src * a * (c0 * ups[i - 1] + c1 * ups[i]);
        }
    } else {
        for i in (0..m - 1).rev() {
            let a = (grid[i + 1] - grid[i]) / mu;
            let (e, c0, c1) = cell_coefficients(a);
            l[i] = e * l[i + 1] + src * a * (c0 * ups[i + 1] + c1 * ups[i]);
        }
    }
    taus.iter()
        .map(|t| {
            let t = t.clamp(0.0, kappa);
            let i = grid.partition_point(|&g| g < t);
            l[i.min(m - 1)]
        })
        .collect()
}

/// Per-ordinate steady intensities on a z grid.
#[derive(Debug, Clone)]
pub struct RadiationField {
    pub z_grid: Vec<f64>,
    pub tau: Vec<f64>,
    pub ordinates: AngularQuadrature,
    /// `intensity[o][i]` is L at ordinate `o` and height `z_grid[i]`.
    pub intensity: Vec<Vec<f64>>,
    pub flux: Vec<f64>,
}

impl RadiationField {
    /// Σ w·L at each height.
    pub fn total_intensity(&self) -> Vec<f64> {
        self.moment(|_| 1.0)
    }

    /// −Σ w·γ·L at each height.
    pub fn flux_moment(&self) -> Vec<f64> {
        self.moment(|o| -o.gamma)
    }

    pub fn moment(&self, f: impl Fn(&crate::numkernel::Ordinate) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.z_grid.len()];
        for (o, row) in self.ordinates.ordinates.iter().zip(&self.intensity) {
            let c = o.w * f(o);
            for (v, l) in out.iter_mut().zip(row) {
                *v += c * l;
            }
        }
        out
    }
}

/// Formal solution of the steady transfer equation on every ordinate.
pub fn steady_intensity(
    profile: &TotalIntensityProfile,
    z_grid: &[f64],
    tau_of_z: impl Fn(f64) -> f64,
    quad: &AngularQuadrature,
) -> Result<RadiationField> {
    let tau: Vec<f64> = z_grid.iter().map(|&z| tau_of_z(z)).collect();
    if tau.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Domain("tau(z) must be non-increasing in z".into()));
    }
    let gammas = quad.polar_cosines();
    let per_gamma: Vec<Vec<f64>> = gammas
        .iter()
        .map(|&g| intensity_along(profile, g, &tau))
        .collect();
    let intensity = quad
        .ordinates
        .iter()
        .map(|o| {
            let k = gammas.iter().position(|&g| g == o.gamma).expect("listed");
            per_gamma[k].clone()
        })
        .collect();
    let flux = tau.iter().map(|&t| profile.flux_at(t)).collect();
    Ok(RadiationField {
        z_grid: z_grid.to_vec(),
        tau,
        ordinates: quad.clone(),
        intensity,
        flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subtraction_identity_holds() {
        let kappa = 0.8;
        let p = Panels::new(kappa, 40);
        for &tau in &[0.0, 0.1, 0.4, 0.79] {
            let w = p.kernel_weights(tau, |u| e1(u.abs()));
            let s: f64 = w.iter().sum();
            assert!((s - subtracted_integral(tau, kappa)).abs() < 1e-10, "tau={tau} {:e}", s - subtracted_integral(tau, kappa));
        }
    }

    #[test]
    fn pure_absorption_is_closed_form() {
        let prof = solve_fie(0.0, 0.5, 0.5, 128).unwrap();
        for (t, u) in prof.grid.tau.iter().zip(&prof.upsilon) {
            assert!((u - e2(*t)).abs() < 1e-12, "{t} {u} {}", e2(*t));
        }
    }

    #[test]
    fn cell_coefficients_continuous() {
        let (_, a0, a1) = cell_coefficients(0.999e-3);
        let (_, b0, b1) = cell_coefficients(1.001e-3);
        assert!((a0 - b0).abs() < 1e-6 && (a1 - b1).abs() < 1e-6);
    }
}
