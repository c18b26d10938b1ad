//! Linear response of the radiation field to a concentration perturbation.
//!
//! For a normal mode with horizontal wavenumbers `(l1, l2)` each ordinate obeys
//!
//! ```text
//! dΨ/dz + [(i(l1α + l2β) + κ n_s)/γ] Ψ = (ωκ/4πγ)(n_s 𝒢 + G_s Θ) − (κ/γ) L_s Θ
//! ```
//!
//! with zero incoming perturbation at both walls. 𝒢 is the angular integral
//! of Ψ; P and Q are its α- and β-weighted moments.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basic_state::BasicState;
use crate::error::{Error, Result};
use crate::numkernel::{AngularQuadrature, ChebyshevGrid};
use crate::radiative::intensity_along;

type C = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedRadiation {
    pub z: Vec<f64>,
    pub g1: Vec<C>,
    pub p: Vec<C>,
    pub q: Vec<C>,
    pub wavenumbers: (f64, f64),
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RteOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for RteOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-10,
        }
    }
}

/// Exact integrating factor over one cell with a linearly varying source:
/// returns `(e^(−A), c0, c1)` where `c0`, `c1` weight the entry and exit
/// source values.
#[inline]
pub fn cell_coefficients_c(a: C) -> (C, C, C) {
    let e = (-a).exp();
    if a.norm() < 1e-3 {
        let a2 = a * a;
        let c1 = 0.5 - a / 6.0 + a2 / 24.0 - a2 * a / 120.0;
        let c0f = 1.0 - a / 2.0 + a2 / 6.0 - a2 * a / 24.0;
        (e, c0f - c1, c1)
    } else {
        let c0f = (1.0 - e) / a;
        let c1 = c0f - (1.0 - e * (1.0 + a)) / (a * a);
        (e, c0f - c1, c1)
    }
}

/// Ordinates sharing γ and the horizontal phase `l1α + l2β` carry identical
/// perturbed intensities; each group stores its summed weights.
#[derive(Debug, Clone, Copy)]
struct OrdinateGroup {
    gamma: f64,
    phase: f64,
    w: f64,
    w_alpha: f64,
    w_beta: f64,
    gamma_index: usize,
}

fn group_ordinates(quad: &AngularQuadrature, gammas: &[f64], l1: f64, l2: f64) -> Vec<OrdinateGroup> {
    let mut groups: Vec<OrdinateGroup> = Vec::new();
    for o in &quad.ordinates {
        let phase = l1 * o.alpha + l2 * o.beta;
        let tol = 1e-12 * (1.0 + l1.abs() + l2.abs());
        if let Some(g) = groups
            .iter_mut()
            .find(|g| g.gamma == o.gamma && (g.phase - phase).abs() <= tol)
        {
            g.w += o.w;
            g.w_alpha += o.w * o.alpha;
            g.w_beta += o.w * o.beta;
        } else {
            let gamma_index = gammas.iter().position(|&g| g == o.gamma).expect("listed");
            groups.push(OrdinateGroup {
                gamma: o.gamma,
                phase,
                w: o.w,
                w_alpha: o.w * o.alpha,
                w_beta: o.w * o.beta,
                gamma_index,
            });
        }
    }
    groups
}

/// Source iteration on the basic-state grid with the basic-state ordinates.
pub fn solve_perturbed_rte(basic: &BasicState, theta: &[C], l1: f64, l2: f64) -> Result<PerturbedRadiation> {
    solve_perturbed_rte_with(basic, theta, l1, l2, &RteOptions::default())
}

pub fn solve_perturbed_rte_with(
    basic: &BasicState,
    theta: &[C],
    l1: f64,
    l2: f64,
    opts: &RteOptions,
) -> Result<PerturbedRadiation> {
    let nz = basic.z.len();
    if theta.len() != nz {
        return Err(Error::Domain(format!(
            "theta has {} samples, basic-state grid has {nz}",
            theta.len()
        )));
    }
    let p = &basic.params;
    let quad = &basic.radiation.ordinates;
    let gammas = quad.polar_cosines();
    let groups = group_ordinates(quad, &gammas, l1, l2);
    let intensity: Vec<&Vec<f64>> = gammas
        .iter()
        .map(|&g| {
            let o = quad.ordinates.iter().position(|o| o.gamma == g).expect("listed");
            &basic.radiation.intensity[o]
        })
        .collect();
    let c_g: Vec<f64> = basic
        .n_s
        .iter()
        .map(|n| p.omega * p.kappa_h * n / (4.0 * PI))
        .collect();

    let zero = C::new(0.0, 0.0);
    let mut g1 = vec![zero; nz];
    let mut pm = vec![zero; nz];
    let mut qm = vec![zero; nz];
    if theta.iter().all(|t| *t == zero) {
        return Ok(PerturbedRadiation {
            z: basic.z.clone(),
            g1,
            p: pm,
            q: qm,
            wavenumbers: (l1, l2),
            iterations: 0,
        });
    }

    let mut psi = vec![zero; nz];
    let mut prev_update = f64::NAN;
    let mut ratio = f64::NAN;
    for it in 1..=opts.max_iterations {
        let mut next = vec![zero; nz];
        pm.iter_mut().for_each(|v| *v = zero);
        qm.iter_mut().for_each(|v| *v = zero);
        for g in &groups {
            let l = intensity[g.gamma_index];
            let mu = g.gamma.abs();
            let src = |i: usize| {
                let d_t = p.omega * p.kappa_h * basic.g_s[i] / (4.0 * PI) - p.kappa_h * l[i];
                c_g[i] * g1[i] + d_t * theta[i]
            };
            let step = |from: usize, to: usize, psi_from: C| {
                let h = (basic.z[to] - basic.z[from]).abs();
                let dtau = (basic.tau[to] - basic.tau[from]).abs();
                let a = C::new(dtau, g.phase * h) / mu;
                let (e, c0, c1) = cell_coefficients_c(a);
                e * psi_from + (h / mu) * (c0 * src(from) + c1 * src(to))
            };
            if g.gamma > 0.0 {
                psi[0] = zero;
                for i in 1..nz {
                    psi[i] = step(i - 1, i, psi[i - 1]);
                }
            } else {
                psi[nz - 1] = zero;
                for i in (0..nz - 1).rev() {
                    psi[i] = step(i + 1, i, psi[i + 1]);
                }
            }
            for i in 0..nz {
                next[i] += g.w * psi[i];
                pm[i] += g.w_alpha * psi[i];
                qm[i] += g.w_beta * psi[i];
            }
        }
        let update = next
            .iter()
            .zip(&g1)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale = next.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if prev_update.is_finite() && prev_update > 0.0 {
            ratio = update / prev_update;
        }
        prev_update = update;
        g1 = next;
        if update <= opts.tolerance * scale.max(1e-300) {
            return Ok(PerturbedRadiation {
                z: basic.z.clone(),
                g1,
                p: pm,
                q: qm,
                wavenumbers: (l1, l2),
                iterations: it,
            });
        }
    }
    Err(Error::Convergence(format!(
        "source iteration exceeded {} sweeps; spectral radius estimate {ratio:.4}",
        opts.max_iterations
    )))
}

/// Linear maps from nodal Θ to nodal 𝒢, P, Q and d𝒢/dz on a collocation grid.
#[derive(Debug, Clone)]
pub struct ClosureOperators {
    pub kg: DMatrix<C>,
    pub kp: DMatrix<C>,
    pub kq: DMatrix<C>,
    pub kd: DMatrix<C>,
}

/// Wavenumber-independent data for assembling [`ClosureOperators`] on a
/// Chebyshev grid. Each collocation interval is split into `sub` cells; the
/// source is carried between nodes by barycentric interpolation.
#[derive(Debug, Clone)]
pub struct ClosureGeometry {
    omega: f64,
    kappa: f64,
    n_nodes: usize,
    sub: usize,
    sub_z: Vec<f64>,
    sub_tau: Vec<f64>,
    sub_n: Vec<f64>,
    sub_g: Vec<f64>,
    interp: DMatrix<f64>,
    node_n: Vec<f64>,
    node_g: Vec<f64>,
    quad: AngularQuadrature,
    gammas: Vec<f64>,
    /// `sub_l[γ index][sub point]`
    sub_l: Vec<Vec<f64>>,
}

impl ClosureGeometry {
    pub fn new(basic: &BasicState, grid: &ChebyshevGrid, sub: usize, quad: &AngularQuadrature) -> Result<Self> {
        if sub == 0 {
            return Err(Error::Domain("closure needs at least one sub-cell".into()));
        }
        let n = grid.n();
        let mut sub_z = Vec::with_capacity(n * sub + 1);
        for j in 0..n {
            for q in 0..sub {
                sub_z.push(grid.z[j] + (grid.z[j + 1] - grid.z[j]) * q as f64 / sub as f64);
            }
        }
        sub_z.push(1.0);
        let samples = basic.sample(&sub_z)?;
        let kappa = basic.params.kappa_h;
        let sub_n: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let mut sub_tau: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let last = sub_tau.len() - 1;
        sub_tau[0] = kappa;
        sub_tau[last] = 0.0;
        let sub_g: Vec<f64> = sub_tau.iter().map(|&t| basic.light.value(t)).collect();
        let interp = grid.interpolation_matrix(&sub_z);
        let gammas = quad.polar_cosines();
        let sub_l = gammas
            .iter()
            .map(|&g| intensity_along(&basic.light, g, &sub_tau))
            .collect();
        let node_n = (0..=n).map(|j| sub_n[j * sub]).collect();
        let node_g = (0..=n).map(|j| sub_g[j * sub]).collect();
        Ok(Self {
            omega: basic.params.omega,
            kappa,
            n_nodes: n + 1,
            sub,
            sub_z,
            sub_tau,
            sub_n,
            sub_g,
            interp,
            node_n,
            node_g,
            quad: quad.clone(),
            gammas,
            sub_l,
        })
    }

    pub fn node_tau(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|j| self.sub_tau[j * self.sub]).collect()
    }

    pub fn node_n(&self) -> &[f64] {
        &self.node_n
    }

    pub fn node_g(&self) -> &[f64] {
        &self.node_g
    }

    /// Steady intensity at the nodes for the ordinate with polar cosine `gamma`.
    pub fn node_intensity(&self, gamma: f64) -> Option<Vec<f64>> {
        let k = self.gammas.iter().position(|&g| g == gamma)?;
        Some((0..self.n_nodes).map(|j| self.sub_l[k][j * self.sub]).collect())
    }

    pub fn quadrature(&self) -> &AngularQuadrature {
        &self.quad
    }

    pub fn operators(&self, l1: f64, l2: f64) -> Result<ClosureOperators> {
        let np = self.n_nodes;
        let ns = self.sub_z.len();
        let groups = group_ordinates(&self.quad, &self.gammas, l1, l2);
        let four_pi = 4.0 * PI;
        let c_g: Vec<f64> = self
            .sub_n
            .iter()
            .map(|n| self.omega * self.kappa * n / four_pi)
            .collect();
        let zero = C::new(0.0, 0.0);
        let mut ag = DMatrix::<C>::zeros(np, np);
        let mut ct = DMatrix::<C>::zeros(np, np);
        let mut pg = DMatrix::<C>::zeros(np, np);
        let mut pt = DMatrix::<C>::zeros(np, np);
        let mut qg = DMatrix::<C>::zeros(np, np);
        let mut qt = DMatrix::<C>::zeros(np, np);
        let mut dg = DMatrix::<C>::zeros(np, np);
        let mut dt = DMatrix::<C>::zeros(np, np);
        let mut sum_wg = 0.0;
        let mut sum_d_t = vec![0.0; np];

        let mut rg = vec![zero; np];
        let mut rt = vec![zero; np];
        let mut interp_rows: Vec<Vec<f64>> = Vec::with_capacity(ns);
        for i in 0..ns {
            interp_rows.push(self.interp.row(i).iter().copied().collect());
        }

        for g in &groups {
            let l = &self.sub_l[g.gamma_index];
            let mu = g.gamma.abs();
            let d_t: Vec<f64> = (0..ns)
                .map(|i| self.omega * self.kappa * self.sub_g[i] / four_pi - self.kappa * l[i])
                .collect();
            let wg = g.w / g.gamma;
            sum_wg += wg;
            for j in 0..np {
                sum_d_t[j] += wg * d_t[j * self.sub];
            }
            rg.iter_mut().for_each(|v| *v = zero);
            rt.iter_mut().for_each(|v| *v = zero);
            let order: Vec<usize> = if g.gamma > 0.0 {
                (0..ns).collect()
            } else {
                (0..ns).rev().collect()
            };
            let mut store = |i: usize, rg: &[C], rt: &[C]| {
                if i % self.sub != 0 {
                    return;
                }
                let j = i / self.sub;
                let a = C::new(self.node_n[j] * self.kappa, g.phase);
                for c in 0..np {
                    ag[(j, c)] += g.w * rg[c];
                    ct[(j, c)] += g.w * rt[c];
                    pg[(j, c)] += g.w_alpha * rg[c];
                    pt[(j, c)] += g.w_alpha * rt[c];
                    qg[(j, c)] += g.w_beta * rg[c];
                    qt[(j, c)] += g.w_beta * rt[c];
                    dg[(j, c)] += wg * a * rg[c];
                    dt[(j, c)] += wg * a * rt[c];
                }
            };
            store(order[0], &rg, &rt);
            for s in 1..ns {
                let (i0, i1) = (order[s - 1], order[s]);
                let h = (self.sub_z[i1] - self.sub_z[i0]).abs();
                let dtau = (self.sub_tau[i1] - self.sub_tau[i0]).abs();
                let (e, c0, c1) = cell_coefficients_c(C::new(dtau, g.phase * h) / mu);
                let f0 = c0 * (h / mu);
                let f1 = c1 * (h / mu);
                let (p0, p1) = (&interp_rows[i0], &interp_rows[i1]);
                let (g0, g1) = (f0 * c_g[i0], f1 * c_g[i1]);
                let (t0, t1) = (f0 * d_t[i0], f1 * d_t[i1]);
                for c in 0..np {
                    rg[c] = e * rg[c] + g0 * p0[c] + g1 * p1[c];
                    rt[c] = e * rt[c] + t0 * p0[c] + t1 * p1[c];
                }
                store(i1, &rg, &rt);
            }
        }

        let mut lhs = -ag;
        for j in 0..np {
            lhs[(j, j)] += C::new(1.0, 0.0);
        }
        let lu = lhs.lu();
        let kg = lu
            .solve(&ct)
            .ok_or_else(|| Error::Convergence("radiation closure matrix is singular".into()))?;
        let kp = &pg * &kg + pt;
        let kq = &qg * &kg + qt;
        let mut kd = -(&dg * &kg + dt);
        for j in 0..np {
            let cgn = self.omega * self.kappa * self.node_n[j] / four_pi;
            for c in 0..np {
                kd[(j, c)] += sum_wg * cgn * kg[(j, c)];
            }
            kd[(j, j)] += C::new(sum_d_t[j], 0.0);
        }
        Ok(ClosureOperators { kg, kp, kq, kd })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_cell_coefficients_continuous() {
        for &arg in &[0.0, 0.7, 2.0] {
            let a = C::from_polar(0.999e-3, arg);
            let b = C::from_polar(1.001e-3, arg);
            let (_, a0, a1) = cell_coefficients_c(a);
            let (_, b0, b1) = cell_coefficients_c(b);
            assert!((a0 - b0).norm() < 1e-6 && (a1 - b1).norm() < 1e-6);
        }
    }

    #[test]
    fn real_and_complex_coefficients_agree() {
        for &a in &[1e-4, 0.3, 5.0] {
            let (e, c0, c1) = crate::radiative::cell_coefficients(a);
            let (ec, c0c, c1c) = cell_coefficients_c(C::new(a, 0.0));
            assert!((e - ec.re).abs() < 1e-15 && (c0 - c0c.re).abs() < 1e-14 && (c1 - c1c.re).abs() < 1e-14);
        }
    }
}
