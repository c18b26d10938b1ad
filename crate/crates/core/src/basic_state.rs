//! Taxis response and the equilibrium concentration profile.
//!
//! The steady cell distribution satisfies `dn/dz = Vc·M(Υ(τ))·n` with optical
//! depth `dτ/dz = −κ·n`, `τ(0) = κ`. Integrating upward and shooting on the
//! bottom concentration until `τ(1) = 0` enforces `∫₀¹ n dz = 1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numkernel::{build_angular_quadrature, AngularQuadrature};
use crate::radiative::{solve_fie, steady_intensity, RadiationField, TotalIntensityProfile};

/// `M(G) = a1·sin(3π/2·ℵ) − a2·sin(π/2·ℵ)` with `ℵ = (G/G_ref)·exp(χ(G_ref − G))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaxisFunction {
    pub a1: f64,
    pub a2: f64,
    pub chi: f64,
    pub g_ref: f64,
    pub g_c: f64,
}

impl Default for TaxisFunction {
    fn default() -> Self {
        Self::variant_a()
    }
}

impl TaxisFunction {
    pub fn variant_a() -> Self {
        Self {
            a1: 0.8,
            a2: 0.1,
            chi: 0.32,
            g_ref: 2.5,
            g_c: 1.0,
        }
    }

    pub fn variant_b() -> Self {
        Self {
            chi: 0.04,
            g_c: 1.55,
            ..Self::variant_a()
        }
    }

    /// ℵ and its first two derivatives in G.
    pub fn aleph(&self, g: f64) -> (f64, f64, f64) {
        let e = (self.chi * (self.g_ref - g)).exp() / self.g_ref;
        let a = g * e;
        let da = e * (1.0 - self.chi * g);
        let d2a = e * self.chi * (self.chi * g - 2.0);
        (a, da, d2a)
    }

    pub fn value(&self, g: f64) -> f64 {
        let (a, _, _) = self.aleph(g);
        self.a1 * (1.5 * PI * a).sin() - self.a2 * (0.5 * PI * a).sin()
    }

    pub fn derivative(&self, g: f64) -> f64 {
        let (a, da, _) = self.aleph(g);
        (self.a1 * 1.5 * PI * (1.5 * PI * a).cos() - self.a2 * 0.5 * PI * (0.5 * PI * a).cos()) * da
    }

    pub fn second_derivative(&self, g: f64) -> f64 {
        let (a, da, d2a) = self.aleph(g);
        let (k1, k2) = (1.5 * PI, 0.5 * PI);
        let m1 = self.a1 * k1 * (k1 * a).cos() - self.a2 * k2 * (k2 * a).cos();
        let m2 = -self.a1 * k1 * k1 * (k1 * a).sin() + self.a2 * k2 * k2 * (k2 * a).sin();
        m2 * da * da + m1 * d2a
    }
}

pub fn taxis_value(taxis: &TaxisFunction, g: f64) -> f64 {
    taxis.value(g)
}

pub fn taxis_derivative(taxis: &TaxisFunction, g: f64) -> f64 {
    taxis.derivative(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub sc: f64,
    pub vc: f64,
    pub kappa_h: f64,
    pub omega: f64,
    pub b: f64,
    pub taxis: TaxisFunction,
}

impl Params {
    pub fn new(vc: f64, kappa_h: f64, omega: f64, b: f64) -> Self {
        Self {
            sc: 20.0,
            vc,
            kappa_h,
            omega,
            b,
            taxis: TaxisFunction::variant_a(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| Err(Error::Domain(format!("{name} = {v} out of range")));
        if !(self.sc > 0.0) {
            return bad("Sc", self.sc);
        }
        if !(self.vc > 0.0) {
            return bad("Vc", self.vc);
        }
        if !(self.kappa_h > 0.0) {
            return bad("kappa_H", self.kappa_h);
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return bad("omega", self.omega);
        }
        if !(self.b > 0.0 && self.b <= 1.0) {
            return bad("B", self.b);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasicOptions {
    pub grid_size: usize,
    pub fie_points: usize,
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for BasicOptions {
    fn default() -> Self {
        Self {
            grid_size: 1001,
            fie_points: 512,
            n_polar: 12,
            n_azimuth: 24,
            rtol: 1e-11,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasicState {
    pub params: Params,
    pub z: Vec<f64>,
    pub n_s: Vec<f64>,
    pub tau: Vec<f64>,
    pub g_s: Vec<f64>,
    pub q_s: Vec<f64>,
    pub m_s: Vec<f64>,
    pub dm_dg: Vec<f64>,
    pub radiation: RadiationField,
    pub light: TotalIntensityProfile,
    pub n_bottom: f64,
    pub options: BasicOptions,
}

/// Dormand–Prince 5(4) tableau (autonomous system, so the nodes are unused).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Shooter<'a> {
    vc: f64,
    kappa: f64,
    taxis: TaxisFunction,
    light: &'a TotalIntensityProfile,
    rtol: f64,
    atol: f64,
}

impl Shooter<'_> {
    /// State is `(ln n, τ)`.
    fn rhs(&self, y: [f64; 2]) -> [f64; 2] {
        let g = self.light.value(y[1]);
        [self.vc * self.taxis.value(g), -self.kappa * y[0].exp()]
    }

    /// Integrates from z = 0 and records the state at each requested height.
    /// Stops early, returning `None` for the remaining heights, once τ drops
    /// far below zero.
    fn integrate(&self, n0: f64, targets: &[f64]) -> Result<Vec<Option<[f64; 2]>>> {
        let mut out = vec![None; targets.len()];
        let mut y = [n0.ln(), self.kappa];
        let mut z: f64 = 0.0;
        let mut h: f64 = 1e-3;
        let mut k = [[0.0; 2]; 7];
        for (slot, &zt) in out.iter_mut().zip(targets) {
            let mut steps = 0usize;
            while z < zt {
                steps += 1;
                if steps > 1_000_000 {
                    return Err(Error::Convergence("adaptive integrator stalled".into()));
                }
                let step = h.min(zt - z);
                k[0] = self.rhs(y);
                for s in 1..7 {
                    let mut ys = y;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        for d in 0..2 {
                            ys[d] += step * A[s][j] * kj[d];
                        }
                    }
                    k[s] = self.rhs(ys);
                }
                let mut y5 = y;
                let mut err = 0.0f64;
                for d in 0..2 {
                    let mut s5 = 0.0;
                    let mut s4 = 0.0;
                    for s in 0..7 {
                        s5 += B5[s] * k[s][d];
                        s4 += B4[s] * k[s][d];
                    }
                    y5[d] += step * s5;
                    let sc = self.atol + self.rtol * y[d].abs().max(y5[d].abs());
                    err = err.max((step * (s5 - s4)).abs() / sc);
                }
                if err <= 1.0 {
                    z += step;
                    if zt - z < 1e-15 {
                        z = zt;
                    }
                    y = y5;
                    if y[1] < -10.0 * self.kappa || !y[1].is_finite() {
                        return Ok(out);
                    }
                }
                let fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
                h = step * fac.clamp(0.2, 5.0);
            }
            *slot = Some([y[0].exp(), y[1]]);
        }
        Ok(out)
    }

    fn top_depth(&self, n0: f64) -> Result<f64> {
        let r = self.integrate(n0, &[1.0])?;
        Ok(match r[0] {
            Some(y) => y[1],
            None => -10.0 * self.kappa,
        })
    }
}

pub fn solve_basic_state(params: &Params, grid_size: usize) -> Result<BasicState> {
    solve_basic_state_with(
        params,
        &BasicOptions {
            grid_size,
            ..BasicOptions::default()
        },
    )
}

pub fn solve_basic_state_with(params: &Params, opts: &BasicOptions) -> Result<BasicState> {
    params.validate()?;
    if opts.grid_size < 3 {
        return Err(Error::Domain("basic-state grid needs at least 3 points".into()));
    }
    let light = solve_fie(params.omega, params.kappa_h, params.b, opts.fie_points)?;
    let shooter = Shooter {
        vc: params.vc,
        kappa: params.kappa_h,
        taxis: params.taxis,
        light: &light,
        rtol: opts.rtol,
        atol: opts.atol,
    };
    let n_bottom = shoot(&shooter)?;

    let z: Vec<f64> = (0..opts.grid_size)
        .map(|i| i as f64 / (opts.grid_size - 1) as f64)
        .collect();
    let states = shooter.integrate(n_bottom, &z)?;
    let mut n_s = Vec::with_capacity(z.len());
    let mut tau: Vec<f64> = Vec::with_capacity(z.len());
    for s in &states {
        let y = s.ok_or_else(|| Error::Convergence("profile integration diverged".into()))?;
        n_s.push(y[0]);
        tau.push(y[1]);
    }
    let last = tau.len() - 1;
    let g_s: Vec<f64> = tau.iter().map(|&t| light.value(t)).collect();
    let m_s = g_s.iter().map(|&g| params.taxis.value(g)).collect();
    let dm_dg = g_s.iter().map(|&g| params.taxis.derivative(g)).collect();
    let quad: AngularQuadrature = build_angular_quadrature(opts.n_polar, opts.n_azimuth)?;
    let tau_at = |zq: f64| {
        let i = z.partition_point(|&v| v < zq).min(last);
        tau[i]
    };
    let radiation = steady_intensity(&light, &z, tau_at, &quad)?;
    let q_s = radiation.flux.clone();
    if let Some(v) = q_s.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::ModelViolation(format!("basic-state flux {v:.3e} not positive")));
    }
    Ok(BasicState {
        params: *params,
        z,
        n_s,
        tau,
        g_s,
        q_s,
        m_s,
        dm_dg,
        radiation,
        light,
        n_bottom,
        options: *opts,
    })
}

fn shoot(s: &Shooter) -> Result<f64> {
    let (mut lo, mut hi) = (1e-3, 50.0);
    let mut f_lo = s.top_depth(lo)?;
    let mut f_hi = s.top_depth(hi)?;
    // strongly accumulating profiles need a bottom value far below the
    // nominal bracket
    while f_lo < 0.0 && lo > 1e-250 {
        hi = lo;
        f_hi = f_lo;
        lo *= 1e-3;
        f_lo = s.top_depth(lo)?;
    }
    while f_hi > 0.0 && hi < 1e250 {
        lo = hi;
        f_lo = f_hi;
        hi *= 1e3;
        f_hi = s.top_depth(hi)?;
    }
    if f_lo.abs() <= 1e-12 {
        return Ok(lo);
    }
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Convergence(format!(
            "bottom concentration not bracketed: tau(1) = {f_lo:.3e} at n0 = {lo}, {f_hi:.3e} at n0 = {hi}"
        )));
    }
    // geometric bisection until the bracket is narrow, then secant steps
    // that fall back to bisection when they leave it
    while hi / lo > 1.5 {
        let mid = (lo * hi).sqrt();
        let f = s.top_depth(mid)?;
        if f > 0.0 {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
            f_hi = f;
        }
    }
    for _ in 0..200 {
        let mut x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(x > lo && x < hi) || (x - lo).min(hi - x) < 1e-3 * (hi - lo) {
            x = 0.5 * (lo + hi);
        }
        let f = s.top_depth(x)?;
        if f.abs() <= 1e-10 * s.kappa.min(1.0) || hi - lo < 1e-15 * hi {
            return Ok(x);
        }
        if f > 0.0 {
            lo = x;
            f_lo = f;
        } else {
            hi = x;
            f_hi = f;
        }
    }
    Err(Error::Convergence(format!(
        "shooting did not converge; bracket [{lo}, {hi}]"
    )))
}

impl BasicState {
    /// Concentration and optical depth at arbitrary heights.
    pub fn sample(&self, zs: &[f64]) -> Result<Vec<(f64, f64)>> {
        let mut order: Vec<usize> = (0..zs.len()).collect();
        order.sort_by(|&a, &b| zs[a].partial_cmp(&zs[b]).unwrap());
        let sorted: Vec<f64> = order.iter().map(|&i| zs[i].clamp(0.0, 1.0)).collect();
        let shooter = Shooter {
            vc: self.params.vc,
            kappa: self.params.kappa_h,
            taxis: self.params.taxis,
            light: &self.light,
            rtol: self.options.rtol,
            atol: self.options.atol,
        };
        let states = shooter.integrate(self.n_bottom, &sorted)?;
        let mut out = vec![(0.0, 0.0); zs.len()];
        for (k, &i) in order.iter().enumerate() {
            let y = states[k].ok_or_else(|| Error::Convergence("profile integration diverged".into()))?;
            out[i] = (y[0], y[1].clamp(0.0, self.params.kappa_h));
        }
        Ok(out)
    }

    /// `∫₀¹ n_s dz` from the optical-depth drop across the layer.
    pub fn normalization(&self) -> f64 {
        (self.tau[0] - self.tau[self.tau.len() - 1]) / self.params.kappa_h
    }

    /// Height of the concentration maximum, refined by a parabola through the
    /// largest grid sample and its neighbours.
    pub fn peak_height(&self) -> f64 {
        let (i, _) = self
            .n_s
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if i == 0 || i + 1 == self.n_s.len() {
            return self.z[i];
        }
        let (a, b, c) = (self.n_s[i - 1], self.n_s[i], self.n_s[i + 1]);
        let h = self.z[i + 1] - self.z[i];
        let den = a - 2.0 * b + c;
        if den == 0.0 {
            return self.z[i];
        }
        self.z[i] + 0.5 * h * (a - c) / den
    }
}
