//! Neutral curves and critical points.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::basic_state::{BasicState, Params};
use crate::error::{Error, Result};
use crate::stability::{Branch, StabilityOptions, StabilityProblem, Tracked, WavenumberProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct NeutralOptions {
    pub k_min: f64,
    pub k_max: f64,
    pub n_k: usize,
    /// Width at which golden-section refinement of the minimizer stops.
    pub k_tolerance: f64,
    /// Sweep from `k_max` down to `k_min`.
    pub descending: bool,
    pub stability: StabilityOptions,
}

impl Default for NeutralOptions {
    fn default() -> Self {
        Self {
            k_min: 0.5,
            k_max: 8.0,
            n_k: 40,
            k_tolerance: 1e-3,
            descending: false,
            stability: StabilityOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeutralPoint {
    pub k: f64,
    pub r: f64,
    pub im_sigma: f64,
    pub branch: Branch,
    pub mode: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeutralCurve {
    /// Sorted by `k`; stationary before oscillatory at equal `k`.
    pub points: Vec<NeutralPoint>,
    pub params: Params,
    pub k_range: (f64, f64),
    /// Wavenumbers where no marginal state could be found.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub k_c: f64,
    pub r_c: f64,
    pub lambda_c: f64,
    pub im_sigma: f64,
    pub mode: usize,
    pub branch: Branch,
    /// The minimizer sits at an end of the sweep.
    pub boundary_minimum: bool,
}

/// Marginal states found at one wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub k: f64,
    pub stationary: Option<NeutralPoint>,
    pub oscillatory: Option<NeutralPoint>,
}

impl Section {
    pub fn lowest(&self) -> Option<&NeutralPoint> {
        match (&self.stationary, &self.oscillatory) {
            (Some(s), Some(o)) => Some(if o.r < s.r { o } else { s }),
            (Some(s), None) => Some(s),
            (None, Some(o)) => Some(o),
            (None, None) => None,
        }
    }
}

fn point(wp: &WavenumberProblem, t: &Tracked, branch: Branch) -> NeutralPoint {
    NeutralPoint {
        k: wp.k,
        r: t.r,
        im_sigma: match branch {
            Branch::Stationary => 0.0,
            Branch::Oscillatory => t.sigma.im.abs(),
        },
        branch,
        mode: wp.mode(t),
    }
}

/// Stationary and oscillatory marginal states at `k`.
pub fn section(problem: &StabilityProblem, k: f64) -> Result<Section> {
    let wp = problem.at(k)?;
    let st = wp.stationary();
    let oscillatory = match &st {
        Ok(t) => match wp.oscillatory_probe(t, None)? {
            Some((r, pair)) => match wp.oscillatory(r, &pair) {
                Ok(o) => Some(point(&wp, &o, Branch::Oscillatory)),
                Err(Error::NotFound(_)) => None,
                Err(e) => return Err(e),
            },
            None => None,
        },
        Err(_) => None,
    };
    let stationary = match st {
        Ok(t) => Some(point(&wp, &t, Branch::Stationary)),
        Err(Error::NotFound(_)) if oscillatory.is_some() => None,
        Err(e) => return Err(e),
    };
    Ok(Section { k, stationary, oscillatory })
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn collect_points(sections: &[Section]) -> Vec<NeutralPoint> {
    let mut pts: Vec<NeutralPoint> = sections
        .iter()
        .flat_map(|s| s.stationary.iter().chain(s.oscillatory.iter()).cloned())
        .collect();
    pts.sort_by(|a, b| {
        a.k.partial_cmp(&b.k)
            .unwrap()
            .then((a.branch == Branch::Oscillatory).cmp(&(b.branch == Branch::Oscillatory)))
    });
    pts
}

/// Lowest neutral curve and its oscillatory companion over `[k_min, k_max]`.
pub fn trace_neutral_curve(basic: &BasicState, k_min: f64, k_max: f64, n_k: usize) -> Result<NeutralCurve> {
    let opts = NeutralOptions {
        k_min,
        k_max,
        n_k,
        ..NeutralOptions::default()
    };
    Ok(trace_with(basic, &opts)?.0)
}

/// Sweep plus golden-section refinement of the minimizer. Returns the curve
/// and the refined critical point.
pub fn trace_with(basic: &BasicState, opts: &NeutralOptions) -> Result<(NeutralCurve, CriticalPoint)> {
    if !(opts.k_min > 0.0 && opts.k_max > opts.k_min) {
        return Err(Error::Domain(format!(
            "sweep range [{}, {}] is not a positive interval",
            opts.k_min, opts.k_max
        )));
    }
    if opts.n_k < 16 {
        return Err(Error::Domain(format!("sweep needs at least 16 points, got {}", opts.n_k)));
    }
    let problem = StabilityProblem::new(basic, &opts.stability)?;
    let mut ks = linspace(opts.k_min, opts.k_max, opts.n_k);
    if opts.descending {
        ks.reverse();
    }
    let results: Vec<Result<Section>> = ks.par_iter().map(|&k| section(&problem, k)).collect();
    let mut sections = Vec::new();
    let mut warnings = Vec::new();
    let mut last_err = None;
    for (k, r) in ks.iter().zip(results) {
        match r {
            Ok(s) if s.lowest().is_some() => sections.push(s),
            Ok(_) => warnings.push(format!("k = {k}: no marginal state")),
            Err(e) => {
                warnings.push(format!("k = {k}: {e}"));
                last_err = Some(e);
            }
        }
    }
    if sections.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::NotFound("no marginal state anywhere in the sweep".into())));
    }
    sections.sort_by(|a, b| a.k.partial_cmp(&b.k).unwrap());

    let lowest = |s: &Section| s.lowest().map(|p| p.r).unwrap_or(f64::INFINITY);
    let j = (0..sections.len())
        .min_by(|&a, &b| lowest(&sections[a]).partial_cmp(&lowest(&sections[b])).unwrap())
        .expect("non-empty");
    let boundary = sections[j].k == opts.k_min || sections[j].k == opts.k_max;
    let mut best = sections[j].clone();
    if !boundary && j > 0 && j + 1 < sections.len() {
        let refined = golden(&problem, sections[j - 1].k, sections[j + 1].k, opts.k_tolerance, &mut warnings)?;
        for s in refined {
            if lowest(&s) < lowest(&best) {
                best = s.clone();
            }
            sections.push(s);
        }
        sections.sort_by(|a, b| a.k.partial_cmp(&b.k).unwrap());
    }
    let p = best.lowest().expect("has a point").clone();
    let crit = CriticalPoint {
        k_c: p.k,
        r_c: p.r,
        lambda_c: 2.0 * PI / p.k,
        im_sigma: p.im_sigma,
        mode: p.mode,
        branch: p.branch,
        boundary_minimum: boundary,
    };
    let curve = NeutralCurve {
        points: collect_points(&sections),
        params: basic.params,
        k_range: (opts.k_min, opts.k_max),
        warnings,
    };
    Ok((curve, crit))
}

/// Golden-section search for the lowest marginal `R` on `[a, b]`.
fn golden(problem: &StabilityProblem, a: f64, b: f64, tol: f64, warnings: &mut Vec<String>) -> Result<Vec<Section>> {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut out = Vec::new();
    let mut eval = |k: f64, out: &mut Vec<Section>| -> f64 {
        match section(problem, k) {
            Ok(s) => {
                let r = s.lowest().map(|p| p.r).unwrap_or(f64::INFINITY);
                out.push(s);
                r
            }
            Err(e) => {
                warnings.push(format!("k = {k}: {e}"));
                f64::INFINITY
            }
        }
    };
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = eval(c, &mut out);
    let mut fd = eval(d, &mut out);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c, &mut out);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d, &mut out);
        }
    }
    Ok(out)
}

/// Section with the lowest marginal `R` found by golden search on `[a, b]`.
pub fn local_minimum(problem: &StabilityProblem, a: f64, b: f64, tol: f64) -> Result<Section> {
    let mut warnings = Vec::new();
    let sections = golden(problem, a, b, tol, &mut warnings)?;
    let lowest = |s: &Section| s.lowest().map(|p| p.r).unwrap_or(f64::INFINITY);
    sections
        .into_iter()
        .min_by(|x, y| lowest(x).partial_cmp(&lowest(y)).unwrap())
        .filter(|s| s.lowest().is_some())
        .ok_or_else(|| Error::NotFound(format!("no marginal state on [{a}, {b}]: {}", warnings.join("; "))))
}

/// Global minimizer over all recorded points of a curve.
pub fn find_critical(curve: &NeutralCurve) -> Result<CriticalPoint> {
    let p = curve
        .points
        .iter()
        .min_by(|a, b| a.r.partial_cmp(&b.r).unwrap())
        .ok_or_else(|| Error::NotFound("neutral curve has no points".into()))?;
    let (lo, hi) = curve.k_range;
    Ok(CriticalPoint {
        k_c: p.k,
        r_c: p.r,
        lambda_c: 2.0 * PI / p.k,
        im_sigma: p.im_sigma,
        mode: p.mode,
        branch: p.branch,
        boundary_minimum: p.k == lo || p.k == hi,
    })
}

/// Critical point of a basic state with default sweep settings.
pub fn critical_point(basic: &BasicState) -> Result<CriticalPoint> {
    Ok(trace_with(basic, &NeutralOptions::default())?.1)
}
