//! Scenario files: flat `key = value` lines grouped under `[section]` headers.

use std::fmt;
use std::path::{Path, PathBuf};

use bioconv::basic_state::{BasicOptions, Params, TaxisFunction};
use bioconv::neutral::NeutralOptions;
use bioconv::stability::StabilityOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaxisVariant {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: Params,
    pub variant: TaxisVariant,
    pub basic: BasicOptions,
    pub neutral: NeutralOptions,
    pub out_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            params: Params::new(20.0, 0.5, 0.7, 0.5),
            variant: TaxisVariant::A,
            basic: BasicOptions::default(),
            neutral: NeutralOptions::default(),
            out_dir: None,
        }
    }
}

fn number(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError(format!("{key}: expected a number, got `{v}`")))
}

fn count(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse::<usize>()
        .map_err(|_| ConfigError(format!("{key}: expected a non-negative integer, got `{v}`")))
}

fn flag(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError(format!("{key}: expected true or false, got `{v}`"))),
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut required = [("Vc", false), ("kappa_H", false), ("omega", false), ("B", false)];
        let mut amplitudes: (Option<f64>, Option<f64>) = (None, None);
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !matches!(section.as_str(), "numerics" | "sweep" | "output") {
                    return Err(ConfigError(format!("line {}: unknown section [{section}]", lineno + 1)));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", lineno + 1)))?;
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            cfg.set(&full, value, &mut amplitudes)?;
            for r in required.iter_mut() {
                if r.0 == full {
                    r.1 = true;
                }
            }
        }
        if let Some((k, _)) = required.iter().find(|r| !r.1) {
            return Err(ConfigError(format!("{k}: required key missing")));
        }
        cfg.params.taxis = match cfg.variant {
            TaxisVariant::A => TaxisFunction::variant_a(),
            TaxisVariant::B => TaxisFunction::variant_b(),
        };
        if let Some(a1) = amplitudes.0 {
            cfg.params.taxis.a1 = a1;
        }
        if let Some(a2) = amplitudes.1 {
            cfg.params.taxis.a2 = a2;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, amps: &mut (Option<f64>, Option<f64>)) -> Result<(), ConfigError> {
        let p = &mut self.params;
        let st = &mut self.neutral.stability;
        match key {
            "Vc" => p.vc = number(key, v)?,
            "kappa_H" => p.kappa_h = number(key, v)?,
            "omega" => p.omega = number(key, v)?,
            "B" => p.b = number(key, v)?,
            "Sc" => p.sc = number(key, v)?,
            "taxis" => {
                self.variant = match v {
                    "A" | "a" => TaxisVariant::A,
                    "B" | "b" => TaxisVariant::B,
                    _ => return Err(ConfigError(format!("taxis: expected A or B, got `{v}`"))),
                }
            }
            "numerics.grid_size" => self.basic.grid_size = count(key, v)?,
            "numerics.fie_points" => self.basic.fie_points = count(key, v)?,
            "numerics.n_polar" => {
                self.basic.n_polar = count(key, v)?;
                st.n_polar = self.basic.n_polar;
            }
            "numerics.n_azimuth" => {
                self.basic.n_azimuth = count(key, v)?;
                st.n_azimuth = self.basic.n_azimuth;
            }
            "numerics.rtol" => self.basic.rtol = number(key, v)?,
            "numerics.atol" => self.basic.atol = number(key, v)?,
            "numerics.collocation" => {
                st.grids = v.split(',').map(|s| count(key, s.trim())).collect::<Result<_, _>>()?;
            }
            "numerics.sub_cells" => st.sub_cells = count(key, v)?,
            "numerics.r_tolerance" => st.r_tolerance = number(key, v)?,
            "numerics.r_max" => st.r_max = number(key, v)?,
            "numerics.taxis_a1" => amps.0 = Some(number(key, v)?),
            "numerics.taxis_a2" => amps.1 = Some(number(key, v)?),
            "sweep.k_min" => self.neutral.k_min = number(key, v)?,
            "sweep.k_max" => self.neutral.k_max = number(key, v)?,
            "sweep.n_k" => self.neutral.n_k = count(key, v)?,
            "sweep.k_tolerance" => self.neutral.k_tolerance = number(key, v)?,
            "sweep.descending" => self.neutral.descending = flag(key, v)?,
            "output.dir" => self.out_dir = Some(PathBuf::from(v)),
            _ => return Err(ConfigError(format!("{key}: unknown key"))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        let fail = |k: &str, v: f64, want: &str| Err(ConfigError(format!("{k} = {v} is invalid: {want}")));
        if !(p.vc > 0.0) {
            return fail("Vc", p.vc, "must be positive");
        }
        if !(p.kappa_h > 0.0) {
            return fail("kappa_H", p.kappa_h, "must be positive");
        }
        if !(0.0..=1.0).contains(&p.omega) {
            return fail("omega", p.omega, "must lie in [0, 1]");
        }
        if !(p.b > 0.0 && p.b <= 1.0) {
            return fail("B", p.b, "must lie in (0, 1]");
        }
        if !(p.sc > 0.0) {
            return fail("Sc", p.sc, "must be positive");
        }
        let st = &self.neutral.stability;
        if st.grids.is_empty() || st.grids.iter().any(|&n| n < 8) {
            return Err(ConfigError("numerics.collocation: each order must be at least 8".into()));
        }
        if self.basic.grid_size < 3 {
            return fail("numerics.grid_size", self.basic.grid_size as f64, "must be at least 3");
        }
        if !(self.neutral.k_min > 0.0 && self.neutral.k_max > self.neutral.k_min) {
            return Err(ConfigError(format!(
                "sweep.k_min/sweep.k_max: need 0 < k_min < k_max, got {} and {}",
                self.neutral.k_min, self.neutral.k_max
            )));
        }
        if self.neutral.n_k < 16 {
            return fail("sweep.n_k", self.neutral.n_k as f64, "must be at least 16");
        }
        Ok(())
    }

    pub fn stability(&self) -> &StabilityOptions {
        &self.neutral.stability
    }

    /// Every resolved setting on one line, for CSV stamps.
    pub fn stamp(&self) -> String {
        let p = &self.params;
        let st = &self.neutral.stability;
        let grids: Vec<String> = st.grids.iter().map(|g| g.to_string()).collect();
        format!(
            "Vc={} kappa_H={} omega={} B={} Sc={} taxis={} taxis_a1={} taxis_a2={} grid_size={} fie_points={} \
             n_polar={} n_azimuth={} rtol={:e} atol={:e} collocation={} sub_cells={} r_tolerance={:e} r_max={:e} \
             k_min={} k_max={} n_k={} k_tolerance={:e} descending={}",
            p.vc,
            p.kappa_h,
            p.omega,
            p.b,
            p.sc,
            match self.variant {
                TaxisVariant::A => "A",
                TaxisVariant::B => "B",
            },
            p.taxis.a1,
            p.taxis.a2,
            self.basic.grid_size,
            self.basic.fie_points,
            self.basic.n_polar,
            self.basic.n_azimuth,
            self.basic.rtol,
            self.basic.atol,
            grids.join(","),
            st.sub_cells,
            st.r_tolerance,
            st.r_max,
            self.neutral.k_min,
            self.neutral.k_max,
            self.neutral.n_k,
            self.neutral.k_tolerance,
            self.neutral.descending,
        )
    }
}
