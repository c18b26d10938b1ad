mod config;
mod output;
mod tables;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bioconv::basic_state::{solve_basic_state_with, BasicState, Params};
use bioconv::neutral::{trace_with, CriticalPoint, NeutralCurve};
use bioconv::radiative::solve_fie;
use bioconv::stability::{
    orientation_field, reconstruct_fields, solve_marginal_with, Branch, EigenSolution, StabilityProblem, Tracked,
};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use config::{ConfigError, ScenarioConfig};
use output::{num, write_csv};
use tables::Reference;

const OUT_ENV: &str = "BIOCONV_OUT_DIR";

#[derive(Parser)]
#[command(name = "bioconv", version, allow_negative_numbers = true, about = "Linear stability of phototactic bioconvection under diffuse light")]
struct Cli {
    /// Scenario file (`key = value` lines, optional [numerics], [sweep], [output] sections)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides the config file and $BIOCONV_OUT_DIR
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium profiles: basic_state.csv
    BasicState,
    /// Total intensity and flux across the slab: fie.csv
    Fie {
        /// Nyström nodes
        #[arg(long, default_value_t = 512)]
        points: usize,
    },
    /// Neutral curve and critical point: neutral_curve.csv, critical.csv
    Neutral,
    /// Leading growth rate against wavenumber at fixed R: growth.csv
    Growth {
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        k_min: Option<f64>,
        #[arg(long)]
        k_max: Option<f64>,
        #[arg(long)]
        n_k: Option<usize>,
    },
    /// Eigenfunctions, perturbation snapshots and swimming orientation
    Fields {
        #[arg(long)]
        k: f64,
        /// Use the leading mode at this R instead of the marginal state
        #[arg(long = "R")]
        r: Option<f64>,
        #[arg(long, value_enum, default_value_t = BranchArg::Stationary)]
        branch: BranchArg,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Snapshots per oscillation period
        #[arg(long, default_value_t = 6)]
        phases: usize,
        #[arg(long, default_value_t = 64)]
        nx: usize,
        #[arg(long, default_value_t = 51)]
        nz: usize,
    },
    /// Recompute a published table of critical points: table_<ID>.csv
    Table {
        #[arg(value_enum)]
        id: TableId,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Stationary,
    Oscillatory,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableId {
    #[value(name = "II")]
    Ii,
    #[value(name = "III")]
    Iii,
    #[value(name = "IV")]
    Iv,
}

enum Failure {
    Config(String),
    Solver(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<bioconv::Error> for Failure {
    fn from(e: bioconv::Error) -> Self {
        Failure::Solver(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver(format!("cannot write output: {e}"))
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver failure: {m}");
            ExitCode::from(2)
        }
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig, Failure> {
    match &cli.config {
        Some(p) => Ok(ScenarioConfig::load(p)?),
        None => Err(Failure::Config("--config is required for this command".into())),
    }
}

fn out_dir(cli: &Cli, cfg: Option<&ScenarioConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out_dir.clone()))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn basic(cfg: &ScenarioConfig) -> Result<BasicState, Failure> {
    Ok(solve_basic_state_with(&cfg.params, &cfg.basic)?)
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::BasicState => cmd_basic_state(cli),
        Command::Fie { points } => cmd_fie(cli, *points),
        Command::Neutral => cmd_neutral(cli),
        Command::Growth { r, k_min, k_max, n_k } => cmd_growth(cli, *r, *k_min, *k_max, *n_k),
        Command::Fields { k, r, branch, epsilon, phases, nx, nz } => {
            let branch = match branch {
                BranchArg::Stationary => Branch::Stationary,
                BranchArg::Oscillatory => Branch::Oscillatory,
            };
            cmd_fields(cli, *k, *r, branch, *epsilon, *phases, *nx, *nz)
        }
        Command::Table { id } => cmd_table(cli, *id),
    }
}

fn cmd_basic_state(cli: &Cli) -> Outcome {
    let cfg = load(cli)?;
    let bs = basic(&cfg)?;
    let rows: Vec<Vec<String>> = (0..bs.z.len())
        .map(|i| vec![num(bs.z[i]), num(bs.n_s[i]), num(bs.tau[i]), num(bs.g_s[i]), num(bs.q_s[i]), num(bs.m_s[i])])
        .collect();
    let dir = out_dir(cli, Some(&cfg));
    let path = write_csv(&dir, "basic_state.csv", &cfg.stamp(), &["z", "n_s", "tau", "G_s", "q_s", "M_s"], &rows)?;
    println!("peak concentration at z = {:.4}; wrote {}", bs.peak_height(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_fie(cli: &Cli, points: usize) -> Outcome {
    let cfg = load(cli)?;
    let p = &cfg.params;
    let prof = solve_fie(p.omega, p.kappa_h, p.b, points)?;
    let rows: Vec<Vec<String>> = prof
        .nodes()
        .iter()
        .zip(prof.nodal_values())
        .map(|(&t, &u)| vec![num(t), num(u), num(prof.flux_at(t))])
        .collect();
    let dir = out_dir(cli, Some(&cfg));
    let stamp = format!("{} fie_points={points}", cfg.stamp());
    let path = write_csv(&dir, "fie.csv", &stamp, &["tau", "Upsilon", "q"], &rows)?;
    println!("residual {:.2e}; wrote {}", prof.residual(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn curve_rows(curve: &NeutralCurve) -> Vec<Vec<String>> {
    curve
        .points
        .iter()
        .map(|p| vec![num(p.k), num(p.r), num(p.im_sigma), p.branch.as_str().to_string(), p.mode.to_string()])
        .collect()
}

fn critical_row(c: &CriticalPoint) -> Vec<String> {
    vec![
        num(c.k_c),
        num(c.r_c),
        num(c.lambda_c),
        num(c.im_sigma),
        c.mode.to_string(),
        c.branch.as_str().to_string(),
        c.boundary_minimum.to_string(),
    ]
}

const CRITICAL_HEADER: [&str; 7] = ["k_c", "R_c", "lambda_c", "im_sigma", "mode", "branch", "boundary_minimum"];

fn cmd_neutral(cli: &Cli) -> Outcome {
    let cfg = load(cli)?;
    let bs = basic(&cfg)?;
    let (curve, crit) = trace_with(&bs, &cfg.neutral)?;
    for w in &curve.warnings {
        eprintln!("warning: {w}");
    }
    let dir = out_dir(cli, Some(&cfg));
    let stamp = cfg.stamp();
    write_csv(&dir, "neutral_curve.csv", &stamp, &["k", "R", "im_sigma", "branch", "mode"], &curve_rows(&curve))?;
    let path = write_csv(&dir, "critical.csv", &stamp, &CRITICAL_HEADER, &[critical_row(&crit)])?;
    println!(
        "k_c = {:.4}, R_c = {:.3}, lambda_c = {:.4}, Im sigma = {:.4}, mode {}, {}; wrote {}",
        crit.k_c,
        crit.r_c,
        crit.lambda_c,
        crit.im_sigma,
        crit.mode,
        crit.branch.as_str(),
        path.display()
    );
    if crit.boundary_minimum {
        eprintln!("warning: minimum lies at the edge of the sweep; widen [sweep] k_min/k_max");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_growth(cli: &Cli, r: f64, k_min: Option<f64>, k_max: Option<f64>, n_k: Option<usize>) -> Outcome {
    let cfg = load(cli)?;
    if !(r > 0.0) {
        return Err(Failure::Config(format!("--R = {r} must be positive")));
    }
    let lo = k_min.unwrap_or(cfg.neutral.k_min);
    let hi = k_max.unwrap_or(cfg.neutral.k_max);
    let n = n_k.unwrap_or(cfg.neutral.n_k).max(2);
    if !(lo > 0.0 && hi > lo) {
        return Err(Failure::Config(format!("--k-min/--k-max: need 0 < k_min < k_max, got {lo} and {hi}")));
    }
    let bs = basic(&cfg)?;
    let problem = StabilityProblem::new(&bs, cfg.stability())?;
    let ks: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let sigmas: Vec<bioconv::Result<_>> = ks.par_iter().map(|&k| problem.at(k)?.growth_rate(r).map(|g| g.0)).collect();
    let mut rows = Vec::with_capacity(n);
    for (k, s) in ks.iter().zip(sigmas) {
        let s = s?;
        rows.push(vec![num(*k), num(s.re), num(s.im)]);
    }
    let dir = out_dir(cli, Some(&cfg));
    let stamp = format!("{} R={r}", cfg.stamp());
    let path = write_csv(&dir, "growth.csv", &stamp, &["k", "Re_sigma", "Im_sigma"], &rows)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn field_rows(x: &[f64], z: &[f64], a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(x.len() * z.len());
    for (iz, &zv) in z.iter().enumerate() {
        for (ix, &xv) in x.iter().enumerate() {
            rows.push(vec![num(xv), num(zv), num(a[iz][ix]), num(b[iz][ix])]);
        }
    }
    rows
}

#[allow(clippy::too_many_arguments)]
fn cmd_fields(cli: &Cli, k: f64, r: Option<f64>, branch: Branch, eps: f64, phases: usize, nx: usize, nz: usize) -> Outcome {
    let cfg = load(cli)?;
    if !(k > 0.0) {
        return Err(Failure::Config(format!("--k = {k} must be positive")));
    }
    if !(eps >= 0.0) || phases == 0 || nx < 2 || nz < 2 {
        return Err(Failure::Config("--epsilon must be non-negative; --phases, --nx, --nz at least 1, 2, 2".into()));
    }
    let bs = basic(&cfg)?;
    let sol: EigenSolution = match r {
        Some(r) => {
            let problem = StabilityProblem::new(&bs, cfg.stability())?;
            let wp = problem.at(k)?;
            let (sigma, pairs) = wp.growth_rate(r)?;
            let tracked = Tracked { r, pairs, sigma, level_r: Vec::new() };
            let b = if sigma.im.abs() > 1e-3 { Branch::Oscillatory } else { Branch::Stationary };
            wp.solution(&tracked, b)?
        }
        None => solve_marginal_with(&bs, k, branch, None, cfg.stability())?,
    };
    let dir = out_dir(cli, Some(&cfg));
    let stamp = format!(
        "{} k={k} R={} sigma={}{:+}i epsilon={eps} branch={}",
        cfg.stamp(),
        sol.r,
        sol.sigma.re,
        sol.sigma.im,
        sol.branch.as_str()
    );
    let eig: Vec<Vec<String>> = (0..sol.z.len())
        .map(|i| vec![num(sol.z[i]), num(sol.w[i].re), num(sol.w[i].im), num(sol.theta[i].re), num(sol.theta[i].im)])
        .collect();
    write_csv(&dir, "eigenfunction.csv", &stamp, &["z", "ReW", "ImW", "ReTheta", "ImTheta"], &eig)?;
    for j in 0..phases {
        let phase = 2.0 * PI * j as f64 / phases as f64;
        let f = reconstruct_fields(&sol, eps, nx, nz, phase);
        let name = format!("fields_phase{j}.csv");
        let st = format!("{stamp} phase={phase}");
        write_csv(&dir, &name, &st, &["x", "z", "w1", "n1"], &field_rows(&f.x, &f.z, &f.first, &f.second))?;
    }
    let o = orientation_field(&bs, &sol, eps, nx, nz);
    write_csv(&dir, "orientation.csv", &stamp, &["x", "z", "px", "pz"], &field_rows(&o.x, &o.z, &o.first, &o.second))?;
    println!(
        "R = {:.3}, sigma = {:.5}{:+.5}i, mode {}; wrote {} snapshots to {}",
        sol.r,
        sol.sigma.re,
        sol.sigma.im,
        bioconv::stability::classify_mode(&sol),
        phases,
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn deviation(got: f64, want: f64) -> String {
    num(got / want - 1.0)
}

fn table_row(cfg: &ScenarioConfig, r: &Reference, dir: &Path, name: &str, idx: usize) -> (Vec<String>, bool) {
    let mut cells = vec![
        num(r.vc),
        num(r.kappa_h),
        num(r.omega),
        num(r.b),
        num(r.lambda_c),
        num(r.r_c),
        num(r.im_sigma),
        r.mode.map(|m| m.to_string()).unwrap_or_default(),
    ];
    let mut params = Params::new(r.vc, r.kappa_h, r.omega, r.b);
    params.taxis = cfg.params.taxis;
    params.sc = cfg.params.sc;
    let result = solve_basic_state_with(&params, &cfg.basic).and_then(|bs| trace_with(&bs, &cfg.neutral));
    let ok = match &result {
        Ok((_, c)) => {
            cells.extend(critical_row(c).into_iter().skip(1));
            cells.push(deviation(c.lambda_c, r.lambda_c));
            cells.push(deviation(c.r_c, r.r_c));
            cells.push(String::new());
            true
        }
        Err(e) => {
            cells.extend(std::iter::repeat(String::new()).take(8));
            cells.push(e.to_string());
            false
        }
    };
    let row_dir = dir.join(format!("{name}_rows"));
    let stamp = format!("{} Vc={} kappa_H={} B={}", cfg.stamp(), r.vc, r.kappa_h, r.b);
    if let Err(e) = write_csv(&row_dir, &format!("row{idx:02}.csv"), &stamp, &TABLE_HEADER, std::slice::from_ref(&cells)) {
        eprintln!("warning: row {idx}: {e}");
    }
    (cells, ok)
}

const TABLE_HEADER: [&str; 17] = [
    "Vc",
    "kappa_H",
    "omega",
    "B",
    "lambda_ref",
    "R_ref",
    "im_sigma_ref",
    "mode_ref",
    "R_c",
    "lambda_c",
    "im_sigma",
    "mode",
    "branch",
    "boundary_minimum",
    "dev_lambda",
    "dev_R",
    "error",
];

fn cmd_table(cli: &Cli, id: TableId) -> Outcome {
    let cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    let (name, refs): (&str, &[Reference]) = match id {
        TableId::Ii => ("table_II", &tables::II),
        TableId::Iii => ("table_III", &tables::III),
        TableId::Iv => ("table_IV", &tables::IV),
    };
    let dir = out_dir(cli, Some(&cfg));
    let results: Vec<(Vec<String>, bool)> = refs
        .par_iter()
        .enumerate()
        .map(|(i, r)| table_row(&cfg, r, &dir, name, i))
        .collect();
    let all_ok = results.iter().all(|r| r.1);
    let rows: Vec<Vec<String>> = results.into_iter().map(|r| r.0).collect();
    let path = write_csv(&dir, &format!("{name}.csv"), &cfg.stamp(), &TABLE_HEADER, &rows)?;
    println!("wrote {}", path.display());
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
