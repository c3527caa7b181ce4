//! Command-line front end. Every subcommand writes its results into
//! `<out>/<subcommand>-<hash>/`, where the hash identifies the configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bifurcation::{branch_trace_with_gaps, export_mu_plane, find_lambda_i, i_star, singular_crossings};
use crate::config::{parse_config, RunConfig};
use crate::equilibria::{lambda_of_lower, lambda_star, pohozaev_threshold, solve_equilibria, ProblemParams};
use crate::error::{Error, Result};
use crate::output::{write_csv, write_json};
use crate::profile::RadialSolution;
use crate::shooting::{
    convergence_report, emden_scale_law_residual, emden_singular, emden_zero_count, regular_minus_singular_zeros, shoot_emden, shoot_regular_with, ShootOptions,
};
use crate::singular::{extend_to_radial, find_critical_set, find_critical_set_in, picard_solve, singular_profile};
use crate::spectrum::morse_ladder;

#[derive(Debug, Parser)]
#[command(name = "kslab", version, about = "Radial solutions of -u'' - (N-1)/r u' + u = lambda e^u")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Equilibria of lambda e^u = u and the dimension thresholds.
    Equilibria,
    /// Singular solution: profile and critical radii.
    Singular,
    /// Regular solution u(0) = gamma and its intersections with the singular one.
    Shoot,
    /// Distance between regular and singular solutions along a gamma ladder.
    Converge,
    /// Intersections of the Emden solution with its singular counterpart.
    Emden,
    /// Negative directions of the second variation along a cutoff ladder.
    Morse,
    /// Parameter where the i-th critical radius of the singular solution equals R.
    LambdaI,
    /// Branch of regular solutions with i-th critical radius R.
    Branch,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Equilibria => "equilibria",
            Command::Singular => "singular",
            Command::Shoot => "shoot",
            Command::Converge => "converge",
            Command::Emden => "emden",
            Command::Morse => "morse",
            Command::LambdaI => "lambda-i",
            Command::Branch => "branch",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML file with a run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dimension: Option<u32>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true)]
    pub index: Option<usize>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_min: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_max: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_step: Option<f64>,
    /// Sets the `picard` and `equilibria` tolerances.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Merge the config file (if any) with the flags.
pub fn build_config(o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::new(o.dimension.unwrap_or(3)),
    };
    if let Some(n) = o.dimension {
        cfg.dimension = n;
    }
    if o.lambda.is_some() {
        cfg.lambda = o.lambda;
    }
    if let Some(r) = o.radius {
        cfg.radius = r;
    }
    if o.index.is_some() {
        cfg.index = o.index;
    }
    let g = &mut cfg.grid;
    for (dst, src) in [(&mut g.gamma, o.gamma), (&mut g.gamma_min, o.gamma_min), (&mut g.gamma_max, o.gamma_max), (&mut g.gamma_step, o.gamma_step)] {
        if src.is_some() {
            *dst = src;
        }
    }
    if let Some(t) = o.tol {
        cfg.tolerances.insert("picard".into(), t);
        cfg.tolerances.insert("equilibria".into(), t);
    }
    if let Some(out) = &o.out {
        cfg.output_dir = out.clone();
    }
    cfg.validated()
}

/// Ascending `γ` grid from the overrides.
fn gamma_grid(cfg: &RunConfig, min: f64, max: f64, step: f64) -> Vec<f64> {
    let a = cfg.grid.gamma_min.unwrap_or(min);
    let b = cfg.grid.gamma_max.unwrap_or(max);
    let h = cfg.grid.gamma_step.unwrap_or(step);
    let k = ((b - a) / h + 1e-9).floor() as usize;
    (0..=k).map(|j| a + h * j as f64).collect()
}

/// Run one subcommand; returns the directory that was written.
pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.run_dir(command.name());
    fs::create_dir_all(&dir)?;
    let result = run_into(command, cfg, &dir);
    if let Err(e) = result {
        let _ = fs::remove_dir_all(&dir);
        return Err(e);
    }
    log::info!("wrote {}", dir.display());
    Ok(dir)
}

fn run_into(command: Command, cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    match command {
        Command::Equilibria => run_equilibria(cfg, dir)?,
        Command::Singular => run_singular(cfg, dir)?,
        Command::Shoot => run_shoot(cfg, dir)?,
        Command::Converge => run_converge(cfg, dir)?,
        Command::Emden => run_emden(cfg, dir)?,
        Command::Morse => run_morse(cfg, dir)?,
        Command::LambdaI => run_lambda_i(cfg, dir)?,
        Command::Branch => run_branch(cfg, dir)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct EquilibriaRecord {
    lambda: f64,
    u_lower: f64,
    u_upper: f64,
    residual_lower: f64,
    residual_upper: f64,
}

fn run_equilibria(cfg: &RunConfig, dir: &Path) -> Result<()> {
    if let Some(lambda) = cfg.lambda {
        let p = solve_equilibria(lambda, cfg.tolerance("equilibria"))?;
        let rec = EquilibriaRecord {
            lambda,
            u_lower: p.u_lower,
            u_upper: p.u_upper,
            residual_lower: lambda * p.u_lower.exp() - p.u_lower,
            residual_upper: lambda * p.u_upper.exp() - p.u_upper,
        };
        write_json(&dir.join("equilibria.json"), &rec)?;
    }
    let dims: Vec<f64> = (3..=12).map(f64::from).collect();
    let mut star = Vec::new();
    let mut threshold = Vec::new();
    let mut mapped = Vec::new();
    for n in 3..=12u32 {
        star.push(lambda_star(n)?);
        match pohozaev_threshold(n) {
            Ok(t) => {
                threshold.push(t);
                mapped.push(lambda_of_lower(t));
            }
            Err(Error::NotApplicable(_)) => {
                threshold.push(f64::NAN);
                mapped.push(f64::NAN);
            }
            Err(e) => return Err(e),
        }
    }
    write_csv(&dir.join("thresholds.csv"), &["N", "lambda_star", "u_lower_threshold", "lambda_threshold"], &[&dims, &star, &threshold, &mapped])
}

#[derive(Serialize)]
struct ProfileHeader {
    #[serde(rename = "N")]
    dimension: u32,
    lambda: f64,
    r_min: f64,
    r_max: f64,
    zeta0: f64,
    iterations: usize,
    contraction_ratio: f64,
}

fn run_singular(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let problem = ProblemParams::new(cfg.dimension, cfg.require_lambda()?)?;
    let eta = picard_solve(problem, cfg.tolerance("picard"))?;
    let prof = extend_to_radial(eta, cfg.grid.r_max.unwrap_or(20.0))?;
    let (r, u, up) = prof.samples();
    write_csv(&dir.join("profile.csv"), &["r", "u", "u_prime"], &[r, u, up])?;
    let header = ProfileHeader {
        dimension: problem.dimension,
        lambda: problem.lambda,
        r_min: prof.r_min(),
        r_max: prof.r_max(),
        zeta0: prof.source.zeta0(),
        iterations: prof.source.iterations,
        contraction_ratio: prof.source.contraction_ratio,
    };
    write_json(&dir.join("profile.json"), &header)?;
    match solve_equilibria(problem.lambda, cfg.tolerance("equilibria")) {
        Ok(p) => write_json(&dir.join("critical.json"), &find_critical_set(&prof, p.u_upper)?),
        Err(Error::NoEquilibrium { .. }) => Ok(()),
        Err(e) => Err(e),
    }
}

fn shoot_options(cfg: &RunConfig) -> ShootOptions {
    ShootOptions { rtol: cfg.tolerance("ode_rtol"), atol: cfg.tolerance("ode_atol"), ..ShootOptions::default() }
}

#[derive(Serialize)]
struct ShootRecord {
    gamma: f64,
    rescaled: bool,
    critical_radii: Vec<f64>,
    zeros_against_singular: crate::shooting::ZeroCount,
}

fn run_shoot(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let problem = ProblemParams::new(cfg.dimension, cfg.require_lambda()?)?;
    let gamma = cfg.grid.gamma.unwrap_or(10.0);
    let r_max = cfg.grid.r_max.unwrap_or(5.0);
    let reg = shoot_regular_with(problem, gamma, r_max, shoot_options(cfg))?;
    let (r, u, up) = reg.samples();
    write_csv(&dir.join("regular.csv"), &["r", "u", "u_prime"], &[r, u, up])?;
    let level = solve_equilibria(problem.lambda, cfg.tolerance("equilibria"))?.u_upper;
    let crit = find_critical_set_in(&reg, level, reg.r_start, r_max)?;
    let sing = singular_profile(problem, r_max)?;
    let zeros = regular_minus_singular_zeros(&sing, &reg, (0.0, cfg.radius.min(r_max)))?;
    write_json(&dir.join("shoot.json"), &ShootRecord { gamma, rescaled: reg.uses_rescaling(), critical_radii: crit.critical_radii, zeros_against_singular: zeros })
}

fn run_converge(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let problem = ProblemParams::new(cfg.dimension, cfg.require_lambda()?)?;
    let (a, b) = cfg.grid.interval.unwrap_or((0.5, 2.0));
    let gammas = gamma_grid(cfg, 8.0, 20.0, 4.0);
    let sing = singular_profile(problem, b)?;
    let rep = convergence_report(&sing, &gammas, (a, b))?;
    let v: Vec<f64> = rep.iter().map(|e| e.sup_value).collect();
    let d: Vec<f64> = rep.iter().map(|e| e.sup_derivative).collect();
    write_csv(&dir.join("converge.csv"), &["gamma", "sup_value", "sup_derivative"], &[&gammas, &v, &d])
}

#[derive(Serialize)]
struct EmdenRecord {
    #[serde(rename = "N")]
    dimension: u32,
    lambda_inf: f64,
    rho_max: f64,
    zeros: crate::shooting::ZeroCount,
    scale_law_residual: f64,
}

fn run_emden(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let n = cfg.dimension;
    let lambda = cfg.lambda.unwrap_or(1.0);
    let rho_max = cfg.grid.rho_max.unwrap_or(1e3);
    let e = shoot_emden(n, lambda, rho_max)?;
    let zeros = emden_zero_count(&e)?;
    let star: Vec<f64> = e.rho_nodes.iter().map(|&r| if r > 0.0 { emden_singular(n, lambda, r) } else { f64::INFINITY }).collect();
    write_csv(&dir.join("emden.csv"), &["rho", "u_bar", "u_bar_prime", "u_star"], &[&e.rho_nodes, &e.u_bar, &e.u_bar_prime, &star])?;
    let scale = emden_scale_law_residual(n, lambda, 2.0, rho_max)?;
    write_json(&dir.join("emden.json"), &EmdenRecord { dimension: n, lambda_inf: lambda, rho_max, zeros, scale_law_residual: scale })
}

/// `λ` from the config, or `λ^i` for the configured (or smallest admissible) index.
fn lambda_or_target(cfg: &RunConfig) -> Result<f64> {
    match cfg.lambda {
        Some(l) => Ok(l),
        None => {
            let i = match cfg.index {
                Some(i) => i,
                None => i_star(cfg.dimension, cfg.radius)?,
            };
            Ok(find_lambda_i(cfg.dimension, cfg.radius, i)?.lambda_i)
        }
    }
}

fn run_morse(cfg: &RunConfig, dir: &Path) -> Result<()> {
    if cfg.dimension == 10 {
        return Err(Error::UnsupportedBorderline);
    }
    let lambda = lambda_or_target(cfg)?;
    let prof = singular_profile(ProblemParams::new(cfg.dimension, lambda)?, 2.0 * cfg.radius)?;
    let eps = cfg.grid.epsilons.clone().unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3]);
    let rep = morse_ladder(&prof, cfg.radius, &eps)?;
    write_json(&dir.join("morse.json"), &rep)
}

#[derive(Serialize)]
struct TargetRecord {
    #[serde(flatten)]
    target: crate::bifurcation::LambdaTarget,
    i_star: usize,
    crossings_below_radius: usize,
}

fn run_lambda_i(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let star = i_star(cfg.dimension, cfg.radius)?;
    let t = find_lambda_i(cfg.dimension, cfg.radius, cfg.index.unwrap_or(star))?;
    let crossings = singular_crossings(cfg.dimension, t.lambda_i, cfg.radius)?;
    write_json(&dir.join("target.json"), &TargetRecord { target: t, i_star: star, crossings_below_radius: crossings })
}

#[derive(Serialize)]
struct BranchSummary {
    #[serde(rename = "N")]
    dimension: u32,
    #[serde(rename = "R")]
    radius: f64,
    i: usize,
    lambda_i: f64,
    gaps: Vec<f64>,
    oscillation: crate::bifurcation::OscillationReport,
}

fn run_branch(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let n = cfg.dimension;
    let i = match cfg.index {
        Some(i) => i,
        None => i_star(n, cfg.radius)?,
    };
    let target = find_lambda_i(n, cfg.radius, i)?;
    let gammas = gamma_grid(cfg, 10.0, 40.0, 0.5);
    let trace = branch_trace_with_gaps(n, cfg.radius, i, &gammas, target.lambda_i)?;
    let s = &trace.samples;
    let col = |f: fn(&crate::bifurcation::BranchSample) -> f64| s.iter().map(f).collect::<Vec<f64>>();
    write_csv(
        &dir.join("branch.csv"),
        &["gamma", "lambda", "index_i", "residual"],
        &[&col(|x| x.gamma), &col(|x| x.lambda), &col(|x| x.index_i as f64), &col(|x| x.residual)],
    )?;
    let mu = export_mu_plane(s)?;
    let m: Vec<f64> = mu.iter().map(|p| p.mu).collect();
    let u0: Vec<f64> = mu.iter().map(|p| p.u0).collect();
    write_csv(&dir.join("mu_plane.csv"), &["gamma", "mu", "u0"], &[&col(|x| x.gamma), &m, &u0])?;
    write_json(
        &dir.join("oscillation.json"),
        &BranchSummary { dimension: n, radius: cfg.radius, i, lambda_i: target.lambda_i, gaps: trace.gaps, oscillation: trace.report },
    )
}

/// Exit code for an error: 2 for usage and configuration problems, 1 otherwise.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_usage() {
        2
    } else {
        1
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = build_config(&cli.opts).and_then(|cfg| dispatch(cli.command, &cfg));
    match outcome {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
