use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use kbo_core::diagnostics::c_p_alpha;
use kbo_core::harness::{
    emit_convergence_csv, emit_csv, emit_density_csv, parse_config, preset, render_results, run_experiment,
    ConfigFields, PresetOverrides, PRESETS,
};
use kbo_core::validation::{convergence_study_seeds, density_snapshots, DensityGrid, ValidationConfig};
use kbo_core::{DiffusionMode, StallMode};

/// Kinetic consensus-based optimization with alpha-stable jumps.
#[derive(Parser)]
#[command(name = "kbo", version)]
struct Cli {
    /// Worker threads for parallel runs (defaults to all cores).
    #[arg(long, env = "KBO_WORKERS", global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file and/or flags.
    Run(RunArgs),
    /// Particle simulation of the 1D Cauchy test case against its exact solution.
    Validate(ValidateArgs),
    /// Run a built-in experiment (test1, test2, test3, test4, validate).
    Preset(PresetArgs),
    /// Print the theory constants B, C and omega_d.
    Constants(ConstantsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Average iterations over successful runs only.
    #[arg(long)]
    iters_success_only: bool,
    #[command(flatten)]
    fields: FieldArgs,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    n_particles: Option<usize>,
    /// isotropic or anisotropic
    #[arg(long)]
    diffusion_mode: Option<String>,
    #[arg(long)]
    delta_stall: Option<f64>,
    #[arg(long)]
    j_stall: Option<usize>,
    /// consecutive or cumulative
    #[arg(long)]
    stall_mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    init_lo: Option<f64>,
    #[arg(long)]
    init_hi: Option<f64>,
    #[arg(long)]
    noise_clip: Option<f64>,
    #[arg(long)]
    m_runs: Option<usize>,
    /// gamma, sigma, dim or objective
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Comma-separated objective names for an objective sweep.
    #[arg(long, value_delimiter = ',')]
    objectives: Option<Vec<String>>,
}

impl FieldArgs {
    fn into_fields(self, iters_success_only: bool, out: Option<PathBuf>) -> Result<ConfigFields> {
        let diffusion_mode = match self.diffusion_mode.as_deref() {
            None => None,
            Some("isotropic") => Some(DiffusionMode::Isotropic),
            Some("anisotropic") => Some(DiffusionMode::Anisotropic),
            Some(other) => bail!("--diffusion-mode: expected isotropic or anisotropic, got `{other}`"),
        };
        let stall_mode = match self.stall_mode.as_deref() {
            None => None,
            Some("consecutive") => Some(StallMode::Consecutive),
            Some("cumulative") => Some(StallMode::Cumulative),
            Some(other) => bail!("--stall-mode: expected consecutive or cumulative, got `{other}`"),
        };
        Ok(ConfigFields {
            name: self.name,
            objective: self.objective,
            dim: self.dim,
            nu: self.nu,
            sigma: self.sigma,
            gamma: self.gamma,
            alpha: self.alpha,
            beta: self.beta,
            dt: self.dt,
            n_t: self.n_t,
            n_particles: self.n_particles,
            diffusion_mode,
            delta_stall: self.delta_stall,
            j_stall: self.j_stall,
            stall_mode,
            seed: self.seed,
            init_lo: self.init_lo,
            init_hi: self.init_hi,
            noise_clip: self.noise_clip,
            m_runs: self.m_runs,
            sweep: self.sweep,
            values: self.values,
            objectives: self.objectives,
            iters_success_only: iters_success_only.then_some(true),
            output: out,
        })
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 1_000_000)]
    n_particles: usize,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Particle counts of the convergence study.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    convergence_n: Vec<usize>,
    /// Seeds averaged in the convergence study.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    convergence_seeds: Vec<u64>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PresetArgs {
    name: String,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m_runs: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    n_particles: Option<usize>,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 1.2)]
    p: f64,
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

fn run(args: RunArgs) -> Result<()> {
    let out = args.out.clone();
    let overrides = args.fields.into_fields(args.iters_success_only, out)?;
    let spec = parse_config(args.config.as_deref(), &overrides)?;
    let results = run_experiment(&spec)?;
    match &spec.output {
        Some(path) => {
            emit_csv(&results, path)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", render_results(&results)),
    }
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<()> {
    let cfg = ValidationConfig {
        n_particles: args.n_particles,
        dt: args.dt,
        seed: args.seed,
        ..ValidationConfig::default()
    };
    let snaps = density_snapshots(&cfg, &[0.1, 1.0, 2.0], &DensityGrid::default())?;
    for s in &snaps {
        let path = args.out_dir.join(format!("density_t{}.csv", s.t));
        emit_density_csv(&s.numeric, s.t, &path)?;
        eprintln!(
            "t = {}: L-inf error {:.5}, mass in window {:.4}, overflowed {}  -> {}",
            s.t,
            s.error,
            s.numeric.mass(),
            s.escaped,
            path.display()
        );
    }
    let study = convergence_study_seeds(&cfg, &args.convergence_n, &args.convergence_seeds)?;
    let path = args.out_dir.join("convergence.csv");
    emit_convergence_csv(&study, &path)?;
    eprintln!("log-log slope of error vs N: {:.4}  -> {}", study.slope, path.display());
    Ok(())
}

fn run_preset(args: &PresetArgs) -> Result<()> {
    if args.name == "validate" {
        return validate(&ValidateArgs {
            n_particles: args.n_particles.unwrap_or(1_000_000),
            dt: 0.01,
            seed: args.seed.unwrap_or(0),
            convergence_n: vec![1_000, 10_000, 100_000],
            convergence_seeds: vec![1, 2, 3, 4, 5],
            out_dir: args.out_dir.clone(),
        });
    }
    if !PRESETS.contains(&args.name.as_str()) {
        bail!("unknown preset `{}` (available: {})", args.name, PRESETS.join(", "));
    }
    let over = PresetOverrides {
        seed: args.seed,
        m_runs: args.m_runs,
        n_t: args.n_t,
        n_particles: args.n_particles,
    };
    for spec in preset(&args.name, &over)? {
        let results = run_experiment(&spec)?;
        let path = args.out_dir.join(format!("{}.csv", spec.name));
        emit_csv(&results, &path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn constants(args: &ConstantsArgs) -> Result<()> {
    let tc = c_p_alpha(args.nu, args.gamma, args.d, args.p, args.alpha)?;
    println!("d = {}, p = {}, alpha = {}, nu = {}, gamma = {}", args.d, args.p, args.alpha, args.nu, args.gamma);
    println!("B_p_alpha = {}", tc.b_p_alpha);
    println!("C_p_alpha = {}", tc.c_p_alpha);
    println!("omega_d = {}", tc.omega_d);
    println!("nu*p > gamma^alpha*B: {}", tc.condition_ok);
    Ok(())
}

fn configure_workers(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        if n == 0 {
            bail!("worker count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    configure_workers(cli.workers)?;
    match cli.command {
        Command::Run(a) => run(a),
        Command::Validate(a) => validate(&a),
        Command::Preset(a) => run_preset(&a),
        Command::Constants(a) => constants(&a),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
