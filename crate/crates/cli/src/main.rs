//! `sclab`: run one experiment and write its JSON report plus CSV tables.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a numerical
//! procedure fails (a diagnostic JSON is still written).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sclab::cr_fredholm::TargetSpec;
use sclab::experiments::{
    cokernel_check, cr_solve, germ_solve, glue_experiment, index_experiment, pi_continuity, profile_table,
    retract_demo, sccheck, CokernelArgs, CrArgs, GermArgs, GlueArgs, IndexArgs, MapChoice, PiContinuityArgs,
    ProfileArgs, RetractArgs, ScCheckArgs,
};
use sclab::germ_solver::GermKind;
use sclab::gluing::ProfileKind;
use sclab::runtime::{load_config, persist_report, ExperimentConfig, Report, REPORT_VERSION};
use sclab::Error;

#[derive(Debug, Parser)]
#[command(name = "sclab", version, about = "Scale-calculus numerical laboratory")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Gluing profile for parameters built from the configuration.
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
    #[arg(long = "r-min", global = true)]
    r_min: Option<f64>,
    /// Cylinder truncation length.
    #[arg(long = "s-max", global = true)]
    s_max: Option<f64>,
    /// Samples along each half-cylinder.
    #[arg(long = "grid-n-s", global = true)]
    grid_n_s: Option<usize>,
    /// Samples around the circle.
    #[arg(long = "grid-n-t", global = true)]
    grid_n_t: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    #[value(alias = "exponential")]
    Exp,
    #[value(alias = "logarithmic")]
    Log,
}

impl From<ProfileArg> for ProfileKind {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Exp => ProfileKind::Exponential,
            ProfileArg::Log => ProfileKind::Logarithmic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MapArg {
    Shift,
    Square,
    CustomRef,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GermArg {
    Linear,
    Sine,
    Smoothing,
    CustomRef,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OperatorArg {
    ProjectionRemoval,
    AsymptoticDerivative,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Neck lengths R = φ(r) for a list of moduli.
    ProfileTable {
        #[arg(long, value_enum)]
        kind: ProfileArg,
        /// Comma-separated moduli.
        #[arg(long = "r", value_delimiter = ',', required = true, num_args = 1..)]
        r: Vec<f64>,
    },
    /// Total gluing of a random smooth pair and the round trip back.
    Glue {
        #[arg(long = "r")]
        r: f64,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Smooth-probe discrepancy against oscillatory operator gap of π_a.
    PiContinuity {
        #[arg(long, default_value_t = 0.35)]
        r0: f64,
        #[arg(long, default_value_t = 0.1)]
        theta0: f64,
        #[arg(long, default_value_t = 1e-3)]
        dr: f64,
        #[arg(long, default_value_t = 0.25)]
        dtheta: f64,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value_t = 5)]
        probes: usize,
    },
    /// Tangent ranks of the porkbarrel retract and the constraint retraction.
    RetractDemo {
        /// Sample points on each side of s = 0.
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// sc¹ and classical remainder ratios of a map on the rough-probe suite.
    Sccheck {
        #[arg(long, value_enum)]
        map: MapArg,
        /// Level of the base point.
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Contraction solve of a basic germ.
    GermSolve {
        #[arg(long, value_enum)]
        germ: GermArg,
        #[arg(long = "a", default_value_t = 0.3)]
        a: f64,
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long = "max-iter", default_value_t = 10_000)]
        max_iter: usize,
    },
    /// Newton solve of the Cauchy–Riemann equation from a perturbed holomorphic field.
    CrSolve {
        #[arg(long = "r", default_value_t = 0.49)]
        r: f64,
        #[arg(long = "n-s", default_value_t = 41)]
        n_s: usize,
        #[arg(long = "n-t", default_value_t = 8)]
        n_t: usize,
        #[arg(long, default_value_t = 0.2)]
        amplitude: f64,
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
        /// Twist of the target structure; 0 gives the standard one.
        #[arg(long, default_value_t = 0.3)]
        kappa: f64,
    },
    /// Kernel, cokernel and index of a linear sc-Fredholm model.
    Index {
        #[arg(long, value_enum)]
        operator: OperatorArg,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 65)]
        points: usize,
        #[arg(long, default_value_t = 4.0)]
        length: f64,
    },
    /// Cokernel dimension of ∂̄ on the sphere with M marked points.
    CokernelCheck {
        /// Comma-separated marked-point counts.
        #[arg(long = "m", value_delimiter = ',', required = true, num_args = 1..)]
        m: Vec<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ProfileTable { .. } => "profile-table",
            Command::Glue { .. } => "glue",
            Command::PiContinuity { .. } => "pi-continuity",
            Command::RetractDemo { .. } => "retract-demo",
            Command::Sccheck { .. } => "sccheck",
            Command::GermSolve { .. } => "germ-solve",
            Command::CrSolve { .. } => "cr-solve",
            Command::Index { .. } => "index",
            Command::CokernelCheck { .. } => "cokernel-check",
        }
    }
}

fn configure(global: &GlobalArgs) -> Result<(ExperimentConfig, Option<usize>), Error> {
    let mut cfg = match &global.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    let mut threads = cfg.apply_env_overrides()?;
    if let Some(out) = &global.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(p) = global.profile {
        cfg.profile = p.into();
    }
    if let Some(r) = global.r_min {
        cfg.r_min = r;
    }
    if let Some(s) = global.s_max {
        cfg.grid.s_max = s;
    }
    if let Some(n) = global.grid_n_s {
        cfg.grid.n_s = n;
    }
    if let Some(n) = global.grid_n_t {
        cfg.grid.n_t = n;
    }
    if global.threads.is_some() {
        threads = global.threads;
    }
    cfg.validate()?;
    Ok((cfg, threads))
}

fn emit<T: Serialize>(report: sclab::Result<Report<T>>, path: &Path) -> sclab::Result<Vec<PathBuf>> {
    persist_report(&report?, path)
}

fn execute(command: &Command, cfg: &ExperimentConfig) -> sclab::Result<Vec<PathBuf>> {
    let path = cfg.output.join(format!("{}.json", command.name()));
    match command {
        Command::ProfileTable { kind, r } => emit(
            profile_table(
                cfg,
                &ProfileArgs {
                    kind: (*kind).into(),
                    radii: r.clone(),
                },
            ),
            &path,
        ),
        Command::Glue { r, theta, dim } => emit(
            glue_experiment(
                cfg,
                &GlueArgs {
                    r: *r,
                    theta: *theta,
                    dim: *dim,
                },
            ),
            &path,
        ),
        Command::PiContinuity {
            r0,
            theta0,
            dr,
            dtheta,
            steps,
            probes,
        } => emit(
            pi_continuity(
                cfg,
                &PiContinuityArgs {
                    r0: *r0,
                    theta0: *theta0,
                    dr: *dr,
                    dtheta: *dtheta,
                    steps: *steps,
                    probes: *probes,
                },
            ),
            &path,
        ),
        Command::RetractDemo { samples } => emit(retract_demo(cfg, &RetractArgs { samples: *samples }), &path),
        Command::Sccheck { map, level } => {
            let map = match map {
                MapArg::Shift => MapChoice::Shift,
                MapArg::Square => MapChoice::Square,
                MapArg::CustomRef => MapChoice::CustomRef,
            };
            emit(sccheck(cfg, &ScCheckArgs { map, level: *level }), &path)
        }
        Command::GermSolve { germ, a, level, max_iter } => {
            let germ = match germ {
                GermArg::Linear => GermKind::Linear,
                GermArg::Sine => GermKind::Sine,
                GermArg::Smoothing => GermKind::Smoothing,
                GermArg::CustomRef => GermKind::TanhReference,
            };
            let args = GermArgs {
                germ,
                a: *a,
                level: *level,
                max_iter: *max_iter,
            };
            emit(germ_solve(cfg, &args), &path)
        }
        Command::CrSolve {
            r,
            n_s,
            n_t,
            amplitude,
            epsilon,
            kappa,
        } => {
            let target = if *kappa == 0.0 {
                TargetSpec::Standard { complex_dim: 1 }
            } else {
                TargetSpec::Twisted { kappa: *kappa }
            };
            let args = CrArgs {
                r: *r,
                n_s: *n_s,
                n_t: *n_t,
                amplitude: *amplitude,
                epsilon: *epsilon,
                target,
            };
            emit(cr_solve(cfg, &args), &path)
        }
        Command::Index {
            operator,
            n,
            k,
            dim,
            points,
            length,
        } => {
            let args = match operator {
                OperatorArg::ProjectionRemoval => IndexArgs::ProjectionRemoval { n: *n, k: *k },
                OperatorArg::AsymptoticDerivative => IndexArgs::AsymptoticDerivative {
                    dim: *dim,
                    points: *points,
                    length: *length,
                },
            };
            emit(index_experiment(cfg, &args), &path)
        }
        Command::CokernelCheck { m } => emit(cokernel_check(cfg, &CokernelArgs { marked: m.clone() }), &path),
    }
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    version: &'a str,
    experiment: &'a str,
    config: &'a ExperimentConfig,
    error_kind: &'a str,
    error: String,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NoContraction { .. } => "NoContraction",
        Error::MaxIterExceeded(_) => "MaxIterExceeded",
        Error::NewtonDiverged(_) => "NewtonDiverged",
        Error::IllConditioned(_) => "IllConditioned",
        Error::RankUnstable(_) => "RankUnstable",
        Error::NoIntersection(_) => "NoIntersection",
        Error::SchemaError { .. } => "SchemaError",
        Error::Io(_) => "Io",
        _ => "InvalidInput",
    }
}

fn write_diagnostic(command: &str, cfg: &ExperimentConfig, kind: &str, message: String) {
    let d = Diagnostic {
        version: REPORT_VERSION,
        experiment: command,
        config: cfg,
        error_kind: kind,
        error: message,
    };
    let path = cfg.output.join(format!("{command}.error.json"));
    let written = std::fs::create_dir_all(&cfg.output)
        .map_err(|e| e.to_string())
        .and_then(|_| serde_json::to_string_pretty(&d).map_err(|e| e.to_string()))
        .and_then(|text| std::fs::write(&path, text).map_err(|e| e.to_string()));
    match written {
        Ok(()) => eprintln!("diagnostics written to {}", path.display()),
        Err(e) => eprintln!("could not write diagnostics: {e}"),
    }
}

fn run(argv: Vec<String>) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (cfg, threads) = match configure(&cli.global) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}\n");
            let _ = Cli::command().print_help();
            return 1;
        }
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool already configured: {e}");
        }
    }
    let name = cli.command.name();
    match catch_unwind(AssertUnwindSafe(|| execute(&cli.command, &cfg))) {
        Ok(Ok(paths)) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                write_diagnostic(name, &cfg, error_kind(&e), e.to_string());
                2
            } else {
                1
            }
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown internal failure".into());
            eprintln!("error: internal failure: {message}");
            write_diagnostic(name, &cfg, "Internal", message);
            2
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    std::panic::set_hook(Box::new(|_| {}));
    ExitCode::from(run(std::env::args().collect()))
}
