//! `bingsym` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bingsym::QuadratureConfig;

#[derive(Parser, Debug)]
#[command(name = "bingsym", version, about = "Bingham-based planar-symmetric rotation toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Half-width N of the normalizing-constant series.
    #[arg(long = "quad-N", global = true)]
    pub quad_n: Option<usize>,
    #[arg(long = "quad-r", global = true)]
    pub quad_r: Option<f64>,
    #[arg(long = "quad-omega", global = true)]
    pub quad_omega: Option<f64>,
    #[arg(long = "quad-nmin", global = true)]
    pub quad_nmin: Option<usize>,
    /// Ratio d/c of the contour offset.
    #[arg(long = "quad-dfrac", global = true)]
    pub quad_dfrac: Option<f64>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl GlobalOpts {
    pub fn quadrature(&self) -> QuadratureConfig {
        let d = QuadratureConfig::default();
        QuadratureConfig {
            r: self.quad_r.unwrap_or(d.r),
            omega_d: self.quad_omega.unwrap_or(d.omega_d),
            n: self.quad_n.unwrap_or(d.n),
            n_min: self.quad_nmin.unwrap_or(d.n_min),
            d_frac: self.quad_dfrac.unwrap_or(d.d_frac),
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw unit vectors from a Bingham distribution as CSV.
    Sample {
        /// Distribution JSON: {"A": [a11, a12, a13, a22, a23, a33]}.
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Normalizing constant C(λ) and optionally its gradient.
    Normconst {
        /// Comma-separated eigenvalues l1,l2,l3.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_lambda)]
        lambda: Lambda,
        #[arg(long)]
        grad: bool,
    },
    /// Angular percentiles along both minor axes.
    Percentile {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_lambda)]
        lambda: Lambda,
        #[arg(long)]
        p: f64,
        /// Also estimate the percentiles from samples.
        #[arg(long)]
        empirical: bool,
        #[arg(long, default_value_t = 1_000_000, requires = "empirical")]
        n: usize,
        /// Repeated empirical estimates; mean and standard deviation are reported.
        #[arg(long, default_value_t = 1, requires = "empirical")]
        reps: usize,
    },
    /// Maximum-likelihood fit to a CSV of unit vectors (columns x,y,z).
    Fit {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Loss of one prediction against a ground-truth rotation.
    Loss {
        /// Prediction JSON: {"a": [6], "x": [3]} for ours, {"ex": [3], "ez": [3]}
        /// for rotmat, {"q": [w, x, y, z]} for quat.
        #[arg(long)]
        rep: PathBuf,
        /// Rotation JSON: {"matrix": [9 row-major]}.
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Ours)]
        kind: KindArg,
        #[arg(long)]
        grad: bool,
        /// Also evaluate against the flipped ground truth.
        #[arg(long)]
        flip_check: bool,
    },
    /// Train the tiny field model and report field consistency.
    DemoField {
        /// Scene JSON; defaults to the preset.
        #[arg(long, conflicts_with = "preset")]
        scene: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Preset::Box)]
        preset: Preset,
        #[arg(long, value_enum, default_value_t = DemoKind::Ours)]
        kind: DemoKind,
        #[arg(long, default_value_t = 2000)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-2)]
        learning_rate: f64,
        /// Keep every box label at its primary pose.
        #[arg(long)]
        fixed_signs: bool,
        /// Per-cell field CSV; with --kind all, one file per kind with the kind as suffix.
        #[arg(long)]
        field: Option<PathBuf>,
    },
}

/// Three eigenvalues given as `l1,l2,l3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lambda(pub [f64; 3]);

fn parse_lambda(s: &str) -> Result<Lambda, String> {
    let values = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<Vec<f64>, String>>()?;
    let arr = <[f64; 3]>::try_from(values.as_slice())
        .map_err(|_| format!("expected 3 comma-separated values, got {}", values.len()))?;
    Ok(Lambda(arr))
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindArg {
    Ours,
    Rotmat,
    Quat,
}

impl From<KindArg> for bingsym::RepKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Ours => bingsym::RepKind::Ours,
            KindArg::Rotmat => bingsym::RepKind::Rotmat,
            KindArg::Quat => bingsym::RepKind::Quat,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemoKind {
    Ours,
    Rotmat,
    Quat,
    /// All three kinds in parallel, each with a derived seed.
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Box,
    BoxCylinder,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit 2.
    Usage(String),
    /// Numerical or I/O failure during execution: exit 1.
    Runtime(String),
}

impl From<bingsym::Error> for CliError {
    fn from(e: bingsym::Error) -> Self {
        use bingsym::Error as E;
        match e {
            E::SamplingFailure(_) | E::Internal(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
