use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qkz_verify::config::Selection;
use qkz_verify::{emit_report, load_config, Format, Overrides, VerifyError};

#[derive(Parser)]
#[command(name = "qkz-verify", version, about = "Run the qkz verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Barnes integral against its closed form
    Barnes(Flags),
    /// exact determinant identity for the coefficient matrix M
    Detm(Flags),
    /// randomized pointwise identities
    Identities(Flags),
    /// spectrum of A₀ on weight subspaces
    Spectrum(Flags),
    /// determinant of the hypergeometric pairing
    DetIntegral(Flags),
    /// qKZ difference equations for Ψ_W
    Shift(Flags),
    /// differential equation in μ
    MuOde(Flags),
    /// vanishing of total-difference integrals
    Vanishing(Flags),
    /// kernel and image of the hypergeometric map at μ = 0
    Kernel(Flags),
    /// exterior-algebra identities and the q → i limit
    Grassmann(Flags),
    /// every suite
    All(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    mu_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_im: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// relative quadrature tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["json", "text"])]
    format: Option<String>,
}

fn run(cli: Cli) -> Result<bool, VerifyError> {
    let (name, f) = match cli.command {
        Command::Barnes(f) => ("barnes", f),
        Command::Detm(f) => ("detm", f),
        Command::Identities(f) => ("identities", f),
        Command::Spectrum(f) => ("spectrum", f),
        Command::DetIntegral(f) => ("det-integral", f),
        Command::Shift(f) => ("shift", f),
        Command::MuOde(f) => ("mu-ode", f),
        Command::Vanishing(f) => ("vanishing", f),
        Command::Kernel(f) => ("kernel", f),
        Command::Grassmann(f) => ("grassmann", f),
        Command::All(f) => ("all", f),
    };
    let overrides = Overrides {
        suite: Some(name.parse::<Selection>()?),
        n: f.n,
        ell: f.ell,
        mu_re: f.mu_re,
        mu_im: f.mu_im,
        seed: f.seed,
        tol: f.tol,
        out: f.out,
        format: f.format.as_deref().map(str::parse::<Format>).transpose()?,
    };
    let cfg = load_config(f.config.as_deref(), overrides)?;
    let report = qkz_verify::run_suite(&cfg)?;
    match &cfg.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| VerifyError::Io { path: path.clone(), source: e })?;
            emit_report(&report, cfg.format, &mut BufWriter::new(file))?;
        }
        None => emit_report(&report, cfg.format, &mut io::stdout().lock())?,
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qkz-verify: {e}");
            ExitCode::from(2)
        }
    }
}
