use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fibred_hodge::runner::{exit_code, run, Command, RunConfig};
use fibred_hodge::scene::{parse_r_grid, Overrides};

#[derive(Parser)]
#[command(name = "fibred-hodge", version, about = "Harmonic forms and small eigenvalues on stretched surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Scene file (JSON).
    #[arg(long, global = true)]
    scene: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Stretch grid `a:b:step`.
    #[arg(long = "r-grid", global = true)]
    r_grid: Option<String>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Mesh size of the vertex pieces.
    #[arg(long, global = true)]
    h: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Graph cohomology predictor.
    Cohomology,
    /// Kernel and low spectrum of X(r).
    Spectrum,
    /// Cross-section spectra and Weyl fits.
    Weyl,
    /// Extended harmonic forms, matching sets and Lagrangian checks.
    Modes,
    /// Splicing closeness and injectivity over the r grid.
    Splice,
    /// Small-eigenvalue scan over the r grid.
    Scan,
    /// Gap between near-kernel and spliced forms.
    Gap,
    /// Acceptance suite (plus every command when --scene is given).
    All,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Cohomology => Command::Cohomology,
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Weyl => Command::Weyl,
            Cmd::Modes => Command::Modes,
            Cmd::Splice => Command::Splice,
            Cmd::Scan => Command::Scan,
            Cmd::Gap => Command::Gap,
            Cmd::All => Command::All,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r_grid = match cli.r_grid.as_deref().map(parse_r_grid).transpose() {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let cfg = RunConfig {
        scene: cli.scene,
        out: cli.out,
        overrides: Overrides { seed: cli.seed, tol: cli.tol, r_grid, epsilon: cli.epsilon, h: cli.h },
    };
    match run(cli.command.into(), &cfg) {
        Ok(o) => {
            for l in &o.lines {
                println!("{l}");
            }
            for a in &o.artifacts {
                println!("wrote {}", a.display());
            }
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
