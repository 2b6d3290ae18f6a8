use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pxlap::{run, AppName, CliError, Command, Config, Setup};

/// Nonlocal p(x)-Laplacian systems: norms, Dirichlet solves,
/// sub-supersolution certification and Picard iteration.
#[derive(Parser, Debug)]
#[command(name = "pxlap", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file (flat `key = value`, see docs/config.md).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir` (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the randomized order-interval samples; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum App {
    Sublinear,
    ConcaveConvex,
    Logistic,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Luxemburg norm and modular of `norm.u` in L^{norm.p}.
    Norm(Common),
    /// Solve −Δ_p u = f with zero boundary values.
    SolveDirichlet(Common),
    /// Certify the pair and run Picard on the system.
    SolveSystem(Common),
    /// Check the sub/supersolution inequalities of the pair.
    VerifySubsuper(Common),
    /// Picard solutions along `sweep.lambdas`.
    Sweep(Common),
    /// Build, certify and solve one of the application systems.
    App {
        #[arg(value_enum)]
        name: Option<App>,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (command, common) = match cli.command {
        Cmd::Norm(c) => (Command::Norm, c),
        Cmd::SolveDirichlet(c) => (Command::SolveDirichlet, c),
        Cmd::SolveSystem(c) => (Command::SolveSystem, c),
        Cmd::VerifySubsuper(c) => (Command::VerifySubsuper, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::App { name, common } => {
            let name = name.map(|a| match a {
                App::Sublinear => AppName::Sublinear,
                App::ConcaveConvex => AppName::ConcaveConvex,
                App::Logistic => AppName::Logistic,
            });
            (Command::App(name), common)
        }
    };
    match drive(command, &common) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}: {e}", common.config.display());
            ExitCode::from(1)
        }
    }
}

fn drive(command: Command, common: &Common) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&common.config)?;
    let mut cfg = Config::parse(&text)?;
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string());
    }
    let out = match &common.out {
        Some(dir) => dir.clone(),
        None => PathBuf::from(cfg.str("output.dir")?.unwrap_or("out")),
    };
    let setup = Setup::new(&cfg)?;
    let outcome = run(command, &setup)?;
    let written = outcome.artifacts.write_all(&out)?;
    println!("{}", outcome.summary);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(outcome.status.code() as u8)
}
