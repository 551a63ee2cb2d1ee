use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flatmoment_cli::{cmd_analyze, cmd_solve, cmd_validate, Format, Outcome, SolveFlags};

#[derive(Parser)]
#[command(
    name = "flatmoment",
    version,
    about = "Signed and quasi-complex atomic measures from truncated moment data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a problem file and the d-Hankel structure of its moment matrix.
    Validate { input: PathBuf },
    /// Rank, inertia, column basis and column relations of M(n).
    Analyze {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Extend, certify and compute the atomic measure.
    Solve {
        input: PathBuf,
        /// Write the JSON report here.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    /// Eigenvalue tolerance [default: 1e-10]
    #[arg(long)]
    tol_eig: Option<f64>,
    /// Tolerance for matching and conjugate pairing [default: 1e-8]
    #[arg(long)]
    tol_match: Option<f64>,
    /// Seed for the random combination of shift matrices [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Largest extension degree [default: n*d + 2]
    #[arg(long)]
    max_degree: Option<usize>,
    /// Require univariate relations, one variable each.
    #[arg(long)]
    axis_relations: bool,
    /// Set moments the relations leave undetermined to zero.
    #[arg(long)]
    fill_free: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out: Outcome = match cli.command {
        Command::Validate { input } => cmd_validate(&input),
        Command::Analyze { input, format } => cmd_analyze(&input, format),
        Command::Solve {
            input,
            output,
            format,
            flags,
        } => {
            let flags = SolveFlags {
                tol_eig: flags.tol_eig,
                tol_match: flags.tol_match,
                seed: flags.seed,
                max_degree: flags.max_degree,
                axis_relations: flags.axis_relations,
                fill_free: flags.fill_free,
            };
            cmd_solve(&input, output.as_deref(), &flags, format)
        }
    };
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
