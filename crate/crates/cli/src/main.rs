use std::path::PathBuf;
use std::process::ExitCode;

use cdk_cli::commands::{self, AlphaSource, GeneratorSource, Outcome, DEFAULT_SAMPLES};
use cdk_cli::{seed_from_env, CliError};
use cdk_core::mip::BnbConfig;
use clap::{ArgGroup, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cdk",
    version,
    about = "Mixed-integer conic programs and generator dual certificates"
)]
struct Cli {
    /// Branch-and-bound node limit.
    #[arg(long, global = true, default_value_t = 100_000)]
    node_limit: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a problem file to optimality and print the result as JSON.
    Solve { path: PathBuf },
    /// Evaluate F_alpha and its relaxation over a grid of right-hand sides.
    GenSweep {
        path: PathBuf,
        /// Comma-separated multiplier, one entry per row.
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        /// `start:stop:step` or an explicit list (`;` between points).
        #[arg(long, allow_hyphen_values = true)]
        omega_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a generator certificate against the optimum.
    #[command(group(ArgGroup::new("mult").required(true).args(["alpha", "auto"])))]
    #[command(group(ArgGroup::new("gen").args(["gens", "sample"])))]
    Certify {
        path: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Take the multiplier from the fiber hull over `--u-box`.
        #[arg(long, requires = "u_box")]
        auto: bool,
        /// Integer box `lo:hi`, one range per integer variable or one for all.
        #[arg(long, allow_hyphen_values = true)]
        u_box: Option<String>,
        /// JSON list of `{"x": [...], "y": [...]}` generators.
        #[arg(long)]
        gens: Option<PathBuf>,
        /// Number of boundary samples per Soc block in the generated set.
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Decide boundedness of a packing set.
    PackCheck { path: PathBuf },
    /// Min-sum-of-distances clustering of the points in a CSV file.
    Cluster {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the disjunctive hull over the integer fibers in a box.
    FiberHull {
        path: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u_box: String,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let cfg = BnbConfig {
        node_limit: cli.node_limit,
        ..BnbConfig::default()
    };
    match cli.cmd {
        Cmd::Solve { path } => commands::cmd_solve(&path, &cfg),
        Cmd::GenSweep {
            path,
            alpha,
            omega_grid,
            out,
        } => commands::cmd_gen_sweep(&path, &alpha, &omega_grid, out.as_deref(), &cfg),
        Cmd::Certify {
            path,
            alpha,
            auto,
            u_box,
            gens,
            sample,
        } => {
            let alpha = match (alpha, auto) {
                (Some(a), _) => AlphaSource::Given(a),
                (None, _) => AlphaSource::Auto {
                    u_box: u_box.unwrap_or_default(),
                },
            };
            let gens = match (gens, sample) {
                (Some(p), _) => GeneratorSource::File(p),
                (None, n) => GeneratorSource::Sample(n.unwrap_or(DEFAULT_SAMPLES)),
            };
            commands::cmd_certify(&path, &alpha, &gens, seed_from_env()?, &cfg)
        }
        Cmd::PackCheck { path } => commands::cmd_pack_check(&path, &cfg.tol),
        Cmd::Cluster { points, q, out } => commands::cmd_cluster(&points, q, out.as_deref(), &cfg),
        Cmd::FiberHull { path, u_box } => commands::cmd_fiber_hull(&path, &u_box, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
