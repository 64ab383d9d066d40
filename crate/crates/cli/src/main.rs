use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use ymflow::config::{Command, RunConfig};
use ymflow::run::{execute, Context, Overrides};

/// Yang-Mills heat flow on a box: flows, bound checks, Wilson loops and the washer example.
#[derive(Parser, Debug)]
#[command(name = "ymflow", version, after_help = commands_help())]
struct Cli {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for reports and snapshots.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every check tolerance.
    #[arg(long)]
    tol_scale: Option<f64>,
    /// Seed for random test fields.
    #[arg(long)]
    seed: Option<u64>,
}

fn commands_help() -> String {
    format!("The config's \"command\" field selects one of: {}", Command::ALL.join(", "))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let Some(path) = cli.config else {
        eprintln!("usage: ymflow --config <path> [--out <dir>] [--tol-scale <float>] [--seed <u64>]");
        eprintln!("{}", commands_help());
        return ExitCode::from(2);
    };
    let cfg = match std::fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|t| RunConfig::parse(&t).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {}", path.display(), e);
            return ExitCode::from(2);
        }
    };
    let ov = Overrides { out: cli.out, tol_scale: cli.tol_scale, seed: cli.seed };
    let result = Context::new(cfg, ov).and_then(|ctx| execute(&ctx));
    match result {
        Ok(report) => {
            for c in &report.checks {
                println!("{:<32} {:>5}  margin {:.3e}  tol {:.1e}", c.name, c.verdict, c.margin, c.tol);
            }
            ExitCode::from(if report.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
