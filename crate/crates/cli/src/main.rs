use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mpas_cli::{compare, run, CliError, Overrides, Result, RunConfig};
use mpas_core::Strategy;

#[derive(Parser)]
#[command(name = "mpas", version, about = "Day-ahead BESS and microturbine scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schedule one day and write the artifacts.
    Run(RunArgs),
    /// Run two configurations on the same inputs and compare them.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Directory for comparison.txt and comparison.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<PathBuf>,
    /// Directory with spv.csv, wt.csv and load.csv.
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    /// Allow back-feed at the substation.
    #[arg(long)]
    no_reverse_constraint: bool,
    /// Spread coefficient of the uncertainty sets.
    #[arg(long)]
    k: Option<f64>,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: mpas_core::Error| e.to_string())
}

fn config_for(args: RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        case: args.case,
        profiles: args.profiles,
        prices: args.prices,
        seed: args.seed,
        out: args.out,
        strategy: args.strategy,
        no_reverse_constraint: args.no_reverse_constraint,
        k: args.k,
    });
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = config_for(args)?;
            let out = run(&cfg)?;
            let r = &out.outcome.report;
            println!(
                "DPF {:.2} $ ({}, seed {}), artifacts in {}",
                r.dpf,
                r.strategy,
                r.seed,
                cfg.out.display()
            );
        }
        Command::Compare { a, b, out } => {
            let ca = RunConfig::load(&a)?;
            let cb = RunConfig::load(&b)?;
            let ra = mpas_cli::execute(&ca)?;
            let rb = mpas_cli::execute(&cb)?;
            let cmp = compare::compare(&ra, &rb)?;
            let text = cmp.to_text();
            print!("{text}");
            if let Some(dir) = out {
                let io = |path: PathBuf| move |source| CliError::Io { path, source };
                fs::create_dir_all(&dir).map_err(io(dir.clone()))?;
                let json = serde_json::to_string_pretty(&cmp).expect("comparison serializes");
                fs::write(dir.join("comparison.txt"), text).map_err(io(dir.join("comparison.txt")))?;
                fs::write(dir.join("comparison.json"), json).map_err(io(dir.join("comparison.json")))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
