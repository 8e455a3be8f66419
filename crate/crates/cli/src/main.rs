use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use landau_lab::artifacts::{output_root, resolve_output};
use landau_lab::sweep::{expand, parse_param, run_sweep};
use landau_lab::{load_config, run_experiment, Experiment, RunError};

/// Landau damping laboratory: runs experiments described by config files.
///
/// Exit codes: 0 success, 1 i/o error, 2 configuration error, 3 numerical
/// failure, 4 certification failure. Relative output paths resolve against
/// $LANDAU_LAB_OUT when set.
#[derive(Parser)]
#[command(name = "landau-lab", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config.
    Run { config: PathBuf },
    /// Run the stability certification for the config's profile and interaction.
    Certify { config: PathBuf },
    /// Run a template config over a parameter grid, e.g. `--param k=1..8`.
    Sweep {
        template: PathBuf,
        #[arg(long = "param", required = true)]
        params: Vec<String>,
    },
}

fn execute(cli: Cli) -> Result<(), RunError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Config(format!("cannot set thread count: {e}")))?;
    }
    let root = output_root();
    match cli.command {
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            let dir = resolve_output(&cfg, &root);
            let r = run_experiment(&cfg, &dir);
            println!("{}: {}", cfg.experiment, dir.display());
            r
        }
        Command::Certify { config } => {
            let mut cfg = load_config(&config)?;
            if cfg.experiment != Experiment::Certify {
                cfg.experiment = Experiment::Certify;
                cfg.output = cfg.output.map(|o| o.join("certify"));
            }
            let dir = resolve_output(&cfg, &root);
            let r = run_experiment(&cfg, &dir);
            println!("certify: {} ({})", if r.is_ok() { "pass" } else { "fail" }, dir.display());
            r
        }
        Command::Sweep { template, params } => {
            let text = std::fs::read_to_string(&template)
                .map_err(|e| RunError::Config(format!("cannot read {}: {e}", template.display())))?;
            let params = params.iter().map(|p| parse_param(p)).collect::<Result<Vec<_>, _>>()?;
            let base_cfg = landau_lab::parse_config(&text)?;
            let base = resolve_output(&base_cfg, &root);
            let points = expand(&text, &params, &base)?;
            let results = run_sweep(points, &base)?;
            let mut worst: Option<RunError> = None;
            for r in results {
                match r.result {
                    Ok(()) => println!("{}: ok", r.name),
                    Err(e) => {
                        eprintln!("{}: {e}", r.name);
                        if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                            worst = Some(e);
                        }
                    }
                }
            }
            println!("sweep: {}", base.join("sweep.csv").display());
            worst.map_or(Ok(()), Err)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
