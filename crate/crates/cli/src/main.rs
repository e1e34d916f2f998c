use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ldgap_cli::ldbound::{render_ldbound, run_ldbound};
use ldgap_cli::phase::{render, run_phase};
use ldgap_cli::plot::plot_file;
use ldgap_cli::verify::{run_verify, Fault, Level};
use ldgap_cli::{ExperimentConfig, HarnessError, HarnessResult};

#[derive(Parser)]
#[command(
    name = "ldgap",
    version,
    about = "Low-degree gap experiments for latent clustering models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    MobiusSign,
}

#[derive(Subcommand)]
enum Command {
    /// Check exact identities; exit 0 iff all pass.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        /// Deliberately break a component to confirm the suite notices.
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Monte-Carlo recovery experiment over a config grid.
    Phase {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override any config key, e.g. --set trials=10.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Tabulate ζ, ζ′ and MMSE bounds over a config grid.
    Ldbound {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Render a phase CSV as a PNG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn overrides(set: &[String]) -> HarnessResult<Vec<(String, String)>> {
    set.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| HarnessError::Config {
                    line: 0,
                    msg: format!("--set expects KEY=VALUE, got {kv:?}"),
                })
        })
        .collect()
}

fn load(
    config: &PathBuf,
    mut ov: Vec<(String, String)>,
    seed: Option<u64>,
    out: &Option<PathBuf>,
) -> HarnessResult<ExperimentConfig> {
    let text = std::fs::read_to_string(config)?;
    if let Some(s) = seed {
        ov.push(("seed".into(), s.to_string()));
    }
    if let Some(o) = out {
        ov.push(("out".into(), o.display().to_string()));
    }
    ExperimentConfig::from_text(&text, &ov)
}

fn emit(text: &str, out: &Option<PathBuf>) -> HarnessResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn init_threads() -> HarnessResult<()> {
    if let Ok(v) = std::env::var("LDGAP_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| HarnessError::Config {
            line: 0,
            msg: format!("LDGAP_THREADS must be a positive integer, got {v:?}"),
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| HarnessError::Config {
                line: 0,
                msg: e.to_string(),
            })?;
    }
    Ok(())
}

fn run(cli: Cli) -> HarnessResult<bool> {
    init_threads()?;
    match cli.cmd {
        Command::Verify { level, inject_fault } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let fault = inject_fault.map(|FaultArg::MobiusSign| Fault::MobiusSign);
            let report = run_verify(level, fault)?;
            print!("{}", report.render());
            Ok(report.all_passed())
        }
        Command::Phase { config, seed, out, set } => {
            let cfg = load(&config, overrides(&set)?, seed, &out)?;
            let records = run_phase(&cfg)?;
            emit(&render(&records, cfg.format), &cfg.out)?;
            Ok(true)
        }
        Command::Ldbound { config, set } => {
            let cfg = load(&config, overrides(&set)?, None, &None)?;
            let rows = run_ldbound(&cfg)?;
            emit(&render_ldbound(&rows)?, &cfg.out)?;
            Ok(true)
        }
        Command::Plot { input, out } => {
            plot_file(&input, &out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
