use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use metaoco_cli::config::{preset, ExperimentConfig, PRESETS};
use metaoco_cli::runner::CheckRecord;
use metaoco_cli::sweep::Grid;
use metaoco_cli::{report, runner, sweep, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "metaoco", version, about = "Meta-learning online convex optimization experiments")]
struct Cli {
    /// Directory that run directories are created under.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, default_value = "runs")]
    out: PathBuf,
    /// Exit with status 1 when any bound check fails.
    #[arg(long, global = true)]
    enforce_bounds: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file or preset (paper-simplex, paper-ball).
    Run { config: PathBuf },
    /// Run every cell of a parameter grid.
    Sweep {
        config: PathBuf,
        /// `field=v1,v2;field=...`, or a file holding such a spec.
        #[arg(long, default_value = "")]
        grid: String,
    },
    /// Emit average-regret series, timing ratios and a summary table.
    Report { dir: PathBuf },
    /// Adversarial-stream regret of tuned OGD against its predicted floor.
    Lowerbound { config: PathBuf },
    /// Print a preset as TOML.
    Preset { name: String },
}

fn print_failures(checks: &[CheckRecord]) -> bool {
    let mut ok = true;
    for c in checks.iter().filter(|c| !c.holds) {
        ok = false;
        eprintln!("bound check failed: {} ({} > {})", c.name, c.lhs, c.rhs);
    }
    ok
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let mut ok = true;
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = cfg.output_dir(&cli.out);
            let summary = runner::run(&cfg, &dir).with_context(|| format!("running {}", cfg.name))?;
            for s in &summary.seeds {
                ok &= print_failures(&s.checks);
            }
            ok &= print_failures(&summary.aggregate_checks);
            println!("wrote {}", dir.display());
        }
        Command::Sweep { config, grid } => {
            let cfg = ExperimentConfig::load(&config)?;
            let path = PathBuf::from(&grid);
            let spec = if !grid.is_empty() && path.is_file() { std::fs::read_to_string(&path)? } else { grid };
            let base = cfg.output_dir(&cli.out);
            let dir = base.with_file_name(format!("{}-sweep", base.file_name().and_then(|n| n.to_str()).unwrap_or("run")));
            let (manifest, summaries) = sweep::sweep(&cfg, &Grid::parse(&spec)?, &dir)?;
            for s in &summaries {
                for seed in &s.seeds {
                    ok &= print_failures(&seed.checks);
                }
                ok &= print_failures(&s.aggregate_checks);
            }
            println!("wrote {} cells under {}", manifest.cells.len(), dir.display());
        }
        Command::Report { dir } => {
            let r = report::report(&dir)?;
            if let Some(ratio) = r.timing_ratio {
                println!("median MGD/FMGD round-time ratio: {ratio:.3}");
            }
            println!("wrote {}", r.dir.display());
        }
        Command::Lowerbound { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = cfg.output_dir(&cli.out).join("lowerbound");
            let s = runner::lowerbound(&cfg, &dir)?;
            println!("mean regret {:.6}, predicted floor {:.6}", s.mean_regret, s.predicted_floor);
            if !s.holds {
                ok = false;
                eprintln!("bound check failed: mean regret below half the predicted floor");
            }
        }
        Command::Preset { name } => {
            let cfg = preset(&name).with_context(|| format!("unknown preset {name}; known: {}", PRESETS.join(", ")))?;
            print!("{}", cfg.to_toml()?);
        }
    }
    Ok(if cli.enforce_bounds && !ok { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}
