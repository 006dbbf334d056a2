use clap::{Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use darkshelf::harness::output::{emit, write_prediction, write_report, write_snapshot};
use darkshelf::harness::{parse_config, predict, simulate, sweep, ComparisonReport, ExperimentConfig, HarnessError, OutputKind};

#[derive(Parser)]
#[command(name = "darkshelf", version, about = "Perturbed dark-soliton asymptotics checked against direct simulation")]
struct Cli {
    /// JSON experiment document: a preset, one config, or {"configs": [...]}.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for every output file.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Reserved. Runs never draw random numbers, so setting this is an error.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate core parameters and shelf rates without a PDE run.
    Predict,
    /// Run the PDE and write the final snapshot plus any configured outputs.
    Simulate,
    /// Simulate and compare against the asymptotics; writes report.json.
    Compare,
    /// Like compare, with independent configs run in parallel.
    Sweep,
    /// Simulate and write plot data.
    Emit {
        /// Output kinds to write instead of the configured list.
        #[arg(long, value_delimiter = ',')]
        kind: Vec<String>,
    },
}

fn load(path: Option<&Path>) -> Result<Vec<ExperimentConfig>, HarnessError> {
    let path = path.ok_or_else(|| HarnessError::Validation { field: "--config".into(), reason: "a config path is required".into() })?;
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

fn parse_kinds(names: &[String]) -> Result<Vec<OutputKind>, HarnessError> {
    names
        .iter()
        .map(|n| serde_json::from_value(serde_json::Value::String(n.clone())).map_err(|_| HarnessError::Validation { field: "--kind".into(), reason: format!("unknown output kind `{n}`") }))
        .collect()
}

fn finish(report: &ComparisonReport, out_dir: &Path) -> Result<ExitCode, HarnessError> {
    for row in &report.rows {
        println!("{}", row.summary());
    }
    let path = write_report(report, out_dir)?;
    eprintln!("wrote {}", path.display());
    Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn execute(cli: &Cli) -> Result<ExitCode, HarnessError> {
    if cli.seedless {
        return Err(HarnessError::Validation { field: "--seedless".into(), reason: "reserved: runs are deterministic and use no random numbers".into() });
    }
    let configs = load(cli.config.as_deref())?;
    fs::create_dir_all(&cli.out_dir).map_err(|source| HarnessError::Io { path: cli.out_dir.clone(), source })?;
    let dir = cli.out_dir.as_path();
    match &cli.command {
        Command::Predict => {
            for c in &configs {
                let path = write_prediction(&predict(c)?, &c.name, dir)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate => {
            for c in &configs {
                let out = simulate(c)?;
                let mut paths = emit(&out, &c.outputs, dir)?;
                if !c.outputs.contains(&OutputKind::Snapshots) {
                    paths.push(write_snapshot(out.final_snapshot(), &c.name, dir)?);
                }
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare => {
            let mut reports = Vec::new();
            for c in &configs {
                let out = simulate(c)?;
                emit(&out, &c.outputs, dir)?;
                reports.push(out.compare()?);
            }
            finish(&ComparisonReport::merge(reports), dir)
        }
        Command::Sweep => {
            let mut reports = Vec::new();
            for result in sweep(&configs) {
                let (out, report) = result?;
                emit(&out, &out.config.outputs, dir)?;
                reports.push(report);
            }
            finish(&ComparisonReport::merge(reports), dir)
        }
        Command::Emit { kind } => {
            let override_kinds = parse_kinds(kind)?;
            for c in &configs {
                let kinds = if kind.is_empty() { c.outputs.clone() } else { override_kinds.clone() };
                if kinds.is_empty() {
                    continue;
                }
                let out = simulate(c)?;
                for p in emit(&out, &kinds, dir)? {
                    eprintln!("wrote {}", p.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
