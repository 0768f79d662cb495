use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rds_conley::config::RunConfig;
use rds_conley::pipeline::{exit, run_analyze, EmitFormat, EmitWhat, PipelineError};
use rds_conley::verify::{run_verify, Suite};

/// Conley–Morse analysis of random semiflows on box grids.
#[derive(Parser)]
#[command(name = "rds-conley", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write all artifacts.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output` field.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the parallel sections.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run one property suite and write `verify_<suite>.json`.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// cocycle, lattice-oracle, lyapunov or morse.
        #[arg(long)]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print one artifact to stdout (or `--out`).
    Emit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        what: What,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Morse,
    Lyapunov,
    Attractors,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Csv,
    Json,
}

fn set_threads(n: Option<usize>) -> Result<(), PipelineError> {
    if let Some(n) = n {
        if n == 0 {
            return Err(PipelineError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| PipelineError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn out_dir(config: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| config.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn run(cli: Cli) -> Result<i32, PipelineError> {
    match cli.command {
        Command::Analyze { config, out, threads } => {
            set_threads(threads)?;
            let cfg = RunConfig::load(&config)?;
            let analysis = run_analyze(&cfg)?;
            let dir = out_dir(&cfg, out);
            analysis.write_artifacts(&dir)?;
            let r = &analysis.report;
            for c in &r.checks {
                eprintln!("{:<32} {}", c.name, if c.passed { "pass" } else { "FAIL" });
            }
            eprintln!(
                "{} attractors, {} Morse sets, edges {:?}; artifacts in {}",
                analysis.attractors.len(),
                analysis.morse.len(),
                analysis.morse.edges(),
                dir.display()
            );
            Ok(r.exit_code())
        }
        Command::Verify { config, suite, out, threads } => {
            set_threads(threads)?;
            let suite: Suite = suite.parse().map_err(PipelineError::Usage)?;
            let cfg = RunConfig::load(&config)?;
            let report = run_verify(&cfg, suite)?;
            let path = out_dir(&cfg, out).join(suite.file_name());
            let value = serde_json::json!({
                "suite": suite.name(),
                "config_hash": report.config_hash,
                "passed": report.hard_ok() && report.accuracy_ok(),
                "checks": report.checks,
                "summary": report.summary,
            });
            write_json(&path, &value)?;
            for c in &report.checks {
                eprintln!("{:<32} {}", c.name, if c.passed { "pass" } else { "FAIL" });
            }
            Ok(report.exit_code())
        }
        Command::Emit { config, what, format, out, threads } => {
            set_threads(threads)?;
            let cfg = RunConfig::load(&config)?;
            let analysis = run_analyze(&cfg)?;
            let what = match what {
                What::Morse => EmitWhat::Morse,
                What::Lyapunov => EmitWhat::Lyapunov,
                What::Attractors => EmitWhat::Attractors,
            };
            let format = match format {
                Format::Dot => EmitFormat::Dot,
                Format::Csv => EmitFormat::Csv,
                Format::Json => EmitFormat::Json,
            };
            match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    analysis.emit(what, format, &mut buf)?;
                    std::fs::write(path, buf)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    analysis.emit(what, format, &mut lock)?;
                    lock.flush()?;
                }
            }
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
