use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use permon::config::{RawConfig, RunConfig};
use permon::reproduce::{self, ExampleId};
use permon::Error;

/// Environment variable naming the default output root.
const OUT_ENV: &str = "PERMON_OUT";

#[derive(Parser)]
#[command(name = "permon", version, about = "Periodically damped transport and wave equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the tasks of a run configuration.
    Run {
        config: PathBuf,
        /// Output directory (overrides `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated task list (overrides `tasks`).
        #[arg(long)]
        tasks: Option<String>,
    },
    /// Reproduce one worked example (4.1, 4.2, 5.1 or 5.2) and check its claims.
    ReproduceExample {
        id: String,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("permon-out"))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        _ => 3,
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    config: &Path,
    out: Option<PathBuf>,
    n: Option<usize>,
    delta: Option<f64>,
    horizon: Option<u64>,
    seed: Option<u64>,
    tasks: Option<String>,
) -> permon::Result<()> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
    let mut raw = RawConfig::parse(&text)?;
    if let Some(v) = n {
        raw.set("n", v.to_string());
    }
    if let Some(v) = delta {
        raw.set("delta", v.to_string());
    }
    if let Some(v) = horizon {
        raw.set("horizon", v.to_string());
    }
    if let Some(v) = seed {
        raw.set("seed", v.to_string());
    }
    if let Some(v) = tasks {
        raw.set("tasks", v);
    }
    let base = config.parent().unwrap_or_else(|| Path::new("."));
    let cfg = RunConfig::from_raw(&raw, base)?;
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    let dir = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| out_root().join(stem));
    let outcome = permon::pipeline::run(&cfg, &dir)?;
    print!("{}", outcome.report.render());
    println!("\nartifacts written to {}", dir.display());
    Ok(())
}

fn reproduce_example(id: &str, delta: Option<f64>, n: Option<usize>, out: Option<PathBuf>) -> permon::Result<()> {
    let id: ExampleId = id.parse()?;
    let d = delta.unwrap_or(id.default_delta());
    let dir = out.unwrap_or_else(|| out_root().join(format!("example-{}-delta-{d}", id.label())));
    let ex = reproduce::reproduce_example(id, Some(d), n, Some(&dir))?;
    println!("example {} delta={} N={}", id.label(), ex.delta, ex.n);
    for c in &ex.claims {
        println!("{c}");
    }
    println!("verdict: {}", ex.verdict);
    println!("artifacts written to {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            n,
            delta,
            horizon,
            seed,
            tasks,
        } => run(&config, out, n, delta, horizon, seed, tasks),
        Command::ReproduceExample { id, delta, n, out } => reproduce_example(&id, delta, n, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
