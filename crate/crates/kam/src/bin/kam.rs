use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kam::commands::{self, Exit};
use kam::config::RunConfig;
use kam::Result;

#[derive(Parser)]
#[command(name = "kam", version, about = "KAM iteration for the truncated forced Kirchhoff lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding `output_dir` of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate the configured samples and extract their tori.
    Run,
    /// Grid estimate of the excluded parameter measure.
    Measure {
        /// Comma-separated γ values; defaults to the config list.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        gamma: Option<Vec<f64>>,
    },
    /// Integrate the lattice from the tori of a run.
    Validate {
        /// Defaults to `<out>/torus.json`.
        #[arg(long)]
        torus: Option<PathBuf>,
    },
}

fn init_logging() {
    let level = match std::env::var("KAM_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("debug") => log::LevelFilter::Debug,
        Ok("info") => log::LevelFilter::Info,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn execute(cli: Cli) -> Result<Exit> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    let out = cfg.output_dir.clone();
    match cli.command {
        Command::Run => {
            let s = commands::run(&cfg, &out)?;
            for r in &s.runs {
                println!("sample {}: {:?}, {} accepted steps", r.index, r.status, r.accepted_steps());
            }
            Ok(s.exit)
        }
        Command::Measure { gamma } => {
            let gammas = gamma.unwrap_or_else(|| cfg.measure.gammas.clone());
            let s = commands::measure(&cfg, &gammas, &out)?;
            for r in s.reports.iter().chain(&s.refined) {
                println!("m={} gamma={}: excluded {:.6} (uncounted bound {:.2e})", r.grid, r.gamma, r.excluded_fraction, r.omitted_bound);
            }
            for (g, r) in &s.ratios {
                println!("f(2*{g})/(2 f({g})) = {r:.4}");
            }
            for (g, d) in &s.refinement {
                println!("refinement change at gamma={g}: {:.2}%", 100.0 * d);
            }
            Ok(s.exit)
        }
        Command::Validate { torus } => {
            let path = torus.unwrap_or_else(|| out.join("torus.json"));
            let s = commands::validate(&cfg, &path, &out)?;
            for v in &s.verdicts {
                let defects: Vec<String> = v.defects.iter().map(|d| format!("{:.3e}", d.defect)).collect();
                println!(
                    "sample {}: defects [{}], decreasing {}, within bound {}, stable {} -> {}",
                    v.sample,
                    defects.join(", "),
                    v.decreasing,
                    v.within_bound,
                    v.stable,
                    if v.pass() { "PASS" } else { "FAIL" }
                );
            }
            Ok(s.exit)
        }
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Io as u8 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(Exit::Io as u8);
        }
    }
    match execute(cli) {
        Ok(exit) => ExitCode::from(exit as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Exit::of_error(&e) as u8)
        }
    }
}
