use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lazy_search_tree::SplitMode;
use lst_cli::bench::{bench, bench_csv};
use lst_cli::script::parse_mode;
use lst_cli::{parse, run, RunOptions, Scenario, Script};

#[derive(Parser)]
#[command(name = "lst", version, about = "Lazy search tree workload harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Split mode: exact or random.
    #[arg(long, value_parser = mode_arg)]
    mode: Option<SplitMode>,
    /// RNG seed. Falls back to the script header, then LST_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Generate the workload from a scenario instead of reading a script.
    #[arg(long)]
    scenario: Option<String>,
    /// Scenario parameters, e.g. n=1024,q=16.
    #[arg(long, default_value = "")]
    params: String,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a script (file or `-` for stdin) or a generated scenario.
    Run {
        script: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Check every answer against the oracle.
        #[arg(long)]
        verify: bool,
        /// Write one CSV row per tree to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print a generated scenario script.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the lazy tree against a splay tree and a binary heap.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn mode_arg(s: &str) -> Result<SplitMode, String> {
    parse_mode(s).ok_or_else(|| format!("unknown mode `{s}`, expected exact or random"))
}

fn env_seed() -> Result<Option<u64>, String> {
    match std::env::var("LST_SEED") {
        Ok(v) => v.parse().map(Some).map_err(|_| format!("LST_SEED=`{v}` is not a seed")),
        Err(_) => Ok(None),
    }
}

fn load(common: &Common, path: Option<&PathBuf>) -> Result<(Script, u64, SplitMode), String> {
    let fallback = env_seed()?;
    let script = match (&common.scenario, path) {
        (Some(name), None) => {
            let seed = common.seed.or(fallback).unwrap_or(0);
            Scenario::parse(name, &common.params).map_err(|e| e.to_string())?.generate(seed)
        }
        (None, Some(p)) => {
            let text = if p.as_os_str() == "-" {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s).map_err(|e| e.to_string())?;
                s
            } else {
                fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?
            };
            parse(&text).map_err(|e| e.to_string())?
        }
        (Some(_), Some(_)) => return Err("give either a script or --scenario, not both".into()),
        (None, None) => return Err("need a script path or --scenario".into()),
    };
    let seed = common.seed.or(script.seed).or(fallback).unwrap_or(0);
    let mode = common.mode.or(script.mode).unwrap_or_default();
    Ok((script, seed, mode))
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main_inner(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Run {
            script,
            common,
            verify,
            csv,
        } => {
            let (script, seed, mode) = load(&common, script.as_ref())?;
            let opts = RunOptions {
                mode,
                seed,
                verify,
                record_answers: false,
            };
            let report = run(&script, opts).map_err(|e| e.to_string())?;
            for line in &report.log {
                println!("{line}");
            }
            print!("{}", report.summary());
            for m in &report.mismatch_log {
                eprintln!("mismatch: {m}");
            }
            if let Some(p) = csv {
                fs::write(&p, report.csv()).map_err(|e| format!("{}: {e}", p.display()))?;
            }
            Ok(report.mismatches == 0)
        }
        Command::Generate { common, out } => {
            if common.scenario.is_none() {
                return Err("generate needs --scenario".into());
            }
            let (mut script, _, mode) = load(&common, None)?;
            script.mode = common.mode.map(|_| mode);
            write_out(out.as_ref(), &script.to_string())?;
            Ok(true)
        }
        Command::Bench { common, reps, csv } => {
            let label = common.scenario.clone().unwrap_or_else(|| "script".into());
            let (script, _, mode) = load(&common, None)?;
            let n = script
                .ops
                .iter()
                .map(|o| match &o.1 {
                    lst_cli::Op::Insert(_) => 1,
                    lst_cli::Op::Construct(k) => k.len(),
                    _ => 0,
                })
                .sum();
            let rows = bench(&label, &script, n, reps, mode);
            let lazy = rows.iter().find(|r| r.structure == "lazy");
            let splay = rows.iter().find(|r| r.structure == "splay");
            if let (Some(l), Some(s)) = (lazy, splay) {
                if l.median > s.median {
                    eprintln!("warning: lazy tree slower than splay baseline ({:?} vs {:?})", l.median, s.median);
                }
            }
            write_out(csv.as_ref(), &bench_csv(&rows))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
