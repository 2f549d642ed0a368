use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use battles::scenario::{self, Scenario};
use battles::{run_battle, run_figure1, BattleError, RunOptions, VerdictRow, EXIT_USAGE};
use heavyq::stability::classify;
use heavyq::{ArrivalSpec, BatchLaw, SojournModel};

#[derive(Debug, Parser)]
#[command(name = "battles", version, about = "Batch-arrival infinite-server queue scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario, or all of them.
    Run {
        #[arg(required_unless_present = "all", conflicts_with = "all")]
        name: Option<String>,
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        replications: u32,
        #[arg(long, default_value_t = heavyq::analytic::DEFAULT_ORDER)]
        order: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Scenario file replacing the built-in set.
        #[arg(long)]
        scenarios: Option<PathBuf>,
    },
    /// Power-law pmf curves with fitted tail slopes.
    Figure1 {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        p: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Classify a single model.
    Verdict {
        #[arg(long)]
        batch_p: f64,
        /// `exp:MU` or `pl:Q`.
        #[arg(long)]
        sojourn: String,
        #[arg(long)]
        lambda: f64,
    },
}

fn parse_sojourn(text: &str) -> Result<SojournModel, BattleError> {
    let bad = || BattleError::Usage(format!("sojourn must be exp:MU or pl:Q, got {text:?}"));
    let (kind, value) = text.split_once(':').ok_or_else(bad)?;
    let value: f64 = value.parse().map_err(|_| bad())?;
    Ok(match kind {
        "exp" => SojournModel::exponential(value)?,
        "pl" => SojournModel::power_law(value)?,
        _ => return Err(bad()),
    })
}

fn load_scenarios(file: Option<&PathBuf>) -> Result<Vec<Scenario>, BattleError> {
    match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| BattleError::Io { path: path.clone(), source: e })?;
            scenario::parse(&text)
        }
        None => Ok(scenario::builtin()),
    }
}

fn execute(command: Command) -> Result<i32, BattleError> {
    match command {
        Command::Run { name, all, seed, replications, order, out, scenarios } => {
            let available = load_scenarios(scenarios.as_ref())?;
            let chosen: Vec<&Scenario> = if all {
                available.iter().collect()
            } else {
                let name = name.unwrap_or_default();
                let found = available.iter().find(|s| s.name == name).ok_or_else(|| {
                    let names: Vec<&str> = available.iter().map(|s| s.name.as_str()).collect();
                    BattleError::Usage(format!("unknown scenario {name:?}; known: {}", names.join(", ")))
                })?;
                vec![found]
            };
            let opts = RunOptions { seed, replications, order, out_dir: out };
            let mut code = 0;
            for s in chosen {
                let outcome = run_battle(s, &opts)?;
                let v = &outcome.verdict;
                println!(
                    "{}: {} via {} (expected {}){}",
                    outcome.name,
                    v.verdict.name(),
                    v.criterion.name(),
                    outcome.expected.name(),
                    if outcome.contradiction() { "  CONTRADICTION" } else { "" }
                );
                for f in &outcome.files {
                    println!("  wrote {}", f.display());
                }
                code = code.max(outcome.exit_code());
            }
            Ok(code)
        }
        Command::Figure1 { p, out } => {
            for f in run_figure1(&p, &out)? {
                println!("wrote {}", f.display());
            }
            Ok(0)
        }
        Command::Verdict { batch_p, sojourn, lambda } => {
            let spec = ArrivalSpec::new(lambda, BatchLaw::power_law(batch_p)?, parse_sojourn(&sojourn)?)?;
            let verdict = classify(&spec)?;
            let row = VerdictRow::from_verdict(&verdict);
            let show = |x: Option<f64>| x.map_or("-".to_string(), |v| v.to_string());
            println!("verdict: {}", row.verdict);
            println!("criterion: {}", row.criterion);
            println!("bound_value: {}", show(row.bound_value));
            println!("growth_rate: {}", show(row.growth_rate));
            if let Some(r) = verdict.evidence.holder_exponent {
                println!("holder_exponent: {r}");
            }
            if !verdict.evidence.note.is_empty() {
                println!("note: {}", verdict.evidence.note);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("BATTLES_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: BATTLES_THREADS ignored: {e}");
        }
    }
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
