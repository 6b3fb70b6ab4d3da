//! `agro` — generate worlds and task sets, run benchmarks and ablations,
//! grade external answers, and render reports.
//!
//! Exit codes: 0 success, 2 validation error, 3 I/O error.

use agroworld::bench::{
    ablate, check_answers, gen_tasks, gen_world, run_bench, GenConfig, PolicySpec, RunOptions,
    RunReport, Variant,
};
use agroworld::canonical;
use agroworld::model::{load_world, save_world, WorldError};
use agroworld::protocol::{load_tasks, save_tasks, TaskFamily};
use agroworld::toolkit::{ErrorCode, Registry, ToolError};
use clap::{Parser, Subcommand};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "agro", version, about = "Executable agricultural world engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world bundle.
    GenWorld {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        parcels: usize,
        #[arg(long, default_value_t = 120)]
        season_days: i64,
        #[arg(long, default_value_t = 0.25)]
        cloud_prob: f64,
    },
    /// Generate a task set against a world bundle.
    GenTasks {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "lookup,forecast,anomaly,counterfactual")]
        families: String,
        #[arg(long, default_value_t = 50)]
        per_family: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a benchmark: one episode per task.
    Run {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        /// scripted | faulty:<kind|mixed> | remote
        #[arg(long)]
        policy: String,
        #[arg(long, default_value_t = 20)]
        budget: u32,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Feed full checker reports (numeric tier included) back mid-episode.
        #[arg(long, default_value_t = false)]
        oracle_feedback: bool,
    },
    /// Grade externally produced answers against a task set.
    Check {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        /// JSON file: {"<task_id>": <answer>, ...}
        #[arg(long)]
        answers: PathBuf,
        /// Artifact stores (one directory per task id) for the grounding tier.
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
    /// Re-run a task set under degraded configurations.
    Ablate {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long, default_value = "full,one_shot,no_alignment,no_rs")]
        variants: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "faulty:mixed")]
        policy: String,
        #[arg(long, default_value_t = 20)]
        budget: u32,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
    /// Render a run report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "table")]
        format: String,
    },
}

enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ToolError> for CliError {
    fn from(e: ToolError) -> CliError {
        match e.code {
            ErrorCode::IoError => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<WorldError> for CliError {
    fn from(e: WorldError) -> CliError {
        match e {
            WorldError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_families(csv: &str) -> Result<Vec<TaskFamily>, CliError> {
    csv.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            TaskFamily::parse(s)
                .ok_or_else(|| CliError::Validation(format!("unknown task family {s:?}")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenWorld { seed, out, parcels, season_days, cloud_prob } => {
            let cfg = GenConfig {
                seed,
                n_parcels: parcels,
                season_days,
                cloud_prob,
                ..GenConfig::default()
            };
            cfg.validate().map_err(CliError::Validation)?;
            let world = gen_world(&cfg);
            save_world(&world, &out)?;
            eprintln!(
                "wrote world {} ({} parcels, {} days) to {}",
                world.world_id,
                world.parcels.len(),
                world.season_days(),
                out.display()
            );
            Ok(())
        }
        Command::GenTasks { world, out, families, per_family, seed } => {
            let world_state = load_world(&world)?;
            let world_seed: u64 = world_state
                .world_id
                .strip_prefix("agw_")
                .and_then(|s| s.parse().ok())
                .unwrap_or(0);
            let cfg = GenConfig {
                seed: world_seed,
                families: parse_families(&families)?,
                tasks_per_family: per_family,
                season_days: world_state.season_days(),
                ..GenConfig::default()
            };
            let tasks = gen_tasks(&world_state, &cfg, seed.unwrap_or(world_seed))?;
            save_tasks(&tasks, &out)?;
            eprintln!("wrote {} tasks to {}", tasks.len(), out.display());
            Ok(())
        }
        Command::Run { world, tasks, policy, budget, workers, artifacts, out, oracle_feedback } => {
            let world_state = load_world(&world)?;
            let task_set = load_tasks(&tasks)?;
            let spec = PolicySpec::parse(&policy)?;
            let registry = Registry::full();
            let policy = spec.build(&registry)?;
            let options = RunOptions { t_max: budget, workers, oracle_feedback };
            let started = std::time::Instant::now();
            let report = run_bench(
                &registry,
                &world_state,
                &task_set,
                policy.as_ref(),
                options,
                Some(&artifacts),
            )?;
            write_file(&out, &canonical::to_string(&report))?;
            eprintln!(
                "ran {} episodes in {:.1}s; report at {}",
                report.per_task.len(),
                started.elapsed().as_secs_f64(),
                out.display()
            );
            print_summary(&report);
            Ok(())
        }
        Command::Check { world, tasks, answers, artifacts } => {
            let world_state = load_world(&world)?;
            let task_set = load_tasks(&tasks)?;
            let text = read_file(&answers)?;
            let answer_map: BTreeMap<String, Value> = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", answers.display())))?;
            let rows = check_answers(&world_state, &task_set, &answer_map, artifacts.as_deref());
            println!("{}", canonical::to_string(&serde_json::json!({ "results": rows })));
            Ok(())
        }
        Command::Ablate { world, tasks, variants, out, policy, budget, workers } => {
            let world_state = load_world(&world)?;
            let task_set = load_tasks(&tasks)?;
            let variant_list: Vec<Variant> = variants
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(Variant::parse)
                .collect::<Result<Vec<_>, _>>()?;
            let spec = PolicySpec::parse(&policy)?;
            let options = RunOptions { t_max: budget, workers, oracle_feedback: false };
            let table = ablate(&world_state, &task_set, &variant_list, &spec, options)?;
            write_file(&out, &canonical::to_string(&table))?;
            println!(
                "{:<14} {:<11} {:<8} {:<10} {:>9} {:>7}",
                "variant", "interaction", "tools", "alignment", "avg_turns", "acc"
            );
            for row in &table.variants {
                println!(
                    "{:<14} {:<11} {:<8} {:<10} {:>9.2} {:>7.3}",
                    row.variant.name(),
                    row.interaction,
                    row.tool_scope,
                    if row.alignment { "yes" } else { "no" },
                    row.avg_turns,
                    row.accuracy
                );
            }
            Ok(())
        }
        Command::Report { input, format } => {
            let text = read_file(&input)?;
            let report: RunReport = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", input.display())))?;
            match format.as_str() {
                "json" => println!("{}", canonical::to_string(&report)),
                "table" => print_summary(&report),
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown format {other:?}; use table or json"
                    )))
                }
            }
            Ok(())
        }
    }
}

fn print_summary(report: &RunReport) {
    println!(
        "policy: {}   budget: {}   tasks: {}",
        report.policy,
        report.budget,
        report.per_task.len()
    );
    let Some(agg) = &report.aggregates else {
        println!("(empty task set)");
        return;
    };
    println!(
        "overall accuracy: {:.3}   mean turns: {:.2}",
        agg.overall_accuracy, agg.mean_turns
    );
    for (family, accuracy) in &agg.accuracy_by_family {
        println!("  {family:<16} accuracy {accuracy:.3}");
    }
    if let Some(nrmse) = agg.nrmse_forecast {
        println!("  forecast NRMSE: {nrmse:.4}");
    }
    if let Some(iou) = agg.mean_iou_anomaly {
        println!("  anomaly mean IoU: {iou:.4}");
    }
    if let Some(rate) = agg.causal_success_rate {
        println!("  causal success rate: {rate:.3}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
