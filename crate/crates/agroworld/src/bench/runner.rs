//! Benchmark execution: episodes in parallel, deterministic reports.
//!
//! Episodes are independent given the immutable world, so they parallelize
//! freely; rows are keyed and sorted by task id, which makes the report a
//! pure function of (world, tasks, policy, budget) regardless of scheduling.
//! Wall-clock time is deliberately absent from traces and reports so that two
//! runs with identical inputs produce byte-identical outputs; timing goes to
//! stderr logging only.

use super::rng::fnv64;
use crate::agent::{
    run_episode, EpisodeConfig, EpisodeMemory, FaultKind, FaultSpec, FaultyPolicy, Policy,
    RemotePolicy, ScriptedPolicy,
};
use crate::canonical;
use crate::model::WorldState;
use crate::protocol::metrics::set_iou;
use crate::protocol::{MaskSet, TaskFamily, TaskInstance, Tier, ViolationCode};
use crate::toolkit::{ArtifactStore, ErrorCode, Registry, ToolError};
use crate::units::Quantity;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Scripted,
    Faulty(FaultSpec),
    Remote,
}

impl PolicySpec {
    pub fn parse(s: &str) -> Result<PolicySpec, ToolError> {
        match s {
            "scripted" => Ok(PolicySpec::Scripted),
            "remote" => Ok(PolicySpec::Remote),
            other => match other.strip_prefix("faulty:") {
                Some("mixed") => Ok(PolicySpec::Faulty(FaultSpec::Mixed)),
                Some(kind) => FaultKind::parse(kind)
                    .map(|k| PolicySpec::Faulty(FaultSpec::Fixed(k)))
                    .ok_or_else(|| unknown_policy(other)),
                None => Err(unknown_policy(other)),
            },
        }
    }

    pub fn build(&self, registry: &Registry) -> Result<Box<dyn Policy>, ToolError> {
        Ok(match self {
            PolicySpec::Scripted => Box::new(ScriptedPolicy),
            PolicySpec::Faulty(spec) => Box::new(FaultyPolicy::new(*spec)),
            PolicySpec::Remote => Box::new(RemotePolicy::from_env(registry)?),
        })
    }
}

fn unknown_policy(s: &str) -> ToolError {
    ToolError::new(ErrorCode::ArgumentError, format!("unknown policy {s:?}"))
        .with("arg", "policy")
        .with(
            "valid",
            ["scripted", "faulty:<kind>", "faulty:mixed", "remote"],
        )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub task_id: String,
    pub family: TaskFamily,
    pub z: u8,
    pub turns: u32,
    pub violations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    pub solved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub overall_accuracy: f64,
    pub accuracy_by_family: BTreeMap<String, f64>,
    pub mean_turns: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nrmse_forecast: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_iou_anomaly: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub causal_success_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub policy: String,
    pub budget: u32,
    pub per_task: Vec<TaskRow>,
    /// Null for an empty task set.
    pub aggregates: Option<Aggregates>,
}

struct EpisodeOutcome {
    row: TaskRow,
    forecast_pair: Option<(f64, f64)>,
    anomaly_iou: Option<f64>,
    causal_ok: Option<bool>,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub t_max: u32,
    pub workers: usize,
    pub oracle_feedback: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { t_max: 20, workers: 4, oracle_feedback: false }
    }
}

pub fn run_bench(
    registry: &Registry,
    world: &WorldState,
    tasks: &[TaskInstance],
    policy: &dyn Policy,
    options: RunOptions,
    artifacts_dir: Option<&Path>,
) -> Result<RunReport, ToolError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| ToolError::new(ErrorCode::InvariantError, format!("thread pool: {e}")))?;
    let outcomes: Result<Vec<EpisodeOutcome>, ToolError> = pool.install(|| {
        tasks
            .par_iter()
            .map(|task| run_one(registry, world, task, policy, options, artifacts_dir))
            .collect()
    });
    let mut outcomes = outcomes?;
    outcomes.sort_by(|a, b| a.row.task_id.cmp(&b.row.task_id));
    Ok(build_report(policy.name(), options.t_max, outcomes))
}

fn run_one(
    registry: &Registry,
    world: &WorldState,
    task: &TaskInstance,
    policy: &dyn Policy,
    options: RunOptions,
    artifacts_dir: Option<&Path>,
) -> Result<EpisodeOutcome, ToolError> {
    let mut store = match artifacts_dir {
        Some(dir) => ArtifactStore::at_dir(&dir.join(&task.task_id))?,
        None => ArtifactStore::in_memory(),
    };
    let cfg = EpisodeConfig { t_max: options.t_max, oracle_feedback: options.oracle_feedback };
    let memory = run_episode(registry, world, task, policy, cfg, &mut store);
    store.write_index()?;
    if let Some(dir) = artifacts_dir {
        let path = dir.join(&task.task_id).join("trace.json");
        fs::write(&path, canonical::to_string(&memory))
            .map_err(|e| ToolError::new(ErrorCode::IoError, format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(summarize(task, policy, &memory))
}

fn summarize(task: &TaskInstance, policy: &dyn Policy, memory: &EpisodeMemory) -> EpisodeOutcome {
    let report = memory.final_report();
    let z = u8::from(report.is_some_and(|r| r.pass()));
    let violations = report
        .map(|r| r.violations.iter().map(|v| format!("{:?}", v.code)).collect())
        .unwrap_or_default();
    let row = TaskRow {
        task_id: task.task_id.clone(),
        family: task.family,
        z,
        turns: memory.turns_used(),
        violations,
        fault: policy.injected_fault(task).map(|f| f.name().to_string()),
        solved: memory.solved(),
    };

    let forecast_pair = match (&task.checker.numeric, task.family) {
        (Some(numeric), TaskFamily::Forecast) => memory.final_answer().and_then(|answer| {
            let raw = answer.get(&numeric.key)?.as_f64()?;
            let unit = answer
                .get("unit")
                .and_then(Value::as_str)
                .and_then(|s| crate::units::Unit::parse(s).ok())
                .unwrap_or(numeric.reference.unit);
            let predicted = Quantity { value: raw, unit }.convert(numeric.reference.unit).ok()?;
            Some((predicted.value, numeric.reference.value))
        }),
        _ => None,
    };

    let anomaly_iou = task.checker.spatial.as_ref().map(|spatial| {
        let truth: BTreeSet<String> = match &spatial.reference_mask {
            MaskSet::Days(days) => days.iter().map(i64::to_string).collect(),
            MaskSet::Parcels(ids) => ids.iter().cloned().collect(),
        };
        // A missing answer counts as predicting the empty set.
        let predicted: BTreeSet<String> = memory
            .final_answer()
            .and_then(|a| a.get(&spatial.key))
            .and_then(|v| v.as_array())
            .map(|rows| {
                rows.iter()
                    .filter_map(|row| match row {
                        Value::Array(pair) => pair.first().and_then(Value::as_i64).map(|t| t.to_string()),
                        Value::Number(n) => n.as_i64().map(|t| t.to_string()),
                        Value::String(s) => Some(s.clone()),
                        _ => None,
                    })
                    .collect()
            })
            .unwrap_or_default();
        set_iou(&predicted, &truth)
    });

    let causal_ok = task.checker.counterfactual.as_ref().map(|_| {
        memory.final_answer().is_some()
            && report.is_some_and(|r| {
                !r.violations
                    .iter()
                    .any(|v| v.tier == Tier::Counterfactual && v.code == ViolationCode::CausalDirectionViolated)
            })
    });

    EpisodeOutcome { row, forecast_pair, anomaly_iou, causal_ok }
}

fn build_report(policy: String, budget: u32, outcomes: Vec<EpisodeOutcome>) -> RunReport {
    if outcomes.is_empty() {
        return RunReport { policy, budget, per_task: Vec::new(), aggregates: None };
    }
    let n = outcomes.len() as f64;
    let overall_accuracy = outcomes.iter().filter(|o| o.row.z == 1).count() as f64 / n;
    let mean_turns = outcomes.iter().map(|o| o.row.turns as f64).sum::<f64>() / n;

    let mut by_family: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for o in &outcomes {
        let entry = by_family.entry(o.row.family.name().to_string()).or_insert((0, 0));
        entry.0 += usize::from(o.row.z == 1);
        entry.1 += 1;
    }
    let accuracy_by_family = by_family
        .into_iter()
        .map(|(family, (hits, total))| (family, hits as f64 / total as f64))
        .collect();

    let pairs: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o.forecast_pair).collect();
    let nrmse_forecast = if pairs.is_empty() {
        None
    } else {
        let (pred, truth): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        crate::protocol::metrics::nrmse(&pred, &truth).ok()
    };

    let ious: Vec<f64> = outcomes.iter().filter_map(|o| o.anomaly_iou).collect();
    let mean_iou_anomaly =
        (!ious.is_empty()).then(|| ious.iter().sum::<f64>() / ious.len() as f64);

    let causal: Vec<bool> = outcomes.iter().filter_map(|o| o.causal_ok).collect();
    let causal_success_rate = (!causal.is_empty())
        .then(|| causal.iter().filter(|ok| **ok).count() as f64 / causal.len() as f64);

    RunReport {
        policy,
        budget,
        per_task: outcomes.into_iter().map(|o| o.row).collect(),
        aggregates: Some(Aggregates {
            overall_accuracy,
            accuracy_by_family,
            mean_turns,
            nrmse_forecast,
            mean_iou_anomaly,
            causal_success_rate,
        }),
    }
}

/// Deterministic per-task stream for anything a policy might randomize;
/// exposed for external policies that want reproducibility.
pub fn task_stream(task_id: &str) -> super::rng::SplitMix64 {
    super::rng::SplitMix64::new(fnv64(task_id))
}

/// Grade externally produced answers (the standalone `check` entry point).
/// Answers map task ids to answer JSON; artifacts (for the grounding tier)
/// are loaded from `artifacts_dir/<task_id>/` when present, otherwise the
/// answer is judged against an empty audit trail.
pub fn check_answers(
    world: &WorldState,
    tasks: &[TaskInstance],
    answers: &BTreeMap<String, Value>,
    artifacts_dir: Option<&Path>,
) -> Vec<TaskRow> {
    let mut rows = Vec::new();
    for task in tasks {
        let Some(answer) = answers.get(&task.task_id) else { continue };
        let artifacts = artifacts_dir
            .map(|dir| dir.join(&task.task_id))
            .filter(|p| p.is_dir())
            .and_then(|p| ArtifactStore::load_dir(&p).ok())
            .unwrap_or_default();
        let report = crate::protocol::checker::check(answer, &artifacts, task, world);
        rows.push(TaskRow {
            task_id: task.task_id.clone(),
            family: task.family,
            z: report.z,
            turns: 0,
            violations: report.violations.iter().map(|v| format!("{:?}", v.code)).collect(),
            fault: None,
            solved: report.pass(),
        });
    }
    rows.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    rows
}
