//! The execute–observe–refine episode loop.
//!
//! Each turn: the policy proposes a plan, the sandbox executes it, and any
//! answer is graded by the full checker. A passing answer stops the episode
//! immediately — no further plans are proposed. Otherwise reflection converts
//! the turn's diagnostics into a patch for the next turn, until the budget is
//! exhausted; the best-effort result is the turn with the fewest violations.
//!
//! By default the numeric tier (which compares against sealed reference
//! values) is redacted from what the agent sees mid-episode; `oracle_feedback`
//! restores the full report as feedback. Grading always uses the full report.

use super::exec::{execute_plan, ExecutionResult, StepObservation, StepOutcome, TurnArtifact};
use super::plan::PlanProgram;
use super::policy::Policy;
use super::reflect::reflect;
use crate::model::WorldState;
use crate::protocol::{checker, DiagnosticReport, TaskInstance};
use crate::toolkit::{ArtifactStore, Registry, ToolError};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Running,
    Solved,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub plan: PlanProgram,
    pub observations: Vec<StepObservation>,
    pub artifacts: Vec<TurnArtifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<Value>,
    /// Full grading report (may rely on sealed references).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DiagnosticReport>,
    /// The report as shown to the agent (redacted unless oracle feedback).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible_report: Option<DiagnosticReport>,
}

impl TurnRecord {
    pub fn first_step_error(&self) -> Option<&ToolError> {
        self.observations.iter().find_map(|o| match &o.outcome {
            StepOutcome::Err(e) => Some(e),
            StepOutcome::Ok(_) => None,
        })
    }

    fn violation_count(&self) -> Option<usize> {
        self.report.as_ref().map(|r| r.violations.len())
    }
}

/// Episode memory; its canonical serialization is the trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMemory {
    pub task_id: String,
    pub turns: Vec<TurnRecord>,
    pub status: EpisodeStatus,
    #[serde(skip)]
    pub pending_patch: Option<PlanProgram>,
}

impl EpisodeMemory {
    fn new(task_id: &str) -> EpisodeMemory {
        EpisodeMemory {
            task_id: task_id.to_string(),
            turns: Vec::new(),
            status: EpisodeStatus::Running,
            pending_patch: None,
        }
    }

    pub fn solved(&self) -> bool {
        self.status == EpisodeStatus::Solved
    }

    pub fn turns_used(&self) -> u32 {
        self.turns.len() as u32
    }

    /// Index of the turn whose answer to report: the solving turn, else the
    /// answered turn with the fewest violations (earliest wins ties).
    pub fn best_turn(&self) -> Option<usize> {
        self.turns
            .iter()
            .enumerate()
            .filter(|(_, t)| t.answer.is_some() && t.report.is_some())
            .min_by_key(|(i, t)| (t.violation_count().unwrap_or(usize::MAX), *i))
            .map(|(i, _)| i)
    }

    pub fn final_answer(&self) -> Option<&Value> {
        self.best_turn().and_then(|i| self.turns[i].answer.as_ref())
    }

    pub fn final_report(&self) -> Option<&DiagnosticReport> {
        self.best_turn().and_then(|i| self.turns[i].report.as_ref())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpisodeConfig {
    /// Loop budget; the effective cap is `min(t_max, task.budget)`.
    pub t_max: u32,
    /// Feed the full checker report (numeric tier included) back mid-episode.
    pub oracle_feedback: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig { t_max: 20, oracle_feedback: false }
    }
}

pub fn run_episode(
    registry: &Registry,
    world: &WorldState,
    task: &TaskInstance,
    policy: &dyn Policy,
    cfg: EpisodeConfig,
    store: &mut ArtifactStore,
) -> EpisodeMemory {
    let mut memory = EpisodeMemory::new(&task.task_id);
    let budget = cfg.t_max.min(task.budget).max(1);

    for turn_index in 0..budget {
        let plan = match policy.propose(task, &memory) {
            Ok(plan) => plan,
            Err(e) => {
                // Transport/parse failure: the turn is consumed and its
                // diagnostic becomes the reflection signal.
                memory.turns.push(TurnRecord {
                    plan: PlanProgram::default(),
                    observations: vec![StepObservation {
                        step_id: "propose".into(),
                        outcome: StepOutcome::Err(e),
                    }],
                    artifacts: Vec::new(),
                    answer: None,
                    report: None,
                    visible_report: None,
                });
                memory.pending_patch = None;
                continue;
            }
        };
        memory.pending_patch = None;

        let exec: ExecutionResult = match execute_plan(registry, world, &plan, store) {
            Ok(exec) => exec,
            Err(plan_error) => ExecutionResult {
                observations: vec![StepObservation {
                    step_id: "plan".into(),
                    outcome: StepOutcome::Err(plan_error),
                }],
                artifacts: Vec::new(),
                answer: None,
            },
        };

        let report = exec
            .answer
            .as_ref()
            .map(|answer| checker::check(answer, store.artifacts(), task, world));
        let visible_report = report.as_ref().map(|r| {
            if cfg.oracle_feedback {
                r.clone()
            } else {
                r.without_numeric_tier()
            }
        });

        memory.turns.push(TurnRecord {
            plan,
            observations: exec.observations,
            artifacts: exec.artifacts,
            answer: exec.answer,
            report,
            visible_report,
        });

        let last = memory.turns.last().expect("just pushed");
        if last.report.as_ref().is_some_and(DiagnosticReport::pass) {
            memory.status = EpisodeStatus::Solved;
            break;
        }
        if turn_index + 1 < budget {
            memory.pending_patch = Some(reflect(task, last));
        }
    }

    if memory.status != EpisodeStatus::Solved {
        memory.status = EpisodeStatus::Exhausted;
    }
    memory.pending_patch = None;
    memory
}
