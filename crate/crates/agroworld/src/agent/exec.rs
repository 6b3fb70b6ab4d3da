//! Sandboxed plan execution.
//!
//! Steps run in order through the registry. A failing step records its
//! diagnostic and halts the remaining steps (partial observations are kept);
//! the answer template is instantiated only when every step it references
//! succeeded. Execution never mutates the world — the only writes go to the
//! episode's artifact store.

use super::plan::{collect_refs, resolve, PlanProgram};
use crate::model::WorldState;
use crate::toolkit::{ArtifactStore, ErrorCode, Registry, ToolCall, ToolError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepObservation {
    pub step_id: String,
    #[serde(flatten)]
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StepOutcome {
    #[serde(rename = "ok")]
    Ok(Value),
    #[serde(rename = "err")]
    Err(ToolError),
}

/// Pointer from a plan step to the artifact it appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnArtifact {
    pub step_id: String,
    pub seq: u32,
    pub tool: String,
    pub prov: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub observations: Vec<StepObservation>,
    pub artifacts: Vec<TurnArtifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<Value>,
}

impl ExecutionResult {
    pub fn first_error(&self) -> Option<&ToolError> {
        self.observations.iter().find_map(|o| match &o.outcome {
            StepOutcome::Err(e) => Some(e),
            StepOutcome::Ok(_) => None,
        })
    }
}

/// Run a plan. Structural problems (bad refs, duplicate ids, oversize plans)
/// fail before any execution; runtime tool errors become step observations.
pub fn execute_plan(
    registry: &Registry,
    world: &WorldState,
    plan: &PlanProgram,
    store: &mut ArtifactStore,
) -> Result<ExecutionResult, ToolError> {
    plan.validate()?;
    let mut result = ExecutionResult::default();
    let mut outputs: BTreeMap<String, Value> = BTreeMap::new();

    for step in &plan.steps {
        let mut resolved = BTreeMap::new();
        let mut step_error: Option<ToolError> = None;
        for (name, raw) in &step.args {
            match resolve(raw, &outputs) {
                Ok(v) => {
                    resolved.insert(name.clone(), v);
                }
                Err(e) => {
                    step_error = Some(e.with("step_id", &step.id).with("arg", name));
                    break;
                }
            }
        }
        let outcome = match step_error {
            Some(e) => Err(e),
            None => registry
                .invoke(world, &ToolCall { tool: step.tool.clone(), args: resolved })
                .map_err(|e| e.with("step_id", &step.id).with("tool", &step.tool)),
        };
        match outcome {
            Ok((value, artifact)) => {
                let prov = artifact.prov.clone();
                let seq = store.append(&step.tool, artifact)?;
                result.artifacts.push(TurnArtifact {
                    step_id: step.id.clone(),
                    seq,
                    tool: step.tool.clone(),
                    prov,
                });
                result.observations.push(StepObservation {
                    step_id: step.id.clone(),
                    outcome: StepOutcome::Ok(value.clone()),
                });
                outputs.insert(step.id.clone(), value);
            }
            Err(e) => {
                result.observations.push(StepObservation {
                    step_id: step.id.clone(),
                    outcome: StepOutcome::Err(e),
                });
                break;
            }
        }
    }

    if let Some(template) = &plan.answer {
        let all_present = collect_refs(template)
            .iter()
            .all(|(step, _)| outputs.contains_key(step));
        if all_present {
            match resolve(template, &outputs) {
                Ok(answer) => result.answer = Some(answer),
                Err(e) => {
                    result.observations.push(StepObservation {
                        step_id: "answer".to_string(),
                        outcome: StepOutcome::Err(
                            ToolError::new(ErrorCode::PlanError, format!("answer template: {}", e.message))
                                .with("arg", "answer"),
                        ),
                    });
                }
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::plan::PlanStep;
    use crate::model::testutil::tiny_world;
    use serde_json::json;

    fn step(id: &str, tool: &str, args: Value) -> PlanStep {
        let map = match args {
            Value::Object(m) => m.into_iter().collect(),
            _ => unreachable!(),
        };
        PlanStep { id: id.into(), tool: tool.into(), args: map }
    }

    #[test]
    fn two_step_plan_with_refs_and_answer() {
        let world = tiny_world();
        let registry = Registry::full();
        let mut store = ArtifactStore::in_memory();
        let plan = PlanProgram {
            steps: vec![
                step("s1", "geo.filter_parcels", json!({"crop": "maize"})),
                step(
                    "s2",
                    "pred.yield",
                    json!({"parcel": {"ref": "s1", "path": "parcel_ids.0"}}),
                ),
            ],
            answer: Some(json!({
                "parcel_id": {"ref": "s1", "path": "parcel_ids.0"},
                "unit": "kg_per_ha",
                "value": {"ref": "s2", "path": "value"},
            })),
        };
        let out = execute_plan(&registry, &world, &plan, &mut store).unwrap();
        assert!(out.first_error().is_none());
        let answer = out.answer.unwrap();
        assert_eq!(answer["parcel_id"], json!("p1"));
        assert!(answer["value"].as_f64().unwrap() > 0.0);
        assert_eq!(store.artifacts().len(), 2);
        assert_eq!(out.artifacts[1].step_id, "s2");
    }

    #[test]
    fn failing_step_halts_and_keeps_partials() {
        let world = tiny_world();
        let registry = Registry::full();
        let mut store = ArtifactStore::in_memory();
        let plan = PlanProgram {
            steps: vec![
                step("s1", "geo.filter_parcels", json!({})),
                step("s2", "rs.load", json!({"band": "missing_band", "time_range": [0, 5]})),
                step("s3", "geo.filter_parcels", json!({})),
            ],
            answer: Some(json!({"ids": {"ref": "s3", "path": "parcel_ids"}})),
        };
        let out = execute_plan(&registry, &world, &plan, &mut store).unwrap();
        assert_eq!(out.observations.len(), 2);
        let err = out.first_error().unwrap();
        assert_eq!(err.code, ErrorCode::UnknownBand);
        assert_eq!(err.detail("step_id").unwrap(), "s2");
        // s3 never ran, so the answer that references it is withheld.
        assert!(out.answer.is_none());
        assert_eq!(store.artifacts().len(), 1);
    }

    #[test]
    fn forward_reference_fails_before_execution() {
        let world = tiny_world();
        let registry = Registry::full();
        let mut store = ArtifactStore::in_memory();
        let plan = PlanProgram {
            steps: vec![step("s1", "tbl.pick", json!({"table": {"ref": "s2"}, "key": "x"}))],
            answer: None,
        };
        let err = execute_plan(&registry, &world, &plan, &mut store).unwrap_err();
        assert_eq!(err.code, ErrorCode::PlanError);
        assert!(store.artifacts().is_empty());
    }
}
