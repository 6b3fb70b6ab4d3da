//! Verifiable task definitions and the executable checker.
//!
//! A [`TaskInstance`] binds a natural-language query to concrete data
//! handles, a rigid output schema, a checker configuration with sealed
//! reference values, a turn budget, and a deterministic reference plan that is
//! guaranteed (at generation time) to pass its own checker.
//!
//! [`checker::check`] grades an answer against the hierarchical tiers —
//! schema, numeric/spatial tolerance, counterfactual consistency, physical
//! sanity and grounding — and always returns a [`DiagnosticReport`]; failures
//! are diagnostics, never exceptions.

pub mod checker;
pub mod metrics;

use crate::agent::plan::PlanProgram;
use crate::align::AlignmentPolicy;
use crate::canonical;
use crate::sim::{DeltaTarget, Intervention};
use crate::toolkit::{Artifact, ArtifactStore, ErrorCode, Registry, ToolError};
use crate::units::{Quantity, Unit};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskFamily {
    Lookup,
    Forecast,
    Anomaly,
    Counterfactual,
}

pub const ALL_FAMILIES: [TaskFamily; 4] = [
    TaskFamily::Lookup,
    TaskFamily::Forecast,
    TaskFamily::Anomaly,
    TaskFamily::Counterfactual,
];

impl TaskFamily {
    pub fn name(&self) -> &'static str {
        match self {
            TaskFamily::Lookup => "lookup",
            TaskFamily::Forecast => "forecast",
            TaskFamily::Anomaly => "anomaly",
            TaskFamily::Counterfactual => "counterfactual",
        }
    }

    pub fn parse(s: &str) -> Option<TaskFamily> {
        ALL_FAMILIES.iter().copied().find(|f| f.name() == s)
    }
}

/// Concrete data handles a task is bound to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bindings {
    pub world_id: String,
    pub season: [i64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parcel_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_range: Option<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub thresholds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    String,
    Number,
    Quantity,
    ParcelIdList,
    Series,
}

impl FieldKind {
    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::String => "string",
            FieldKind::Number => "number",
            FieldKind::Quantity => "quantity",
            FieldKind::ParcelIdList => "parcel_id_list",
            FieldKind::Series => "series",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub key: String,
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Unit>,
    #[serde(rename = "enum", default, skip_serializing_if = "Option::is_none")]
    pub allowed: Option<Vec<Value>>,
}

impl FieldSpec {
    pub fn new(key: &str, kind: FieldKind) -> FieldSpec {
        FieldSpec { key: key.to_string(), kind, unit: None, allowed: None }
    }

    pub fn with_unit(mut self, unit: Unit) -> FieldSpec {
        self.unit = Some(unit);
        self
    }

    pub fn with_allowed(mut self, allowed: Vec<Value>) -> FieldSpec {
        self.allowed = Some(allowed);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSchema {
    pub required: Vec<FieldSpec>,
}

impl OutputSchema {
    pub fn field(&self, key: &str) -> Option<&FieldSpec> {
        self.required.iter().find(|f| f.key == key)
    }
}

fn default_rel_tol() -> f64 {
    0.05
}

/// Numeric tolerance tier: `|answer − reference| < max(abs_tol, rel_tol·|reference|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericCheck {
    pub key: String,
    /// Sealed reference value `y*`.
    pub reference: Quantity,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Defaults to 1e-9 in the reference unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<Quantity>,
}

impl NumericCheck {
    pub fn new(key: &str, reference: Quantity) -> NumericCheck {
        NumericCheck { key: key.to_string(), reference, rel_tol: default_rel_tol(), abs_tol: None }
    }

    /// The effective tolerance radius in the reference unit.
    pub fn tolerance(&self) -> f64 {
        let abs = match &self.abs_tol {
            Some(q) => q.convert(self.reference.unit).map(|c| c.value.abs()).unwrap_or(1e-9),
            None => 1e-9,
        };
        abs.max(self.rel_tol * self.reference.value.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualCheck {
    /// Minimum effect size Δ (> 0).
    pub delta: f64,
    pub target: DeltaTarget,
}

/// Reference set for anomaly scoring by intersection-over-union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSet {
    Days(Vec<i64>),
    Parcels(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialCheck {
    pub key: String,
    pub reference_mask: MaskSet,
    pub min_iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalCheck {
    pub tau_min: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub required_units: BTreeMap<String, Unit>,
}

impl Default for PhysicalCheck {
    fn default() -> Self {
        PhysicalCheck { tau_min: 0.3, required_units: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterfactual: Option<CounterfactualCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial: Option<SpatialCheck>,
    pub physical: PhysicalCheck,
}

impl CheckerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.numeric.is_none() && self.counterfactual.is_none() && self.spatial.is_none() {
            return Err("checker must configure at least one tier beyond schema".into());
        }
        if let Some(cf) = &self.counterfactual {
            if cf.delta <= 0.0 {
                return Err("counterfactual delta must be positive".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Schema,
    Numeric,
    Counterfactual,
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationCode {
    SchemaError,
    ToleranceExceeded,
    CausalDirectionViolated,
    UnitError,
    SpatialMisalignment,
    LowCoverage,
    TemporalWindowError,
    UngroundedClaim,
}

/// Pointer to the artifact payload leaf a violation refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cite {
    pub prov: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tier: Tier,
    pub code: ViolationCode,
    pub path: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub observed: Value,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub expected: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cite: Option<Cite>,
}

/// The checker verdict: a binary pass bit plus structured diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub z: u8,
    pub violations: Vec<Violation>,
}

impl DiagnosticReport {
    pub fn from_violations(violations: Vec<Violation>) -> DiagnosticReport {
        DiagnosticReport { z: u8::from(violations.is_empty()), violations }
    }

    pub fn pass(&self) -> bool {
        self.z == 1
    }

    /// View with the sealed-reference tier removed: what an agent may see
    /// mid-episode when oracle feedback is off.
    pub fn without_numeric_tier(&self) -> DiagnosticReport {
        DiagnosticReport {
            z: self.z,
            violations: self
                .violations
                .iter()
                .filter(|v| v.tier != Tier::Numeric)
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task_id: String,
    pub q: String,
    pub bindings: Bindings,
    pub output_schema: OutputSchema,
    pub checker: CheckerConfig,
    pub budget: u32,
    pub family: TaskFamily,
    pub alignment: AlignmentPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervention: Option<Intervention>,
    pub reference_plan: PlanProgram,
}

impl TaskInstance {
    pub fn validate(&self) -> Result<(), ToolError> {
        if self.budget < 1 {
            return Err(ToolError::new(ErrorCode::InvariantError, "task budget must be at least 1"));
        }
        self.checker
            .validate()
            .map_err(|m| ToolError::new(ErrorCode::InvariantError, m).with("task_id", &self.task_id))?;
        self.reference_plan.validate()
    }
}

/// Execute a task's reference plan and return its answer and artifacts.
///
/// Generation enforces that this answer passes the task's own checker, so a
/// failure here marks the task invalid.
pub fn run_reference(
    registry: &Registry,
    task: &TaskInstance,
    world: &crate::model::WorldState,
) -> Result<(Value, Vec<Artifact>), ToolError> {
    let mut store = ArtifactStore::in_memory();
    let exec = crate::agent::execute_plan(registry, world, &task.reference_plan, &mut store)?;
    if let Some(err) = exec.first_error() {
        return Err(err.clone());
    }
    let answer = exec.answer.ok_or_else(|| {
        ToolError::new(ErrorCode::PlanError, "reference plan produced no answer").with("task_id", &task.task_id)
    })?;
    Ok((answer, store.into_artifacts()))
}

/// Write a task set directory: one canonical JSON file per task plus
/// `tasks_index.json`.
pub fn save_tasks(tasks: &[TaskInstance], dir: &Path) -> Result<(), ToolError> {
    fs::create_dir_all(dir)
        .map_err(|e| ToolError::new(ErrorCode::IoError, format!("cannot create {}: {e}", dir.display())))?;
    for task in tasks {
        let path = dir.join(format!("{}.json", task.task_id));
        fs::write(&path, canonical::to_string(task))
            .map_err(|e| ToolError::new(ErrorCode::IoError, format!("cannot write {}: {e}", path.display())))?;
    }
    let ids: Vec<&str> = tasks.iter().map(|t| t.task_id.as_str()).collect();
    let index = serde_json::json!({ "tasks": ids });
    fs::write(dir.join("tasks_index.json"), canonical::to_string(&index))
        .map_err(|e| ToolError::new(ErrorCode::IoError, format!("cannot write index: {e}")))?;
    Ok(())
}

pub fn load_tasks(dir: &Path) -> Result<Vec<TaskInstance>, ToolError> {
    let index_path = dir.join("tasks_index.json");
    let text = fs::read_to_string(&index_path)
        .map_err(|e| ToolError::new(ErrorCode::IoError, format!("cannot read {}: {e}", index_path.display())))?;
    let index: Value = serde_json::from_str(&text)
        .map_err(|e| ToolError::new(ErrorCode::ParseError, format!("{}: {e}", index_path.display())))?;
    let ids = index["tasks"]
        .as_array()
        .ok_or_else(|| ToolError::new(ErrorCode::ParseError, "tasks_index.json must carry a \"tasks\" array"))?;
    let mut tasks = Vec::with_capacity(ids.len());
    for id in ids {
        let id = id
            .as_str()
            .ok_or_else(|| ToolError::new(ErrorCode::ParseError, "task ids must be strings"))?;
        let path = dir.join(format!("{id}.json"));
        let text = fs::read_to_string(&path)
            .map_err(|e| ToolError::new(ErrorCode::IoError, format!("cannot read {}: {e}", path.display())))?;
        let task: TaskInstance = serde_json::from_str(&text)
            .map_err(|e| ToolError::new(ErrorCode::ParseError, format!("{}: {e}", path.display())))?;
        task.validate()?;
        tasks.push(task);
    }
    Ok(tasks)
}
