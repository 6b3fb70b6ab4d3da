//! Plan-proposal policies.
//!
//! `scripted` replays the task's reference plan. `faulty` replays it with one
//! deterministically injected defect drawn from the classic failure modes
//! (missing alignment, wrong units, shifted windows, misnamed columns,
//! missing schema keys, ungrounded literals); each fault maps to exactly one
//! expected diagnostic code, which is what makes fault-inversion testable.
//! Both are deterministic functions of the task, so whole benchmark runs
//! replay bit-for-bit. The remote policy lives in [`super::remote`].

use super::episode::EpisodeMemory;
use super::plan::{as_ref, collect_refs, PlanProgram, PlanStep};
use crate::protocol::{TaskFamily, TaskInstance};
use crate::toolkit::ToolError;
use serde_json::{json, Value};

pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    /// Propose the next plan. Implementations must honor a pending reflection
    /// patch recorded in memory.
    fn propose(&self, task: &TaskInstance, memory: &EpisodeMemory) -> Result<PlanProgram, ToolError>;

    /// Which fault this policy injects into the task's first turn, if any.
    fn injected_fault(&self, task: &TaskInstance) -> Option<FaultKind> {
        let _ = task;
        None
    }
}

/// Replays the reference plan; solves every well-generated task in one turn.
pub struct ScriptedPolicy;

impl Policy for ScriptedPolicy {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn propose(&self, task: &TaskInstance, memory: &EpisodeMemory) -> Result<PlanProgram, ToolError> {
        if let Some(patch) = &memory.pending_patch {
            return Ok(patch.clone());
        }
        Ok(task.reference_plan.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    WrongCrs,
    WrongUnit,
    WrongWindow,
    WrongColumn,
    MissingKey,
    UngroundedNumber,
}

pub const ALL_FAULTS: [FaultKind; 6] = [
    FaultKind::WrongCrs,
    FaultKind::WrongUnit,
    FaultKind::WrongWindow,
    FaultKind::WrongColumn,
    FaultKind::MissingKey,
    FaultKind::UngroundedNumber,
];

impl FaultKind {
    pub fn name(&self) -> &'static str {
        match self {
            FaultKind::WrongCrs => "wrong_crs",
            FaultKind::WrongUnit => "wrong_unit",
            FaultKind::WrongWindow => "wrong_window",
            FaultKind::WrongColumn => "wrong_column",
            FaultKind::MissingKey => "missing_key",
            FaultKind::UngroundedNumber => "ungrounded_number",
        }
    }

    pub fn parse(s: &str) -> Option<FaultKind> {
        ALL_FAULTS.iter().copied().find(|f| f.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultSpec {
    Fixed(FaultKind),
    /// Rotate deterministically through the faults applicable to each task.
    Mixed,
}

pub struct FaultyPolicy {
    pub spec: FaultSpec,
}

impl FaultyPolicy {
    pub fn new(spec: FaultSpec) -> FaultyPolicy {
        FaultyPolicy { spec }
    }

    fn pick(&self, task: &TaskInstance) -> Option<FaultKind> {
        match self.spec {
            FaultSpec::Fixed(kind) => applicable(kind, task).then_some(kind),
            FaultSpec::Mixed => {
                let candidates: Vec<FaultKind> =
                    ALL_FAULTS.into_iter().filter(|k| applicable(*k, task)).collect();
                if candidates.is_empty() {
                    return None;
                }
                Some(candidates[(fnv64(&task.task_id) as usize) % candidates.len()])
            }
        }
    }
}

impl Policy for FaultyPolicy {
    fn name(&self) -> String {
        match self.spec {
            FaultSpec::Fixed(k) => format!("faulty:{}", k.name()),
            FaultSpec::Mixed => "faulty:mixed".into(),
        }
    }

    fn propose(&self, task: &TaskInstance, memory: &EpisodeMemory) -> Result<PlanProgram, ToolError> {
        if let Some(patch) = &memory.pending_patch {
            return Ok(patch.clone());
        }
        match self.pick(task) {
            Some(kind) => Ok(inject(kind, task)),
            None => Ok(task.reference_plan.clone()),
        }
    }

    fn injected_fault(&self, task: &TaskInstance) -> Option<FaultKind> {
        self.pick(task)
    }
}

fn fnv64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The sibling symbol used to mislabel a quantity of the same dimension.
pub fn sibling_unit(symbol: &str) -> Option<&'static str> {
    match symbol {
        "mm" => Some("m"),
        "m" => Some("mm"),
        "kg" => Some("g"),
        "g" => Some("kg"),
        "t" => Some("kg"),
        "day" => Some("hour"),
        "hour" => Some("day"),
        _ => None,
    }
}

fn answer_object(task: &TaskInstance) -> Option<&serde_json::Map<String, Value>> {
    task.reference_plan.answer.as_ref().and_then(Value::as_object)
}

fn first_step_with_arg<'a>(plan: &'a PlanProgram, arg: &str) -> Option<(usize, &'a PlanStep)> {
    plan.steps
        .iter()
        .enumerate()
        .find(|(_, s)| s.args.contains_key(arg))
}

/// Whether this fault can be expressed against the task's reference plan
/// (and, for window shifts, whether the shift actually leaves the data).
pub fn applicable(kind: FaultKind, task: &TaskInstance) -> bool {
    let plan = &task.reference_plan;
    match kind {
        FaultKind::WrongCrs => plan.steps.iter().any(|s| s.tool == "geo.reproject"),
        FaultKind::WrongUnit => {
            let Some(answer) = answer_object(task) else { return false };
            let Some(unit) = answer.get("unit").and_then(Value::as_str) else { return false };
            sibling_unit(unit).is_some()
                && answer.get("value").is_some_and(|v| as_ref(v).is_some())
        }
        FaultKind::WrongWindow => match first_step_with_arg(plan, "time_range") {
            Some((_, step)) => match step.args.get("time_range").and_then(Value::as_array) {
                Some(pair) => match pair[1].as_i64() {
                    Some(end) => end + WINDOW_SHIFT_DAYS > task.bindings.season[1],
                    None => false,
                },
                None => false,
            },
            None => false,
        },
        FaultKind::WrongColumn => {
            first_step_with_arg(plan, "band").is_some() || first_step_with_arg(plan, "var").is_some()
        }
        FaultKind::MissingKey => answer_object(task).is_some_and(|a| !a.is_empty()),
        FaultKind::UngroundedNumber => {
            answer_object(task).is_some_and(|a| a.contains_key(ungrounded_target(task.family)))
        }
    }
}

pub const WINDOW_SHIFT_DAYS: i64 = 30;

fn ungrounded_target(family: TaskFamily) -> &'static str {
    match family {
        TaskFamily::Lookup | TaskFamily::Forecast => "value",
        TaskFamily::Counterfactual => "magnitude",
        TaskFamily::Anomaly => "anomalies",
    }
}

/// Apply one fault to the reference plan. Callers must have checked
/// applicability.
pub fn inject(kind: FaultKind, task: &TaskInstance) -> PlanProgram {
    let mut plan = task.reference_plan.clone();
    match kind {
        FaultKind::WrongCrs => {
            // Drop the alignment step and wire its input straight through.
            let idx = plan
                .steps
                .iter()
                .position(|s| s.tool == "geo.reproject")
                .expect("applicability checked");
            let removed = plan.steps.remove(idx);
            let replacement = removed.args.get("parcels").cloned().unwrap_or(Value::Null);
            for step in &mut plan.steps {
                for value in step.args.values_mut() {
                    replace_refs_to(value, &removed.id, &replacement);
                }
            }
            if let Some(answer) = &mut plan.answer {
                replace_refs_to(answer, &removed.id, &replacement);
            }
        }
        FaultKind::WrongUnit => {
            let fault_id = plan.fresh_id("w");
            let answer = plan.answer.as_mut().and_then(Value::as_object_mut).expect("checked");
            let unit = answer.get("unit").and_then(Value::as_str).expect("checked").to_string();
            let wrong = sibling_unit(&unit).expect("checked").to_string();
            let (source_step, source_path) = as_ref(answer.get("value").expect("checked"))
                .map(|(s, p)| (s.to_string(), p.to_string()))
                .expect("checked");
            let quantity_path = match source_path.as_str() {
                "value" => String::new(),
                p if p.ends_with(".value") => p[..p.len() - ".value".len()].to_string(),
                p => p.to_string(),
            };
            let mut args = std::collections::BTreeMap::new();
            args.insert(
                "value".to_string(),
                if quantity_path.is_empty() {
                    json!({"ref": source_step})
                } else {
                    json!({"ref": source_step, "path": quantity_path})
                },
            );
            args.insert("target".to_string(), json!(wrong));
            plan.steps.push(PlanStep { id: fault_id.clone(), tool: "unit.convert".into(), args });
            answer.insert("value".to_string(), json!({"ref": fault_id, "path": "value"}));
            answer.insert("unit".to_string(), json!(wrong));
        }
        FaultKind::WrongWindow => {
            let (idx, _) = first_step_with_arg(&plan, "time_range").expect("checked");
            let arg = plan.steps[idx].args.get_mut("time_range").expect("checked");
            let pair = arg.as_array().expect("checked");
            let (a, b) = (pair[0].as_i64().unwrap(), pair[1].as_i64().unwrap());
            *arg = json!([a + WINDOW_SHIFT_DAYS, b + WINDOW_SHIFT_DAYS]);
        }
        FaultKind::WrongColumn => {
            if let Some((idx, step)) = first_step_with_arg(&plan, "band") {
                let band = step.args["band"].as_str().unwrap_or("band").to_string();
                plan.steps[idx].args.insert("band".into(), json!(format!("{band}2")));
            } else if let Some((idx, step)) = first_step_with_arg(&plan, "var") {
                let var = step.args["var"].as_str().unwrap_or("var").to_string();
                let wrong = var
                    .rsplit_once('_')
                    .map(|(head, _)| head.to_string())
                    .unwrap_or_else(|| format!("{var}2"));
                plan.steps[idx].args.insert("var".into(), json!(wrong));
            }
        }
        FaultKind::MissingKey => {
            let answer = plan.answer.as_mut().and_then(Value::as_object_mut).expect("checked");
            let victim = ["unit", "action", "parcel_id"]
                .iter()
                .find(|k| answer.contains_key(**k))
                .map(|k| k.to_string())
                .or_else(|| answer.keys().next().cloned())
                .expect("checked non-empty");
            answer.remove(&victim);
        }
        FaultKind::UngroundedNumber => {
            let key = ungrounded_target(task.family);
            let answer = plan.answer.as_mut().and_then(Value::as_object_mut).expect("checked");
            // Literals chosen to sit far from any payload value at the
            // checker's near-exact grounding tolerance.
            let literal = match task.family {
                TaskFamily::Lookup | TaskFamily::Forecast => json!(9999.917),
                TaskFamily::Counterfactual => json!(77.77),
                TaskFamily::Anomaly => json!([[0, 9.917]]),
            };
            answer.insert(key.to_string(), literal);
        }
    }
    plan
}

fn replace_refs_to(v: &mut Value, step_id: &str, replacement: &Value) {
    if let Some((target, _)) = as_ref(v) {
        if target == step_id {
            *v = replacement.clone();
        }
        return;
    }
    match v {
        Value::Array(items) => items.iter_mut().for_each(|i| replace_refs_to(i, step_id, replacement)),
        Value::Object(map) => map.values_mut().for_each(|i| replace_refs_to(i, step_id, replacement)),
        _ => {}
    }
}

/// Sanity guard used by tests: a faulted plan must remain structurally valid
/// (the defect is semantic, not syntactic).
pub fn faulted_plan_is_wellformed(plan: &PlanProgram) -> bool {
    plan.validate().is_ok()
        && plan
            .answer
            .iter()
            .flat_map(|a| collect_refs(a))
            .all(|(step, _)| plan.step_index(&step).is_some())
}
