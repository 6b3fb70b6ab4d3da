//! Rule-based reflection: turn a failed turn's diagnostics into a plan patch.
//!
//! Each rule is keyed by a diagnostic code and uses only information an agent
//! legitimately has: the failing plan, the structured diagnostic (including
//! artifact citations), the task's public bindings and output schema, and the
//! turn's own artifacts. Reflection is total — when no rule applies the plan
//! is resubmitted unchanged and the turn still counts against the budget.

use super::episode::TurnRecord;
use super::plan::{as_ref, PlanProgram, PlanStep};
use crate::protocol::{FieldKind, TaskInstance, ViolationCode};
use crate::toolkit::{ErrorCode, ToolError};
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// Compute the next plan from the last turn. Total function.
pub fn reflect(task: &TaskInstance, turn: &TurnRecord) -> PlanProgram {
    if let Some(error) = turn.first_step_error() {
        if let Some(patched) = patch_step_error(task, &turn.plan, error) {
            return patched;
        }
        return turn.plan.clone();
    }
    if let Some(report) = &turn.visible_report {
        for violation in &report.violations {
            if let Some(patched) = patch_violation(task, turn, violation) {
                return patched;
            }
        }
    }
    turn.plan.clone()
}

fn detail_str<'a>(e: &'a ToolError, key: &str) -> Option<&'a str> {
    e.detail(key).and_then(Value::as_str)
}

fn detail_pair(e: &ToolError, key: &str) -> Option<(i64, i64)> {
    let arr = e.detail(key)?.as_array()?;
    Some((arr.first()?.as_i64()?, arr.get(1)?.as_i64()?))
}

fn offending_step_index(plan: &PlanProgram, e: &ToolError) -> Option<usize> {
    plan.step_index(detail_str(e, "step_id")?)
}

fn patch_step_error(task: &TaskInstance, plan: &PlanProgram, e: &ToolError) -> Option<PlanProgram> {
    match e.code {
        ErrorCode::SpatialMisalignment => {
            let idx = offending_step_index(plan, e)?;
            let arg = detail_str(e, "arg")?.to_string();
            let target_crs = e.detail("expected")?.clone();
            let mut patched = plan.clone();
            let zones_value = patched.steps[idx].args.get(&arg)?.clone();
            let align_id = patched.fresh_id("a");
            let mut args = BTreeMap::new();
            args.insert("parcels".to_string(), zones_value);
            args.insert("to".to_string(), target_crs);
            patched
                .steps
                .insert(idx, PlanStep { id: align_id.clone(), tool: "geo.reproject".into(), args });
            patched.steps[idx + 1]
                .args
                .insert(arg, json!({"ref": align_id, "path": "zones"}));
            Some(patched)
        }
        ErrorCode::TemporalWindowError => {
            let idx = offending_step_index(plan, e)?;
            let arg = detail_str(e, "arg")?.to_string();
            let (a0, a1) = detail_pair(e, "available")?;
            let mut patched = plan.clone();
            match arg.as_str() {
                "t" => {
                    let t = e.detail("requested").and_then(|r| r.get(0)).and_then(Value::as_i64)?;
                    patched.steps[idx].args.insert(arg, json!(t.clamp(a0, a1)));
                }
                _ => {
                    // Re-anchor on the window the task actually asked about,
                    // clipped into the data that exists.
                    let (r0, r1) = detail_pair(e, "requested").unwrap_or((a0, a1));
                    let (w0, w1) = match task.bindings.time_range {
                        Some([b0, b1]) => (b0.max(a0), b1.min(a1)),
                        None => (r0.max(a0), r1.min(a1)),
                    };
                    if w0 > w1 {
                        return None;
                    }
                    patched.steps[idx].args.insert(arg, json!([w0, w1]));
                }
            }
            Some(patched)
        }
        ErrorCode::LowCoverage => {
            let idx = offending_step_index(plan, e).or_else(|| {
                plan.steps.iter().position(|s| s.args.contains_key("time_range"))
            })?;
            let mut patched = plan.clone();
            let pair = patched.steps[idx].args.get("time_range")?.as_array()?.clone();
            let (a, b) = (pair.first()?.as_i64()?, pair.get(1)?.as_i64()?);
            let widened = [
                (a - 15).max(task.bindings.season[0]),
                (b + 15).min(task.bindings.season[1]),
            ];
            patched.steps[idx].args.insert("time_range".into(), json!(widened));
            Some(patched)
        }
        ErrorCode::DimensionMismatch => {
            let idx = offending_step_index(plan, e)?;
            if plan.steps[idx].tool == "unit.convert" {
                let expected = detail_str(e, "expected")?.to_string();
                let mut patched = plan.clone();
                patched.steps[idx].args.insert("target".into(), json!(expected));
                return Some(patched);
            }
            None
        }
        ErrorCode::UnknownBand | ErrorCode::UnknownRegion | ErrorCode::ArgumentError => {
            let idx = offending_step_index(plan, e)?;
            let arg = detail_str(e, "arg")?.to_string();
            let current = plan.steps[idx].args.get(&arg)?.as_str()?;
            let valid: Vec<String> = e
                .detail("valid")?
                .as_array()?
                .iter()
                .filter_map(|v| v.as_str().map(str::to_string))
                .collect();
            let best = closest(current, &valid)?;
            let mut patched = plan.clone();
            patched.steps[idx].args.insert(arg, json!(best));
            Some(patched)
        }
        _ => None,
    }
}

fn patch_violation(
    task: &TaskInstance,
    turn: &TurnRecord,
    violation: &crate::protocol::Violation,
) -> Option<PlanProgram> {
    match violation.code {
        ViolationCode::SchemaError if violation.observed.is_null() => {
            restore_missing_key(task, &turn.plan, &violation.path)
        }
        ViolationCode::UnitError => {
            let expected = violation.expected.as_str()?.to_string();
            convert_answer_value(&turn.plan, &violation.path, &expected)
        }
        ViolationCode::ToleranceExceeded | ViolationCode::UngroundedClaim => {
            reground_answer(task, turn, violation)
        }
        _ => None,
    }
}

/// Re-add a dropped answer key from public information: the schema's pinned
/// unit or single allowed value, the task's parcel binding, or (for numeric
/// and series kinds) the value of the plan's last step.
fn restore_missing_key(task: &TaskInstance, plan: &PlanProgram, key: &str) -> Option<PlanProgram> {
    let field = task.output_schema.field(key)?;
    let mut patched = plan.clone();
    let answer = patched.answer.get_or_insert_with(|| json!({}));
    let obj = answer.as_object_mut()?;
    let value = if let Some(unit) = field.unit {
        json!(unit.symbol())
    } else if let Some(allowed) = field.allowed.as_ref().filter(|a| a.len() == 1) {
        allowed[0].clone()
    } else if key == "parcel_id" && task.bindings.parcel_ids.len() == 1 {
        json!(task.bindings.parcel_ids[0])
    } else {
        let last = plan.steps.last()?;
        match field.kind {
            FieldKind::Number | FieldKind::Quantity => json!({"ref": last.id, "path": "value"}),
            FieldKind::Series => json!({"ref": last.id, "path": "flagged"}),
            _ => return None,
        }
    };
    obj.insert(key.to_string(), value);
    Some(patched)
}

/// Wrap the answer's value source in a unit conversion to the expected
/// symbol and fix the declared unit.
fn convert_answer_value(plan: &PlanProgram, path: &str, expected: &str) -> Option<PlanProgram> {
    let mut patched = plan.clone();
    let convert_id = patched.fresh_id("c");
    let answer = patched.answer.as_mut()?.as_object_mut()?;
    // Flat answers pin the unit under "unit" and the magnitude under "value";
    // quantity-kind answers carry both inside the keyed object.
    let value_key = if path == "unit" { "value" } else { path };
    let (source_step, source_path) = as_ref(answer.get(value_key)?)
        .map(|(s, p)| (s.to_string(), p.to_string()))?;
    let quantity_path = match source_path.as_str() {
        "value" => String::new(),
        p if p.ends_with(".value") => p[..p.len() - ".value".len()].to_string(),
        p => p.to_string(),
    };
    let mut args = BTreeMap::new();
    args.insert(
        "value".to_string(),
        if quantity_path.is_empty() {
            json!({"ref": source_step})
        } else {
            json!({"ref": source_step, "path": quantity_path})
        },
    );
    args.insert("target".to_string(), json!(expected));
    patched
        .steps
        .push(PlanStep { id: convert_id.clone(), tool: "unit.convert".into(), args });
    answer.insert(value_key.to_string(), json!({"ref": convert_id, "path": "value"}));
    if path == "unit" {
        answer.insert("unit".to_string(), json!(expected));
    }
    Some(patched)
}

/// Replace an unsupported answer literal with a reference into the turn's
/// own step outputs: the claim must come from a computation the plan actually
/// ran. The source leaf is located structurally (a payload path naming the
/// answer key, else a plain scalar "value"), falling back to the artifact
/// leaf the checker cites.
fn reground_answer(
    task: &TaskInstance,
    turn: &TurnRecord,
    violation: &crate::protocol::Violation,
) -> Option<PlanProgram> {
    let key = violation.path.clone();
    let field_kind = task.output_schema.field(&key).map(|f| f.kind);
    let mut patched = turn.plan.clone();
    let answer = patched.answer.as_mut()?.as_object_mut()?;

    if field_kind == Some(FieldKind::Series) {
        // Series answers come from the anomaly detector's flagged set.
        let step = turn
            .artifacts
            .iter()
            .rev()
            .find(|a| a.tool == "rs.anomaly")
            .map(|a| a.step_id.clone())?;
        answer.insert(key, json!({"ref": step, "path": "flagged"}));
        return Some(patched);
    }

    let (step, path) = ground_source(turn, &key).or_else(|| {
        let cite = violation.cite.as_ref()?;
        turn.artifacts
            .iter()
            .find(|a| a.prov == cite.prov)
            .map(|a| (a.step_id.clone(), cite.path.clone()))
    })?;
    answer.insert(key, json!({"ref": step, "path": path}));
    Some(patched)
}

/// Find the step output leaf that should back an answer key, scanning the
/// most recent successful steps first: a path routing through a segment named
/// like the key (e.g. `intervention.magnitude.value` for "magnitude"), then a
/// path equal to the key, then a bare scalar `value`.
fn ground_source(turn: &TurnRecord, key: &str) -> Option<(String, String)> {
    let outputs: Vec<(&str, Vec<String>)> = turn
        .observations
        .iter()
        .rev()
        .filter_map(|o| match &o.outcome {
            crate::agent::StepOutcome::Ok(v) => Some((o.step_id.as_str(), numeric_leaf_paths(v))),
            crate::agent::StepOutcome::Err(_) => None,
        })
        .collect();
    for (step, paths) in &outputs {
        if let Some(p) = paths.iter().find(|p| {
            let segments: Vec<&str> = p.split('.').collect();
            segments.contains(&key) && segments.last() == Some(&"value")
        }) {
            return Some((step.to_string(), p.clone()));
        }
    }
    for (step, paths) in &outputs {
        if let Some(p) = paths.iter().find(|p| p.as_str() == key) {
            return Some((step.to_string(), p.clone()));
        }
    }
    for (step, paths) in &outputs {
        if let Some(p) = paths.iter().find(|p| p.as_str() == "value") {
            return Some((step.to_string(), p.clone()));
        }
    }
    None
}

fn numeric_leaf_paths(v: &Value) -> Vec<String> {
    fn walk(v: &Value, path: &str, out: &mut Vec<String>) {
        match v {
            Value::Number(_) => out.push(path.to_string()),
            Value::Object(map) => {
                for (k, val) in map {
                    let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                    walk(val, &sub, out);
                }
            }
            Value::Array(items) => {
                for (i, val) in items.iter().enumerate() {
                    let sub = if path.is_empty() { i.to_string() } else { format!("{path}.{i}") };
                    walk(val, &sub, out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(v, "", &mut out);
    out
}

/// Closest candidate by edit distance, preferring longer shared prefixes on
/// ties (misnamed columns usually share a stem); final ties resolve
/// lexicographically.
fn closest(target: &str, candidates: &[String]) -> Option<String> {
    candidates
        .iter()
        .min_by_key(|c| {
            let prefix = target
                .bytes()
                .zip(c.bytes())
                .take_while(|(a, b)| a == b)
                .count();
            (levenshtein(target, c), usize::MAX - prefix, (*c).clone())
        })
        .cloned()
}

fn levenshtein(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
