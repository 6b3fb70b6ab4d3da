//! Declarative plan programs.
//!
//! A plan is an ordered list of tool calls whose arguments may reference the
//! values of earlier steps, plus an optional answer template whose leaves may
//! be references. References are JSON objects of the shape
//! `{"ref": "<step id>"}` or `{"ref": "<step id>", "path": "a.b.0"}` — the
//! path walks the referenced step's value with dot-separated object keys and
//! array indices.
//!
//! Plans are statically checkable: ids are unique, references only point
//! backwards, and programs are bounded in length. That is the whole point of
//! using a plan DSL instead of free-form code as the agent's action space.

use crate::toolkit::{Args, ErrorCode, ToolError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};

pub const MAX_PLAN_STEPS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub id: String,
    pub tool: String,
    #[serde(default)]
    pub args: Args,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanProgram {
    pub steps: Vec<PlanStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<Value>,
}

/// Parse a value as a step reference.
pub fn as_ref(v: &Value) -> Option<(&str, &str)> {
    let obj = v.as_object()?;
    let step = obj.get("ref")?.as_str()?;
    let path = match obj.get("path") {
        Some(p) => p.as_str()?,
        None => "",
    };
    let extra_keys = obj.keys().any(|k| k != "ref" && k != "path");
    (!extra_keys).then_some((step, path))
}

/// Every reference inside a value tree, in deterministic traversal order.
pub fn collect_refs(v: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    walk_refs(v, &mut out);
    out
}

fn walk_refs(v: &Value, out: &mut Vec<(String, String)>) {
    if let Some((step, path)) = as_ref(v) {
        out.push((step.to_string(), path.to_string()));
        return;
    }
    match v {
        Value::Array(items) => items.iter().for_each(|i| walk_refs(i, out)),
        Value::Object(map) => map.values().for_each(|i| walk_refs(i, out)),
        _ => {}
    }
}

/// Follow a dot-separated path into a value.
pub fn lookup_path<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    if path.is_empty() {
        return Some(v);
    }
    let mut cur = v;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get(seg)?,
            Value::Array(items) => items.get(seg.parse::<usize>().ok()?)?,
            _ => return None,
        };
    }
    Some(cur)
}

fn plan_error(message: impl Into<String>) -> ToolError {
    ToolError::new(ErrorCode::PlanError, message.into())
}

impl PlanProgram {
    /// Static validation: bounded length, unique non-empty ids, arguments
    /// reference strictly earlier steps, the answer references known steps.
    pub fn validate(&self) -> Result<(), ToolError> {
        if self.steps.len() > MAX_PLAN_STEPS {
            return Err(plan_error(format!(
                "plan has {} steps, limit is {MAX_PLAN_STEPS}",
                self.steps.len()
            )));
        }
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for step in &self.steps {
            if step.id.is_empty() {
                return Err(plan_error("step ids must be non-empty"));
            }
            if !seen.insert(&step.id) {
                return Err(plan_error(format!("duplicate step id {:?}", step.id)).with("step_id", &step.id));
            }
            for value in step.args.values() {
                for (target, _) in collect_refs(value) {
                    if !seen.contains(target.as_str()) || target == step.id {
                        return Err(plan_error(format!(
                            "step {:?} references {target:?}, which is not an earlier step",
                            step.id
                        ))
                        .with("step_id", &step.id)
                        .with("ref", target));
                    }
                }
            }
        }
        if let Some(answer) = &self.answer {
            for (target, _) in collect_refs(answer) {
                if !seen.contains(target.as_str()) {
                    return Err(plan_error(format!(
                        "answer references unknown step {target:?}"
                    ))
                    .with("ref", target));
                }
            }
        }
        Ok(())
    }

    pub fn step_index(&self, id: &str) -> Option<usize> {
        self.steps.iter().position(|s| s.id == id)
    }

    /// A fresh step id that does not collide with existing ones.
    pub fn fresh_id(&self, prefix: &str) -> String {
        let mut n = 1;
        loop {
            let candidate = format!("{prefix}{n}");
            if self.step_index(&candidate).is_none() {
                return candidate;
            }
            n += 1;
        }
    }
}

/// Substitute references with values from earlier steps.
pub fn resolve(v: &Value, outputs: &BTreeMap<String, Value>) -> Result<Value, ToolError> {
    if let Some((step, path)) = as_ref(v) {
        let base = outputs.get(step).ok_or_else(|| {
            plan_error(format!("reference to step {step:?} whose value is unavailable")).with("ref", step)
        })?;
        let picked = lookup_path(base, path).ok_or_else(|| {
            plan_error(format!("path {path:?} does not exist in the value of step {step:?}"))
                .with("ref", step)
                .with("path", path)
        })?;
        return Ok(picked.clone());
    }
    Ok(match v {
        Value::Array(items) => {
            Value::Array(items.iter().map(|i| resolve(i, outputs)).collect::<Result<_, _>>()?)
        }
        Value::Object(map) => {
            let mut out = serde_json::Map::new();
            for (k, val) in map {
                out.insert(k.clone(), resolve(val, outputs)?);
            }
            Value::Object(out)
        }
        other => other.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn step(id: &str, tool: &str, args: Value) -> PlanStep {
        let map = match args {
            Value::Object(m) => m.into_iter().collect(),
            _ => unreachable!(),
        };
        PlanStep { id: id.into(), tool: tool.into(), args: map }
    }

    #[test]
    fn forward_reference_rejected() {
        let plan = PlanProgram {
            steps: vec![
                step("s1", "tbl.pick", json!({"table": {"ref": "s2"}, "key": "p1"})),
                step("s2", "geo.filter_parcels", json!({})),
            ],
            answer: None,
        };
        let err = plan.validate().unwrap_err();
        assert_eq!(err.code, ErrorCode::PlanError);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let plan = PlanProgram {
            steps: vec![
                step("s1", "geo.filter_parcels", json!({})),
                step("s1", "geo.filter_parcels", json!({})),
            ],
            answer: None,
        };
        assert!(plan.validate().is_err());
    }

    #[test]
    fn answer_refs_must_exist() {
        let plan = PlanProgram {
            steps: vec![step("s1", "geo.filter_parcels", json!({}))],
            answer: Some(json!({"value": {"ref": "s9", "path": "value"}})),
        };
        assert!(plan.validate().is_err());
        let ok = PlanProgram {
            steps: vec![step("s1", "geo.filter_parcels", json!({}))],
            answer: Some(json!({"value": {"ref": "s1", "path": "parcel_ids.0"}})),
        };
        ok.validate().unwrap();
    }

    #[test]
    fn resolve_substitutes_paths() {
        let mut outputs = BTreeMap::new();
        outputs.insert("s1".to_string(), json!({"rows": {"p1": [[3, 0.5]]}, "unit": "mm"}));
        let resolved = resolve(
            &json!({"a": {"ref": "s1", "path": "rows.p1.0.1"}, "b": [{"ref": "s1", "path": "unit"}]}),
            &outputs,
        )
        .unwrap();
        assert_eq!(resolved, json!({"a": 0.5, "b": ["mm"]}));
        let err = resolve(&json!({"ref": "s1", "path": "rows.p9"}), &outputs).unwrap_err();
        assert_eq!(err.code, ErrorCode::PlanError);
    }

    #[test]
    fn ref_shape_is_strict() {
        assert!(as_ref(&json!({"ref": "s1"})).is_some());
        assert!(as_ref(&json!({"ref": "s1", "path": "x"})).is_some());
        assert!(as_ref(&json!({"ref": "s1", "extra": 1})).is_none());
        assert!(as_ref(&json!({"path": "x"})).is_none());
    }
}
