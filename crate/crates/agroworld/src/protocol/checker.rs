//! The hierarchical executable checker.
//!
//! Tiers run in order and accumulate violations instead of stopping at the
//! first failure, so a single report carries everything reflection needs:
//!
//! 1. **Schema** — required keys, kinds, enums, and pinned unit symbols.
//! 2. **Numeric** — tolerance against the sealed reference after unit
//!    conversion (`|ŷ − y*| < max(abs_tol, rel_tol·|y*|)`), plus set-IoU
//!    scoring against the reference mask for anomaly-style answers.
//! 3. **Counterfactual** — re-runs the simulator with the answer's proposed
//!    intervention and asserts the required causal direction and effect size.
//! 4. **Physical** — artifact validity ratios meet the coverage gate, units
//!    grounding each answer key are dimensionally consistent, and every
//!    numeric answer value appears in some artifact payload (else the claim
//!    is ungrounded).
//!
//! Grounding matches values essentially exactly (1e-9 relative): honest
//! answers are instantiated from artifact payloads by reference, so anything
//! looser would let fabricated numbers ride on coincidental payload values.

use super::{
    Cite, DiagnosticReport, FieldKind, FieldSpec, MaskSet, TaskInstance, Tier, Violation, ViolationCode,
};
use crate::model::WorldState;
use crate::protocol::metrics::set_iou;
use crate::sim::{self, DeltaTarget, Intervention, InterventionAction};
use crate::toolkit::Artifact;
use crate::units::{Quantity, Unit};
use serde_json::{json, Value};
use std::collections::BTreeSet;

/// Grade an answer. Total: any input shape yields a report, never a panic or
/// error.
pub fn check(
    answer: &Value,
    artifacts: &[Artifact],
    task: &TaskInstance,
    world: &WorldState,
) -> DiagnosticReport {
    let mut violations = Vec::new();
    check_schema(answer, task, &mut violations);
    let leaves = collect_leaves(artifacts);
    check_numeric(answer, task, &leaves, &mut violations);
    check_spatial(answer, task, &mut violations);
    check_counterfactual(answer, task, world, &mut violations);
    check_physical(answer, artifacts, task, &leaves, &mut violations);
    DiagnosticReport::from_violations(violations)
}

fn violation(
    tier: Tier,
    code: ViolationCode,
    path: &str,
    message: impl Into<String>,
) -> Violation {
    Violation {
        tier,
        code,
        path: path.to_string(),
        message: message.into(),
        observed: Value::Null,
        expected: Value::Null,
        cite: None,
    }
}

// ---- tier 1: schema -------------------------------------------------------

fn kind_matches(kind: FieldKind, v: &Value) -> bool {
    match kind {
        FieldKind::String => v.is_string(),
        FieldKind::Number => v.as_f64().is_some_and(f64::is_finite),
        FieldKind::Quantity => {
            v.get("unit").is_some_and(Value::is_string)
                && v.get("value").and_then(Value::as_f64).is_some_and(f64::is_finite)
        }
        FieldKind::ParcelIdList => v.as_array().is_some_and(|a| a.iter().all(Value::is_string)),
        FieldKind::Series => v.as_array().is_some_and(|a| {
            a.iter().all(|row| {
                row.as_array().is_some_and(|pair| {
                    pair.len() == 2 && pair[0].is_i64() && pair[1].as_f64().is_some()
                })
            })
        }),
    }
}

fn declared_unit(field: &FieldSpec, v: &Value) -> Option<String> {
    match field.kind {
        FieldKind::String => v.as_str().map(str::to_string),
        FieldKind::Quantity => v.get("unit").and_then(Value::as_str).map(str::to_string),
        _ => None,
    }
}

fn check_schema(answer: &Value, task: &TaskInstance, out: &mut Vec<Violation>) {
    let Some(obj) = answer.as_object() else {
        out.push(violation(
            Tier::Schema,
            ViolationCode::SchemaError,
            "",
            "answer must be a JSON object",
        ));
        return;
    };
    for field in &task.output_schema.required {
        let Some(v) = obj.get(&field.key) else {
            let mut viol = violation(
                Tier::Schema,
                ViolationCode::SchemaError,
                &field.key,
                format!("missing required key {:?}", field.key),
            );
            viol.expected = json!(field.kind.name());
            out.push(viol);
            continue;
        };
        if !kind_matches(field.kind, v) {
            let mut viol = violation(
                Tier::Schema,
                ViolationCode::SchemaError,
                &field.key,
                format!("key {:?} must be a {}", field.key, field.kind.name()),
            );
            viol.observed = v.clone();
            viol.expected = json!(field.kind.name());
            out.push(viol);
            continue;
        }
        if let Some(allowed) = &field.allowed {
            if !allowed.contains(v) {
                let mut viol = violation(
                    Tier::Schema,
                    ViolationCode::SchemaError,
                    &field.key,
                    format!("key {:?} must be one of the allowed values", field.key),
                );
                viol.observed = v.clone();
                viol.expected = json!(allowed);
                out.push(viol);
                continue;
            }
        }
        if let Some(required_unit) = field.unit {
            let found = declared_unit(field, v);
            if found.as_deref() != Some(required_unit.symbol()) {
                let mut viol = violation(
                    Tier::Schema,
                    ViolationCode::UnitError,
                    &field.key,
                    format!("key {:?} must carry unit {}", field.key, required_unit),
                );
                viol.observed = found.map_or(Value::Null, |u| json!(u));
                viol.expected = json!(required_unit.symbol());
                out.push(viol);
            }
        }
    }
}

// ---- tier 2: numeric tolerance and mask IoU -------------------------------

/// Extract the (value, declared unit) pair for a numeric answer key. The unit
/// comes from a quantity object or from a sibling "unit" key.
fn numeric_answer(answer: &Value, key: &str) -> Option<(f64, Option<String>)> {
    let v = answer.get(key)?;
    if let Some(n) = v.as_f64() {
        let sibling = answer.get("unit").and_then(Value::as_str).map(str::to_string);
        return Some((n, sibling));
    }
    let n = v.get("value")?.as_f64()?;
    let unit = v.get("unit").and_then(Value::as_str).map(str::to_string);
    Some((n, unit))
}

fn check_numeric(
    answer: &Value,
    task: &TaskInstance,
    leaves: &[Leaf],
    out: &mut Vec<Violation>,
) {
    let Some(cfg) = &task.checker.numeric else { return };
    let Some((raw, unit_sym)) = numeric_answer(answer, &cfg.key) else {
        out.push(violation(
            Tier::Numeric,
            ViolationCode::ToleranceExceeded,
            &cfg.key,
            format!("answer key {:?} carries no numeric value to compare", cfg.key),
        ));
        return;
    };
    let quantity = match &unit_sym {
        Some(sym) => match Unit::parse(sym) {
            Ok(u) => Quantity { value: raw, unit: u },
            Err(_) => {
                let mut viol = violation(
                    Tier::Numeric,
                    ViolationCode::UnitError,
                    &cfg.key,
                    format!("answer unit {sym:?} is not a known symbol"),
                );
                viol.observed = json!(sym);
                out.push(viol);
                return;
            }
        },
        // No declared unit: interpret in the reference unit.
        None => Quantity { value: raw, unit: cfg.reference.unit },
    };
    let converted = match quantity.convert(cfg.reference.unit) {
        Ok(q) => q,
        Err(_) => {
            let mut viol = violation(
                Tier::Numeric,
                ViolationCode::UnitError,
                &cfg.key,
                format!(
                    "answer unit {} is not convertible to the reference unit {}",
                    quantity.unit, cfg.reference.unit
                ),
            );
            viol.observed = json!(quantity.unit.symbol());
            viol.expected = json!(cfg.reference.unit.symbol());
            out.push(viol);
            return;
        }
    };
    let tolerance = cfg.tolerance();
    if (converted.value - cfg.reference.value).abs() >= tolerance {
        let mut viol = violation(
            Tier::Numeric,
            ViolationCode::ToleranceExceeded,
            &cfg.key,
            format!(
                "|{} − {}| ≥ {tolerance} {}",
                converted.value, cfg.reference.value, cfg.reference.unit
            ),
        );
        viol.observed = json!(converted.value);
        viol.expected = json!({"unit": cfg.reference.unit, "value": cfg.reference.value});
        // Point at the artifact leaf closest to the sealed value so a repair
        // can re-ground the answer instead of copying the reference.
        viol.cite = nearest_leaf(leaves, cfg.reference.value, Some(cfg.reference.unit))
            .map(|(leaf, _)| Cite { prov: leaf.prov.clone(), path: leaf.path.clone() });
        out.push(viol);
    }
}

fn answer_day_set(v: &Value) -> Option<BTreeSet<String>> {
    let arr = v.as_array()?;
    let mut set = BTreeSet::new();
    for row in arr {
        match row {
            Value::Array(pair) => set.insert(pair.first()?.as_i64()?.to_string()),
            Value::Number(n) => set.insert(n.as_i64()?.to_string()),
            _ => return None,
        };
    }
    Some(set)
}

fn answer_id_set(v: &Value) -> Option<BTreeSet<String>> {
    let arr = v.as_array()?;
    arr.iter()
        .map(|x| x.as_str().map(str::to_string))
        .collect::<Option<BTreeSet<_>>>()
}

fn check_spatial(answer: &Value, task: &TaskInstance, out: &mut Vec<Violation>) {
    let Some(cfg) = &task.checker.spatial else { return };
    let (predicted, truth): (Option<BTreeSet<String>>, BTreeSet<String>) = match &cfg.reference_mask {
        MaskSet::Days(days) => (
            answer.get(&cfg.key).and_then(answer_day_set),
            days.iter().map(i64::to_string).collect(),
        ),
        MaskSet::Parcels(ids) => (
            answer.get(&cfg.key).and_then(answer_id_set),
            ids.iter().cloned().collect(),
        ),
    };
    let Some(predicted) = predicted else {
        out.push(violation(
            Tier::Numeric,
            ViolationCode::ToleranceExceeded,
            &cfg.key,
            format!("answer key {:?} is not a readable mask/series", cfg.key),
        ));
        return;
    };
    let score = set_iou(&predicted, &truth);
    if score < cfg.min_iou {
        let mut viol = violation(
            Tier::Numeric,
            ViolationCode::ToleranceExceeded,
            &cfg.key,
            format!("IoU {score:.4} below required {}", cfg.min_iou),
        );
        viol.observed = json!(score);
        viol.expected = json!(cfg.min_iou);
        out.push(viol);
    }
}

// ---- tier 3: counterfactual consistency -----------------------------------

/// Assemble the proposed intervention from flat answer keys
/// (action/magnitude/unit/window_start/window_end) or a nested object.
fn intervention_from_answer(answer: &Value) -> Option<Intervention> {
    if let Some(nested) = answer.get("intervention") {
        return serde_json::from_value(nested.clone()).ok();
    }
    let action: InterventionAction =
        serde_json::from_value(answer.get("action")?.clone()).ok()?;
    let magnitude = answer.get("magnitude")?.as_f64()?;
    let unit = Unit::parse(answer.get("unit")?.as_str()?).ok()?;
    let w0 = answer.get("window_start")?.as_i64()?;
    let w1 = answer.get("window_end")?.as_i64()?;
    Some(Intervention {
        action,
        magnitude: Quantity::new(magnitude, unit).ok()?,
        window: [w0, w1],
    })
}

fn check_counterfactual(
    answer: &Value,
    task: &TaskInstance,
    world: &WorldState,
    out: &mut Vec<Violation>,
) {
    let Some(cfg) = &task.checker.counterfactual else { return };
    let Some(intervention) = intervention_from_answer(answer) else {
        out.push(violation(
            Tier::Counterfactual,
            ViolationCode::CausalDirectionViolated,
            "intervention",
            "answer does not describe a well-formed intervention",
        ));
        return;
    };
    let parcel = answer
        .get("parcel_id")
        .and_then(Value::as_str)
        .map(str::to_string)
        .or_else(|| task.bindings.parcel_ids.first().cloned());
    let Some(parcel) = parcel else {
        out.push(violation(
            Tier::Counterfactual,
            ViolationCode::CausalDirectionViolated,
            "parcel_id",
            "no parcel to simulate against",
        ));
        return;
    };
    match sim::delta(world, &parcel, &intervention, cfg.target) {
        Err(e) => {
            out.push(violation(
                Tier::Counterfactual,
                ViolationCode::CausalDirectionViolated,
                "intervention",
                format!("simulator rejected the intervention: {e}"),
            ));
        }
        Ok(outcome) => {
            // Stress must drop by at least Δ; yield must rise by at least Δ.
            let (pass, required) = match cfg.target {
                DeltaTarget::StressIndex => (outcome.delta <= -cfg.delta, -cfg.delta),
                DeltaTarget::Yield => (outcome.delta >= cfg.delta, cfg.delta),
            };
            if !pass {
                let mut viol = violation(
                    Tier::Counterfactual,
                    ViolationCode::CausalDirectionViolated,
                    "intervention",
                    format!(
                        "intervention moved {:?} by {:+.6}, required {:+.6}",
                        cfg.target, outcome.delta, required
                    ),
                );
                viol.observed = json!(outcome.delta);
                viol.expected = json!(required);
                out.push(viol);
            }
        }
    }
}

// ---- tier 4: physical sanity and grounding --------------------------------

struct Leaf {
    value: f64,
    unit: Option<Unit>,
    prov: String,
    path: String,
}

fn collect_leaves(artifacts: &[Artifact]) -> Vec<Leaf> {
    let mut out = Vec::new();
    for artifact in artifacts {
        walk_leaves(&artifact.payload, artifact.meta.unit, "", &artifact.prov, &mut out);
    }
    out
}

fn walk_leaves(v: &Value, unit_ctx: Option<Unit>, path: &str, prov: &str, out: &mut Vec<Leaf>) {
    match v {
        Value::Number(n) => {
            if let Some(value) = n.as_f64() {
                out.push(Leaf { value, unit: unit_ctx, prov: prov.to_string(), path: path.to_string() });
            }
        }
        Value::Object(map) => {
            let ctx = map
                .get("unit")
                .and_then(Value::as_str)
                .and_then(|s| Unit::parse(s).ok())
                .or(unit_ctx);
            for (k, val) in map {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk_leaves(val, ctx, &sub, prov, out);
            }
        }
        Value::Array(items) => {
            for (i, val) in items.iter().enumerate() {
                let sub = if path.is_empty() { i.to_string() } else { format!("{path}.{i}") };
                walk_leaves(val, unit_ctx, &sub, prov, out);
            }
        }
        _ => {}
    }
}

fn ground_tolerance(v: f64) -> f64 {
    1e-9f64.max(1e-9 * v.abs())
}

/// Distance between a leaf and a target value, converting the leaf into the
/// target's unit when both units are known and dimensionally equal,
/// otherwise comparing raw.
fn leaf_distance(leaf: &Leaf, value: f64, unit: Option<Unit>) -> f64 {
    let raw = (leaf.value - value).abs();
    match (leaf.unit, unit) {
        (Some(lu), Some(tu)) if lu.dim() == tu.dim() => {
            let converted = Quantity { value: leaf.value, unit: lu }
                .convert(tu)
                .map(|q| (q.value - value).abs())
                .unwrap_or(raw);
            converted.min(raw)
        }
        _ => raw,
    }
}

fn nearest_leaf<'a>(leaves: &'a [Leaf], value: f64, unit: Option<Unit>) -> Option<(&'a Leaf, f64)> {
    leaves
        .iter()
        .map(|l| (l, leaf_distance(l, value, unit)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

fn grounded(leaves: &[Leaf], value: f64, unit: Option<Unit>) -> bool {
    leaves
        .iter()
        .any(|l| leaf_distance(l, value, unit) <= ground_tolerance(value))
}

/// The numeric content of one answer key: (value, declared unit) pairs.
fn numeric_leaves_of(answer: &Value, key: &str) -> Vec<(f64, Option<Unit>)> {
    let Some(v) = answer.get(key) else { return Vec::new() };
    let declared = answer
        .get("unit")
        .and_then(Value::as_str)
        .and_then(|s| Unit::parse(s).ok());
    match v {
        Value::Number(n) => n.as_f64().map(|x| (x, declared)).into_iter().collect(),
        Value::Object(obj) => {
            let unit = obj
                .get("unit")
                .and_then(Value::as_str)
                .and_then(|s| Unit::parse(s).ok())
                .or(declared);
            obj.get("value")
                .and_then(Value::as_f64)
                .map(|x| (x, unit))
                .into_iter()
                .collect()
        }
        Value::Array(rows) => {
            let mut out = Vec::new();
            for row in rows {
                match row {
                    Value::Number(n) => {
                        if let Some(x) = n.as_f64() {
                            out.push((x, None));
                        }
                    }
                    Value::Array(pair) => {
                        for item in pair {
                            if let Some(x) = item.as_f64() {
                                out.push((x, None));
                            }
                        }
                    }
                    _ => {}
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

fn check_physical(
    answer: &Value,
    artifacts: &[Artifact],
    task: &TaskInstance,
    leaves: &[Leaf],
    out: &mut Vec<Violation>,
) {
    let cfg = &task.checker.physical;
    // Coverage: no artifact below the validity gate.
    for (i, artifact) in artifacts.iter().enumerate() {
        if let Some(nu) = artifact.meta.validity_ratio {
            if nu < cfg.tau_min {
                let mut viol = violation(
                    Tier::Physical,
                    ViolationCode::LowCoverage,
                    &format!("artifacts.{i}"),
                    format!("artifact validity ratio {nu:.4} below tau_min {}", cfg.tau_min),
                );
                viol.observed = json!(nu);
                viol.expected = json!(cfg.tau_min);
                viol.cite = Some(Cite { prov: artifact.prov.clone(), path: String::new() });
                out.push(viol);
            }
        }
    }

    let Some(obj) = answer.as_object() else { return };
    for (key, _) in obj {
        let values = numeric_leaves_of(answer, key);
        if values.is_empty() {
            continue;
        }
        // Unit consistency against the requirement map: the artifact leaf
        // grounding this key must live in a compatible dimension.
        if let Some(required) = cfg.required_units.get(key) {
            for (value, unit) in &values {
                if let Some((leaf, d)) = nearest_leaf(leaves, *value, *unit) {
                    if d <= ground_tolerance(*value) {
                        if let Some(lu) = leaf.unit {
                            if lu.dim() != required.dim() {
                                let mut viol = violation(
                                    Tier::Physical,
                                    ViolationCode::UnitError,
                                    key,
                                    format!(
                                        "artifact grounding {key:?} is in {lu}, expected dimension of {required}"
                                    ),
                                );
                                viol.observed = json!(lu.symbol());
                                viol.expected = json!(required.symbol());
                                viol.cite =
                                    Some(Cite { prov: leaf.prov.clone(), path: leaf.path.clone() });
                                out.push(viol);
                            }
                        }
                    }
                }
            }
        }
        // Grounding: every numeric answer value must exist in some payload.
        for (value, unit) in &values {
            if !grounded(leaves, *value, *unit) {
                let mut viol = violation(
                    Tier::Physical,
                    ViolationCode::UngroundedClaim,
                    key,
                    format!("answer value {value} at key {key:?} appears in no artifact payload"),
                );
                viol.observed = json!(value);
                viol.cite = nearest_leaf(leaves, *value, *unit)
                    .map(|(leaf, _)| Cite { prov: leaf.prov.clone(), path: leaf.path.clone() });
                out.push(viol);
                break; // one grounding violation per key
            }
        }
    }
}
