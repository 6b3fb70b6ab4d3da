//! Ablation harness: rerun the same task set under degraded configurations.
//!
//! `one_shot` caps the loop at a single turn. `no_alignment` swaps the
//! alignment operator for the identity and disables CRS checks, so mismatched
//! inputs silently produce empty joins and zones. `no_rs` removes the
//! remote-sensing tool family from the registry entirely.

use super::runner::{run_bench, PolicySpec, RunOptions, RunReport};
use crate::model::WorldState;
use crate::protocol::TaskInstance;
use crate::toolkit::{ErrorCode, Registry, ToolError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    OneShot,
    NoAlignment,
    NoRs,
}

pub const ALL_VARIANTS: [Variant; 4] =
    [Variant::Full, Variant::OneShot, Variant::NoAlignment, Variant::NoRs];

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::OneShot => "one_shot",
            Variant::NoAlignment => "no_alignment",
            Variant::NoRs => "no_rs",
        }
    }

    pub fn parse(s: &str) -> Result<Variant, ToolError> {
        ALL_VARIANTS.iter().copied().find(|v| v.name() == s).ok_or_else(|| {
            ToolError::new(ErrorCode::ArgumentError, format!("unknown variant {s:?}"))
                .with("arg", "variants")
                .with("valid", ALL_VARIANTS.iter().map(|v| v.name()).collect::<Vec<_>>())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub variant: Variant,
    pub interaction: String,
    pub tool_scope: String,
    pub alignment: bool,
    pub avg_turns: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub policy: String,
    pub variants: Vec<VariantRow>,
    #[serde(skip)]
    pub reports: Vec<RunReport>,
}

pub fn ablate(
    world: &WorldState,
    tasks: &[TaskInstance],
    variants: &[Variant],
    policy_spec: &PolicySpec,
    options: RunOptions,
) -> Result<AblationTable, ToolError> {
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut policy_name = String::new();
    for variant in variants {
        let registry = match variant {
            Variant::NoAlignment => Registry::without_alignment(),
            Variant::NoRs => Registry::without_rs(),
            _ => Registry::full(),
        };
        let variant_options = RunOptions {
            t_max: if *variant == Variant::OneShot { 1 } else { options.t_max },
            ..options
        };
        let policy = policy_spec.build(&registry)?;
        let report = run_bench(&registry, world, tasks, policy.as_ref(), variant_options, None)?;
        policy_name = report.policy.clone();
        let (accuracy, avg_turns) = report
            .aggregates
            .as_ref()
            .map(|a| (a.overall_accuracy, a.mean_turns))
            .unwrap_or((0.0, 0.0));
        rows.push(VariantRow {
            variant: *variant,
            interaction: if *variant == Variant::OneShot { "one-shot" } else { "reflective" }.to_string(),
            tool_scope: if *variant == Variant::NoRs { "w/o rs" } else { "all" }.to_string(),
            alignment: *variant != Variant::NoAlignment,
            avg_turns,
            accuracy,
        });
        reports.push(report);
    }
    Ok(AblationTable { policy: policy_name, variants: rows, reports })
}
