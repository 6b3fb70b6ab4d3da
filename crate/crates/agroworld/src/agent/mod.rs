//! The reflective agent harness: plan programs, sandboxed execution,
//! episodes, rule-based reflection, and pluggable policies.

pub mod episode;
pub mod exec;
pub mod plan;
pub mod policy;
pub mod reflect;
pub mod remote;

pub use episode::{run_episode, EpisodeConfig, EpisodeMemory, EpisodeStatus, TurnRecord};
pub use exec::{execute_plan, ExecutionResult, StepObservation, StepOutcome, TurnArtifact};
pub use plan::{PlanProgram, PlanStep, MAX_PLAN_STEPS};
pub use policy::{FaultKind, FaultSpec, FaultyPolicy, Policy, ScriptedPolicy, ALL_FAULTS};
pub use reflect::reflect;
pub use remote::RemotePolicy;
