//! One reflective episode: a policy that injects a wrong-CRS fault, the
//! structured diagnostic it triggers, and the patch that repairs it.

use agroworld::agent::{
    run_episode, EpisodeConfig, FaultKind, FaultSpec, FaultyPolicy, StepOutcome,
};
use agroworld::bench::{gen_tasks, gen_world, GenConfig};
use agroworld::protocol::TaskFamily;
use agroworld::toolkit::{ArtifactStore, Registry};

fn main() {
    let cfg = GenConfig { n_parcels: 12, tasks_per_family: 2, ..GenConfig::with_seed(42) };
    let world = gen_world(&cfg);
    let tasks = gen_tasks(&world, &cfg, cfg.seed).expect("task generation");
    let task = tasks
        .iter()
        .find(|t| {
            t.family == TaskFamily::Lookup
                && t.reference_plan.steps.iter().any(|s| s.tool == "geo.reproject")
        })
        .expect("a lookup task with an alignment step");
    println!("task: {}\n", task.q);

    let registry = Registry::full();
    let policy = FaultyPolicy::new(FaultSpec::Fixed(FaultKind::WrongCrs));
    let mut store = ArtifactStore::in_memory();
    let memory = run_episode(
        &registry,
        &world,
        task,
        &policy,
        EpisodeConfig { t_max: 20, oracle_feedback: false },
        &mut store,
    );

    for (i, turn) in memory.turns.iter().enumerate() {
        println!("turn {}:", i + 1);
        println!(
            "  plan: {}",
            turn.plan
                .steps
                .iter()
                .map(|s| s.tool.as_str())
                .collect::<Vec<_>>()
                .join(" -> ")
        );
        for obs in &turn.observations {
            if let StepOutcome::Err(e) = &obs.outcome {
                println!("  step {} failed: {e}", obs.step_id);
                println!("    details: {}", e.details);
            }
        }
        if let Some(answer) = &turn.answer {
            println!("  answer: {answer}");
        }
        if let Some(report) = &turn.report {
            println!("  checker: z={}", report.z);
        }
        println!();
    }
    println!("status: {:?} in {} turns", memory.status, memory.turns_used());
}
