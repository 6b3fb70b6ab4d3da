//! End-to-end mini benchmark: generate a world and tasks, run scripted,
//! reflective-faulty, and one-shot policies, then an ablation table.

use agroworld::bench::{
    ablate, gen_tasks, gen_world, run_bench, GenConfig, PolicySpec, RunOptions, Variant,
};
use agroworld::toolkit::Registry;

fn main() {
    let cfg = GenConfig { n_parcels: 16, tasks_per_family: 5, ..GenConfig::with_seed(42) };
    let world = gen_world(&cfg);
    let tasks = gen_tasks(&world, &cfg, cfg.seed).expect("task generation");
    println!("world {} with {} tasks\n", world.world_id, tasks.len());

    let registry = Registry::full();
    for (label, spec, budget) in [
        ("scripted (oracle)", "scripted", 1u32),
        ("faulty + reflection", "faulty:mixed", 20),
        ("faulty one-shot", "faulty:mixed", 1),
    ] {
        let policy = PolicySpec::parse(spec).unwrap().build(&registry).unwrap();
        let report = run_bench(
            &registry,
            &world,
            &tasks,
            policy.as_ref(),
            RunOptions { t_max: budget, workers: 4, oracle_feedback: false },
            None,
        )
        .unwrap();
        let agg = report.aggregates.unwrap();
        println!(
            "{label:<22} accuracy {:.3}  mean turns {:.2}",
            agg.overall_accuracy, agg.mean_turns
        );
        for (family, accuracy) in &agg.accuracy_by_family {
            println!("    {family:<16} {accuracy:.3}");
        }
    }

    println!("\nablation (faulty:mixed):");
    let table = ablate(
        &world,
        &tasks,
        &[Variant::Full, Variant::OneShot, Variant::NoAlignment, Variant::NoRs],
        &PolicySpec::parse("faulty:mixed").unwrap(),
        RunOptions { t_max: 20, workers: 4, oracle_feedback: false },
    )
    .unwrap();
    println!(
        "  {:<14} {:<11} {:<8} {:<10} {:>9} {:>7}",
        "variant", "interaction", "tools", "alignment", "avg_turns", "acc"
    );
    for row in &table.variants {
        println!(
            "  {:<14} {:<11} {:<8} {:<10} {:>9.2} {:>7.3}",
            row.variant.name(),
            row.interaction,
            row.tool_scope,
            if row.alignment { "yes" } else { "no" },
            row.avg_turns,
            row.accuracy
        );
    }
}
