//! The hierarchical checker: grade a reference answer, then progressively
//! break it and watch each tier complain.

use agroworld::bench::{gen_tasks, gen_world, GenConfig};
use agroworld::protocol::{checker, run_reference, TaskFamily};
use agroworld::toolkit::Registry;
use serde_json::json;

fn main() {
    let cfg = GenConfig { n_parcels: 12, tasks_per_family: 2, ..GenConfig::with_seed(42) };
    let world = gen_world(&cfg);
    let tasks = gen_tasks(&world, &cfg, cfg.seed).expect("task generation");
    let registry = Registry::full();
    let task = tasks.iter().find(|t| t.family == TaskFamily::Lookup).unwrap();
    println!("task: {}", task.q);

    let (answer, artifacts) = run_reference(&registry, task, &world).expect("reference runs");
    println!("reference answer: {answer}");
    let report = checker::check(&answer, &artifacts, task, &world);
    println!("reference verdict: z={} ({} violations)\n", report.z, report.violations.len());

    let mut broken = answer.clone();
    broken.as_object_mut().unwrap().remove("unit");
    show("missing key", &checker::check(&broken, &artifacts, task, &world));

    let mut wrong = answer.clone();
    wrong["value"] = json!(wrong["value"].as_f64().unwrap() * 1.2);
    show("value off by 20%", &checker::check(&wrong, &artifacts, task, &world));

    let mut fabricated = answer.clone();
    fabricated["value"] = json!(9999.917);
    show("fabricated literal", &checker::check(&fabricated, &artifacts, task, &world));

    show("not even an object", &checker::check(&json!("forty-two"), &artifacts, task, &world));
}

fn show(label: &str, report: &agroworld::protocol::DiagnosticReport) {
    println!("{label}: z={}", report.z);
    for v in &report.violations {
        println!("  [{:?}/{:?}] {} — {}", v.tier, v.code, v.path, v.message);
    }
    println!();
}
