//! The daily water-balance simulator and counterfactual irrigation sweeps.

use agroworld::bench::{gen_world, GenConfig};
use agroworld::sim::{self, DeltaTarget, Intervention};

fn main() {
    let world = gen_world(&GenConfig { n_parcels: 12, ..GenConfig::with_seed(42) });
    let parcel = world
        .parcels
        .values()
        .find(|p| p.crop_type.is_some())
        .map(|p| p.id.clone())
        .unwrap();

    let baseline = sim::run(&world, &parcel, None).expect("simulation runs");
    println!(
        "parcel {parcel}: stress index {:.4}, yield {}",
        baseline.stress_index, baseline.yield_estimate
    );
    println!("\n  day  soil(mm)   et(mm)  stress");
    for day in baseline.per_day.iter().step_by(15) {
        println!(
            "  {:>3}  {:>8.2}  {:>7.2}  {:>6.3}",
            day.t, day.soil_water_mm, day.et_mm, day.stress
        );
    }

    let n = world.season_days();
    let window = [n / 3, 2 * n / 3];
    println!("\nirrigation sweep over days {:?} (stress delta, yield delta):", window);
    for step in [0.0, 1.5, 3.0, 4.5, 6.0] {
        let iv = Intervention::irrigation_delta(step, window);
        let stress = sim::delta(&world, &parcel, &iv, DeltaTarget::StressIndex).unwrap();
        let harvest = sim::delta(&world, &parcel, &iv, DeltaTarget::Yield).unwrap();
        println!(
            "  +{step:>3.1} mm/day  stress {:+.4}  yield {:+8.1} kg/ha",
            stress.delta, harvest.delta
        );
    }

    let season = (world.season[0], world.season[1]);
    println!("\nclosed-form predictors:");
    println!("  pred.stress  {:.4}", sim::predict_stress(&world, &parcel, season).unwrap());
    println!("  pred.yield   {}", sim::predict_yield(&world, &parcel).unwrap());
    println!("  pred.disease {:.4}", sim::predict_disease(&world, &parcel, season).unwrap());
}
