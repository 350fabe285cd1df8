//! Samples a few scenarios from each family and simulates them.
//!
//! cargo run --release --example simulate_bowl

use rolling_lab::mechanics::{sample_scenario, simulate_sequence, Family, ScenarioConfig, SimOutcome};
use rolling_lab::seeding::item_rng;

fn main() {
    for (family, balls) in [(Family::Hemispherical, 1), (Family::Ellipsoidal, 2), (Family::Heightfield, 1)] {
        let config = ScenarioConfig::new(family, balls);
        for seed in 0..3u64 {
            let scenario = sample_scenario(&config, seed, &mut item_rng(42, seed)).expect("scenario");
            match simulate_sequence(&scenario, 120).expect("simulation") {
                SimOutcome::Accepted(t) => {
                    let first = &t.frames[0][0];
                    let last = &t.frames[t.frames.len() - 1][0];
                    let mean_spin: f64 =
                        t.frames.iter().map(|f| f[0].angular_velocity.norm()).sum::<f64>() / t.frames.len() as f64;
                    println!(
                        "{family:?} x{balls} seed {seed}: {} frames, start {:.3?} -> end {:.3?}, mean |w| {mean_spin:.2} rad/s, energy {:.3} -> {:.3}",
                        t.frames.len(),
                        first.position.as_slice(),
                        last.position.as_slice(),
                        first.energy(9.81),
                        last.energy(9.81),
                    );
                }
                SimOutcome::Rejected(why) => println!("{family:?} x{balls} seed {seed}: rejected ({why:?})"),
            }
        }
    }
}
