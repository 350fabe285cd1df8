//! Fits the linear and quadratic baselines to a simulated track and
//! prints their extrapolation error by horizon.
//!
//! cargo run --release --example polynomial_baseline

use rolling_lab::baselines::PolyBaseline;
use rolling_lab::datasets::{generate_record, DatasetManifest};
use rolling_lab::mechanics::Family;

fn main() {
    let (record, _) = generate_record(&DatasetManifest::new(Family::Hemispherical, 1, 1, 3), 0).expect("sequence");
    let horizon = 40;
    for b in [PolyBaseline::linear(), PolyBaseline::quadratic()] {
        let out = b.predict_window(&record, 0, horizon).expect("prediction");
        let errs: Vec<String> = [1, 10, 20, 40]
            .iter()
            .map(|&t| {
                let p = out.steps[t - 1][0].position;
                let y = record.positions[b.t0 + t - 1][0];
                format!("T={t}: {:.2}px", (p[0] - y[0]).hypot(p[1] - y[1]))
            })
            .collect();
        println!("{:9} {}", b.name(), errs.join("  "));
    }
}
