//! Builds each predictor variant and rolls it out on a rendered sequence.
//!
//! cargo run --release --example predictor_rollout

use rolling_lab::datasets::{generate_record, window_at, DatasetManifest};
use rolling_lab::mechanics::Family;
use rolling_lab::predictor::{Model, ModelConfig, Variant};
use rolling_lab::training::model_input;

fn main() {
    let manifest = DatasetManifest::new(Family::Ellipsoidal, 1, 1, 11);
    let (record, _) = generate_record(&manifest, 0).expect("sequence");
    for variant in Variant::ALL {
        let config = ModelConfig::new(variant);
        let model = Model::init(config.clone(), 1).expect("model");
        let window = window_at(&record, config.t0, 10, 0, variant == Variant::Interpnet);
        let out = model.predict(&model_input(&model, &window).expect("input"), 10).expect("rollout");
        let last = &out.steps[9][0];
        println!(
            "{:9} {:6} params, step 10 prediction {:.2?} px (truth {:.2?}), covariance {:.2?}",
            variant.name(),
            model.parameter_count(),
            last.position,
            window.positions[9][0],
            last.covariance,
        );
    }
}
