//! Trains a DispNet on a small generated dataset and saves the checkpoint.
//!
//! cargo run --release --example train_predictor -- [epochs]

use rolling_lab::datasets::{generate_dataset, Dataset, DatasetManifest};
use rolling_lab::mechanics::Family;
use rolling_lab::predictor::{ModelConfig, Variant};
use rolling_lab::training::{train, LossConfig, TrainSchedule};

fn main() {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let root = std::env::temp_dir().join("rlab-train-example");
    let mut manifest = DatasetManifest::new(Family::Hemispherical, 1, 40, 5);
    manifest.image_size = 32;
    generate_dataset(&manifest, &root.join("data")).expect("generation");
    let ds = Dataset::open(&root.join("data")).expect("open");

    let mut config = ModelConfig::new(Variant::Dispnet);
    config.image_size = 32;
    config.channels = 16;
    config.transition_width = 64;
    let schedule = TrainSchedule { max_epochs: epochs, lr_initial: 3e-4, seed: 1, ..TrainSchedule::default() };
    let out = train(&ds, &config, &LossConfig::new(Variant::Dispnet, 10), &schedule, Some(&root.join("run")))
        .expect("training");
    for r in out.log.iter().step_by((epochs / 10).max(1)) {
        println!("epoch {:3}  lr {:.0e}  train {:9.3}  val {:9.3}", r.epoch, r.lr, r.train_loss, r.val_loss);
    }
    println!("best epoch {} (val {:.3}); files in {}", out.best_epoch, out.best_val_loss, root.join("run").display());
}
