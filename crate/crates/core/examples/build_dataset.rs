//! Generates a small dataset, reloads it and cuts training windows.
//!
//! cargo run --release --example build_dataset -- [out_dir]

use std::path::PathBuf;

use rolling_lab::datasets::{generate_dataset, sample_window, Dataset, DatasetManifest, Split, WindowMode};
use rolling_lab::mechanics::Family;
use rolling_lab::seeding::item_rng;

fn main() {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("rlab-dataset"));
    let mut manifest = DatasetManifest::new(Family::Heightfield, 1, 20, 2024);
    manifest.image_size = 32;
    let written = generate_dataset(&manifest, &root).expect("generation");
    println!("{} sequences in {}", written.sequence_count, root.display());
    println!("splits: train {:?}, val {:?}, test {:?}", written.split_indices.train.len(), written.split_indices.val, written.split_indices.test);

    let ds = Dataset::open(&root).expect("open");
    let rec = ds.load(ds.indices(Split::Train)[0]).expect("load");
    println!("sequence 0: {} frames of {}x{}, {} ball(s)", rec.len(), rec.image_size(), rec.image_size(), rec.n_objects());
    let mut rng = item_rng(1, 0);
    let w = sample_window(&rec, 4, 10, WindowMode::TrainRandom, false, &mut rng).expect("window");
    println!("window at frame {}: input {:?}, first target {:.2?} px", w.start, w.input.shape(), w.positions[0][0]);
}
