//! Evaluates an untrained ProbNet and the baselines on a held-out split
//! and writes report.json / report.csv.
//!
//! cargo run --release --example evaluate_report -- [out_dir]

use std::path::PathBuf;

use rolling_lab::baselines::PolyBaseline;
use rolling_lab::datasets::{generate_dataset, Dataset, DatasetManifest, Split};
use rolling_lab::evaluation::{evaluate_dataset, Method, Report};
use rolling_lab::mechanics::Family;
use rolling_lab::predictor::{Model, ModelConfig, Variant};

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("rlab-report"));
    let data = out.join("data");
    generate_dataset(&DatasetManifest::new(Family::Ellipsoidal, 1, 20, 9), &data).expect("generation");
    let ds = Dataset::open(&data).expect("open");
    let model = Model::init(ModelConfig::new(Variant::Probnet), 4).expect("model");
    let mut report = Report::default();
    report.insert(evaluate_dataset(Method::Network(&model), &ds, Split::Test, &[10, 20]).expect("eval"));
    for b in [PolyBaseline::linear(), PolyBaseline::quadratic()] {
        report.insert(evaluate_dataset(Method::Baseline(&b), &ds, Split::Test, &[10, 20]).expect("eval"));
    }
    report.write(&out).expect("write");
    for (method, splits) in &report.0 {
        let r = &splits["test"];
        let h: Vec<String> = r.horizons.iter().map(|h| format!("T={} {:.2}px", h.horizon, h.pixel_error)).collect();
        println!("{method:9} {}  log perplexity@10 {:?}", h.join("  "), r.horizons[0].log_perplexity);
    }
    println!("report in {}", out.display());
}
