//! The `repro-toy` chain (generate, train, evaluate) at a size that
//! finishes in a few minutes. The full desk-scale run is
//! `rlab repro-toy --out DIR`.
//!
//! cargo run --release --example toy_pipeline -- [out_dir]

use std::path::PathBuf;

use rolling_lab::cli::{run_toy, toy_plan, ToyArgs};
use rolling_lab::predictor::Variant;

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("rlab-toy"));
    let args = ToyArgs {
        out: Some(out.clone()),
        count: Some(40),
        epochs: Some(15),
        image_size: Some(32),
        channels: Some(16),
        variants: Some(vec![Variant::Dispnet, Variant::Probnet]),
        ..ToyArgs::default()
    };
    let report = run_toy(&toy_plan(&args).expect("plan")).expect("toy run");
    for (method, splits) in &report.0 {
        let r = &splits["test"];
        println!("{method:9} step-10 pixel error {:.2}", r.at(10).expect("horizon").pixel_error);
    }
    println!("outputs in {}", out.display());
}
