//! Renders a short strip of frames for each surface family into PNGs.
//!
//! cargo run --release --example render_frames -- [out_dir]

use std::path::PathBuf;

use rolling_lab::mechanics::{sample_scenario, simulate_sequence, Family, ScenarioConfig};
use rolling_lab::optics::{render_scenario_frame, Image};
use rolling_lab::seeding::item_rng;

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("rlab-frames"));
    std::fs::create_dir_all(&out).expect("output directory");
    for (family, balls) in [(Family::Hemispherical, 1), (Family::Ellipsoidal, 3), (Family::Heightfield, 2)] {
        // scan seeds until the simulator accepts one
        let (scenario, traj) = (0u64..)
            .find_map(|seed| {
                let sc = sample_scenario(&ScenarioConfig::new(family, balls), seed, &mut item_rng(7, seed)).ok()?;
                let t = simulate_sequence(&sc, 120).ok()?.accepted()?;
                Some((sc, t))
            })
            .expect("an accepted scenario");
        let frames: Vec<Image> =
            [0, 15, 30, 45].iter().map(|&k| render_scenario_frame(&scenario, &traj.frames[k], 128)).collect();
        let path = out.join(format!("{family:?}.png").to_lowercase());
        Image::hstack(&frames).save_png(&path).expect("png");
        println!("wrote {}", path.display());
    }
}
