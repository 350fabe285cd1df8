//! Dataset generation, the on-disk layout and windowed sampling.
//!
//! A dataset directory holds `manifest.json` and `seq/NNNNN.seq`. Sequence
//! `i` is drawn from an RNG stream that depends only on the master seed and
//! `i`, so generation order and thread count never change the output.

mod format;
mod window;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{decode_sequence, encode_sequence, load_sequence, save_sequence, SequenceRecord, SEQ_MAGIC, SEQ_VERSION};
pub use window::{sample_window, stack_frames, window_at, window_starts, TrainingWindow, WindowMode};

use crate::mechanics::{
    sample_scenario, simulate_sequence, Family, MechError, ScenarioConfig, SimOutcome, DEFAULT_RADIUS,
};
use crate::optics::{render_scenario_frame, screen_project, Camera};
use crate::seeding::{item_rng, split_seed};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SEQ_DIR: &str = "seq";
pub const MAX_CONSECUTIVE_REJECTIONS: usize = 100;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad magic {found:?}, expected \"RSEQ\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported sequence file version {found}")]
    Version { found: u32 },
    #[error("truncated while reading {field} at byte {offset}: expected {expected} bytes, file has {actual}")]
    Truncated { field: &'static str, offset: usize, expected: usize, actual: usize },
    #[error("malformed data at byte {offset}: {what}")]
    Malformed { what: String, offset: usize },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("sequence needs {needed} frames, has {available}")]
    TooShort { needed: usize, available: usize },
    #[error("sequence {index}: {count} consecutive scenarios rejected")]
    TooManyRejections { index: usize, count: usize },
    #[error(transparent)]
    Mech(#[from] MechError),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.70, val: 0.15, test: 0.15 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = DatasetError;
    fn from_str(s: &str) -> Result<Self, DatasetError> {
        Split::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| DatasetError::Manifest(format!("unknown split {s:?}")))
    }
}

impl SplitIndices {
    pub fn get(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub family: Family,
    pub n_objects: usize,
    pub sequence_count: usize,
    #[serde(default = "default_image_size")]
    pub image_size: usize,
    #[serde(default = "default_t0")]
    pub t0: usize,
    #[serde(default = "yes")]
    pub ball_textured: bool,
    #[serde(default)]
    pub splits: SplitFractions,
    pub master_seed: u64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Cap on stored 40 fps frames per sequence.
    #[serde(default = "default_max_frames")]
    pub max_frames: usize,
    /// Filled in by generation.
    #[serde(default)]
    pub split_indices: SplitIndices,
    /// Derived seed of the accepted scenario for each sequence.
    #[serde(default)]
    pub scenario_seeds: Vec<u64>,
}

fn default_image_size() -> usize {
    crate::optics::DEFAULT_IMAGE_SIZE
}
fn default_t0() -> usize {
    4
}
fn yes() -> bool {
    true
}
fn default_radius() -> f64 {
    DEFAULT_RADIUS
}
fn default_max_frames() -> usize {
    120
}

impl DatasetManifest {
    pub fn new(family: Family, n_objects: usize, sequence_count: usize, master_seed: u64) -> Self {
        Self {
            family,
            n_objects,
            sequence_count,
            image_size: default_image_size(),
            t0: default_t0(),
            ball_textured: true,
            splits: SplitFractions::default(),
            master_seed,
            radius: DEFAULT_RADIUS,
            max_frames: default_max_frames(),
            split_indices: SplitIndices::default(),
            scenario_seeds: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: &str| Err(DatasetError::Manifest(m.to_string()));
        let f = self.splits;
        if [f.train, f.val, f.test].iter().any(|v| !(0.0..=1.0).contains(v)) || (f.train + f.val + f.test - 1.0).abs() > 1e-9 {
            return bad("split fractions must be in [0,1] and sum to 1");
        }
        if !(1..=3).contains(&self.n_objects) {
            return bad("n_objects must be 1, 2 or 3");
        }
        if self.image_size < 8 || self.image_size % 8 != 0 {
            return bad("image_size must be a positive multiple of 8");
        }
        if self.t0 == 0 {
            return bad("t0 must be positive");
        }
        if self.max_frames * crate::mechanics::SUBSAMPLE < crate::mechanics::MIN_RAW_FRAMES {
            return bad("max_frames too small to ever reach the minimum sequence length");
        }
        Ok(())
    }

    pub fn scenario_config(&self) -> ScenarioConfig {
        ScenarioConfig { family: self.family, n_balls: self.n_objects, radius: self.radius, textured: self.ball_textured }
    }
}

/// Contiguous 70/15/15-style partition of `0..count`.
pub fn split_indices(count: usize, f: &SplitFractions) -> SplitIndices {
    let n_train = ((f.train * count as f64).round() as usize).min(count);
    let n_val = ((f.val * count as f64).round() as usize).min(count - n_train);
    SplitIndices {
        train: (0..n_train).collect(),
        val: (n_train..n_train + n_val).collect(),
        test: (n_train + n_val..count).collect(),
    }
}

pub fn sequence_path(root: &Path, index: usize) -> PathBuf {
    root.join(SEQ_DIR).join(format!("{index:05}.seq"))
}

/// Simulates and renders sequence `index`, resampling rejected scenarios.
pub fn generate_record(manifest: &DatasetManifest, index: usize) -> Result<(SequenceRecord, u64), DatasetError> {
    let config = manifest.scenario_config();
    let base = split_seed(manifest.master_seed, index as u64);
    for attempt in 0..MAX_CONSECUTIVE_REJECTIONS {
        let seed = split_seed(base, attempt as u64);
        let mut rng = item_rng(seed, 0);
        let scenario = match sample_scenario(&config, seed, &mut rng) {
            Ok(s) => s,
            Err(MechError::Placement { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let trajectory = match simulate_sequence(&scenario, manifest.max_frames)? {
            SimOutcome::Accepted(t) => t,
            SimOutcome::Rejected(_) => continue,
        };
        let camera = Camera::for_surface(&scenario.surface, manifest.image_size);
        let frames = trajectory.frames.iter().map(|b| render_scenario_frame(&scenario, b, manifest.image_size)).collect();
        let positions = trajectory
            .frames
            .iter()
            .map(|f| f.iter().map(|b| screen_project(b.position, &camera)).collect())
            .collect();
        let angular_velocities =
            trajectory.frames.iter().map(|f| f.iter().map(|b| b.angular_velocity.into()).collect()).collect();
        return Ok((SequenceRecord { frames, positions, angular_velocities, scenario }, seed));
    }
    Err(DatasetError::TooManyRejections { index, count: MAX_CONSECUTIVE_REJECTIONS })
}

/// Writes a complete dataset directory and returns the final manifest.
pub fn generate_dataset(manifest: &DatasetManifest, root: &Path) -> Result<DatasetManifest, DatasetError> {
    manifest.validate()?;
    let seq_dir = root.join(SEQ_DIR);
    std::fs::create_dir_all(&seq_dir).map_err(|e| DatasetError::io(&seq_dir, e))?;
    let seeds = (0..manifest.sequence_count)
        .into_par_iter()
        .map(|i| {
            let (rec, seed) = generate_record(manifest, i)?;
            save_sequence(&sequence_path(root, i), &rec)?;
            Ok(seed)
        })
        .collect::<Result<Vec<u64>, DatasetError>>()?;
    let mut out = manifest.clone();
    out.split_indices = split_indices(manifest.sequence_count, &manifest.splits);
    out.scenario_seeds = seeds;
    write_manifest(root, &out)?;
    Ok(out)
}

pub fn write_manifest(root: &Path, manifest: &DatasetManifest) -> Result<(), DatasetError> {
    let path = root.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest).map_err(|e| DatasetError::Manifest(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| DatasetError::io(&path, e))
}

pub fn read_manifest(root: &Path) -> Result<DatasetManifest, DatasetError> {
    let path = root.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| DatasetError::io(&path, e))?;
    let m: DatasetManifest = serde_json::from_str(&text).map_err(|e| DatasetError::Manifest(format!("{}: {e}", path.display())))?;
    m.validate()?;
    Ok(m)
}

/// A generated dataset opened for reading.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self, DatasetError> {
        Ok(Self { root: root.to_path_buf(), manifest: read_manifest(root)? })
    }

    pub fn indices(&self, split: Split) -> &[usize] {
        self.manifest.split_indices.get(split)
    }

    pub fn load(&self, index: usize) -> Result<SequenceRecord, DatasetError> {
        load_sequence(&sequence_path(&self.root, index))
    }

    pub fn load_split(&self, split: Split) -> Result<Vec<SequenceRecord>, DatasetError> {
        self.indices(split).par_iter().map(|&i| self.load(i)).collect()
    }
}
