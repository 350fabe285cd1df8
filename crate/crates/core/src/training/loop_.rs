use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{compute_loss, LossConfig, PlateauTracker, Targets, TrainError, TrainSchedule, Verdict};
use crate::datasets::{window_at, window_starts, Dataset, DatasetManifest, SequenceRecord, Split, TrainingWindow};
use crate::gradcore::{rmsprop_step, RmsPropState, Tape, Tensor};
use crate::predictor::{Model, ModelConfig, Variant};
use crate::seeding::{item_rng, split_seed};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOG_FILE: &str = "train_log.csv";
const LOG_HEADER: &str = "epoch,lr,train_loss,val_loss,wall_seconds";

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub wall_seconds: f64,
}

impl EpochRecord {
    fn csv_row(&self) -> String {
        format!("{},{:e},{:e},{:e},{:.3}", self.epoch, self.lr, self.train_loss, self.val_loss, self.wall_seconds)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Weights with the lowest validation loss.
    pub model: Model,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

pub fn with_final(config: &ModelConfig) -> bool {
    config.variant == Variant::Interpnet
}

pub fn check_compatible(manifest: &DatasetManifest, config: &ModelConfig) -> Result<(), TrainError> {
    let mut problems = vec![];
    if manifest.image_size != config.image_size {
        problems.push(format!("image size {} vs {}", manifest.image_size, config.image_size));
    }
    if manifest.n_objects != config.n_objects {
        problems.push(format!("{} objects vs {}", manifest.n_objects, config.n_objects));
    }
    if manifest.t0 != config.t0 {
        problems.push(format!("t0 {} vs {}", manifest.t0, config.t0));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(TrainError::Incompatible(problems.join(", ")))
    }
}

/// Loss of a single window under the current weights.
pub fn window_loss(model: &Model, window: &TrainingWindow, loss: &LossConfig) -> Result<f64, TrainError> {
    let tape = Tape::new();
    let bp = model.params.bind(&tape);
    let input = model_input(model, window)?;
    let out = model.rollout(&tape, &bp, &input, window.horizon())?;
    Ok(compute_loss(&tape, &out, &Targets::from_window(window), loss)?.item())
}

/// Encoder input for a window: the observed stack, plus the final frame
/// for interpnet.
pub fn model_input(model: &Model, window: &TrainingWindow) -> Result<Tensor, TrainError> {
    match (&window.final_frame, with_final(&model.config)) {
        (Some(f), true) => {
            let (h, w, c) = (window.input.shape()[0], window.input.shape()[1], window.input.shape()[2]);
            let mut data = Vec::with_capacity(h * w * (c + 3));
            for (px, last) in window.input.data().chunks_exact(c).zip(f.data().chunks_exact(3)) {
                data.extend_from_slice(px);
                data.extend_from_slice(last);
            }
            Ok(Tensor::new(&[h, w, c + 3], data)?)
        }
        (None, false) => Ok(window.input.clone()),
        _ => Err(TrainError::Mismatch("final frame presence does not match the model variant".into())),
    }
}

/// Mean loss and mean gradient over a batch. Windows are processed in
/// parallel; the reduction runs in batch order.
pub fn batch_gradients(
    model: &Model,
    windows: &[TrainingWindow],
    loss: &LossConfig,
) -> Result<(f64, Vec<Tensor>), TrainError> {
    let per: Vec<(f64, Vec<Tensor>)> = windows
        .par_iter()
        .map(|w| {
            let tape = Tape::new();
            let bp = model.params.bind(&tape);
            let out = model.rollout(&tape, &bp, &model_input(model, w)?, w.horizon())?;
            let l = compute_loss(&tape, &out, &Targets::from_window(w), loss)?;
            let grads = tape.backward(l)?;
            Ok((l.item(), bp.gradients(&grads)))
        })
        .collect::<Result<_, TrainError>>()?;
    let inv = 1.0 / windows.len() as f64;
    let mut iter = per.into_iter();
    let (mut total, mut acc) = iter.next().ok_or_else(|| TrainError::Config("empty batch".into()))?;
    for (l, g) in iter {
        total += l;
        for (a, b) in acc.iter_mut().zip(&g) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
    }
    for a in &mut acc {
        for x in a.data_mut() {
            *x *= inv;
        }
    }
    Ok((total * inv, acc))
}

/// Mean loss over windows, gradient-free.
pub fn evaluate_loss(model: &Model, windows: &[TrainingWindow], loss: &LossConfig) -> Result<f64, TrainError> {
    let losses = windows.par_iter().map(|w| window_loss(model, w, loss)).collect::<Result<Vec<_>, _>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

/// Fixed-start windows, skipping records too short for the horizon.
pub fn fixed_windows(records: &[SequenceRecord], config: &ModelConfig, horizon: usize) -> Vec<TrainingWindow> {
    records
        .iter()
        .filter(|r| window_starts(r.len(), config.t0, horizon) > 0)
        .map(|r| window_at(r, config.t0, horizon, 0, with_final(config)))
        .collect()
}

/// Epoch driver. `epoch_fn(epoch, lr)` trains one epoch and returns
/// `(train_loss, val_loss)`; `on_epoch` then sees the record and the
/// plateau verdict.
pub fn run_epochs<F, B>(schedule: &TrainSchedule, mut epoch_fn: F, mut on_epoch: B) -> Result<Vec<EpochRecord>, TrainError>
where
    F: FnMut(usize, f64) -> Result<(f64, f64), TrainError>,
    B: FnMut(&EpochRecord, Verdict) -> Result<(), TrainError>,
{
    schedule.validate()?;
    let start = Instant::now();
    let mut tracker = PlateauTracker::new(schedule);
    let mut lr = schedule.lr_initial;
    let mut log = Vec::new();
    for epoch in 1..=schedule.max_epochs {
        let (train_loss, val_loss) = epoch_fn(epoch, lr)?;
        let rec = EpochRecord { epoch, lr, train_loss, val_loss, wall_seconds: start.elapsed().as_secs_f64() };
        let verdict = tracker.observe(val_loss);
        on_epoch(&rec, verdict)?;
        log.push(rec);
        match verdict {
            Verdict::Decay => lr /= schedule.lr_decay_factor,
            Verdict::Stop => break,
            Verdict::Improved | Verdict::Continue => {}
        }
    }
    Ok(log)
}

/// Trains `model` on in-memory records. With `out_dir`, the best
/// checkpoint and the CSV log are written there as training proceeds.
pub fn train_on(
    mut model: Model,
    train: &[SequenceRecord],
    val: &[SequenceRecord],
    loss: &LossConfig,
    schedule: &TrainSchedule,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome, TrainError> {
    schedule.validate()?;
    let cfg = model.config.clone();
    if loss.variant != cfg.variant {
        return Err(TrainError::Config("loss and model variants differ".into()));
    }
    let usable: Vec<&SequenceRecord> =
        train.iter().filter(|r| window_starts(r.len(), cfg.t0, loss.horizon) > 0).collect();
    if usable.is_empty() {
        return Err(TrainError::Config("no training sequence is long enough for the horizon".into()));
    }
    for r in usable.iter().copied().chain(val.iter()) {
        if r.image_size() != cfg.image_size || r.n_objects() != cfg.n_objects {
            return Err(TrainError::Incompatible("record shape differs from the model config".into()));
        }
    }
    let val_windows = fixed_windows(val, &cfg, loss.horizon);
    if val_windows.is_empty() {
        return Err(TrainError::Config("no validation sequence is long enough for the horizon".into()));
    }
    let mut log_file = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            let path = dir.join(LOG_FILE);
            let mut f = File::create(&path).map_err(|e| io_err(&path, e))?;
            writeln!(f, "{LOG_HEADER}").map_err(|e| io_err(&path, e))?;
            Some((f, path))
        }
        None => None,
    };
    let stream = split_seed(schedule.seed, 1);
    let mut opt = RmsPropState::new(&model.params, schedule.lr_initial);
    let mut best = model.clone();
    let mut best_epoch = 0;
    let mut best_val = f64::INFINITY;
    let log = {
        let model_ref = &mut model;
        let best_ref = &mut best;
        let log_ref = &mut log_file;
        let snapshot = std::cell::RefCell::new(None::<Model>);
        let log = run_epochs(
            schedule,
            |epoch, lr| {
                opt.learning_rate = lr;
                let mut rng = item_rng(stream, epoch as u64);
                let mut order: Vec<usize> = (0..usable.len()).collect();
                order.shuffle(&mut rng);
                let windows: Vec<TrainingWindow> = order
                    .iter()
                    .map(|&i| {
                        let rec = usable[i];
                        let start = rng.random_range(0..window_starts(rec.len(), cfg.t0, loss.horizon));
                        window_at(rec, cfg.t0, loss.horizon, start, with_final(&cfg))
                    })
                    .collect();
                let mut total = 0.0;
                for batch in windows.chunks(schedule.batch_size) {
                    let (l, grads) = batch_gradients(model_ref, batch, loss)?;
                    rmsprop_step(&mut model_ref.params, &grads, &mut opt);
                    total += l * batch.len() as f64;
                }
                let val_loss = evaluate_loss(model_ref, &val_windows, loss)?;
                *snapshot.borrow_mut() = Some(model_ref.clone());
                Ok((total / windows.len() as f64, val_loss))
            },
            |rec, verdict| {
                let latest = snapshot.borrow_mut().take();
                if verdict == Verdict::Improved {
                    *best_ref = latest.expect("snapshot taken each epoch");
                    best_epoch = rec.epoch;
                    best_val = rec.val_loss;
                    if let Some(dir) = out_dir {
                        best_ref.save(&dir.join(CHECKPOINT_FILE))?;
                    }
                }
                if let Some((f, path)) = log_ref.as_mut() {
                    writeln!(f, "{}", rec.csv_row()).and_then(|_| f.flush()).map_err(|e| io_err(path, e))?;
                }
                Ok(())
            },
        )?;
        log
    };
    Ok(TrainOutcome { model: best, log, best_epoch, best_val_loss: best_val })
}

fn io_err(path: &Path, e: std::io::Error) -> TrainError {
    TrainError::Io { path: path.to_path_buf(), source: e }
}

/// Loads the train and validation splits and trains a fresh model.
pub fn train(
    dataset: &Dataset,
    config: &ModelConfig,
    loss: &LossConfig,
    schedule: &TrainSchedule,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome, TrainError> {
    check_compatible(&dataset.manifest, config)?;
    let train = dataset.load_split(Split::Train)?;
    let val = dataset.load_split(Split::Val)?;
    let model = Model::init(config.clone(), split_seed(schedule.seed, 0))?;
    train_on(model, &train, &val, loss, schedule, out_dir)
}

/// Parses a log written by [`train_on`].
pub fn read_log(path: &Path) -> Result<Vec<EpochRecord>, TrainError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = vec![];
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if i == 0 {
            if line != LOG_HEADER {
                return Err(TrainError::Config(format!("unexpected log header {line:?}")));
            }
            continue;
        }
        let bad = || TrainError::Config(format!("bad log row {}: {line:?}", i + 1));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        out.push(EpochRecord {
            epoch: cols[0].parse().map_err(|_| bad())?,
            lr: num(cols[1])?,
            train_loss: num(cols[2])?,
            val_loss: num(cols[3])?,
            wall_seconds: num(cols[4])?,
        });
    }
    Ok(out)
}
