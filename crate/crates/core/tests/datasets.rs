use std::collections::BTreeSet;
use std::path::Path;

use rolling_lab::datasets::*;
use rolling_lab::mechanics::Family;
use rolling_lab::seeding::item_rng;

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn small_manifest() -> DatasetManifest {
    let mut m = DatasetManifest::new(Family::Hemispherical, 1, 10, 7);
    m.image_size = 32;
    m
}

#[test]
fn generation_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m = small_manifest();
    generate_dataset(&m, a.path()).unwrap();
    generate_dataset(&m, b.path()).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.len(), 11);
    assert!(ta == tb, "directory trees differ");
}

#[test]
fn sequence_content_depends_only_on_index() {
    let m = small_manifest();
    let (r3, s3) = generate_record(&m, 3).unwrap();
    let mut bigger = m.clone();
    bigger.sequence_count = 50;
    let (again, s3b) = generate_record(&bigger, 3).unwrap();
    assert_eq!(s3, s3b);
    assert_eq!(r3, again);
}

#[test]
fn splits_are_70_15_15_and_partition() {
    let s = split_indices(100, &SplitFractions::default());
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (70, 15, 15));
    let all: BTreeSet<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
    assert_eq!(all.len(), 100);
    assert_eq!(all, (0..100).collect());
    for n in [1usize, 7, 13, 200] {
        let s = split_indices(n, &SplitFractions::default());
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), n);
    }
}

#[test]
fn manifest_validation() {
    let mut m = small_manifest();
    m.splits.train = 0.8;
    assert!(matches!(m.validate(), Err(DatasetError::Manifest(_))));
    let mut m = small_manifest();
    m.n_objects = 4;
    assert!(m.validate().is_err());
}

fn one_record() -> SequenceRecord {
    generate_record(&small_manifest(), 0).unwrap().0
}

#[test]
fn stored_sequences_meet_min_length_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&small_manifest(), dir.path()).unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    assert_eq!(ds.manifest, m);
    for i in 0..m.sequence_count {
        let rec = ds.load(i).unwrap();
        assert!(rec.len() >= 84, "{}", rec.len());
        assert_eq!(rec.positions.len(), rec.len());
        assert_eq!(rec.angular_velocities.len(), rec.len());
        assert_eq!(rec.n_objects(), 1);
    }
    let rec = one_record();
    let back = decode_sequence(&encode_sequence(&rec).unwrap()).unwrap();
    assert_eq!(back, rec);
}

#[test]
fn corrupt_files_are_reported() {
    let bytes = encode_sequence(&one_record()).unwrap();
    let mut flipped = bytes.clone();
    flipped[0] ^= 0xff;
    let err = decode_sequence(&flipped).unwrap_err();
    assert!(matches!(err, DatasetError::BadMagic { .. }));
    assert!(err.to_string().contains("magic"));

    let cut = &bytes[..bytes.len() - 100];
    match decode_sequence(cut).unwrap_err() {
        DatasetError::Truncated { expected, actual, .. } => {
            assert_eq!(expected, bytes.len());
            assert_eq!(actual, bytes.len() - 100);
        }
        e => panic!("unexpected {e}"),
    }
    let err = decode_sequence(&bytes[..10]).unwrap_err();
    assert!(err.to_string().contains("expected"));
}

#[test]
fn window_sampling_modes() {
    let rec = one_record();
    let mut rng = item_rng(1, 1);
    let a = sample_window(&rec, 4, 10, WindowMode::EvalFixed, false, &mut rng).unwrap();
    let b = sample_window(&rec, 4, 10, WindowMode::EvalFixed, false, &mut rng).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.start, 0);
    assert_eq!(a.input.shape(), &[32, 32, 12]);
    assert_eq!(a.positions[0], rec.positions[4]);
    assert_eq!(a.horizon(), 10);

    let mut short = rec.clone();
    short.frames.truncate(14);
    short.positions.truncate(14);
    short.angular_velocities.truncate(14);
    let f = sample_window(&short, 4, 10, WindowMode::EvalFixed, true, &mut rng).unwrap();
    let r = sample_window(&short, 4, 10, WindowMode::TrainRandom, true, &mut rng).unwrap();
    assert_eq!(f, r);
    assert_eq!(f.final_frame.as_ref().unwrap().shape(), &[32, 32, 3]);
    short.frames.truncate(13);
    assert!(matches!(
        sample_window(&short, 4, 10, WindowMode::EvalFixed, false, &mut rng),
        Err(DatasetError::TooShort { .. })
    ));
}

#[test]
fn random_starts_cover_the_range() {
    let rec = one_record();
    let horizon = rec.len() - 4 - 9;
    assert_eq!(window_starts(rec.len(), 4, horizon), 10);
    let mut rng = item_rng(2, 2);
    let mut seen = BTreeSet::new();
    for _ in 0..1000 {
        seen.insert(sample_window(&rec, 4, horizon, WindowMode::TrainRandom, false, &mut rng).unwrap().start);
    }
    assert_eq!(seen, (0..10).collect());
}

#[test]
fn stacked_input_matches_frames() {
    let rec = one_record();
    let w = window_at(&rec, 4, 5, 2, false);
    let f = &rec.frames[3];
    let d = w.input.data();
    assert_eq!(d[0], f.data[0] as f64 / 255.0);
    let last = &rec.frames[6];
    let idx = (5 * 32 + 7) * 12 + 9 + 1;
    assert_eq!(d[idx], last.data[(5 * 32 + 7) * 3 + 1] as f64 / 255.0);
}
