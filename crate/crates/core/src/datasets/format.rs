//! The `.seq` record file.
//!
//! ```text
//! "RSEQ" | version u32 | frames u32 | objects u32 | width u32 | height u32
//! | scenario_len u32 | scenario JSON
//! | frames: frames*height*width*3 bytes RGB8
//! | positions: frames*objects*2 f64 LE (pixels)
//! | angular velocities: frames*objects*3 f64 LE (rad/s)
//! ```

use std::path::Path;

use super::DatasetError;
use crate::binio::{put_f64s, put_u32, Reader, Short};
use crate::mechanics::Scenario;
use crate::optics::Image;

pub const SEQ_MAGIC: [u8; 4] = *b"RSEQ";
pub const SEQ_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRecord {
    pub frames: Vec<Image>,
    /// `[frame][object]` pixel coordinates.
    pub positions: Vec<Vec<[f64; 2]>>,
    /// `[frame][object]` angular velocity in rad/s.
    pub angular_velocities: Vec<Vec<[f64; 3]>>,
    pub scenario: Scenario,
}

impl SequenceRecord {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn n_objects(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    pub fn image_size(&self) -> usize {
        self.frames.first().map_or(0, |f| f.width)
    }
}

impl From<Short> for DatasetError {
    fn from(s: Short) -> Self {
        DatasetError::Truncated { field: s.field, offset: s.offset, expected: s.expected, actual: s.actual }
    }
}

pub fn encode_sequence(rec: &SequenceRecord) -> Result<Vec<u8>, DatasetError> {
    let n = rec.len();
    let objects = rec.n_objects();
    let (w, h) = rec.frames.first().map_or((0, 0), |f| (f.width, f.height));
    if rec.positions.len() != n
        || rec.angular_velocities.len() != n
        || rec.positions.iter().any(|p| p.len() != objects)
        || rec.angular_velocities.iter().any(|p| p.len() != objects)
        || rec.frames.iter().any(|f| f.width != w || f.height != h)
    {
        return Err(DatasetError::Malformed { what: "record fields disagree in length".into(), offset: 0 });
    }
    let scenario = serde_json::to_vec(&rec.scenario)
        .map_err(|e| DatasetError::Malformed { what: format!("scenario: {e}"), offset: 0 })?;
    let mut out = Vec::with_capacity(28 + scenario.len() + n * (w * h * 3 + objects * 40));
    out.extend_from_slice(&SEQ_MAGIC);
    for v in [SEQ_VERSION, n as u32, objects as u32, w as u32, h as u32, scenario.len() as u32] {
        put_u32(&mut out, v);
    }
    out.extend_from_slice(&scenario);
    for f in &rec.frames {
        out.extend_from_slice(&f.data);
    }
    let pos: Vec<f64> = rec.positions.iter().flatten().flatten().copied().collect();
    put_f64s(&mut out, &pos);
    let ang: Vec<f64> = rec.angular_velocities.iter().flatten().flatten().copied().collect();
    put_f64s(&mut out, &ang);
    Ok(out)
}

pub fn decode_sequence(bytes: &[u8]) -> Result<SequenceRecord, DatasetError> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != SEQ_MAGIC {
        return Err(DatasetError::BadMagic { found: magic.try_into().unwrap() });
    }
    let version = r.u32("version")?;
    if version != SEQ_VERSION {
        return Err(DatasetError::Version { found: version });
    }
    let n = r.u32("frame count")? as usize;
    let objects = r.u32("object count")? as usize;
    let w = r.u32("width")? as usize;
    let h = r.u32("height")? as usize;
    let slen = r.u32("scenario length")? as usize;
    let at = r.offset();
    let scenario: Scenario = serde_json::from_slice(r.take(slen, "scenario")?)
        .map_err(|e| DatasetError::Malformed { what: format!("scenario JSON: {e}"), offset: at })?;
    let mut frames = Vec::with_capacity(n);
    for _ in 0..n {
        frames.push(Image { width: w, height: h, data: r.take(w * h * 3, "frames")?.to_vec() });
    }
    let pos = r.f64s(n * objects * 2, "positions")?;
    let ang = r.f64s(n * objects * 3, "angular velocities")?;
    if r.remaining() != 0 {
        return Err(DatasetError::Malformed { what: format!("{} trailing bytes", r.remaining()), offset: r.offset() });
    }
    if objects == 0 {
        return Err(DatasetError::Malformed { what: "record has no objects".into(), offset: 12 });
    }
    let positions = pos.chunks_exact(objects * 2).map(|c| c.chunks_exact(2).map(|p| [p[0], p[1]]).collect()).collect();
    let angular_velocities =
        ang.chunks_exact(objects * 3).map(|c| c.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect()).collect();
    Ok(SequenceRecord { frames, positions, angular_velocities, scenario })
}

pub fn save_sequence(path: &Path, rec: &SequenceRecord) -> Result<(), DatasetError> {
    let bytes = encode_sequence(rec)?;
    std::fs::write(path, bytes).map_err(|e| DatasetError::io(path, e))
}

pub fn load_sequence(path: &Path) -> Result<SequenceRecord, DatasetError> {
    let bytes = std::fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    decode_sequence(&bytes)
}
