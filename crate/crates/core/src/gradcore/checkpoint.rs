//! Flat binary parameter files.
//!
//! Layout (all integers `u32` little-endian):
//!
//! ```text
//! "RLLW" | version | count
//! count x ( name_len | name (UTF-8) | rank | extents[rank] | f64 LE payload )
//! meta_len | meta (UTF-8 JSON, may be empty)
//! ```

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{ParamSet, Tensor};
use crate::binio::{put_f64s, put_u32, Reader, Short};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"RLLW";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("bad magic {found:?} at offset 0, expected \"RLLW\"")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("truncated {field} at byte {offset}: expected length {expected}, actual length {actual}")]
    Truncated {
        field: &'static str,
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("malformed {what} at byte {offset}")]
    Malformed { what: &'static str, offset: usize },
}

impl From<Short> for CheckpointError {
    fn from(s: Short) -> Self {
        CheckpointError::Truncated {
            field: s.field,
            offset: s.offset,
            expected: s.expected,
            actual: s.actual,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ParamSet,
    /// Free-form JSON echo of the configuration that produced the weights.
    pub meta: String,
}

pub fn write_checkpoint(params: &ParamSet, meta: &str) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION);
    put_u32(&mut out, params.len() as u32);
    for (name, t) in params.iter() {
        put_u32(&mut out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        put_u32(&mut out, t.rank() as u32);
        for &e in t.shape() {
            put_u32(&mut out, e as u32);
        }
        put_f64s(&mut out, t.data());
    }
    put_u32(&mut out, meta.len() as u32);
    out.extend_from_slice(meta.as_bytes());
    out
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic {
            found: magic.to_vec(),
        });
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let count = r.u32("tensor count")?;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let name_len = r.u32("name length")? as usize;
        let at = r.offset();
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| CheckpointError::Malformed {
                what: "tensor name",
                offset: at,
            })?
            .to_string();
        let rank = r.u32("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("extent")? as usize);
        }
        let at = r.offset();
        let n: usize = shape.iter().product();
        let data = r.f64s(n, "payload")?;
        let t = Tensor::new(&shape, data).map_err(|_| CheckpointError::Malformed {
            what: "tensor shape",
            offset: at,
        })?;
        params.insert(name, t);
    }
    let meta_len = r.u32("meta length")? as usize;
    let at = r.offset();
    let meta = std::str::from_utf8(r.take(meta_len, "meta")?)
        .map_err(|_| CheckpointError::Malformed {
            what: "meta",
            offset: at,
        })?
        .to_string();
    if r.remaining() != 0 {
        return Err(CheckpointError::Malformed {
            what: "trailing bytes",
            offset: r.offset(),
        });
    }
    Ok(Checkpoint { params, meta })
}

pub fn save_checkpoint(path: &Path, params: &ParamSet, meta: &str) -> Result<(), CheckpointError> {
    fs::write(path, write_checkpoint(params, meta)).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_checkpoint(&bytes)
}
