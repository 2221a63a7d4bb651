//! Parameter checkpoints.
//!
//! Layout, all little-endian:
//!
//! | bytes | field                              |
//! |-------|------------------------------------|
//! | 4     | magic `BRCK`                       |
//! | 4     | format version (u32, currently 1)  |
//! | 4     | model kind (u32: 0 logreg, 1 mlp)  |
//! | 8     | input dim D (u64)                  |
//! | 8     | class count C (u64)                |
//! | 8     | hidden width (u64, 0 for logreg)   |
//! | 8     | parameter count N (u64)            |
//! | 8·N   | parameters (f64)                   |

use std::io::{Read, Write};

use super::{LogisticRegression, LogitModel, Model, TanhMlp};
use crate::error::{invalid, Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"BRCK";
const VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::io("<checkpoint>", e)
}

pub fn write_checkpoint<W: Write>(model: &Model, mut out: W) -> Result<()> {
    let kind: u32 = match model {
        Model::Logreg(_) => 0,
        Model::Mlp(_) => 1,
    };
    let mut buf = Vec::with_capacity(44 + 8 * model.params().len());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&kind.to_le_bytes());
    for v in [model.input_dim(), model.class_count(), model.hidden(), model.params().len()] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for p in model.params() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    out.write_all(&buf).map_err(io_err)
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Model> {
    let mut header = [0u8; 44];
    input.read_exact(&mut header).map_err(io_err)?;
    if &header[..4] != CHECKPOINT_MAGIC {
        return Err(invalid("not a model checkpoint (bad magic)"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().unwrap()) as usize;
    if u32_at(4) != VERSION {
        return Err(invalid(format!("unsupported checkpoint version {}", u32_at(4))));
    }
    let (dim, classes, hidden, count) = (u64_at(12), u64_at(20), u64_at(28), u64_at(36));
    let mut raw = vec![0u8; count.checked_mul(8).ok_or_else(|| invalid("checkpoint too large"))?];
    input.read_exact(&mut raw).map_err(io_err)?;
    let params: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    match u32_at(8) {
        0 => Ok(Model::Logreg(LogisticRegression::from_flat(dim, classes, params)?)),
        1 => Ok(Model::Mlp(TanhMlp::from_flat(dim, hidden, classes, params)?)),
        k => Err(invalid(format!("unknown model kind tag {k}"))),
    }
}
