//! `SAE1` model files (little-endian, no padding):
//!
//! ```text
//! "SAE1" | version u32 = 1 | d_model u32 | n_features u32
//! W_enc  n_features × d_model f32, row-major
//! b_enc  n_features f32
//! D      d_model × n_features f32, row-major
//! b_dec  d_model f32
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::SaeModel;
use crate::numerics::Matrix;
use crate::{FormatError, Result};

pub const MODEL_MAGIC: [u8; 4] = *b"SAE1";
pub const MODEL_VERSION: u32 = 1;
const HEADER: u64 = 16;

pub fn model_file_len(d_model: usize, n_features: usize) -> u64 {
    let (d, n) = (d_model as u64, n_features as u64);
    HEADER + 4 * (2 * d * n + n + d)
}

pub fn save_model(model: &SaeModel, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&MODEL_MAGIC)?;
    out.write_all(&MODEL_VERSION.to_le_bytes())?;
    out.write_all(&(model.d_model() as u32).to_le_bytes())?;
    out.write_all(&(model.n_features() as u32).to_le_bytes())?;
    for part in [model.w_enc.as_slice(), model.b_enc(), model.decoder.as_slice(), model.b_dec()] {
        for v in part {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SaeModel> {
    let bytes = fs::read(path)?;
    let found = bytes.len() as u64;
    if found < HEADER {
        return Err(FormatError::Truncated { expected: HEADER, found }.into());
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MODEL_MAGIC {
        return Err(FormatError::BadMagic {
            expected: MODEL_MAGIC,
            found: magic,
        }
        .into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != MODEL_VERSION {
        return Err(FormatError::BadVersion(version).into());
    }
    let d = u32_at(8) as usize;
    let n = u32_at(12) as usize;
    if d == 0 || n == 0 {
        return Err(FormatError::Header(format!("d_model {d}, n_features {n}")).into());
    }
    let expected = model_file_len(d, n);
    if found < expected {
        return Err(FormatError::Truncated { expected, found }.into());
    }
    if found > expected {
        return Err(FormatError::TrailingBytes { expected, found }.into());
    }
    let floats: Vec<f32> = bytes[HEADER as usize..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(i) = floats.iter().position(|v| !v.is_finite()) {
        return Err(FormatError::NonFinite { record: i as u64 }.into());
    }
    let (w, rest) = floats.split_at(n * d);
    let (be, rest) = rest.split_at(n);
    let (dec, bd) = rest.split_at(d * n);
    SaeModel::from_parts(
        Matrix::from_vec(n, d, w.to_vec())?,
        be.to_vec(),
        Matrix::from_vec(d, n, dec.to_vec())?,
        bd.to_vec(),
    )
}
