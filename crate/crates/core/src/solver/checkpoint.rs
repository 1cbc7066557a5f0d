//! Binary snapshot format.
//!
//! ```text
//!     offset  size      content
//!     0       4         magic "SQGD"
//!     4       4         format version, u32 LE (currently 1)
//!     8       4         grid size N, u32 LE
//!     12      8         alpha, f64 LE
//!     20      8         time stamp, f64 LE
//!     28      8·N·N     θ values, f64 LE, row-major (x₁ fastest)
//! ```
//!
//! The side length is not stored; decoded fields live on the `2π` torus.

use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

use crate::spectral::{Grid, ScalarField, SpectralError};

pub const MAGIC: &[u8; 4] = b"SQGD";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub alpha: f64,
    pub field: ScalarField,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("truncated checkpoint: needed {needed} bytes at offset {offset}, only {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("bad magic bytes {found:?}, expected \"SQGD\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("{extra} trailing bytes after the last value")]
    TrailingBytes { extra: usize },
    #[error("invalid field in checkpoint: {0}")]
    Field(#[from] SpectralError),
    #[error("non-finite header value {name} = {value}")]
    BadHeader { name: &'static str, value: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn encode(alpha: f64, field: &ScalarField) -> Vec<u8> {
    let n = field.grid().n();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&alpha.to_le_bytes());
    out.extend_from_slice(&field.time().to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn take(bytes: &[u8], offset: usize, needed: usize) -> Result<&[u8], CheckpointError> {
    bytes.get(offset..offset + needed).ok_or(CheckpointError::Truncated {
        offset,
        needed,
        available: bytes.len().saturating_sub(offset),
    })
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let magic: [u8; 4] = take(bytes, 0, 4)?.try_into().unwrap();
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic { found: magic });
    }
    let version = u32::from_le_bytes(take(bytes, 4, 4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let n = u32::from_le_bytes(take(bytes, 8, 4)?.try_into().unwrap()) as usize;
    let alpha = f64::from_le_bytes(take(bytes, 12, 8)?.try_into().unwrap());
    let time = f64::from_le_bytes(take(bytes, 20, 8)?.try_into().unwrap());
    for (name, value) in [("alpha", alpha), ("time", time)] {
        if !value.is_finite() {
            return Err(CheckpointError::BadHeader { name, value });
        }
    }
    let grid = Grid::periodic(n)?;
    let body = take(bytes, HEADER_LEN, 8 * n * n)?;
    let extra = bytes.len() - HEADER_LEN - body.len();
    if extra > 0 {
        return Err(CheckpointError::TrailingBytes { extra });
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Checkpoint {
        alpha,
        field: ScalarField::new(grid, values, time)?,
    })
}

pub fn write_checkpoint(path: &Path, alpha: f64, field: &ScalarField) -> Result<(), CheckpointError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode(alpha, field))?;
    file.sync_all()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScalarField {
        let grid = Grid::periodic(4).unwrap();
        ScalarField::new(grid, (0..16).map(|k| k as f64 * 0.25 - 2.0).collect(), 0.5).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let f = sample();
        let bytes = encode(0.95, &f);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 16);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.alpha, 0.95);
        assert_eq!(back.field, f);
    }

    #[test]
    fn truncation_names_missing_bytes() {
        let bytes = encode(1.0, &sample());
        match decode(&bytes[..bytes.len() - 3]) {
            Err(CheckpointError::Truncated {
                offset,
                needed,
                available,
            }) => {
                assert_eq!((offset, needed, available), (28, 128, 125));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            decode(&bytes[..10]),
            Err(CheckpointError::Truncated { offset: 8, .. })
        ));
    }

    #[test]
    fn header_errors() {
        let mut bytes = encode(1.0, &sample());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(CheckpointError::BadMagic { .. })));
        let mut bytes = encode(1.0, &sample());
        bytes[4] = 2;
        assert!(matches!(decode(&bytes), Err(CheckpointError::UnsupportedVersion(2))));
        let mut bytes = encode(1.0, &sample());
        bytes.push(0);
        assert!(matches!(
            decode(&bytes),
            Err(CheckpointError::TrailingBytes { extra: 1 })
        ));
    }
}
