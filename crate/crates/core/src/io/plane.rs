//! Exact `f64` image planes.
//!
//! Layout: 4-byte magic `FP64`, `u32` little-endian width and height, then
//! `width * height` little-endian `f64` samples in row-major order. This is
//! the lossless companion to the PGM view; simulated values survive a round
//! trip bit for bit.

use crate::error::{Error, Result};
use std::path::Path;

const MAGIC: &[u8; 4] = b"FP64";

/// Writes a row-major plane of samples.
pub fn write_plane(path: &Path, width: usize, height: usize, data: &[f64]) -> Result<()> {
    if width == 0 || height == 0 || data.len() != width * height {
        return Err(Error::domain(format!(
            "plane shape mismatch: {width}x{height} with {} samples",
            data.len()
        )));
    }
    let (w32, h32) = (
        u32::try_from(width).map_err(|_| Error::domain(format!("width {width} exceeds u32")))?,
        u32::try_from(height).map_err(|_| Error::domain(format!("height {height} exceeds u32")))?,
    );
    let mut out = Vec::with_capacity(12 + 8 * data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&w32.to_le_bytes());
    out.extend_from_slice(&h32.to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads a plane written by [`write_plane`].
pub fn read_plane(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let name = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| Error::io(name.clone(), e))?;
    let fail = |msg: String| Error::format(name.clone(), 0, msg);
    if bytes.len() < 12 {
        return Err(fail(format!("file is {} bytes, shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(fail(format!(
            "bad magic {:?}, expected FP64",
            String::from_utf8_lossy(&bytes[..4])
        )));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(fail(format!("dimensions must be nonzero, got {width}x{height}")));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| fail(format!("dimensions {width}x{height} overflow")))?;
    if bytes.len() - 12 != expected {
        return Err(fail(format!(
            "payload has {} bytes, expected {expected} for {width}x{height}",
            bytes.len() - 12
        )));
    }
    let data = bytes[12..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((width, height, data))
}
