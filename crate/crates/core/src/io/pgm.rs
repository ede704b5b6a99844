//! Binary PGM (P5) images, 16 bits per pixel.
//!
//! The PGM files are a lossy view of the real-valued frames: values are
//! rounded to the nearest integer and clamped to `0..=65535`. Writing always
//! emits maxval 65535 big-endian; reading also accepts 8-bit files.

use crate::correction::Frame;
use crate::error::{Error, Result};
use std::path::Path;

/// Writes a frame as a 16-bit P5 PGM (rounded, clamped view).
pub fn write_pgm(path: &Path, frame: &Frame) -> Result<()> {
    let mut out = Vec::with_capacity(32 + 2 * frame.data().len());
    out.extend_from_slice(format!("P5\n{} {}\n65535\n", frame.width(), frame.height()).as_bytes());
    for &v in frame.data() {
        let q = v.round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads a binary PGM; returns `(width, height, row-major samples)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut cursor = HeaderCursor::new(&bytes, path);
    let magic = cursor.token()?;
    if magic != b"P5" {
        return Err(cursor.err(format!(
            "expected P5 magic, got {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let width: usize = cursor.number("width")?;
    let height: usize = cursor.number("height")?;
    let maxval: u32 = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(cursor.err(format!("image dimensions must be nonzero, got {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(cursor.err(format!("maxval must be in 1..=65535, got {maxval}")));
    }
    // A single whitespace byte separates the header from the payload.
    cursor.single_whitespace()?;
    let payload = &bytes[cursor.pos..];
    let wide = maxval > 255;
    let expected = width * height * if wide { 2 } else { 1 };
    if payload.len() != expected {
        return Err(cursor.err(format!(
            "payload has {} bytes, expected {expected} for {width}x{height} at maxval {maxval}",
            payload.len()
        )));
    }
    let data = if wide {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        payload.iter().map(|&b| u16::from(b)).collect()
    };
    Ok((width, height, data))
}

/// Tracks position and line number while scanning a PGM header.
struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: u64,
    path: &'a Path,
}

impl<'a> HeaderCursor<'a> {
    fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        HeaderCursor {
            bytes,
            pos: 0,
            line: 1,
            path,
        }
    }

    fn err(&self, msg: String) -> Error {
        Error::format(self.path.display().to_string(), self.line, msg)
    }

    fn step(&mut self) -> Option<u8> {
        let b = *self.bytes.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
        }
        Some(b)
    }

    fn skip_space_and_comments(&mut self) -> Result<()> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => {
                    self.step();
                }
                Some(b'#') => {
                    while let Some(b) = self.step() {
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => return Ok(()),
                None => return Err(self.err("unexpected end of header".into())),
            }
        }
    }

    fn token(&mut self) -> Result<Vec<u8>> {
        self.skip_space_and_comments()?;
        let start = self.pos;
        while let Some(b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("unexpected end of header".into()));
        }
        Ok(self.bytes[start..self.pos].to_vec())
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.token()?;
        let text = std::str::from_utf8(&tok)
            .map_err(|_| self.err(format!("{what} is not valid UTF-8")))?;
        text.parse()
            .map_err(|_| self.err(format!("{what} is not a valid number: {text:?}")))
    }

    fn single_whitespace(&mut self) -> Result<()> {
        match self.step() {
            Some(b) if b.is_ascii_whitespace() => Ok(()),
            _ => Err(self.err("expected a whitespace byte after maxval".into())),
        }
    }
}
