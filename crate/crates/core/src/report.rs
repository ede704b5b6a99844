//! Run reports: the ordered `key = value` text the CLI prints on stdout.
//!
//! Reports are deterministic by construction. Anything that varies between
//! identical runs (wall-clock time, host names) stays out; content digests
//! go in so runs can be compared byte-for-byte.

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

/// Ordered list of `key = value` entries under a command name.
///
/// Duplicate keys are allowed and kept in insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    command: String,
    entries: Vec<(String, String)>,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        RunReport {
            command: command.into(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl std::fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// One `key = value` line per entry, `command` first, LF endings.
    pub fn render(&self) -> String {
        let mut out = format!("command = {}\n", self.command);
        for (key, value) in &self.entries {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn feed_file(hasher: &mut Sha256, path: &Path) -> Result<()> {
    let mut file =
        std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut buf = [0u8; 8192];
    loop {
        let n = file
            .read(&mut buf)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        if n == 0 {
            return Ok(());
        }
        hasher.update(&buf[..n]);
    }
}

/// SHA-256 of one file's bytes, rendered as `sha256:<hex>`.
pub fn digest_file(path: &Path) -> Result<String> {
    digest_files(std::iter::once(path))
}

/// SHA-256 of several files' bytes concatenated in iteration order.
pub fn digest_files<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<String> {
    let mut hasher = Sha256::new();
    for path in paths {
        feed_file(&mut hasher, path)?;
    }
    Ok(format!("sha256:{}", hex(&hasher.finalize())))
}
