use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::spectral::Field;

/// Magic bytes opening a snapshot file.
pub const SNAPSHOT_MAGIC: &[u8; 5] = b"SGKV1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one run and writes them to the output directory.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.root.join(name), bytes)?;
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).expect("serializable");
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// File written outside the inventory (not part of the reproducible
    /// output).
    pub fn write_untracked(&self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.root.join(name), bytes)?;
        Ok(())
    }

    pub fn inventory(&self) -> &[FileEntry] {
        &self.files
    }
}

/// Comma separated table with a header row.
pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut buf = header.iter().map(|h| h.as_ref()).collect::<Vec<_>>().join(",");
        buf.push('\n');
        Csv {
            buf,
            width: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.width);
        let line = values.iter().map(|v| format_f64(*v)).collect::<Vec<_>>().join(",");
        self.buf.push_str(&line);
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

/// Shortest round-trip representation; `nan`, `inf`, `-inf` otherwise.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

/// `SGKV1`, `n` (u64 LE), `L` (f64 LE), then the grid samples of each
/// snapshot as f64 LE, one snapshot after the other.
pub fn snapshot_bytes(fields: &[Field]) -> Vec<u8> {
    let (n, l) = fields
        .first()
        .map(|f| (f.grid().n(), f.grid().length()))
        .unwrap_or((0, 0.0));
    let mut out = Vec::with_capacity(21 + 8 * n * fields.len());
    out.write_all(SNAPSHOT_MAGIC).unwrap();
    out.write_all(&(n as u64).to_le_bytes()).unwrap();
    out.write_all(&l.to_le_bytes()).unwrap();
    for f in fields {
        for v in f.samples() {
            out.write_all(&v.to_le_bytes()).unwrap();
        }
    }
    out
}

/// Inverse of [`snapshot_bytes`]: `(n, L, rows)`.
pub fn read_snapshots(bytes: &[u8]) -> Option<(usize, f64, Vec<Vec<f64>>)> {
    if bytes.len() < 21 || &bytes[..5] != SNAPSHOT_MAGIC {
        return None;
    }
    let n = u64::from_le_bytes(bytes[5..13].try_into().ok()?) as usize;
    let l = f64::from_le_bytes(bytes[13..21].try_into().ok()?);
    let body = &bytes[21..];
    if n == 0 || body.len() % (8 * n) != 0 {
        return None;
    }
    let rows = body
        .chunks(8 * n)
        .map(|row| row.chunks(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
        .collect();
    Some((n, l, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn snapshot_round_trip() {
        let g = Grid::new(16, 5.0).unwrap();
        let a = Field::from_fn(&g, |x| x.cos());
        let b = Field::from_fn(&g, |x| (-x * x).exp());
        let bytes = snapshot_bytes(&[a.clone(), b.clone()]);
        assert_eq!(&bytes[..5], b"SGKV1");
        assert_eq!(bytes.len(), 21 + 2 * 16 * 8);
        let (n, l, rows) = read_snapshots(&bytes).unwrap();
        assert_eq!((n, l), (16, 5.0));
        assert_eq!(rows, vec![a.samples(), b.samples()]);
        assert!(read_snapshots(b"SGKV2").is_none());
    }

    #[test]
    fn csv_formatting() {
        let mut c = Csv::new(&["t", "x"]);
        c.row(&[0.1, f64::NAN]);
        c.row(&[1.0, 1e-300]);
        assert_eq!(String::from_utf8(c.into_bytes()).unwrap(), "t,x\n0.1,nan\n1.0,1e-300\n");
    }
}
