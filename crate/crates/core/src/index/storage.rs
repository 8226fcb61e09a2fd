//! On-disk index layout.
//!
//! An index directory holds four files:
//!
//! - `meta.json` — format name, version, document count, total per-field
//!   token counts and the skipped-line count from ingestion.
//! - `docs.jsonl` — the document store, one JSON document per line in
//!   ordinal order (same schema as corpus input).
//! - `doclens.bin` — magic `TRDL`, version byte, `u32` doc count, then
//!   three little-endian `u32` token lengths (title, headings, body) per
//!   document.
//! - `postings.bin` — magic `TRPX`, version byte, `u32` term count, then
//!   per term (sorted by term bytes): `u16` term length + UTF-8 bytes,
//!   `u32` document frequency, `u32` posting count, and postings as
//!   (`u32` ordinal, `u8` field, `u32` term frequency) sorted by
//!   (ordinal, field).
//!
//! All integers are little-endian. Magic and version are checked on open.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_NAME: &str = "trustrag-index";
pub const FORMAT_VERSION: u32 = 1;
pub const POSTINGS_MAGIC: &[u8; 4] = b"TRPX";
pub const DOCLENS_MAGIC: &[u8; 4] = b"TRDL";
pub const BINARY_VERSION: u8 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct Meta {
    pub format: String,
    pub version: u32,
    pub doc_count: u32,
    pub total_field_tokens: [u64; 3],
    pub skipped_lines: u32,
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::IndexFormat {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Write `bytes` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp: PathBuf = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(bytes)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_meta(dir: &Path) -> Result<Meta> {
    let path = dir.join("meta.json");
    let raw = std::fs::read_to_string(&path)?;
    let meta: Meta = serde_json::from_str(&raw)
        .map_err(|e| format_err(&path, format!("invalid meta: {e}")))?;
    if meta.format != FORMAT_NAME {
        return Err(format_err(&path, format!("unknown format {:?}", meta.format)));
    }
    if meta.version != FORMAT_VERSION {
        return Err(format_err(
            &path,
            format!("unsupported version {} (expected {FORMAT_VERSION})", meta.version),
        ));
    }
    Ok(meta)
}

pub struct BinWriter {
    buf: Vec<u8>,
}

impl BinWriter {
    pub fn new(magic: &[u8; 4]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        buf.push(BINARY_VERSION);
        Self { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct BinReader {
    data: Vec<u8>,
    pos: usize,
    path: PathBuf,
}

impl BinReader {
    pub fn open(path: &Path, magic: &[u8; 4]) -> Result<Self> {
        let mut data = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut data)?;
        let mut r = Self {
            data,
            pos: 0,
            path: path.to_path_buf(),
        };
        let got = r.take(4)?;
        if got != magic {
            return Err(format_err(path, "bad magic"));
        }
        let version = r.u8()?;
        if version != BINARY_VERSION {
            return Err(format_err(path, format!("unsupported version {version}")));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.data.len() {
            return Err(format_err(&self.path, "truncated file"));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        Ok(self.take(n)?.to_vec())
    }

    pub fn done(&self) -> bool {
        self.pos == self.data.len()
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        format_err(&self.path, message)
    }
}
