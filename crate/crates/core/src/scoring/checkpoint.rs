//! Binary checkpoint format.
//!
//! ```text
//! magic    8 bytes  "KGCACHE\0"
//! version  u16
//! model    u8
//! flags    u8       bit 0: SimplE averaging
//! |E|      u64
//! |R|      u64
//! dim      u32
//! nparams  u32
//! per parameter: role u8, rows u64, cols u64, rows*cols f32
//! ```
//!
//! All integers and floats are little-endian.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{EmbeddingStore, Matrix, ModelKind, Role};
use crate::{fsio, Error, Result};

const MAGIC: &[u8; 8] = b"KGCACHE\0";
const VERSION: u16 = 1;

pub fn encode_checkpoint(store: &EmbeddingStore<f32>) -> Vec<u8> {
    let floats: usize = store.params.iter().map(|m| m.data.len()).sum();
    let mut out = Vec::with_capacity(40 + store.params.len() * 17 + floats * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(store.kind.code());
    out.push(store.simple_half as u8);
    out.extend_from_slice(&(store.entity_count as u64).to_le_bytes());
    out.extend_from_slice(&(store.relation_count as u64).to_le_bytes());
    out.extend_from_slice(&(store.dim as u32).to_le_bytes());
    out.extend_from_slice(&(store.params.len() as u32).to_le_bytes());
    for (slot, m) in store.params.iter().enumerate() {
        out.push(store.role(slot).code());
        out.extend_from_slice(&(m.rows as u64).to_le_bytes());
        out.extend_from_slice(&(m.cols as u64).to_le_bytes());
        for x in &m.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated while reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

fn to_usize(x: u64, what: &str) -> Result<usize> {
    usize::try_from(x).map_err(|_| Error::Checkpoint(format!("{what} too large")))
}

/// Decode a checkpoint. Every size is validated against the model layout
/// and the remaining input before anything is allocated.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<EmbeddingStore<f32>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let code = r.u8("model")?;
    let kind = ModelKind::from_code(code)
        .ok_or_else(|| Error::Checkpoint(format!("unknown model code {code}")))?;
    let flags = r.u8("flags")?;
    if flags > 1 {
        return Err(Error::Checkpoint(format!("unknown flags {flags:#x}")));
    }
    let entity_count = to_usize(r.u64("entity count")?, "entity count")?;
    let relation_count = to_usize(r.u64("relation count")?, "relation count")?;
    let dim = r.u32("dim")? as usize;
    if dim == 0 {
        return Err(Error::Checkpoint("zero dimension".into()));
    }
    let nparams = r.u32("parameter count")? as usize;
    let roles = kind.roles();
    if nparams != roles.len() {
        return Err(Error::Checkpoint(format!(
            "{kind} expects {} parameter matrices, found {nparams}",
            roles.len()
        )));
    }
    let width = kind.width(dim);
    let mut params = Vec::with_capacity(roles.len());
    for (slot, &expected) in roles.iter().enumerate() {
        let rc = r.u8("role")?;
        if Role::from_code(rc) != Some(expected) {
            return Err(Error::Checkpoint(format!(
                "parameter {slot}: expected role {expected:?}, found code {rc}"
            )));
        }
        let rows = to_usize(r.u64("rows")?, "rows")?;
        let cols = to_usize(r.u64("cols")?, "cols")?;
        let want_rows = if expected.indexes_entities() {
            entity_count
        } else {
            relation_count
        };
        if rows != want_rows || cols != width {
            return Err(Error::Checkpoint(format!(
                "parameter {slot}: shape {rows}x{cols}, expected {want_rows}x{width}"
            )));
        }
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Checkpoint("matrix size overflows".into()))?;
        if n > r.remaining() {
            return Err(Error::Checkpoint(format!(
                "parameter {slot}: truncated data"
            )));
        }
        let raw = r.take(n, "matrix data")?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Checkpoint(format!(
                "parameter {slot}: non-finite value"
            )));
        }
        params.push(Matrix { rows, cols, data });
    }
    if r.remaining() != 0 {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            r.remaining()
        )));
    }
    Ok(EmbeddingStore {
        kind,
        dim,
        entity_count,
        relation_count,
        simple_half: flags & 1 == 1,
        params,
    })
}

/// Sidecar metadata stored next to a checkpoint as `key = value` lines.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub config_hash: String,
    pub epoch: usize,
}

impl CheckpointMeta {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "config_hash = {}", self.config_hash);
        let _ = writeln!(s, "epoch = {}", self.epoch);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = CheckpointMeta::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("checkpoint meta", i + 1, "expected key = value"))?;
            let (k, v) = (k.trim(), v.trim());
            let bad = || Error::parse("checkpoint meta", i + 1, format!("bad value for {k}"));
            match k {
                "seed" => meta.seed = v.parse().map_err(|_| bad())?,
                "config_hash" => meta.config_hash = v.to_string(),
                "epoch" => meta.epoch = v.parse().map_err(|_| bad())?,
                _ => {}
            }
        }
        Ok(meta)
    }
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_checkpoint(
    path: &Path,
    store: &EmbeddingStore<f32>,
    meta: &CheckpointMeta,
) -> Result<()> {
    fsio::write_atomic(path, &encode_checkpoint(store))?;
    fsio::write_atomic_str(&meta_path(path), &meta.to_text())
}

/// Read a checkpoint and, if present, its sidecar metadata.
pub fn read_checkpoint(path: &Path) -> Result<(EmbeddingStore<f32>, Option<CheckpointMeta>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let store = decode_checkpoint(&bytes)?;
    let mp = meta_path(path);
    let meta = if mp.exists() {
        Some(CheckpointMeta::parse(&fsio::read_to_string(&mp)?)?)
    } else {
        None
    };
    Ok((store, meta))
}
