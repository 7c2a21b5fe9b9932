//! The `FLD1` binary grid-field format.
//!
//! Layout: 8-byte magic `FLD1\0\0\0\0`, then little-endian `3 x u32` dims,
//! `3 x f64` origin, `3 x f64` spacing, `u32` component count (always 3), then
//! `f64` samples with the `x` index fastest and the three components of a
//! node stored together.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::GridField;
use crate::geom::GridSpec;

pub const MAGIC: [u8; 8] = *b"FLD1\0\0\0\0";
const HEADER_LEN: usize = 8 + 12 + 24 + 24 + 4;

pub fn encode(field: &GridField) -> Vec<u8> {
    let s = &field.spec;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.data.len());
    out.extend_from_slice(&MAGIC);
    for d in s.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in s.origin.iter().chain(&s.spacing) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&3u32.to_le_bytes());
    for v in &field.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<GridField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("truncated header: {} bytes", bytes.len())));
    }
    if bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic, expected FLD1".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let dims: [usize; 3] = std::array::from_fn(|d| u32_at(8 + 4 * d) as usize);
    let origin: [f64; 3] = std::array::from_fn(|d| f64_at(20 + 8 * d));
    let spacing: [f64; 3] = std::array::from_fn(|d| f64_at(44 + 8 * d));
    let comps = u32_at(68);
    if comps != 3 {
        return Err(Error::Format(format!("component count {comps}, expected 3")));
    }
    let spec = GridSpec::new(origin, spacing, dims).map_err(|e| Error::Format(e.to_string()))?;
    let expected = 3 * spec.node_count();
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 8 * expected {
        return Err(Error::Format(format!(
            "payload holds {} bytes, expected {}",
            payload.len(),
            8 * expected
        )));
    }
    let data = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    GridField::new(spec, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn write(field: &GridField, mut w: impl Write) -> Result<()> {
    w.write_all(&encode(field))?;
    Ok(())
}

pub fn read(mut r: impl Read) -> Result<GridField> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode(&buf)
}

pub fn save(field: &GridField, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(field))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<GridField> {
    decode(&std::fs::read(path)?)
}
