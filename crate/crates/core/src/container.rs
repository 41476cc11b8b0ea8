//! Versioned binary model container.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` header length, a JSON
//! header, then every array as little-endian `f64` in header order. The header
//! records each array's name and shape so a reader can validate sizes before
//! touching the payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"LEAFKIT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Array {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub kind: String,
    pub meta: serde_json::Value,
    pub arrays: Vec<Array>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: serde_json::Value,
    arrays: Vec<(String, Vec<usize>)>,
}

impl Container {
    pub fn new(kind: impl Into<String>, meta: serde_json::Value) -> Self {
        Self {
            kind: kind.into(),
            meta,
            arrays: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.arrays.push(Array {
            name: name.into(),
            shape,
            data,
        });
    }

    /// Remove and return the array called `name`, checking its length.
    pub fn take(&mut self, name: &str, len: usize) -> Result<Vec<f64>> {
        let pos = self
            .arrays
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::Container(format!("missing array {name}")))?;
        let a = self.arrays.remove(pos);
        if a.data.len() != len {
            return Err(Error::Container(format!(
                "array {name} has {} values, expected {len}",
                a.data.len()
            )));
        }
        Ok(a.data)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            arrays: self.arrays.iter().map(|a| (a.name.clone(), a.shape.clone())).collect(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Container(e.to_string()))?;
        let payload: usize = self.arrays.iter().map(|a| a.data.len() * 8).sum();
        let mut out = Vec::with_capacity(20 + json.len() + payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for a in &self.arrays {
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Container(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a leafkit model file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Container(format!(
                "format version {version} is not supported (expected {FORMAT_VERSION})"
            )));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = &bytes[20..];
        if body.len() < hlen {
            return Err(bad("truncated header"));
        }
        let header: Header =
            serde_json::from_slice(&body[..hlen]).map_err(|e| Error::Container(e.to_string()))?;
        let mut rest = &body[hlen..];
        let mut arrays = Vec::with_capacity(header.arrays.len());
        for (name, shape) in header.arrays {
            let n: usize = shape.iter().product();
            if rest.len() < n * 8 {
                return Err(Error::Container(format!("truncated array {name}")));
            }
            let data = rest[..n * 8]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            rest = &rest[n * 8..];
            arrays.push(Array { name, shape, data });
        }
        if !rest.is_empty() {
            return Err(bad("trailing bytes after last array"));
        }
        Ok(Self {
            kind: header.kind,
            meta: header.meta,
            arrays,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path, kind: &str) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let c = Self::from_bytes(&bytes)?;
        if c.kind != kind {
            return Err(Error::Container(format!(
                "{} holds a {} model, expected {kind}",
                path.display(),
                c.kind
            )));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut c = Container::new("toy", serde_json::json!({"a": 1}));
        c.push("w", vec![2, 2], vec![0.1, -0.0, f64::MIN_POSITIVE, 1e300]);
        c.push("empty", vec![0], vec![]);
        let back = Container::from_bytes(&c.to_bytes().unwrap()).unwrap();
        assert_eq!(back.arrays[0].data[1].to_bits(), (-0.0f64).to_bits());
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_foreign_and_truncated_files() {
        assert!(Container::from_bytes(b"hello world, not a model").is_err());
        let mut c = Container::new("toy", serde_json::Value::Null);
        c.push("w", vec![3], vec![1.0, 2.0, 3.0]);
        let bytes = c.to_bytes().unwrap();
        assert!(Container::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[8] = 9;
        assert!(Container::from_bytes(&wrong).is_err());
    }
}
