//! Binary tensor container.
//!
//! Layout: the 6-byte magic `STEGO1`, then one record per tensor until EOF:
//!
//! ```text
//! u64 name_len | name (UTF-8) | u64 rank | rank × u64 dim | Π dims × f64 value
//! ```
//!
//! Every integer and float is little-endian. Values are always stored as
//! `f64`, so `f32` parameters round-trip bit-exactly.

use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"STEGO1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, shape: &[usize], values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            values,
        }
    }
}

pub fn encode(tensors: &[NamedTensor]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(
        MAGIC.len() + tensors.iter().map(|t| 24 + t.name.len() + 8 * t.values.len()).sum::<usize>(),
    );
    out.extend_from_slice(MAGIC);
    for t in tensors {
        let n: usize = t.shape.iter().product();
        if n != t.values.len() {
            return Err(Error::Checkpoint(format!(
                "tensor `{}` has shape {:?} but {} values",
                t.name,
                t.shape,
                t.values.len()
            )));
        }
        out.extend_from_slice(&(t.name.len() as u64).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u64).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &t.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated while reading {what} at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?).map_err(|_| Error::Checkpoint(format!("{what} out of range")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<NamedTensor>> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("unknown magic or version (expected STEGO1)".into()));
    }
    let mut r = Reader {
        bytes,
        pos: MAGIC.len(),
    };
    let mut out: Vec<NamedTensor> = Vec::new();
    while r.pos < bytes.len() {
        let name_len = r.usize("name length")?;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
            .to_string();
        if out.iter().any(|t| t.name == name) {
            return Err(Error::Checkpoint(format!("duplicate tensor `{name}`")));
        }
        let rank = r.usize("rank")?;
        let mut shape = Vec::with_capacity(rank.min(16));
        for _ in 0..rank {
            shape.push(r.usize("dimension")?);
        }
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Checkpoint(format!("tensor `{name}` is too large")))?;
        let raw = r.take(
            count
                .checked_mul(8)
                .ok_or_else(|| Error::Checkpoint(format!("tensor `{name}` is too large")))?,
            "values",
        )?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        out.push(NamedTensor { name, shape, values });
    }
    Ok(out)
}

pub fn write_file(path: &Path, tensors: &[NamedTensor]) -> Result<()> {
    let bytes = encode(tensors)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<NamedTensor>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<NamedTensor> {
        vec![
            NamedTensor::new("prep.b0.l0.kernels", &[2, 1, 3, 3], (0..18).map(|i| i as f64 * 0.1).collect()),
            NamedTensor::new("prep.b0.l0.bias", &[2], vec![-0.5, f64::from(0.1f32)]),
        ]
    }

    #[test]
    fn byte_layout() {
        let bytes = encode(&[NamedTensor::new("ab", &[1], vec![1.0])]).unwrap();
        let mut want = b"STEGO1".to_vec();
        want.extend_from_slice(&2u64.to_le_bytes());
        want.extend_from_slice(b"ab");
        want.extend_from_slice(&1u64.to_le_bytes());
        want.extend_from_slice(&1u64.to_le_bytes());
        want.extend_from_slice(&1.0f64.to_le_bytes());
        assert_eq!(bytes, want);
    }

    #[test]
    fn round_trip_and_reencode_identical() {
        let bytes = encode(&sample()).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(back, sample());
        assert_eq!(encode(&back).unwrap(), bytes);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut bytes = encode(&sample()).unwrap();
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        assert!(decode(&bytes[..10]).is_err());
        bytes[5] = b'2';
        assert!(decode(&bytes).unwrap_err().to_string().contains("magic"));
        assert!(decode(b"").is_err());
    }

    #[test]
    fn rejects_duplicates_and_bad_shapes() {
        let dup = vec![sample()[1].clone(), sample()[1].clone()];
        assert!(decode(&encode(&dup).unwrap()).is_err());
        assert!(encode(&[NamedTensor::new("x", &[3], vec![1.0])]).is_err());
    }
}
