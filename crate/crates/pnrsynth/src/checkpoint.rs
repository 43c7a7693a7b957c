//! Binary parameter files: the magic `ADGRAD01`, then per tensor the name
//! length, UTF-8 name, rows and cols (each length or size a little-endian
//! `u64`) and the row-major values as little-endian `f64`.

use std::path::Path;

use pnrsynth_core::autodiff::Tensor;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ADGRAD01";

pub fn encode_checkpoint<'a>(tensors: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    for (name, t) in tensors {
        out.extend((name.len() as u64).to_le_bytes());
        out.extend(name.as_bytes());
        out.extend((t.rows() as u64).to_le_bytes());
        out.extend((t.cols() as u64).to_le_bytes());
        for v in t.as_slice() {
            out.extend(v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], (usize, String)> {
        match self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()) {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err((self.pos, "truncated checkpoint".into())),
        }
    }

    fn u64(&mut self) -> Result<usize, (usize, String)> {
        let at = self.pos;
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| (at, format!("size {v} too large")))
    }
}

/// Named tensors of a checkpoint in file order; errors give a byte offset.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<Vec<(String, Tensor)>, (usize, String)> {
    if bytes.get(..8) != Some(MAGIC.as_slice()) {
        return Err((0, "not a checkpoint (bad magic)".into()));
    }
    let mut r = Reader { bytes, pos: 8 };
    let mut out = Vec::new();
    while r.pos < bytes.len() {
        let at = r.pos;
        let len = r.u64()?;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| (at, "tensor name is not UTF-8".to_string()))?;
        let (rows, cols) = (r.u64()?, r.u64()?);
        let n = rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).ok_or((at, "tensor size overflows".to_string()))?;
        let values = r.take(n)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        out.push((name.to_string(), Tensor::new(rows, cols, values).expect("length checked above")));
    }
    Ok(out)
}

pub fn write_checkpoint<'a>(path: &Path, tensors: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Result<()> {
    std::fs::write(path, encode_checkpoint(tensors)).map_err(Error::io(path))
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    decode_checkpoint(&bytes).map_err(|(offset, msg)| Error::Format {
        path: path.to_path_buf(),
        line: 0,
        msg: format!("byte {offset}: {msg}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_bit_exact() {
        let t = Tensor::new(1, 2, vec![1.5, -0.0]).unwrap();
        let bytes = encode_checkpoint([("w", &t)]);
        let mut expected = b"ADGRAD01".to_vec();
        expected.extend(1u64.to_le_bytes());
        expected.push(b'w');
        expected.extend(1u64.to_le_bytes());
        expected.extend(2u64.to_le_bytes());
        expected.extend(1.5f64.to_le_bytes());
        expected.extend((-0.0f64).to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn round_trip_and_corruption() {
        let a = Tensor::from_fn(3, 4, |i, j| (i * 4 + j) as f64 / 7.0);
        let b = Tensor::zeros(0, 5);
        let bytes = encode_checkpoint([("gen.dense0.w", &a), ("empty", &b)]);
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, vec![("gen.dense0.w".to_string(), a), ("empty".to_string(), b)]);
        assert_eq!(decode_checkpoint(MAGIC).unwrap(), vec![]);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 3]).is_err());
        assert!(decode_checkpoint(b"ADGRAD02").is_err());
    }
}
