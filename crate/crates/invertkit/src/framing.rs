//! Little-endian binary framing shared by every binary file: a 4-byte magic,
//! a u32 version, then length-prefixed records.

use invertkit_core::{Shape, Tensor};

use crate::error::FormatError;

type Result<T> = std::result::Result<T, FormatError>;

/// Dtype tag of raw 32-bit float tensor data.
pub const DTYPE_F32: u8 = 1;

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u32) -> Self {
        let mut w = Writer::default();
        w.buf.extend_from_slice(magic);
        w.u32(version);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.u32(v.len() as u32);
        self.buf.extend_from_slice(v);
    }

    pub fn str(&mut self, v: &str) {
        self.bytes(v.as_bytes());
    }

    /// Name, dtype tag, rank, dims, raw data.
    pub fn tensor(&mut self, name: &str, dims: &[usize], data: &[f32]) {
        self.str(name);
        self.u8(DTYPE_F32);
        self.u32(dims.len() as u32);
        for &d in dims {
            self.u64(d as u64);
        }
        for &v in data {
            self.f32(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks the magic and returns the reader together with the version.
    pub fn open(buf: &'a [u8], magic: &[u8; 4]) -> Result<(Self, u32)> {
        let mut r = Reader { buf, pos: 0 };
        let found = r.take(4)?;
        if found != magic {
            return Err(FormatError::BadMagic {
                expected: String::from_utf8_lossy(magic).into_owned(),
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        let version = r.u32()?;
        Ok((r, version))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let left = self.buf.len() - self.pos;
        if n > left {
            return Err(FormatError::Truncated {
                needed: n - left,
                offset: self.pos,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| FormatError::Invalid(format!("size {v} too large")))
    }

    /// A count of items each at least `min_item` bytes long, rejected early if
    /// the remaining input cannot hold them.
    pub fn count(&mut self, min_item: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        let left = self.buf.len() - self.pos;
        if n.saturating_mul(min_item) > left {
            return Err(FormatError::Truncated {
                needed: n * min_item - left,
                offset: self.pos,
            });
        }
        Ok(n)
    }

    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn str(&mut self) -> Result<String> {
        let b = self.bytes()?;
        String::from_utf8(b.to_vec()).map_err(|_| FormatError::Invalid("string is not UTF-8".into()))
    }

    /// Returns (name, dims, data).
    pub fn tensor(&mut self) -> Result<(String, Vec<usize>, Vec<f32>)> {
        let name = self.str()?;
        let tag = self.u8()?;
        if tag != DTYPE_F32 {
            return Err(FormatError::Invalid(format!(
                "tensor {name:?}: unsupported dtype tag {tag}"
            )));
        }
        let rank = self.count(8)?;
        let dims = (0..rank).map(|_| self.usize()).collect::<Result<Vec<_>>>()?;
        let len = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| FormatError::Invalid(format!("tensor {name:?} too large")))?;
        let raw = self.take(len.checked_mul(4).ok_or_else(|| {
            FormatError::Invalid(format!("tensor {name:?} too large"))
        })?)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((name, dims, data))
    }

    /// A rank-4 tensor record expected under `name`.
    pub fn tensor4(&mut self, name: &str) -> Result<Tensor<f32>> {
        let (found, dims, data) = self.tensor()?;
        if found != name {
            return Err(FormatError::Invalid(format!(
                "expected tensor {name:?}, found {found:?}"
            )));
        }
        let [n, c, h, w] = dims[..] else {
            return Err(FormatError::Invalid(format!(
                "tensor {name:?} has rank {}, expected 4",
                dims.len()
            )));
        };
        Tensor::from_vec(Shape::new(n, c, h, w), data).map_err(|e| FormatError::Invalid(e.to_string()))
    }

    pub fn finish(self) -> Result<()> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(FormatError::Trailing(n)),
        }
    }
}

pub fn check_version(found: u32, supported: u32) -> Result<()> {
    if found == supported {
        Ok(())
    } else {
        Err(FormatError::Version { found, supported })
    }
}
