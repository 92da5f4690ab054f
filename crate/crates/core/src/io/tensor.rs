//! The `LAPTTENS` binary tensor container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size        field
//! 0       8           magic  b"LAPTTENS"
//! 8       4   (u32)   dtype  1 = f32, 2 = f64, 3 = u8
//! 12      4   (u32)   ndim
//! 16      8·ndim      dims   (u64 each)
//! ...     Π dims · s  payload, row-major, little-endian
//! ```
//!
//! Floats are stored by bit pattern, so `+∞` sentinels and NaN payloads
//! survive a round trip unchanged.

use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"LAPTTENS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32 = 1,
    F64 = 2,
    U8 = 3,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
            DType::U8 => 1,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        match code {
            1 => Some(DType::F32),
            2 => Some(DType::F64),
            3 => Some(DType::U8),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
            TensorData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
            TensorData::U8(_) => DType::U8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: TensorData,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::invalid(format!(
                "tensor of shape {dims:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = self.data.len() * self.dtype().size();
        let mut out = Vec::with_capacity(16 + 8 * self.dims.len() + payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dtype() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &self.data {
            TensorData::F32(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::U8(v) => out.extend_from_slice(v),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        fn take<'a>(bytes: &'a [u8], at: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
            let end = at
                .checked_add(n)
                .filter(|&e| e <= bytes.len())
                .ok_or_else(|| Error::invalid(format!("tensor truncated while reading {what}")))?;
            let s = &bytes[*at..end];
            *at = end;
            Ok(s)
        }
        let mut at = 0;
        if take(bytes, &mut at, 8, "magic")? != MAGIC {
            return Err(Error::invalid("not a LAPTTENS tensor (bad magic)"));
        }
        let code = u32::from_le_bytes(take(bytes, &mut at, 4, "dtype")?.try_into().unwrap());
        let dtype = DType::from_code(code)
            .ok_or_else(|| Error::invalid(format!("unknown dtype code {code}")))?;
        let ndim =
            u32::from_le_bytes(take(bytes, &mut at, 4, "ndim")?.try_into().unwrap()) as usize;
        let mut dims = Vec::with_capacity(ndim.min(16));
        let mut count: usize = 1;
        for _ in 0..ndim {
            let d = u64::from_le_bytes(take(bytes, &mut at, 8, "dims")?.try_into().unwrap());
            let d = usize::try_from(d)
                .map_err(|_| Error::invalid("tensor dimension overflows usize"))?;
            count = count
                .checked_mul(d)
                .ok_or_else(|| Error::invalid("tensor element count overflows"))?;
            dims.push(d);
        }
        let size = count
            .checked_mul(dtype.size())
            .ok_or_else(|| Error::invalid("tensor payload size overflows"))?;
        let payload = take(bytes, &mut at, size, "payload")?;
        if at != bytes.len() {
            return Err(Error::invalid(format!(
                "{} trailing bytes after tensor payload",
                bytes.len() - at
            )));
        }
        let data = match dtype {
            DType::F32 => TensorData::F32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::F64 => TensorData::F64(
                payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::U8 => TensorData::U8(payload.to_vec()),
        };
        Ok(Self { dims, data })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| Error::malformed(path, "tensor", e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::write_atomic(path, &self.to_bytes())
    }

    /// Checks rank and dtype, naming `what` in the error.
    pub fn expect(&self, what: &str, ndim: usize, dtype: DType) -> Result<()> {
        if self.dims.len() != ndim || self.dtype() != dtype {
            return Err(Error::invalid(format!(
                "{what}: expected a rank-{ndim} {dtype:?} tensor, got rank {} {:?} with shape {:?}",
                self.dims.len(),
                self.dtype(),
                self.dims
            )));
        }
        Ok(())
    }
}
