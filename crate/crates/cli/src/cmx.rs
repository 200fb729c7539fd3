//! `CMX1` binary arrays: little-endian, row-major, with labelled axes.
//!
//! Layout: magic `CMX1`, `u8` dtype (0 real64, 1 complex128), `u32` rank, then
//! per axis a `u32` length, a `u32`-prefixed UTF-8 label and `length` f64
//! coordinates, then the payload.

use std::fs;
use std::path::Path;

use dmi_core::{Complex64, Error, Result};

const MAGIC: &[u8; 4] = b"CMX1";

#[derive(Debug, Clone, PartialEq)]
pub struct CmxAxis {
    pub label: String,
    pub coords: Vec<f64>,
}

impl CmxAxis {
    pub fn new(label: impl Into<String>, coords: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            coords,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CmxData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl CmxData {
    fn len(&self) -> usize {
        match self {
            CmxData::Real(v) => v.len(),
            CmxData::Complex(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmxArray {
    pub axes: Vec<CmxAxis>,
    pub data: CmxData,
}

impl CmxArray {
    pub fn new(axes: Vec<CmxAxis>, data: CmxData) -> Result<Self> {
        let n: usize = axes.iter().map(|a| a.coords.len()).product();
        if axes.is_empty() || n != data.len() {
            return Err(Error::invalid(format!(
                "array of {} values does not match axes {:?}",
                data.len(),
                axes.iter().map(|a| a.coords.len()).collect::<Vec<_>>()
            )));
        }
        Ok(Self { axes, data })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.coords.len()).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(match self.data {
            CmxData::Real(_) => 0,
            CmxData::Complex(_) => 1,
        });
        out.extend_from_slice(&(self.axes.len() as u32).to_le_bytes());
        for a in &self.axes {
            out.extend_from_slice(&(a.coords.len() as u32).to_le_bytes());
            out.extend_from_slice(&(a.label.len() as u32).to_le_bytes());
            out.extend_from_slice(a.label.as_bytes());
            for c in &a.coords {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        match &self.data {
            CmxData::Real(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            CmxData::Complex(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self> {
        let fail = |msg: &str| Error::Format {
            path: origin.into(),
            msg: msg.to_string(),
        };
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4).ok_or_else(|| fail("truncated header"))? != MAGIC {
            return Err(fail("bad magic"));
        }
        let dtype = r.take(1).ok_or_else(|| fail("truncated header"))?[0];
        let width = match dtype {
            0 => 8usize,
            1 => 16,
            _ => return Err(fail("unknown dtype code")),
        };
        let rank = r.u32().ok_or_else(|| fail("truncated header"))? as usize;
        if rank == 0 || rank > 16 {
            return Err(fail("rank must be between 1 and 16"));
        }
        let mut axes = Vec::with_capacity(rank);
        let mut count: usize = 1;
        for _ in 0..rank {
            let len = r.u32().ok_or_else(|| fail("truncated axis header"))? as usize;
            let lab_len = r.u32().ok_or_else(|| fail("truncated axis header"))? as usize;
            let label = r.take(lab_len).ok_or_else(|| fail("truncated axis label"))?;
            let label = String::from_utf8(label.to_vec()).map_err(|_| fail("axis label is not UTF-8"))?;
            // Check sizes against the file before allocating.
            if len.checked_mul(8).is_none_or(|b| b > r.remaining()) {
                return Err(fail("axis coordinates exceed the file size"));
            }
            let coords = (0..len).map(|_| r.f64().expect("size checked")).collect();
            count = count.checked_mul(len).ok_or_else(|| fail("dimensions overflow"))?;
            axes.push(CmxAxis { label, coords });
        }
        let payload = count.checked_mul(width).ok_or_else(|| fail("dimensions overflow"))?;
        if payload != r.remaining() {
            return Err(fail(&format!("payload is {} bytes, dimensions require {payload}", r.remaining())));
        }
        let data = if dtype == 0 {
            CmxData::Real((0..count).map(|_| r.f64().expect("size checked")).collect())
        } else {
            CmxData::Complex(
                (0..count)
                    .map(|_| {
                        let re = r.f64().expect("size checked");
                        Complex64::new(re, r.f64().expect("size checked"))
                    })
                    .collect(),
            )
        };
        Ok(Self { axes, data })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if n > self.remaining() {
            return None;
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn write_cmx(path: &Path, array: &CmxArray) -> Result<()> {
    fs::write(path, array.to_bytes())?;
    Ok(())
}

pub fn read_cmx(path: &Path) -> Result<CmxArray> {
    let bytes = fs::read(path)?;
    CmxArray::from_bytes(&bytes, &path.display().to_string())
}
