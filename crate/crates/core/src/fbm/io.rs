//! Path export: CSV (`t,re,im`) and a compact little-endian binary dump.
//!
//! Binary layout: `"FBM2"`, `u32` version, `H: f64`, `n: u64`,
//! `z0.re: f64`, `z0.im: f64`, then `n` records of `(t, re, im)` as `f64`.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ComplexPath, Hurst, TimeGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FBM2";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: f64,
    re: f64,
    im: f64,
}

pub fn write_csv<W: Write>(path: &ComplexPath, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (&t, z) in path.times().iter().zip(path.values()) {
        w.serialize(Row { t, re: z.re, im: z.im })?;
    }
    w.flush()?;
    Ok(())
}

/// Read rows written by [`write_csv`]. The origin is taken from the first
/// row and `h` must be supplied since CSV does not carry it.
pub fn read_csv<R: Read>(reader: R, h: Hurst) -> Result<ComplexPath> {
    let mut r = csv::Reader::from_reader(reader);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for row in r.deserialize() {
        let row: Row = row?;
        times.push(row.t);
        values.push(Complex64::new(row.re, row.im));
    }
    let origin = *values
        .first()
        .ok_or_else(|| Error::InsufficientData("empty path CSV".into()))?;
    ComplexPath::new(Arc::new(TimeGrid::explicit(times)?), values, origin, h)
}

pub fn write_binary<W: Write>(path: &ComplexPath, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&path.hurst().value().to_le_bytes())?;
    w.write_all(&(path.len() as u64).to_le_bytes())?;
    w.write_all(&path.origin().re.to_le_bytes())?;
    w.write_all(&path.origin().im.to_le_bytes())?;
    for (&t, z) in path.times().iter().zip(path.values()) {
        for x in [t, z.re, z.im] {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<ComplexPath> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Numerical(format!("bad magic {magic:?}")));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    let version = u32::from_le_bytes(v);
    if version != VERSION {
        return Err(Error::Numerical(format!("unsupported binary version {version}")));
    }
    let h = Hurst::new(read_f64(&mut r)?)?;
    let mut n = [0u8; 8];
    r.read_exact(&mut n)?;
    let n = u64::from_le_bytes(n) as usize;
    let origin = Complex64::new(read_f64(&mut r)?, read_f64(&mut r)?);
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        times.push(read_f64(&mut r)?);
        values.push(Complex64::new(read_f64(&mut r)?, read_f64(&mut r)?));
    }
    ComplexPath::new(Arc::new(TimeGrid::explicit(times)?), values, origin, h)
}
