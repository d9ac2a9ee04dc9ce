//! `RWF1` binary field files.
//!
//! Layout: magic `RWF1`, little-endian `u32` dim, `u32` M, `f64` L, `u8`
//! real flag, then `M^dim` coefficients as `(re, im)` `f64` pairs in the
//! storage order of [`TorusGrid`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{SpectralField, TorusGrid};

pub const MAGIC: &[u8; 4] = b"RWF1";

pub fn write_field<W: Write>(mut w: W, field: &SpectralField) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.m() as u32).to_le_bytes())?;
    w.write_all(&grid.l().to_le_bytes())?;
    w.write_all(&[field.is_real() as u8])?;
    for c in field.coeffs() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let dim = read_u32(&mut r)? as usize;
    let m = read_u32(&mut r)? as usize;
    let l = read_f64(&mut r)?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let real = match flag[0] {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("bad real flag {other}"))),
    };
    let grid = TorusGrid::new(m, l, dim)?;
    let mut coeffs = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        coeffs.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after coefficients".into()));
    }
    SpectralField::from_coeffs(&grid, coeffs, real)
}

pub fn save_field(path: impl AsRef<Path>, field: &SpectralField) -> Result<()> {
    write_field(BufWriter::new(File::create(path)?), field)
}

pub fn load_field(path: impl AsRef<Path>) -> Result<SpectralField> {
    read_field(BufReader::new(File::open(path)?))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
