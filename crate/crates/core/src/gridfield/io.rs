//! Flat binary dump of a [`GridFunction`].
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `BMOG` |
//! | 4     | format version `u32` (1) |
//! | 4     | dimension `u32` (2) |
//! | 8     | spacing `f64` |
//! | 16    | origin `[f64; 2]` |
//! | 16    | dims `[u64; 2]` (columns, rows) |
//! | 8     | run count `u64` |
//! | 8·r   | mask run lengths `u64`, alternating, starting with an unmasked run (possibly 0) |
//! | 8·N   | values `f64`, row-major, unmasked cells stored as 0 |

use std::io::{Read, Write};

use super::{Grid, GridFunction};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BMOG";
const VERSION: u32 = 1;

pub fn write_grid(f: &GridFunction, mut w: impl Write) -> Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&2u32.to_le_bytes())?;
    w.write_all(&g.h.to_le_bytes())?;
    for o in g.origin {
        w.write_all(&o.to_le_bytes())?;
    }
    w.write_all(&(g.nx as u64).to_le_bytes())?;
    w.write_all(&(g.ny as u64).to_le_bytes())?;

    let mut runs: Vec<u64> = Vec::new();
    let mut current = false;
    let mut len = 0u64;
    for &m in f.mask() {
        if m != current {
            runs.push(len);
            current = m;
            len = 0;
        }
        len += 1;
    }
    runs.push(len);
    w.write_all(&(runs.len() as u64).to_le_bytes())?;
    for r in &runs {
        w.write_all(&r.to_le_bytes())?;
    }
    for (&v, &m) in f.values().iter().zip(f.mask()) {
        let v = if m { v } else { 0.0 };
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_grid(mut r: impl Read) -> Result<GridFunction> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r)?;
    if dim != 2 {
        return Err(Error::Format(format!("unsupported dimension {dim}")));
    }
    let h = read_f64(&mut r)?;
    let origin = [read_f64(&mut r)?, read_f64(&mut r)?];
    let nx = read_u64(&mut r)? as usize;
    let ny = read_u64(&mut r)? as usize;
    if !(h > 0.0) || nx == 0 || ny == 0 || nx.checked_mul(ny).is_none_or(|n| n > 1 << 32) {
        return Err(Error::Format("bad grid header".into()));
    }
    let grid = Grid { origin, h, nx, ny };
    let nruns = read_u64(&mut r)? as usize;
    if nruns > grid.len() + 1 {
        return Err(Error::Format("too many mask runs".into()));
    }
    let mut mask = Vec::with_capacity(grid.len());
    let mut current = false;
    for _ in 0..nruns {
        let len = read_u64(&mut r)? as usize;
        if mask.len() + len > grid.len() {
            return Err(Error::Format("mask runs exceed the grid".into()));
        }
        mask.extend(std::iter::repeat_n(current, len));
        current = !current;
    }
    if mask.len() != grid.len() {
        return Err(Error::Format("mask runs do not cover the grid".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(read_f64(&mut r)?);
    }
    GridFunction::new(grid, values, mask).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainKind, DomainSpec};
    use crate::gridfield::{sample, TestFunctionSpec};

    #[test]
    fn round_trip() {
        let d = build_domain(&DomainSpec::new(DomainKind::Disk { center: [0.0, 0.0], radius: 1.0 })).unwrap();
        let f = sample(&TestFunctionSpec::LogDistance, &d, 1.0 / 16.0).unwrap();
        let mut buf = Vec::new();
        write_grid(&f, &mut buf).unwrap();
        assert_eq!(&buf[..4], MAGIC);
        let g = read_grid(buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn truncated_input_fails() {
        let d = build_domain(&DomainSpec::new(DomainKind::Square { corner: [0.0, 0.0], side: 1.0 })).unwrap();
        let f = sample(&TestFunctionSpec::Constant { value: 1.0 }, &d, 1.0 / 8.0).unwrap();
        let mut buf = Vec::new();
        write_grid(&f, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_grid(buf.as_slice()).is_err());
        assert!(matches!(read_grid(&b"XXXX"[..]), Err(Error::Format(_))));
    }
}
