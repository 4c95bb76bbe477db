//! Binary field snapshots.
//!
//! Layout: a 32-byte header followed by row-major little-endian `f64` values
//! (vector fields store their components one after another).
//!
//! | bytes  | content                          |
//! |--------|----------------------------------|
//! | 0..8   | magic `CNSFLD01`                 |
//! | 8..12  | dim (u32)                        |
//! | 12..24 | points per axis, 3 × u32         |
//! | 24..28 | kind: 0 scalar, 1 vector (u32)   |
//! | 28..32 | reserved, zero                   |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::grid::{Grid, ScalarField, VectorField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CNSFLD01";
pub const HEADER_LEN: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot {
    Scalar(ScalarField),
    Vector(VectorField),
}

fn header(grid: &Grid, kind: u32) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[..8].copy_from_slice(MAGIC);
    h[8..12].copy_from_slice(&(grid.dim() as u32).to_le_bytes());
    for (a, n) in grid.shape().iter().enumerate() {
        h[12 + 4 * a..16 + 4 * a].copy_from_slice(&(*n as u32).to_le_bytes());
    }
    h[24..28].copy_from_slice(&kind.to_le_bytes());
    h
}

pub fn write_scalar(w: &mut impl Write, s: &ScalarField) -> Result<()> {
    w.write_all(&header(s.grid(), 0))?;
    for v in s.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_vector(w: &mut impl Write, v: &VectorField) -> Result<()> {
    w.write_all(&header(v.grid(), 1))?;
    for c in v.components() {
        for x in c.values() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_scalar(path: impl AsRef<Path>, s: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_scalar(&mut w, s)?;
    w.flush()?;
    Ok(())
}

pub fn save_vector(path: impl AsRef<Path>, v: &VectorField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vector(&mut w, v)?;
    w.flush()?;
    Ok(())
}

fn u32_at(h: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(h[at..at + 4].try_into().expect("4 bytes"))
}

/// Read a snapshot; box lengths are not stored and must be supplied.
pub fn read(r: &mut impl Read, lengths: &[f64]) -> Result<Snapshot> {
    let mut h = [0u8; HEADER_LEN];
    r.read_exact(&mut h)?;
    if &h[..8] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let dim = u32_at(&h, 8) as usize;
    if !(dim == 2 || dim == 3) {
        return Err(Error::Snapshot(format!("unsupported dimension {dim}")));
    }
    let shape: Vec<usize> = (0..dim).map(|a| u32_at(&h, 12 + 4 * a) as usize).collect();
    let grid = Grid::new(&shape, lengths)?;
    let kind = u32_at(&h, 24);
    let mut read_values = |count: usize| -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; 8 * count];
        r.read_exact(&mut bytes)?;
        Ok(bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect())
    };
    match kind {
        0 => Ok(Snapshot::Scalar(ScalarField::from_values(grid, read_values(grid.size())?)?)),
        1 => {
            let mut comps = Vec::with_capacity(dim);
            for _ in 0..dim {
                comps.push(ScalarField::from_values(grid, read_values(grid.size())?)?);
            }
            Ok(Snapshot::Vector(VectorField::from_components(comps)?))
        }
        k => Err(Error::Snapshot(format!("unknown field kind {k}"))),
    }
}

pub fn load(path: impl AsRef<Path>, lengths: &[f64]) -> Result<Snapshot> {
    read(&mut BufReader::new(File::open(path)?), lengths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_32_bytes_and_values_little_endian() {
        let g = Grid::new(&[4, 2], &[1.0, 1.0]).unwrap();
        let s = ScalarField::from_fn(g, |x| x[0] + 10.0 * x[1]);
        let mut buf = Vec::new();
        write_scalar(&mut buf, &s).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 8 * 8);
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(u32_at(&buf, 8), 2);
        assert_eq!(u32_at(&buf, 12), 4);
        assert_eq!(u32_at(&buf, 16), 2);
        assert_eq!(u32_at(&buf, 20), 1);
        let second = f64::from_le_bytes(buf[40..48].try_into().unwrap());
        assert_eq!(second, s.values()[1]);
    }

    #[test]
    fn vector_roundtrip() {
        let g = Grid::new(&[4, 2, 6], &[1.0, 2.0, 3.0]).unwrap();
        let v = VectorField::from_fn(g, |x| [x[0], x[1] * 2.0, -x[2]]);
        let mut buf = Vec::new();
        write_vector(&mut buf, &v).unwrap();
        let back = read(&mut buf.as_slice(), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(back, Snapshot::Vector(v));
    }

    #[test]
    fn rejects_bad_magic() {
        let buf = [0u8; 64];
        assert!(read(&mut buf.as_slice(), &[1.0, 1.0]).is_err());
    }
}
