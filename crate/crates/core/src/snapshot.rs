//! Binary snapshot format for spectral fields.
//!
//! Layout (all integers `u32`, all reals `f64`, little endian):
//! magic `MFLD1`, dimension `N`, `N` per-axis mode counts (`2K + 1`),
//! `N` aspect ratios, component count, then for every component the
//! coefficients in row-major mode order (first axis slowest, indices running
//! from `-K` to `K`) as interleaved real and imaginary parts.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::FrequencyLattice;

const MAGIC: &[u8; 5] = b"MFLD1";

pub fn write_snapshot<W: Write>(mut w: W, f: &SpectralField) -> Result<()> {
    let lat = f.lattice();
    w.write_all(MAGIC)?;
    w.write_all(&(lat.dim() as u32).to_le_bytes())?;
    for _ in 0..lat.dim() {
        w.write_all(&(lat.side() as u32).to_le_bytes())?;
    }
    for a in lat.aspect() {
        w.write_all(&a.to_le_bytes())?;
    }
    w.write_all(&(f.ncomp() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * lat.len());
    for c in f.comps() {
        buf.clear();
        for z in c {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
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

/// Read a snapshot. When `lattice` is given the header must match it and the
/// field is attached to it; otherwise a lattice is rebuilt from the stored
/// aspect ratios.
pub fn read_snapshot<R: Read>(mut r: R, lattice: Option<Arc<FrequencyLattice>>) -> Result<SpectralField> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let dim = read_u32(&mut r)? as usize;
    if dim == 0 || dim > 8 {
        return Err(Error::Format(format!("implausible dimension {dim}")));
    }
    let mut sides = Vec::with_capacity(dim);
    for _ in 0..dim {
        sides.push(read_u32(&mut r)? as usize);
    }
    let side = sides[0];
    if side % 2 == 0 || sides.iter().any(|&s| s != side) {
        return Err(Error::Format(format!("unsupported mode counts {sides:?}")));
    }
    let mut aspect = Vec::with_capacity(dim);
    for _ in 0..dim {
        aspect.push(read_f64(&mut r)?);
    }
    let ncomp = read_u32(&mut r)? as usize;
    let cutoff = ((side - 1) / 2) as i64;
    let lat = match lattice {
        Some(l) => {
            if l.dim() != dim || l.side() != side || l.aspect() != aspect.as_slice() {
                return Err(Error::Format("snapshot header does not match the lattice".into()));
            }
            l
        }
        None => Arc::new(FrequencyLattice::with_aspect(&aspect, cutoff)?),
    };
    let mut comps = Vec::with_capacity(ncomp);
    let mut buf = vec![0u8; 16 * lat.len()];
    for _ in 0..ncomp {
        r.read_exact(&mut buf)?;
        let c = buf
            .chunks_exact(16)
            .map(|b| {
                Complex64::new(
                    f64::from_le_bytes(b[..8].try_into().unwrap()),
                    f64::from_le_bytes(b[8..].try_into().unwrap()),
                )
            })
            .collect();
        comps.push(c);
    }
    SpectralField::from_comps(lat, comps)
}

pub fn save(path: &Path, f: &SpectralField) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(file), f)
}

pub fn load(path: &Path, lattice: Option<Arc<FrequencyLattice>>) -> Result<SpectralField> {
    let file = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(file), lattice)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let l = Arc::new(FrequencyLattice::with_aspect_sq(&[(1, 1), (2, 1)], 3).unwrap());
        let mut f = SpectralField::zeros_state(l.clone());
        for c in 0..f.ncomp() {
            for (i, z) in f.comp_mut(c).iter_mut().enumerate() {
                *z = Complex64::new((i * (c + 1)) as f64 * 0.1, -(i as f64).sqrt());
            }
        }
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &f).unwrap();
        let g = read_snapshot(bytes.as_slice(), Some(l)).unwrap();
        assert_eq!(f.comps(), g.comps());
        let h = read_snapshot(bytes.as_slice(), None).unwrap();
        assert_eq!(h.lattice().cutoff(), 3);
        assert_eq!(h.comps(), f.comps());
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let bytes = b"XFLD1\x02\x00\x00\x00".to_vec();
        assert!(read_snapshot(bytes.as_slice(), None).is_err());
    }
}
