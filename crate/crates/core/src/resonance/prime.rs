//! Decomposition of oscillating coefficients along primitive directions.
//!
//! Every pair `(α, k)` with `k ≠ 0` is written uniquely as `k = n p` with
//! `p` primitive (gcd of its indices equal to 1), `sg(p) = α` and
//! `n ∈ Z \ {0}`. The coefficients on one such line form the 1-D sequence
//! `v^p_n = V^{sg p}_{n p}`; three-wave resonances only couple modes on the
//! same line.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::acoustic::OscCoeffs;
use crate::error::{Error, Result};
use crate::lattice::{index_gcd, sg, FrequencyLattice, ModeIndex};

/// `n = mult · p` with `p` primitive and `sg(p) = +1`.
pub fn primitive_part(n: &[i64]) -> Result<(ModeIndex, i64)> {
    let g = index_gcd(n);
    if g == 0 {
        return Err(Error::ZeroVector);
    }
    let s = sg(n)? as i64;
    let p: ModeIndex = n.iter().map(|c| c / g * s).collect();
    Ok((p, g * s))
}

/// Representative of `(α, n)`: primitive `p` with `sg(p) = α` and the signed
/// multiple with `n = mult · p`.
pub fn fold(alpha: i32, n: &[i64]) -> Result<(ModeIndex, i64)> {
    let (p, mult) = primitive_part(n)?;
    if alpha > 0 {
        Ok((p, mult))
    } else {
        Ok((p.iter().map(|c| -c).collect(), -mult))
    }
}

/// Primitive directions with `sg(p) = +1` and `|p| <= radius`.
pub fn primitive_directions(lat: &FrequencyLattice, radius: f64) -> Vec<ModeIndex> {
    lat.ball(radius)
        .into_iter()
        .filter(|n| index_gcd(n) == 1 && sg(n).map_or(false, |s| s > 0))
        .collect()
}

/// Largest `n` with `n p` inside the lattice cube.
pub fn line_extent(lat: &FrequencyLattice, p: &[i64]) -> i64 {
    let m = p.iter().map(|c| c.abs()).max().unwrap_or(1);
    lat.cutoff() / m
}

/// Coefficients on one line, indexed `n = -extent ..= extent` (`n = 0` unused).
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub extent: i64,
    pub coeffs: Vec<Complex64>,
}

impl Line {
    pub fn get(&self, n: i64) -> Complex64 {
        if n.abs() > self.extent {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.extent) as usize]
        }
    }
}

/// All lines of an [`OscCoeffs`], keyed by the representative `p`
/// (both signs of `sg(p)` appear, one per branch).
#[derive(Debug, Clone)]
pub struct PrimeDecomposition {
    lattice: Arc<FrequencyLattice>,
    pub lines: BTreeMap<ModeIndex, Line>,
}

impl PrimeDecomposition {
    pub fn new(v: &OscCoeffs) -> Self {
        let lat = v.lattice().clone();
        let mut lines = BTreeMap::new();
        let z = lat.zero_index();
        for idx in 0..lat.len() {
            if idx == z {
                continue;
            }
            let n = lat.mode(idx);
            if index_gcd(&n) != 1 {
                continue;
            }
            for alpha in [1, -1] {
                let (p, mult) = fold(alpha, &n).expect("nonzero");
                if mult != 1 {
                    continue;
                }
                let extent = line_extent(&lat, &p);
                let coeffs = (-extent..=extent)
                    .map(|j| {
                        if j == 0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        let m: ModeIndex = p.iter().map(|c| c * j).collect();
                        v.get(alpha, &m)
                    })
                    .collect();
                lines.insert(p, Line { extent, coeffs });
            }
        }
        PrimeDecomposition { lattice: lat, lines }
    }

    /// Reassemble the coefficients.
    pub fn recompose(&self) -> OscCoeffs {
        let mut v = OscCoeffs::zeros(self.lattice.clone());
        for (p, line) in &self.lines {
            let alpha = sg(p).expect("nonzero");
            for j in -line.extent..=line.extent {
                if j == 0 {
                    continue;
                }
                let m: ModeIndex = p.iter().map(|c| c * j).collect();
                let idx = self.lattice.index(&m).expect("line stays in the cube");
                *v.at_mut(alpha, idx) = line.get(j);
            }
        }
        v
    }

    /// `Σ_p Σ_n |v^p_n|²`.
    pub fn energy(&self) -> f64 {
        self.lines.values().flat_map(|l| l.coeffs.iter()).map(|z| z.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_parts() {
        let (p, n) = primitive_part(&[2, 4]).unwrap();
        assert_eq!((p.as_slice(), n), (&[1, 2][..], 2));
        let (p, n) = primitive_part(&[0, -3]).unwrap();
        assert_eq!((p.as_slice(), n), (&[0, 1][..], -3));
        let (p, n) = fold(-1, &[2, 4]).unwrap();
        assert_eq!((p.as_slice(), n), (&[-1, -2][..], -2));
    }

    #[test]
    fn decomposition_round_trip() {
        let lat = Arc::new(FrequencyLattice::isotropic(2, 4).unwrap());
        let mut v = OscCoeffs::zeros(lat.clone());
        let z = lat.zero_index();
        for idx in 0..lat.len() {
            if idx != z {
                *v.at_mut(1, idx) = Complex64::new(idx as f64, 1.0);
                *v.at_mut(-1, idx) = Complex64::new(-0.5, idx as f64 * 0.1);
            }
        }
        let d = PrimeDecomposition::new(&v);
        assert!((d.energy() - v.norm_sq()).abs() < 1e-9 * v.norm_sq());
        assert!(d.recompose().sub(&v).max_abs() == 0.0);
    }
}
