//! Anisotropic frequency lattice of a periodic box.
//!
//! The box has side `2π a_i` in direction `i`, so admissible wave vectors are
//! `k_i = n_i / a_i` with integer `n_i`. Modes are stored on the cube
//! `|n_i| <= K` in row-major order with the first axis slowest.

use num_integer::Integer;
use num_rational::Ratio;
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Integer index vector `n` of a mode; the wave vector is `n_i / a_i`.
pub type ModeIndex = SmallVec<[i64; 4]>;

/// Real wave vector.
pub type WaveVector = SmallVec<[f64; 4]>;

/// Exact rational used for `|k|^2` on lattices with rational `a_i^2`.
pub type Exact = Ratio<i128>;

/// Orientation sign of a nonzero vector: `+1` when its first nonzero
/// component is positive, `-1` otherwise.
pub fn sg(n: &[i64]) -> Result<i32> {
    for &c in n {
        if c > 0 {
            return Ok(1);
        }
        if c < 0 {
            return Ok(-1);
        }
    }
    Err(Error::ZeroVector)
}

/// Orientation sign of a real vector (same rule as [`sg`]).
pub fn sg_real(k: &[f64]) -> Result<i32> {
    for &c in k {
        if c > 0.0 {
            return Ok(1);
        }
        if c < 0.0 {
            return Ok(-1);
        }
    }
    Err(Error::ZeroVector)
}

/// Gcd of all components (0 for the zero vector).
pub fn index_gcd(n: &[i64]) -> i64 {
    n.iter().fold(0i64, |g, &c| g.gcd(&c))
}

/// True when `n` and `m` are parallel (all 2x2 integer minors vanish).
pub fn collinear(n: &[i64], m: &[i64]) -> bool {
    for i in 0..n.len() {
        for j in i + 1..n.len() {
            if n[i] as i128 * m[j] as i128 != n[j] as i128 * m[i] as i128 {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct FrequencyLattice {
    dim: usize,
    cutoff: i64,
    aspect: Vec<f64>,
    inv_aspect_sq: Vec<f64>,
    inv_aspect_sq_exact: Option<Vec<Exact>>,
    resonance_tolerance: Option<f64>,
    side: usize,
    len: usize,
    k: Vec<f64>,
    k_norm_sq: Vec<f64>,
}

impl FrequencyLattice {
    /// Cubic box `a = (1, ..., 1)` with exact arithmetic.
    pub fn isotropic(dim: usize, cutoff: i64) -> Result<Self> {
        Self::with_aspect_sq(&vec![(1, 1); dim], cutoff)
    }

    /// Box with rational squared aspect ratios `a_i^2 = num_i / den_i`.
    /// Exact `|k|^2` comparisons are available on such lattices.
    pub fn with_aspect_sq(aspect_sq: &[(i64, i64)], cutoff: i64) -> Result<Self> {
        let mut inv = Vec::with_capacity(aspect_sq.len());
        let mut aspect = Vec::with_capacity(aspect_sq.len());
        for &(num, den) in aspect_sq {
            if num <= 0 || den <= 0 {
                return Err(Error::InvalidLattice(format!(
                    "squared aspect ratio {num}/{den} must be positive"
                )));
            }
            inv.push(Ratio::new(den as i128, num as i128));
            aspect.push((num as f64 / den as f64).sqrt());
        }
        Self::build(aspect, Some(inv), cutoff)
    }

    /// Box with arbitrary positive aspect ratios. Resonance predicates on
    /// such a lattice need an explicit tolerance, see
    /// [`FrequencyLattice::with_resonance_tolerance`].
    pub fn with_aspect(aspect: &[f64], cutoff: i64) -> Result<Self> {
        Self::build(aspect.to_vec(), None, cutoff)
    }

    fn build(aspect: Vec<f64>, exact: Option<Vec<Exact>>, cutoff: i64) -> Result<Self> {
        let dim = aspect.len();
        if dim == 0 {
            return Err(Error::InvalidLattice("dimension must be at least 1".into()));
        }
        if cutoff < 1 {
            return Err(Error::InvalidLattice(format!("cutoff {cutoff} must be >= 1")));
        }
        if aspect.iter().any(|&a| !(a.is_finite() && a > 0.0)) {
            return Err(Error::InvalidLattice(format!(
                "aspect ratios must be positive and finite, got {aspect:?}"
            )));
        }
        let inv_aspect_sq: Vec<f64> = match &exact {
            Some(e) => e.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect(),
            None => aspect.iter().map(|a| 1.0 / (a * a)).collect(),
        };
        let side = (2 * cutoff + 1) as usize;
        let len = side
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidLattice("lattice too large".into()))?;
        let mut lat = FrequencyLattice {
            dim,
            cutoff,
            aspect,
            inv_aspect_sq,
            inv_aspect_sq_exact: exact,
            resonance_tolerance: None,
            side,
            len,
            k: Vec::new(),
            k_norm_sq: Vec::new(),
        };
        let mut k = Vec::with_capacity(len * dim);
        let mut k2 = Vec::with_capacity(len);
        for idx in 0..len {
            let n = lat.mode(idx);
            let mut s = 0.0;
            for i in 0..dim {
                let ki = n[i] as f64 / lat.aspect[i];
                k.push(ki);
                s += (n[i] * n[i]) as f64 * lat.inv_aspect_sq[i];
            }
            k2.push(s);
        }
        lat.k = k;
        lat.k_norm_sq = k2;
        Ok(lat)
    }

    /// Allow approximate resonance decisions with absolute tolerance `tol`
    /// on `|k|` differences.
    pub fn with_resonance_tolerance(mut self, tol: f64) -> Self {
        self.resonance_tolerance = Some(tol);
        self
    }

    /// Same box with a different cutoff.
    pub fn with_cutoff(&self, cutoff: i64) -> Result<Self> {
        let mut l = Self::build(self.aspect.clone(), self.inv_aspect_sq_exact.clone(), cutoff)?;
        l.resonance_tolerance = self.resonance_tolerance;
        Ok(l)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn aspect(&self) -> &[f64] {
        &self.aspect
    }

    pub fn inv_aspect_sq(&self) -> &[f64] {
        &self.inv_aspect_sq
    }

    pub fn inv_aspect_sq_exact(&self) -> Option<&[Exact]> {
        self.inv_aspect_sq_exact.as_deref()
    }

    pub fn resonance_tolerance(&self) -> Option<f64> {
        self.resonance_tolerance
    }

    pub fn is_exact(&self) -> bool {
        self.inv_aspect_sq_exact.is_some()
    }

    /// Number of modes per axis, `2K + 1`.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Total number of stored modes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Box volume `(2π)^N ∏ a_i`.
    pub fn volume(&self) -> f64 {
        self.aspect
            .iter()
            .fold((2.0 * std::f64::consts::PI).powi(self.dim as i32), |v, a| v * a)
    }

    /// `C_a = min_i 1/a_i`, the smallest nonzero wave-vector length along an axis.
    pub fn c_a(&self) -> f64 {
        self.aspect.iter().fold(f64::INFINITY, |m, a| m.min(1.0 / a))
    }

    /// Storage index of the mode `n`, or `None` outside the cutoff.
    pub fn index(&self, n: &[i64]) -> Option<usize> {
        if n.len() != self.dim {
            return None;
        }
        let mut idx = 0usize;
        for &c in n {
            if c.abs() > self.cutoff {
                return None;
            }
            idx = idx * self.side + (c + self.cutoff) as usize;
        }
        Some(idx)
    }

    /// Storage index of `n`, with an error outside the cutoff.
    pub fn try_index(&self, n: &[i64]) -> Result<usize> {
        self.index(n).ok_or_else(|| Error::OutOfCutoff(n.to_vec()))
    }

    /// Integer index vector of the mode stored at `idx`.
    pub fn mode(&self, idx: usize) -> ModeIndex {
        let mut n: ModeIndex = SmallVec::from_elem(0, self.dim);
        let mut r = idx;
        for i in (0..self.dim).rev() {
            n[i] = (r % self.side) as i64 - self.cutoff;
            r /= self.side;
        }
        n
    }

    /// Storage index of the zero mode.
    pub fn zero_index(&self) -> usize {
        (self.len - 1) / 2
    }

    /// Storage index of `-n` given the index of `n`.
    pub fn neg_index(&self, idx: usize) -> usize {
        self.len - 1 - idx
    }

    /// Wave vector `k_i = n_i / a_i` of the stored mode `idx`.
    pub fn k_of(&self, idx: usize) -> &[f64] {
        &self.k[idx * self.dim..(idx + 1) * self.dim]
    }

    /// `|k|^2` of the stored mode `idx`.
    pub fn k_norm_sq_of(&self, idx: usize) -> f64 {
        self.k_norm_sq[idx]
    }

    /// Wave vector of an arbitrary integer index (not necessarily stored).
    pub fn wave_vector(&self, n: &[i64]) -> WaveVector {
        n.iter().zip(&self.aspect).map(|(&c, a)| c as f64 / a).collect()
    }

    /// `|k|^2` of an arbitrary integer index.
    pub fn norm_sq(&self, n: &[i64]) -> f64 {
        n.iter()
            .zip(&self.inv_aspect_sq)
            .map(|(&c, w)| (c * c) as f64 * w)
            .sum()
    }

    /// `k · m` for two integer indices.
    pub fn dot(&self, n: &[i64], m: &[i64]) -> f64 {
        n.iter()
            .zip(m)
            .zip(&self.inv_aspect_sq)
            .map(|((&a, &b), w)| (a * b) as f64 * w)
            .sum()
    }

    /// `|k × m|^2 = |k|^2 |m|^2 - (k·m)^2`, evaluated from the integer minors
    /// so that it carries no cancellation error.
    pub fn cross_sq(&self, n: &[i64], m: &[i64]) -> f64 {
        let w = &self.inv_aspect_sq;
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let c = (n[i] as i128 * m[j] as i128 - n[j] as i128 * m[i] as i128) as f64;
                s += c * c * w[i] * w[j];
            }
        }
        s
    }

    /// Exact `|k|^2`, available on rational-square lattices.
    pub fn norm_sq_exact(&self, n: &[i64]) -> Result<Exact> {
        let w = self.inv_aspect_sq_exact.as_ref().ok_or_else(|| {
            Error::InexactLattice("aspect ratios were not given as rational squares".into())
        })?;
        Ok(n.iter()
            .zip(w)
            .fold(Exact::from_integer(0), |s, (&c, r)| s + r * (c as i128 * c as i128)))
    }

    /// Exact `k · m`, available on rational-square lattices.
    pub fn dot_exact(&self, n: &[i64], m: &[i64]) -> Result<Exact> {
        let w = self.inv_aspect_sq_exact.as_ref().ok_or_else(|| {
            Error::InexactLattice("aspect ratios were not given as rational squares".into())
        })?;
        Ok(n.iter()
            .zip(m)
            .zip(w)
            .fold(Exact::from_integer(0), |s, ((&a, &b), r)| s + r * (a as i128 * b as i128)))
    }

    /// All integer indices with `|k| <= radius` (independent of the cutoff),
    /// excluding the origin, in lexicographic order.
    pub fn ball(&self, radius: f64) -> Vec<ModeIndex> {
        let r2 = radius * radius * (1.0 + 1e-12);
        let bounds: Vec<i64> = self.aspect.iter().map(|a| (radius * a).floor() as i64).collect();
        let mut out = Vec::new();
        let mut n: ModeIndex = bounds.iter().map(|b| -b).collect();
        loop {
            if n.iter().any(|&c| c != 0) && self.norm_sq(&n) <= r2 {
                out.push(n.clone());
            }
            let mut i = self.dim;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if n[i] < bounds[i] {
                    n[i] += 1;
                    break;
                }
                n[i] = -bounds[i];
            }
        }
    }
}
