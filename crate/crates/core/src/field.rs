//! Truncated Fourier representation of multi-component periodic fields.
//!
//! Coefficients follow `û_k = |T|^{-1} ∫ u e^{-ik·x} dx`, so that
//! `u = Σ_k û_k e^{ik·x}` and `‖u‖²_{L²} = |T| Σ_k |û_k|²`.
//! State fields carry `N + 2` components ordered density, velocity, temperature.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::FrequencyLattice;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone)]
pub struct SpectralField {
    lattice: Arc<FrequencyLattice>,
    comps: Vec<Vec<Complex64>>,
}

/// Which spectral multiplier to apply, see [`derivative_multiplier`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivKind {
    /// Gradient of one component, producing `N` components.
    Gradient { component: usize },
    /// Divergence of the `N` components starting at `first`.
    Divergence { first: usize },
    /// Componentwise Laplacian.
    Laplacian,
}

impl SpectralField {
    pub fn zeros(lattice: Arc<FrequencyLattice>, ncomp: usize) -> Self {
        let len = lattice.len();
        SpectralField { lattice, comps: vec![vec![Complex64::new(0.0, 0.0); len]; ncomp] }
    }

    /// Zero state field with `N + 2` components.
    pub fn zeros_state(lattice: Arc<FrequencyLattice>) -> Self {
        let n = lattice.dim() + 2;
        Self::zeros(lattice, n)
    }

    pub fn from_comps(lattice: Arc<FrequencyLattice>, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        for c in &comps {
            if c.len() != lattice.len() {
                return Err(Error::ShapeMismatch(format!(
                    "component of length {} on a lattice of {} modes",
                    c.len(),
                    lattice.len()
                )));
            }
        }
        Ok(SpectralField { lattice, comps })
    }

    /// Field with a single nonzero mode `n` carrying the given amplitudes.
    pub fn single_mode(
        lattice: Arc<FrequencyLattice>,
        n: &[i64],
        amplitudes: &[Complex64],
    ) -> Result<Self> {
        let idx = lattice.try_index(n)?;
        let mut f = Self::zeros(lattice, amplitudes.len());
        for (c, a) in amplitudes.iter().enumerate() {
            f.comps[c][idx] = *a;
        }
        Ok(f)
    }

    pub fn lattice(&self) -> &Arc<FrequencyLattice> {
        &self.lattice
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn is_state(&self) -> bool {
        self.comps.len() == self.lattice.dim() + 2
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn comps(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn into_comps(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    /// Coefficient of component `c` at mode `n` (zero outside the cutoff).
    pub fn get(&self, c: usize, n: &[i64]) -> Complex64 {
        self.lattice.index(n).map_or(Complex64::new(0.0, 0.0), |i| self.comps[c][i])
    }

    pub fn set(&mut self, c: usize, n: &[i64], v: Complex64) -> Result<()> {
        let i = self.lattice.try_index(n)?;
        self.comps[c][i] = v;
        Ok(())
    }

    /// Amplitude vector (all components) at storage index `idx`.
    pub fn at(&self, idx: usize) -> Vec<Complex64> {
        self.comps.iter().map(|c| c[idx]).collect()
    }

    fn check_same(&self, other: &SpectralField) -> Result<()> {
        if !Arc::ptr_eq(&self.lattice, &other.lattice) && self.lattice.len() != other.lattice.len() {
            return Err(Error::ShapeMismatch("fields live on different lattices".into()));
        }
        if self.ncomp() != other.ncomp() {
            return Err(Error::ShapeMismatch(format!(
                "{} vs {} components",
                self.ncomp(),
                other.ncomp()
            )));
        }
        Ok(())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &SpectralField) -> Result<()> {
        self.check_same(other)?;
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            for (xi, yi) in x.iter_mut().zip(y) {
                *xi += a * yi;
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut r = self.clone();
        r.axpy(Complex64::new(1.0, 0.0), other)?;
        Ok(r)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut r = self.clone();
        r.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(r)
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.comps {
            for x in c.iter_mut() {
                *x *= a;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut r = self.clone();
        r.scale(a);
        r
    }

    /// Components `range` as a new field.
    pub fn select(&self, range: std::ops::Range<usize>) -> SpectralField {
        SpectralField { lattice: self.lattice.clone(), comps: self.comps[range].to_vec() }
    }

    /// Concatenate the components of several fields on the same lattice.
    pub fn concat(parts: &[&SpectralField]) -> Result<SpectralField> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        let mut comps = Vec::new();
        for p in parts {
            if p.lattice.len() != first.lattice.len() {
                return Err(Error::ShapeMismatch("fields live on different lattices".into()));
            }
            comps.extend(p.comps.iter().cloned());
        }
        Ok(SpectralField { lattice: first.lattice.clone(), comps })
    }

    /// Plain `L²` norm over the box, summed over components.
    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.comps.iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum();
        (self.lattice.volume() * s).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest violation of `û_{-k} = conj(û_k)`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let len = self.lattice.len();
        let mut d: f64 = 0.0;
        for c in &self.comps {
            for i in 0..len {
                d = d.max((c[len - 1 - i] - c[i].conj()).norm());
            }
        }
        d
    }

    /// Whether the coefficients describe a real field (to rounding).
    pub fn is_real(&self) -> bool {
        self.conjugate_symmetry_defect() <= 1e-13 * self.max_abs().max(1e-300)
    }

    /// Replace the field by the real part of its physical-space values.
    pub fn symmetrize(&mut self) {
        let len = self.lattice.len();
        for c in &mut self.comps {
            for i in 0..len / 2 + 1 {
                let j = len - 1 - i;
                let v = 0.5 * (c[i] + c[j].conj());
                c[i] = v;
                c[j] = v.conj();
            }
        }
    }

    /// Mean values (the zero mode of every component).
    pub fn mean(&self) -> Vec<Complex64> {
        let z = self.lattice.zero_index();
        self.comps.iter().map(|c| c[z]).collect()
    }

    /// Gradient of component `c`: `N` components `i k_j û`.
    pub fn gradient(&self, c: usize) -> SpectralField {
        let lat = &self.lattice;
        let dim = lat.dim();
        let mut out = SpectralField::zeros(lat.clone(), dim);
        for idx in 0..lat.len() {
            let k = lat.k_of(idx);
            let v = self.comps[c][idx];
            for j in 0..dim {
                out.comps[j][idx] = I * k[j] * v;
            }
        }
        out
    }

    /// Divergence of the `N` components starting at `first`.
    pub fn divergence(&self, first: usize) -> SpectralField {
        let lat = &self.lattice;
        let dim = lat.dim();
        let mut out = SpectralField::zeros(lat.clone(), 1);
        for idx in 0..lat.len() {
            let k = lat.k_of(idx);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..dim {
                s += k[j] * self.comps[first + j][idx];
            }
            out.comps[0][idx] = I * s;
        }
        out
    }

    /// Componentwise Laplacian `-|k|² û`.
    pub fn laplacian(&self) -> SpectralField {
        let lat = &self.lattice;
        let mut out = self.clone();
        for c in &mut out.comps {
            for (idx, x) in c.iter_mut().enumerate() {
                *x *= -lat.k_norm_sq_of(idx);
            }
        }
        out
    }

    /// Leray projection of an `N`-component field onto divergence-free
    /// fields; identity on the zero mode.
    pub fn leray(&self) -> Result<SpectralField> {
        let lat = &self.lattice;
        let dim = lat.dim();
        if self.ncomp() != dim {
            return Err(Error::ShapeMismatch(format!(
                "Leray projection needs {dim} components, got {}",
                self.ncomp()
            )));
        }
        let mut out = self.clone();
        for idx in 0..lat.len() {
            let k2 = lat.k_norm_sq_of(idx);
            if k2 == 0.0 {
                continue;
            }
            let k = lat.k_of(idx);
            let mut kd = Complex64::new(0.0, 0.0);
            for j in 0..dim {
                kd += k[j] * self.comps[j][idx];
            }
            for j in 0..dim {
                out.comps[j][idx] -= k[j] * kd / k2;
            }
        }
        Ok(out)
    }

    /// Keep only modes with `|k| <= radius`.
    pub fn low_pass(&self, radius: f64) -> SpectralField {
        let lat = &self.lattice;
        let r2 = radius * radius;
        let mut out = self.clone();
        for c in &mut out.comps {
            for (idx, x) in c.iter_mut().enumerate() {
                if lat.k_norm_sq_of(idx) > r2 {
                    *x = Complex64::new(0.0, 0.0);
                }
            }
        }
        out
    }
}

/// Apply a derivative multiplier of the given kind.
pub fn derivative_multiplier(f: &SpectralField, kind: DerivKind) -> Result<SpectralField> {
    let dim = f.lattice().dim();
    match kind {
        DerivKind::Gradient { component } => {
            if component >= f.ncomp() {
                return Err(Error::InvalidArgument(format!("no component {component}")));
            }
            Ok(f.gradient(component))
        }
        DerivKind::Divergence { first } => {
            if first + dim > f.ncomp() {
                return Err(Error::InvalidArgument(format!(
                    "divergence needs components {first}..{} but the field has {}",
                    first + dim,
                    f.ncomp()
                )));
            }
            Ok(f.divergence(first))
        }
        DerivKind::Laplacian => Ok(f.laplacian()),
    }
}

/// Leray projection, see [`SpectralField::leray`].
pub fn leray(f: &SpectralField) -> Result<SpectralField> {
    f.leray()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat() -> Arc<FrequencyLattice> {
        Arc::new(FrequencyLattice::with_aspect_sq(&[(1, 1), (4, 1)], 4).unwrap())
    }

    #[test]
    fn gradient_of_single_mode() {
        let l = lat();
        let f = SpectralField::single_mode(l.clone(), &[1, 2], &[Complex64::new(1.0, 0.0)]).unwrap();
        let g = f.gradient(0);
        assert!((g.get(0, &[1, 2]) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((g.get(1, &[1, 2]) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn leray_is_idempotent_and_divergence_free() {
        let l = lat();
        let mut f = SpectralField::zeros(l.clone(), 2);
        for idx in 0..l.len() {
            f.comp_mut(0)[idx] = Complex64::new((idx as f64).sin(), (idx as f64 * 0.3).cos());
            f.comp_mut(1)[idx] = Complex64::new((idx as f64 * 1.7).cos(), 0.2);
        }
        let p = f.leray().unwrap();
        let pp = p.leray().unwrap();
        assert!(pp.sub(&p).unwrap().max_abs() < 1e-14);
        let d = p.divergence(0);
        let z = l.zero_index();
        for idx in 0..l.len() {
            if idx != z {
                assert!(d.comp(0)[idx].norm() < 1e-13);
            }
        }
        assert_eq!(p.comp(0)[z], f.comp(0)[z]);
    }

    #[test]
    fn divergence_requires_velocity_block() {
        let f = SpectralField::zeros(lat(), 1);
        assert!(derivative_multiplier(&f, DerivKind::Divergence { first: 0 }).is_err());
    }
}
