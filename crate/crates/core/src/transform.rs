//! Transforms between truncated spectra and samples on a uniform grid.
//!
//! The grid in direction `i` has `M_i` points `x_j = 2π a_i j / M_i`; because
//! `k_i x_j = 2π n_i j / M_i` the aspect ratio drops out of the discrete
//! transform. Sizes are rounded up to `2^a 3^b 5^c`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::FrequencyLattice;

/// Grid resolution rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// `M >= 2K + 1`: exact round trip for truncated fields.
    None,
    /// `M >= 3K + 1`: quadratic products of truncated fields are alias-free
    /// on the retained modes (the 3/2 rule).
    ThreeHalves,
}

/// Smallest `2^a 3^b 5^c` that is `>= n`.
pub fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Real samples of a multi-component field on a uniform grid.
#[derive(Debug, Clone)]
pub struct GridField {
    pub sizes: Vec<usize>,
    pub aspect: Vec<f64>,
    pub padding: Padding,
    pub comps: Vec<Vec<f64>>,
}

impl GridField {
    pub fn npoints(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Grid coordinates of flat point `p`.
    pub fn coords(&self, p: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.sizes.len()];
        let mut r = p;
        for i in (0..self.sizes.len()).rev() {
            let j = r % self.sizes[i];
            r /= self.sizes[i];
            x[i] = 2.0 * std::f64::consts::PI * self.aspect[i] * j as f64 / self.sizes[i] as f64;
        }
        x
    }
}

struct AxisPlans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Cached FFT plans for one lattice and one padding rule.
pub struct SpectralTransform {
    lattice: Arc<FrequencyLattice>,
    sizes: Vec<usize>,
    padding: Padding,
    plans: Vec<AxisPlans>,
    grid_index: Vec<usize>,
}

impl std::fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralTransform")
            .field("sizes", &self.sizes)
            .field("padding", &self.padding)
            .finish()
    }
}

impl SpectralTransform {
    pub fn new(lattice: Arc<FrequencyLattice>, padding: Padding) -> Self {
        let k = lattice.cutoff() as usize;
        let m = match padding {
            Padding::None => fft_friendly(2 * k + 1),
            Padding::ThreeHalves => fft_friendly(3 * k + 1),
        };
        let sizes = vec![m; lattice.dim()];
        Self::with_sizes(lattice, sizes, padding).expect("sizes satisfy the cutoff")
    }

    /// Explicit grid sizes; each must be at least `2K + 1`.
    pub fn with_sizes(
        lattice: Arc<FrequencyLattice>,
        sizes: Vec<usize>,
        padding: Padding,
    ) -> Result<Self> {
        let k = lattice.cutoff() as usize;
        if sizes.len() != lattice.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} grid sizes for a {}-dimensional lattice",
                sizes.len(),
                lattice.dim()
            )));
        }
        let min = match padding {
            Padding::None => 2 * k + 1,
            Padding::ThreeHalves => 3 * k + 1,
        };
        if let Some(&m) = sizes.iter().find(|&&m| m < min) {
            return Err(Error::GridTooSmall(format!(
                "grid size {m} cannot hold cutoff {k} (need at least {min})"
            )));
        }
        let mut planner = FftPlanner::new();
        let plans = sizes
            .iter()
            .map(|&m| AxisPlans { fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) })
            .collect();
        let grid_index = (0..lattice.len())
            .map(|idx| {
                let n = lattice.mode(idx);
                let mut g = 0usize;
                for (i, &c) in n.iter().enumerate() {
                    g = g * sizes[i] + c.rem_euclid(sizes[i] as i64) as usize;
                }
                g
            })
            .collect();
        Ok(SpectralTransform { lattice, sizes, padding, plans, grid_index })
    }

    pub fn lattice(&self) -> &Arc<FrequencyLattice> {
        &self.lattice
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn npoints(&self) -> usize {
        self.sizes.iter().product()
    }

    fn fft_nd(&self, data: &mut [Complex64], inverse: bool) {
        let dim = self.sizes.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut stride = 1usize;
        let mut tmp: Vec<Complex64> = Vec::new();
        for axis in (0..dim).rev() {
            let m = self.sizes[axis];
            let plan = if inverse { &self.plans[axis].inv } else { &self.plans[axis].fwd };
            let mut scratch = vec![zero; plan.get_inplace_scratch_len()];
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
            } else {
                // gather the strided lines of each block contiguously, transform
                // them as one batch and scatter back
                let block = m * stride;
                tmp.resize(block, zero);
                for chunk in data.chunks_mut(block) {
                    for j in 0..m {
                        let row = &chunk[j * stride..(j + 1) * stride];
                        for (s, &v) in row.iter().enumerate() {
                            tmp[s * m + j] = v;
                        }
                    }
                    plan.process_with_scratch(&mut tmp, &mut scratch);
                    for j in 0..m {
                        let row = &mut chunk[j * stride..(j + 1) * stride];
                        for (s, v) in row.iter_mut().enumerate() {
                            *v = tmp[s * m + j];
                        }
                    }
                }
            }
            stride *= m;
        }
    }

    /// Physical-space samples of one spectral component (real part).
    pub fn coeffs_to_grid(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.npoints()];
        for (idx, &g) in self.grid_index.iter().enumerate() {
            buf[g] = coeffs[idx];
        }
        self.fft_nd(&mut buf, true);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Complex physical-space samples of one spectral component.
    pub fn coeffs_to_grid_complex(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.npoints()];
        for (idx, &g) in self.grid_index.iter().enumerate() {
            buf[g] = coeffs[idx];
        }
        self.fft_nd(&mut buf, true);
        buf
    }

    /// Truncated spectrum of real samples.
    pub fn grid_to_coeffs(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid_to_coeffs_complex_in_place(&mut buf)
    }

    /// Truncated spectrum of complex samples.
    pub fn grid_to_coeffs_complex(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.grid_to_coeffs_complex_in_place(&mut buf)
    }

    fn grid_to_coeffs_complex_in_place(&self, buf: &mut [Complex64]) -> Vec<Complex64> {
        self.fft_nd(buf, false);
        let norm = 1.0 / self.npoints() as f64;
        self.grid_index.iter().map(|&g| buf[g] * norm).collect()
    }

    /// Transform every component to the grid.
    pub fn to_grid(&self, f: &SpectralField) -> GridField {
        let comps = f.comps().par_iter().map(|c| self.coeffs_to_grid(c)).collect();
        GridField {
            sizes: self.sizes.clone(),
            aspect: self.lattice.aspect().to_vec(),
            padding: self.padding,
            comps,
        }
    }

    /// Truncated spectrum of grid samples.
    pub fn to_spectral(&self, g: &GridField) -> Result<SpectralField> {
        if g.sizes != self.sizes {
            return Err(Error::ShapeMismatch(format!(
                "grid {:?} does not match transform {:?}",
                g.sizes, self.sizes
            )));
        }
        let comps = g.comps.par_iter().map(|c| self.grid_to_coeffs(c)).collect();
        SpectralField::from_comps(self.lattice.clone(), comps)
    }

    /// Truncated spectrum of a list of real grid arrays.
    pub fn arrays_to_spectral(&self, arrays: Vec<Vec<f64>>) -> SpectralField {
        let comps = arrays.par_iter().map(|c| self.grid_to_coeffs(c)).collect();
        SpectralField::from_comps(self.lattice.clone(), comps).expect("lattice sized")
    }

    /// Grid arrays of every component.
    pub fn field_to_arrays(&self, f: &SpectralField) -> Vec<Vec<f64>> {
        f.comps().par_iter().map(|c| self.coeffs_to_grid(c)).collect()
    }

    /// Grid samples of several real fields, two per complex transform.
    pub fn many_to_grid(&self, spectra: &[&[Complex64]]) -> Vec<Vec<f64>> {
        let i = Complex64::new(0.0, 1.0);
        let pairs: Vec<Vec<Vec<f64>>> = spectra
            .par_chunks(2)
            .map(|ch| {
                if ch.len() == 1 {
                    return vec![self.coeffs_to_grid(ch[0])];
                }
                let packed: Vec<Complex64> = ch[0].iter().zip(ch[1]).map(|(a, b)| a + i * b).collect();
                let g = self.coeffs_to_grid_complex(&packed);
                vec![g.iter().map(|z| z.re).collect(), g.iter().map(|z| z.im).collect()]
            })
            .collect();
        pairs.into_iter().flatten().collect()
    }

    /// Truncated spectra of several real grid arrays, two per complex transform.
    pub fn many_to_coeffs(&self, arrays: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
        let len = self.lattice.len();
        let pairs: Vec<Vec<Vec<Complex64>>> = arrays
            .par_chunks(2)
            .map(|ch| {
                if ch.len() == 1 {
                    return vec![self.grid_to_coeffs(&ch[0])];
                }
                let packed: Vec<Complex64> = ch[0].iter().zip(&ch[1]).map(|(&a, &b)| Complex64::new(a, b)).collect();
                let f = self.grid_to_coeffs_complex(&packed);
                let mut a = Vec::with_capacity(len);
                let mut b = Vec::with_capacity(len);
                for idx in 0..len {
                    let (x, y) = (f[idx], f[len - 1 - idx].conj());
                    a.push(0.5 * (x + y));
                    b.push(Complex64::new(0.0, -0.5) * (x - y));
                }
                vec![a, b]
            })
            .collect();
        pairs.into_iter().flatten().collect()
    }

    /// Dealiased product of two scalar spectra, truncated to the lattice.
    pub fn product(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let ga = self.coeffs_to_grid_complex(a);
        let gb = self.coeffs_to_grid_complex(b);
        let p: Vec<Complex64> = ga.iter().zip(&gb).map(|(x, y)| x * y).collect();
        self.grid_to_coeffs_complex(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friendly_sizes() {
        assert_eq!(fft_friendly(65), 72);
        assert_eq!(fft_friendly(97), 100);
        assert_eq!(fft_friendly(7), 8);
        assert_eq!(fft_friendly(1), 1);
    }

    #[test]
    fn round_trip_and_single_mode_samples() {
        let l = Arc::new(FrequencyLattice::with_aspect_sq(&[(1, 1), (9, 4)], 3).unwrap());
        let t = SpectralTransform::new(l.clone(), Padding::None);
        let f = SpectralField::single_mode(l.clone(), &[1, -2], &[Complex64::new(0.5, 0.25)]).unwrap();
        let mut sym = f.clone();
        sym.symmetrize();
        let g = t.to_grid(&sym);
        for p in 0..g.npoints() {
            let x = g.coords(p);
            let k = l.wave_vector(&[1, -2]);
            let ph = k[0] * x[0] + k[1] * x[1];
            let expect = 2.0 * (Complex64::new(0.25, 0.125) * Complex64::from_polar(1.0, ph)).re;
            assert!((g.comps[0][p] - expect).abs() < 1e-13);
        }
        let back = t.to_spectral(&g).unwrap();
        assert!(back.sub(&sym).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn undersized_grid_rejected() {
        let l = Arc::new(FrequencyLattice::isotropic(2, 4).unwrap());
        assert!(SpectralTransform::with_sizes(l, vec![8, 9], Padding::None).is_err());
    }

    #[test]
    fn dealiased_product_lands_on_sum_mode() {
        let l = Arc::new(FrequencyLattice::isotropic(2, 4).unwrap());
        let t = SpectralTransform::new(l.clone(), Padding::ThreeHalves);
        let one = Complex64::new(1.0, 0.0);
        for (k, m) in [([3, 1], [1, 2]), ([4, 4], [-1, 0]), ([4, 4], [3, 3])] {
            let a = SpectralField::single_mode(l.clone(), &k, &[one]).unwrap();
            let b = SpectralField::single_mode(l.clone(), &m, &[one]).unwrap();
            let p = t.product(a.comp(0), b.comp(0));
            let s = [k[0] + m[0], k[1] + m[1]];
            for (idx, v) in p.iter().enumerate() {
                let n = l.mode(idx);
                let expect = if n.as_slice() == s { 1.0 } else { 0.0 };
                assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-13, "{n:?}");
            }
        }
    }

    #[test]
    fn paired_transforms_match_single_ones() {
        let lat = Arc::new(FrequencyLattice::with_aspect(&[1.0, 1.3], 5).unwrap());
        let t = SpectralTransform::new(lat.clone(), Padding::ThreeHalves);
        let mut f = SpectralField::zeros(lat.clone(), 3);
        for c in 0..3 {
            for (i, z) in f.comp_mut(c).iter_mut().enumerate() {
                *z = Complex64::new(((i * 7 + c) % 11) as f64 - 5.0, ((i * 3 + 2 * c) % 5) as f64 - 2.0);
            }
        }
        f.symmetrize();
        let specs: Vec<&[Complex64]> = (0..3).map(|c| f.comp(c)).collect();
        let g = t.many_to_grid(&specs);
        for c in 0..3 {
            let single = t.coeffs_to_grid(f.comp(c));
            assert!(g[c].iter().zip(&single).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        let back = t.many_to_coeffs(&g);
        for c in 0..3 {
            assert!(back[c].iter().zip(f.comp(c)).all(|(a, b)| (a - b).norm() < 1e-12));
        }
    }
}
