//! Exact propagator of the constant-coefficient part
//! `L = -(1/ε) A + D` over one step `h`.
//!
//! On a mode `k ≠ 0`, `L` leaves the transverse velocity to decay at rate
//! `(μ°/ρ°)|k|²` and acts on `(ρ̂, k̂·û, θ̂)` as the 3×3 matrix
//!
//! ```text
//! -(i|k|/ε) [[0, ρ°, 0], [p_ρ/ρ°, 0, p_θ/ρ°], [0, g°, 0]]
//!   + diag(0, -ν°/ρ°, -κ°/(ρ° e_θ)) |k|²
//! ```
//!
//! whose exponential is computed once per distinct `|k|²`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::FrequencyLattice;
use crate::thermo::StateConstants;

type M3 = Matrix3<Complex64>;

/// Generator of the longitudinal block for `|k|² = k2`.
pub fn longitudinal_generator(c: &StateConstants, eps: f64, k2: f64) -> M3 {
    let kn = k2.sqrt();
    let z = Complex64::new(0.0, 0.0);
    let a = Complex64::new(0.0, -kn / eps);
    let r = |x: f64| Complex64::new(x, 0.0);
    let mut m = M3::from_element(z);
    m[(0, 1)] = a * c.rho0;
    m[(1, 0)] = a * (c.p_r() / c.rho0);
    m[(1, 2)] = a * (c.p_t() / c.rho0);
    m[(2, 1)] = a * c.g0;
    m[(1, 1)] = r(-c.nu / c.rho0 * k2);
    m[(2, 2)] = r(-c.kappa / (c.rho0 * c.e_t()) * k2);
    m
}

/// `e^{hL}` on state fields for fixed `ε` and `h`.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    lattice: Arc<FrequencyLattice>,
    h: f64,
    blocks: Vec<(M3, f64)>,
    slot: Vec<u32>,
}

impl LinearPropagator {
    pub fn new(lattice: Arc<FrequencyLattice>, c: &StateConstants, eps: f64, h: f64) -> Result<Self> {
        if !(eps > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("propagator needs ε > 0 and finite h (got {eps}, {h})")));
        }
        let mut seen: HashMap<u64, u32> = HashMap::new();
        let mut blocks = Vec::new();
        let mut slot = Vec::with_capacity(lattice.len());
        let decay = c.mu / c.rho0;
        for idx in 0..lattice.len() {
            let k2 = lattice.k_norm_sq_of(idx);
            let s = *seen.entry(k2.to_bits()).or_insert_with(|| {
                let g = longitudinal_generator(c, eps, k2) * Complex64::new(h, 0.0);
                blocks.push((g.exp(), (-h * decay * k2).exp()));
                (blocks.len() - 1) as u32
            });
            slot.push(s);
        }
        Ok(LinearPropagator { lattice, h, blocks, slot })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Apply the propagator in place.
    pub fn apply(&self, f: &mut SpectralField) {
        let lat = &self.lattice;
        let dim = lat.dim();
        let z = lat.zero_index();
        for idx in 0..lat.len() {
            if idx == z {
                continue;
            }
            let (e, tr) = &self.blocks[self.slot[idx] as usize];
            let kv = lat.k_of(idx);
            let kn = lat.k_norm_sq_of(idx).sqrt();
            let mut ul = Complex64::new(0.0, 0.0);
            for j in 0..dim {
                ul += kv[j] / kn * f.comp(1 + j)[idx];
            }
            let rho = f.comp(0)[idx];
            let th = f.comp(dim + 1)[idx];
            let n0 = e[(0, 0)] * rho + e[(0, 1)] * ul + e[(0, 2)] * th;
            let n1 = e[(1, 0)] * rho + e[(1, 1)] * ul + e[(1, 2)] * th;
            let n2 = e[(2, 0)] * rho + e[(2, 1)] * ul + e[(2, 2)] * th;
            f.comp_mut(0)[idx] = n0;
            f.comp_mut(dim + 1)[idx] = n2;
            for j in 0..dim {
                let u = f.comp(1 + j)[idx];
                let ut = u - kv[j] / kn * ul;
                f.comp_mut(1 + j)[idx] = tr * ut + kv[j] / kn * n1;
            }
        }
    }
}
