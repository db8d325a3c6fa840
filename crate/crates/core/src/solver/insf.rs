//! The incompressible limit for the kernel variables `(ω, ϑ)`:
//!
//! ```text
//! ∂ₜω + P(ω·∇ω) = (μ°/ρ°) Δω,      div ω = 0
//! ∂ₜϑ + ω·∇ϑ = κ° p_ρ/((c°)² ρ° e_θ) Δϑ
//! ```
//!
//! plus transport by the constant mean velocity when it is nonzero.

use std::sync::Arc;

use num_complex::Complex64;

use crate::acoustic::KernelPart;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::FrequencyLattice;
use crate::thermo::StateConstants;
use crate::transform::SpectralTransform;

#[derive(Debug, Clone)]
pub struct InsfSystem {
    lattice: Arc<FrequencyLattice>,
    transform: Arc<SpectralTransform>,
    dt: f64,
    pub viscosity: f64,
    pub diffusivity: f64,
    /// Switch for the advection terms (linear heat flow when false).
    pub nonlinear: bool,
    decay_omega: Vec<f64>,
    decay_theta: Vec<f64>,
}

impl InsfSystem {
    pub fn new(transform: Arc<SpectralTransform>, c: &StateConstants, dt: f64) -> Result<Self> {
        Self::with_coefficients(transform, c.mu / c.rho0, c.kernel_diffusivity(), dt)
    }

    pub fn with_coefficients(transform: Arc<SpectralTransform>, viscosity: f64, diffusivity: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let lattice = transform.lattice().clone();
        let decay = |d: f64| (0..lattice.len()).map(|i| (-dt * d * lattice.k_norm_sq_of(i)).exp()).collect();
        Ok(InsfSystem {
            decay_omega: decay(viscosity),
            decay_theta: decay(diffusivity),
            lattice,
            transform,
            dt,
            viscosity,
            diffusivity,
            nonlinear: true,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn propagate(&self, s: &mut KernelPart) {
        for c in 0..self.lattice.dim() {
            for (z, d) in s.omega.comp_mut(c).iter_mut().zip(&self.decay_omega) {
                *z *= d;
            }
        }
        for (z, d) in s.theta.comp_mut(0).iter_mut().zip(&self.decay_theta) {
            *z *= d;
        }
    }

    /// `(-P((ω + ū)·∇ω), -(ω + ū)·∇ϑ)`.
    pub fn rate(&self, s: &KernelPart) -> Result<KernelPart> {
        let lat = &self.lattice;
        let dim = lat.dim();
        let mut out = KernelPart::zeros(lat.clone());
        out.mean = vec![Complex64::new(0.0, 0.0); dim + 2];
        if !self.nonlinear {
            return Ok(out);
        }
        let mut specs: Vec<Vec<Complex64>> = Vec::with_capacity(dim + dim * dim + dim);
        for j in 0..dim {
            specs.push(s.omega.comp(j).to_vec());
        }
        for i in 0..dim {
            let g = s.omega.gradient(i);
            for j in 0..dim {
                specs.push(g.comp(j).to_vec());
            }
        }
        let g = s.theta.gradient(0);
        for j in 0..dim {
            specs.push(g.comp(j).to_vec());
        }
        let refs: Vec<&[Complex64]> = specs.iter().map(|v| v.as_slice()).collect();
        let grid = self.transform.many_to_grid(&refs);
        let np = self.transform.npoints();
        let ubar: Vec<f64> = (0..dim).map(|j| s.mean[1 + j].re).collect();
        let w = |j: usize, p: usize| grid[j][p] + ubar[j];
        let mut arrays = vec![vec![0.0; np]; dim + 1];
        for p in 0..np {
            for i in 0..dim {
                let mut a = 0.0;
                for j in 0..dim {
                    a += w(j, p) * grid[dim + i * dim + j][p];
                }
                arrays[i][p] = -a;
            }
            let mut a = 0.0;
            for j in 0..dim {
                a += w(j, p) * grid[dim + dim * dim + j][p];
            }
            arrays[dim][p] = -a;
        }
        let mut sp = self.transform.many_to_coeffs(&arrays);
        let th = sp.pop().expect("scalar rate");
        out.omega = SpectralField::from_comps(lat.clone(), sp)?.leray()?;
        out.theta = SpectralField::from_comps(lat.clone(), vec![th])?;
        Ok(out)
    }

    /// One Lawson–Heun step.
    pub fn step(&self, s: &KernelPart, t: f64) -> Result<KernelPart> {
        let h = self.dt;
        let one = Complex64::new(1.0, 0.0);
        let n0 = self.rate(s)?;
        let axpy = |a: &mut KernelPart, f: f64, b: &KernelPart| -> Result<()> {
            a.omega.axpy(one * f, &b.omega)?;
            a.theta.axpy(one * f, &b.theta)
        };
        let mut pred = s.clone();
        axpy(&mut pred, h, &n0)?;
        self.propagate(&mut pred);
        let n1 = self.rate(&pred)?;
        let mut next = s.clone();
        axpy(&mut next, 0.5 * h, &n0)?;
        self.propagate(&mut next);
        axpy(&mut next, 0.5 * h, &n1)?;
        if !(next.omega.max_abs().is_finite() && next.theta.max_abs().is_finite()) {
            return Err(Error::NonFinite(t + h));
        }
        Ok(next)
    }

    /// `‖ω‖²_{L²}`.
    pub fn energy(&self, s: &KernelPart) -> f64 {
        s.omega.norm_l2().powi(2)
    }

    /// `‖∇ω‖²_{L²}`.
    pub fn enstrophy(&self, s: &KernelPart) -> f64 {
        let lat = &self.lattice;
        let mut acc = 0.0;
        for c in 0..lat.dim() {
            for (i, z) in s.omega.comp(c).iter().enumerate() {
                acc += lat.k_norm_sq_of(i) * z.norm_sqr();
            }
        }
        acc * lat.volume()
    }

    /// Largest `|div ω|` coefficient.
    pub fn divergence_defect(&self, s: &KernelPart) -> f64 {
        s.omega.divergence(0).max_abs()
    }

    /// Grid extrema of `ϑ`.
    pub fn scalar_range(&self, s: &KernelPart) -> (f64, f64) {
        let g = self.transform.coeffs_to_grid(s.theta.comp(0));
        g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }
}

/// Velocity field of a single Fourier mode `amp e^{ik·x}` made divergence-free.
pub fn shear_mode(lat: &Arc<FrequencyLattice>, n: &[i64], amp: &[Complex64]) -> Result<SpectralField> {
    let mut f = SpectralField::zeros(lat.clone(), lat.dim());
    let idx = lat.try_index(n)?;
    let neg = lat.neg_index(idx);
    for (j, a) in amp.iter().enumerate() {
        f.comp_mut(j)[idx] = *a;
        f.comp_mut(j)[neg] = a.conj();
    }
    f.leray()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_field;
    use crate::thermo::{derive_constants, IdealGas, Transport};
    use crate::transform::Padding;
    use rand::SeedableRng;

    fn setup(k: i64, dt: f64) -> (Arc<FrequencyLattice>, InsfSystem) {
        let lat = Arc::new(FrequencyLattice::isotropic(2, k).unwrap());
        let c = derive_constants(&IdealGas { cv: 1.0 }, &Transport::constant(0.05, 0.0, 0.05), 1.0, 1.0, 2, lat.volume())
            .unwrap();
        let t = Arc::new(SpectralTransform::new(lat.clone(), Padding::ThreeHalves));
        (lat.clone(), InsfSystem::new(t, &c, dt).unwrap())
    }

    fn random_kernel(lat: &Arc<FrequencyLattice>, seed: u64) -> KernelPart {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s = KernelPart::zeros(lat.clone());
        s.omega = random_field(lat, 2, 6.0, 2.0, false, &mut rng).leray().unwrap().scaled(0.05);
        s.theta = random_field(lat, 1, 6.0, 2.0, false, &mut rng).scaled(0.05);
        s
    }

    #[test]
    fn linear_mode_decays_exactly() {
        let (lat, mut sys) = setup(8, 0.01);
        sys.nonlinear = false;
        let mut s = KernelPart::zeros(lat.clone());
        s.omega = shear_mode(&lat, &[2, 1], &[Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4)]).unwrap();
        let w0 = s.omega.clone();
        for n in 0..50 {
            s = sys.step(&s, n as f64 * 0.01).unwrap();
        }
        let exact = w0.scaled((-sys.viscosity * 5.0 * 0.5).exp());
        assert!(s.omega.sub(&exact).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn zero_scalar_stays_zero_and_flow_stays_solenoidal() {
        let (lat, sys) = setup(8, 0.01);
        let mut s = random_kernel(&lat, 3);
        s.theta = SpectralField::zeros(lat.clone(), 1);
        for n in 0..20 {
            s = sys.step(&s, n as f64 * 0.01).unwrap();
        }
        assert_eq!(s.theta.max_abs(), 0.0);
        assert!(sys.divergence_defect(&s) < 1e-12);
    }

    #[test]
    fn energy_inequality_and_maximum_principle() {
        let (lat, sys) = setup(8, 0.005);
        let mut s = random_kernel(&lat, 4);
        let e0 = sys.energy(&s);
        let (lo0, hi0) = sys.scalar_range(&s);
        let mut diss = 0.0;
        let mut prev = sys.enstrophy(&s);
        for n in 0..100 {
            s = sys.step(&s, n as f64 * 0.005).unwrap();
            let cur = sys.enstrophy(&s);
            diss += 0.5 * 0.005 * (prev + cur);
            prev = cur;
        }
        let e1 = sys.energy(&s) + 2.0 * sys.viscosity * diss;
        assert!((e1 - e0).abs() < 1e-4 * e0, "{e0} {e1}");
        let (lo, hi) = sys.scalar_range(&s);
        assert!(lo >= lo0 - 1e-3 * (hi0 - lo0) && hi <= hi0 + 1e-3 * (hi0 - lo0));
    }
}
