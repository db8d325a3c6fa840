//! The oscillating limit system
//!
//! ```text
//! ∂ₜV + Q̄₂(U, V) + Q̄₃(V, V) - D̄V = 0
//! ```
//!
//! driven by a kernel trajectory `U(t)`, in two forms: directly on the
//! eigen-coefficients through the resonance tables, and as the family of
//! one-dimensional viscous Burgers equations
//!
//! ```text
//! ∂ₜv^p + κ₃|p| ∂_z (v^p)² - μ̄|p|² ∂²_z v^p + c_p(U, v) = 0
//! ```
//!
//! on the primitive lines, where the quadratic term is evaluated by dealiased
//! one-dimensional FFTs.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::acoustic::OscCoeffs;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::resonance::operators::ResonanceTables;
use crate::resonance::prime::PrimeDecomposition;
use crate::thermo::StateConstants;
use crate::transform::fft_friendly;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Averaged form on eigen-coefficients.
#[derive(Debug, Clone)]
pub struct AveragedLimit {
    tables: Arc<ResonanceTables>,
    pub mu_bar: f64,
    dt: f64,
    decay: Vec<f64>,
}

impl AveragedLimit {
    pub fn new(tables: Arc<ResonanceTables>, c: &StateConstants, dt: f64) -> Result<Self> {
        Self::with_mu_bar(tables, c.mu_bar(), dt)
    }

    pub fn with_mu_bar(tables: Arc<ResonanceTables>, mu_bar: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let lat = tables.lattice().clone();
        let decay = (0..lat.len()).map(|i| (-dt * mu_bar * lat.k_norm_sq_of(i)).exp()).collect();
        Ok(AveragedLimit { tables, mu_bar, dt, decay })
    }

    pub fn tables(&self) -> &Arc<ResonanceTables> {
        &self.tables
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn propagate(&self, v: &mut OscCoeffs) {
        for alpha in [1, -1] {
            for (z, d) in v.branch_mut(alpha).iter_mut().zip(&self.decay) {
                *z *= d;
            }
        }
    }

    /// `-Q̄₂(U, V) - Q̄₃(V, V)`; `u = None` drops the kernel coupling.
    pub fn rate(&self, v: &OscCoeffs, u: Option<&SpectralField>) -> OscCoeffs {
        let mut r = self.tables.q3_avg(v, v);
        if let Some(u) = u {
            r.axpy(ONE, &self.tables.q2_avg(u, v));
        }
        r.scale(-1.0);
        r
    }

    /// One Lawson–Heun step with the kernel state at both ends of the step.
    pub fn step(&self, v: &OscCoeffs, u_now: Option<&SpectralField>, u_next: Option<&SpectralField>, t: f64) -> Result<OscCoeffs> {
        let h = self.dt;
        let n0 = self.rate(v, u_now);
        let mut pred = v.clone();
        pred.axpy(ONE * h, &n0);
        self.propagate(&mut pred);
        let n1 = self.rate(&pred, u_next);
        let mut next = v.clone();
        next.axpy(ONE * (0.5 * h), &n0);
        self.propagate(&mut next);
        next.axpy(ONE * (0.5 * h), &n1);
        if !next.max_abs().is_finite() {
            return Err(Error::NonFinite(t + h));
        }
        Ok(next)
    }
}

struct LinePlan {
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Coupled Burgers form on primitive lines.
pub struct BurgersLimit {
    tables: Arc<ResonanceTables>,
    pub kappa3: f64,
    pub mu_bar: f64,
    dt: f64,
    plans: HashMap<i64, LinePlan>,
}

impl std::fmt::Debug for BurgersLimit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BurgersLimit")
            .field("kappa3", &self.kappa3)
            .field("mu_bar", &self.mu_bar)
            .field("dt", &self.dt)
            .finish()
    }
}

impl BurgersLimit {
    pub fn new(tables: Arc<ResonanceTables>, c: &StateConstants, dt: f64) -> Result<Self> {
        Self::with_constants(tables, c.resonant_triad_constant(), c.mu_bar(), dt)
    }

    pub fn with_constants(tables: Arc<ResonanceTables>, kappa3: f64, mu_bar: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        Ok(BurgersLimit { tables, kappa3, mu_bar, dt, plans: HashMap::new() })
    }

    fn plan(&mut self, extent: i64) -> &LinePlan {
        self.plans.entry(extent).or_insert_with(|| {
            let size = fft_friendly(3 * extent as usize + 1);
            let mut p = FftPlanner::new();
            LinePlan { size, fwd: p.plan_fft_forward(size), inv: p.plan_fft_inverse(size) }
        })
    }

    /// Prepare FFT plans for every line of a decomposition.
    pub fn prepare(&mut self, d: &PrimeDecomposition) {
        let extents: Vec<i64> = d.lines.values().map(|l| l.extent).collect();
        for e in extents {
            self.plan(e);
        }
    }

    fn propagate(&self, d: &mut PrimeDecomposition) {
        let lat = self.tables.lattice().clone();
        for (p, line) in d.lines.iter_mut() {
            let p2 = lat.norm_sq(p);
            for n in -line.extent..=line.extent {
                let f = (-self.dt * self.mu_bar * p2 * (n * n) as f64).exp();
                line.coeffs[(n + line.extent) as usize] *= f;
            }
        }
    }

    /// `-κ₃|p| ∂_z(v²)` on every line, plus the kernel coupling.
    pub fn rate(&self, d: &PrimeDecomposition, u: Option<&SpectralField>) -> Result<PrimeDecomposition> {
        let lat = self.tables.lattice().clone();
        let mut out = d.clone();
        for (p, line) in out.lines.iter_mut() {
            let e = line.extent;
            let plan = self
                .plans
                .get(&e)
                .ok_or_else(|| Error::InvalidArgument("line plans not prepared for this decomposition".into()))?;
            let m = plan.size;
            let mut buf = vec![ZERO; m];
            for n in -e..=e {
                buf[n.rem_euclid(m as i64) as usize] = line.get(n);
            }
            plan.inv.process(&mut buf);
            for z in buf.iter_mut() {
                *z = *z * *z;
            }
            plan.fwd.process(&mut buf);
            let pn = lat.norm_sq(p).sqrt();
            for n in -e..=e {
                let sq = buf[n.rem_euclid(m as i64) as usize] / m as f64;
                line.coeffs[(n + e) as usize] = if n == 0 {
                    ZERO
                } else {
                    Complex64::new(0.0, -self.kappa3 * pn * n as f64) * sq
                };
            }
        }
        if let Some(u) = u {
            let v = d.recompose();
            let mut c2 = self.tables.q2_avg(u, &v);
            c2.scale(-1.0);
            let c2 = PrimeDecomposition::new(&c2);
            for (p, line) in out.lines.iter_mut() {
                let src = &c2.lines[p];
                for (a, b) in line.coeffs.iter_mut().zip(&src.coeffs) {
                    *a += b;
                }
            }
        }
        Ok(out)
    }

    pub fn step(
        &self,
        d: &PrimeDecomposition,
        u_now: Option<&SpectralField>,
        u_next: Option<&SpectralField>,
        t: f64,
    ) -> Result<PrimeDecomposition> {
        let h = self.dt;
        let axpy = |a: &mut PrimeDecomposition, f: f64, b: &PrimeDecomposition| {
            for (la, lb) in a.lines.values_mut().zip(b.lines.values()) {
                for (x, y) in la.coeffs.iter_mut().zip(&lb.coeffs) {
                    *x += f * y;
                }
            }
        };
        let n0 = self.rate(d, u_now)?;
        let mut pred = d.clone();
        axpy(&mut pred, h, &n0);
        self.propagate(&mut pred);
        let n1 = self.rate(&pred, u_next)?;
        let mut next = d.clone();
        axpy(&mut next, 0.5 * h, &n0);
        self.propagate(&mut next);
        axpy(&mut next, 0.5 * h, &n1);
        if !next.energy().is_finite() {
            return Err(Error::NonFinite(t + h));
        }
        Ok(next)
    }
}

/// Composite Simpson rule on uniform samples (trapezoid on a trailing odd
/// interval).
pub fn simpson(h: f64, y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut s = 0.0;
    let mut i = 0;
    while i + 2 <= even {
        s += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
        i += 2;
    }
    if even < intervals {
        s += 0.5 * h * (y[n - 2] + y[n - 1]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FrequencyLattice;
    use crate::thermo::{derive_constants, IdealGas, Transport};

    fn setup(k: i64) -> (Arc<FrequencyLattice>, StateConstants, Arc<ResonanceTables>) {
        let lat = Arc::new(FrequencyLattice::isotropic(2, k).unwrap());
        let c = derive_constants(&IdealGas { cv: 1.0 }, &Transport::constant(0.05, 0.0, 0.05), 1.0, 1.0, 2, lat.volume())
            .unwrap();
        let t = Arc::new(ResonanceTables::new(lat.clone(), &c).unwrap());
        (lat, c, t)
    }

    /// Viscous Burgers `w_t + a (w²)_z = b w_zz` on `[0, 2π)` by the Cole–Hopf
    /// transform, sampled on `m` points; returns Fourier coefficients.
    fn cole_hopf(w0: &[(i64, Complex64)], a: f64, b: f64, t: f64, m: usize) -> HashMap<i64, Complex64> {
        use std::f64::consts::PI;
        let z = |j: usize| 2.0 * PI * j as f64 / m as f64;
        // u = 2a w solves u_t + u u_z = b u_zz, and u = -2b φ_z/φ with
        // φ₀ = exp(-(1/2b) ∫₀^z u₀)
        let mut phi: Vec<Complex64> = (0..m)
            .map(|j| {
                let mut prim = 0.0;
                for &(n, c) in w0 {
                    let i = Complex64::new(0.0, 1.0);
                    prim += (2.0 * a * c * ((i * n as f64 * z(j)).exp() - 1.0) / (i * n as f64)).re;
                }
                Complex64::new((-prim / (2.0 * b)).exp(), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        fwd.process(&mut phi);
        let freq = |j: usize| if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
        let mut dphi = phi.clone();
        for j in 0..m {
            let k = freq(j);
            let f = (-b * k * k * t).exp() / m as f64;
            phi[j] *= f;
            dphi[j] *= f * Complex64::new(0.0, k);
        }
        inv.process(&mut phi);
        inv.process(&mut dphi);
        let mut w: Vec<Complex64> = (0..m).map(|j| (-2.0 * b * dphi[j] / phi[j]) / (2.0 * a)).collect();
        fwd.process(&mut w);
        (0..m).map(|j| (freq(j) as i64, w[j] / m as f64)).collect()
    }

    #[test]
    fn single_line_is_viscous_burgers() {
        let (lat, c, tables) = setup(12);
        let dt = 1e-3;
        let mut sys = BurgersLimit::new(tables.clone(), &c, dt).unwrap();
        let mut v = OscCoeffs::zeros(lat.clone());
        let p = [1i64, 1];
        let amp = 0.05 / c.resonant_triad_constant();
        let init = [(1i64, Complex64::new(amp, 0.5 * amp)), (2, Complex64::new(-0.4 * amp, 0.2 * amp))];
        for &(n, z) in &init {
            v.set(1, &[n * p[0], n * p[1]], z).unwrap();
            v.set(1, &[-n * p[0], -n * p[1]], z.conj()).unwrap();
        }
        let mut d = PrimeDecomposition::new(&v);
        sys.prepare(&d);
        let steps = 300;
        for s in 0..steps {
            d = sys.step(&d, None, None, s as f64 * dt).unwrap();
        }
        let mut w0: Vec<(i64, Complex64)> = init.to_vec();
        w0.extend(init.iter().map(|&(n, z)| (-n, z.conj())));
        let pn = lat.norm_sq(&p).sqrt();
        let reference = cole_hopf(&w0, c.resonant_triad_constant() * pn, c.mu_bar() * pn * pn, steps as f64 * dt, 512);
        let line = &d.lines[&smallvec::SmallVec::from_slice(&p)];
        let mut err: f64 = 0.0;
        for n in -line.extent..=line.extent {
            if n != 0 {
                err = err.max((line.get(n) - reference[&n]).norm());
            }
        }
        assert!(err < 1e-6 * amp, "{err}");
        // other lines stay empty
        let rest: f64 = d.lines.iter().filter(|(q, _)| q.as_slice() != p).map(|(_, l)| l.coeffs.iter().map(|z| z.norm()).sum::<f64>()).sum();
        assert_eq!(rest, 0.0);
    }

    #[test]
    fn averaged_and_burgers_forms_agree() {
        use crate::random::{random_kernel, random_osc};
        use rand::SeedableRng;
        let (lat, c, tables) = setup(5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let v0 = random_osc(&lat, &c, 5.0, 1.0, &mut rng).unwrap();
        let u = random_kernel(&lat, &c, 5.0, 1.0, &mut rng).unwrap();
        let dt = 2e-3;
        let avg = AveragedLimit::new(tables.clone(), &c, dt).unwrap();
        let mut bur = BurgersLimit::new(tables, &c, dt).unwrap();
        let mut v = v0.clone();
        let mut d = PrimeDecomposition::new(&v0);
        bur.prepare(&d);
        for s in 0..50 {
            v = avg.step(&v, Some(&u), Some(&u), s as f64 * dt).unwrap();
            d = bur.step(&d, Some(&u), Some(&u), s as f64 * dt).unwrap();
        }
        let diff = d.recompose().sub(&v);
        assert!(diff.norm_sq().sqrt() < 1e-12 * v.norm_sq().sqrt());
        assert!(v.reality_defect() < 1e-14);
    }

    #[test]
    fn zero_stays_zero() {
        let (lat, c, tables) = setup(4);
        let avg = AveragedLimit::new(tables, &c, 1e-2).unwrap();
        let v = OscCoeffs::zeros(lat.clone());
        assert_eq!(avg.step(&v, None, None, 0.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let y: Vec<f64> = (0..11).map(|i| (0.1 * i as f64).powi(3)).collect();
        assert!((simpson(0.1, &y) - 0.25).abs() < 1e-14);
    }
}
