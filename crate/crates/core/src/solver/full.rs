//! The fluctuation system for `Ũ = (ρ̃, u, θ̃)`, `ρ = ρ° + ερ̃`,
//! `θ = θ° + εθ̃`:
//!
//! ```text
//! ∂ₜρ̃ + (1/ε) div(ρu) = 0
//! ∂ₜu + u·∇u + (1/(ερ)) (p_ρ ∇ρ̃ + p_θ ∇θ̃) = (1/ρ) div S
//! ∂ₜθ̃ + u·∇θ̃ + (1/ε) (θ p_θ/(ρ e_θ)) div u
//!     = (1/(ρ e_θ)) div(κ ∇θ̃) + (ε/(ρ e_θ)) S : ∇u
//! ```
//!
//! with `S = μ(∇u + ∇uᵀ) + (λ - 2μ/N) div u I`. The part `-(1/ε)A + D`
//! evaluated at the reference state is propagated exactly; everything else,
//! including the variable-coefficient corrections, is the explicit remainder
//! computed on the dealiased grid.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::linear::LinearPropagator;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::FrequencyLattice;
use crate::thermo::{derive_constants, EquationOfState, StateConstants, ThermoPoint, Transport};
use crate::transform::{Padding, SpectralTransform};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Mass, momentum and total energy `∫(½ε²ρ|u|² + ρe)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conserved {
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
    /// `∫ρ|u|`, the scale for momentum drift.
    pub momentum_scale: f64,
}

#[derive(Debug, Clone)]
pub struct FullSystem {
    lattice: Arc<FrequencyLattice>,
    eos: Arc<dyn EquationOfState>,
    transport: Transport,
    consts: StateConstants,
    eps: f64,
    dt: f64,
    transform: Arc<SpectralTransform>,
    prop: LinearPropagator,
    reference: ThermoPoint,
}

fn mult_spec(src: &[Complex64], lat: &FrequencyLattice, f: impl Fn(&[f64]) -> Complex64) -> Vec<Complex64> {
    src.iter().enumerate().map(|(i, z)| z * f(lat.k_of(i))).collect()
}

impl FullSystem {
    pub fn new(
        lattice: Arc<FrequencyLattice>,
        eos: Arc<dyn EquationOfState>,
        transport: Transport,
        rho0: f64,
        theta0: f64,
        eps: f64,
        dt: f64,
    ) -> Result<Self> {
        let consts = derive_constants(eos.as_ref(), &transport, rho0, theta0, lattice.dim(), lattice.volume())?;
        let transform = Arc::new(SpectralTransform::new(lattice.clone(), Padding::ThreeHalves));
        Self::with_transform(lattice, eos, transport, consts, eps, dt, transform)
    }

    pub fn with_transform(
        lattice: Arc<FrequencyLattice>,
        eos: Arc<dyn EquationOfState>,
        transport: Transport,
        consts: StateConstants,
        eps: f64,
        dt: f64,
        transform: Arc<SpectralTransform>,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let prop = LinearPropagator::new(lattice.clone(), &consts, eps, dt)?;
        let reference = eos.eval(consts.rho0, consts.theta0);
        Ok(FullSystem { lattice, eos, transport, consts, eps, dt, transform, prop, reference })
    }

    pub fn constants(&self) -> &StateConstants {
        &self.consts
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lattice(&self) -> &Arc<FrequencyLattice> {
        &self.lattice
    }

    pub fn transform(&self) -> &Arc<SpectralTransform> {
        &self.transform
    }

    /// Smallest density and temperature on the grid.
    pub fn extrema(&self, u: &SpectralField) -> (f64, f64) {
        let dim = self.lattice.dim();
        let g = self.transform.many_to_grid(&[u.comp(0), u.comp(dim + 1)]);
        let e = self.eps;
        let rmin = g[0].iter().fold(f64::INFINITY, |a, &x| a.min(self.consts.rho0 + e * x));
        let tmin = g[1].iter().fold(f64::INFINITY, |a, &x| a.min(self.consts.theta0 + e * x));
        (rmin, tmin)
    }

    /// The explicit remainder `N(Ũ) = RHS(Ũ) - LŨ`.
    pub fn nonlinear(&self, u: &SpectralField, t: f64) -> Result<SpectralField> {
        let lat = &self.lattice;
        let dim = lat.dim();
        let nc = dim + 2;
        let eps = self.eps;
        let c = &self.consts;
        let (rho0, theta0) = (c.rho0, c.theta0);
        let r0 = &self.reference;
        let variable = self.transport.exponent != 0.0;

        // spectra to sample: fields, gradients of ρ̃ and θ̃, velocity gradient,
        // constant-coefficient viscous force and Laplacian of θ̃
        let mut specs: Vec<Vec<Complex64>> = Vec::with_capacity(nc + 2 * dim + dim * dim + dim + 1);
        for comp in 0..nc {
            specs.push(u.comp(comp).to_vec());
        }
        for &comp in &[0, dim + 1] {
            for j in 0..dim {
                specs.push(mult_spec(u.comp(comp), lat, |k| I * k[j]));
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                specs.push(mult_spec(u.comp(1 + i), lat, |k| I * k[j]));
            }
        }
        let b = ((dim as f64 - 2.0) / dim as f64) * c.mu + c.lambda;
        for i in 0..dim {
            let mut v = vec![Complex64::new(0.0, 0.0); lat.len()];
            for (idx, z) in v.iter_mut().enumerate() {
                let k = lat.k_of(idx);
                let k2 = lat.k_norm_sq_of(idx);
                let mut kd = Complex64::new(0.0, 0.0);
                for j in 0..dim {
                    kd += k[j] * u.comp(1 + j)[idx];
                }
                *z = -c.mu * k2 * u.comp(1 + i)[idx] - b * k[i] * kd;
            }
            specs.push(v);
        }
        specs.push(mult_spec(u.comp(dim + 1), lat, |k| Complex64::new(-k.iter().map(|x| x * x).sum::<f64>(), 0.0)));
        let refs: Vec<&[Complex64]> = specs.iter().map(|v| v.as_slice()).collect();
        let g = self.transform.many_to_grid(&refs);
        let fld = |comp: usize| &g[comp];
        let drho = |j: usize| &g[nc + j];
        let dth = |j: usize| &g[nc + dim + j];
        let du = |i: usize, j: usize| &g[nc + 2 * dim + i * dim + j];
        let visc0 = |i: usize| &g[nc + 2 * dim + dim * dim + i];
        let lap_th = &g[nc + 2 * dim + dim * dim + dim];
        let np = self.transform.npoints();

        struct Point {
            rho: f64,
            tp: ThermoPoint,
            mu: f64,
            lambda: f64,
            kappa: f64,
        }
        let mut bad: Option<(usize, f64, f64)> = None;
        let pts: Vec<Point> = (0..np)
            .map(|p| {
                let rho = rho0 + eps * fld(0)[p];
                let th = theta0 + eps * fld(dim + 1)[p];
                if !(rho > 0.0 && th > 0.0) && bad.is_none() {
                    bad = Some((p, rho, th));
                }
                let (mu, lambda, kappa) = self.transport.at(th.max(f64::MIN_POSITIVE), theta0);
                Point { rho, tp: self.eos.eval(rho, th), mu, lambda, kappa }
            })
            .collect();
        if let Some((p, rho, th)) = bad {
            return Err(Error::Positivity { t, detail: format!("grid point {p}: ρ = {rho}, θ = {th}") });
        }

        // stress from the local viscosities
        let stress = |p: usize, i: usize, j: usize| {
            let pt = &pts[p];
            let mut div = 0.0;
            for l in 0..dim {
                div += du(l, l)[p];
            }
            let mut s = pt.mu * (du(i, j)[p] + du(j, i)[p]);
            if i == j {
                s += (pt.lambda - 2.0 * pt.mu / dim as f64) * div;
            }
            s
        };

        // variable coefficients need conservative fluxes
        let (visc, heat): (Vec<Vec<f64>>, Vec<f64>) = if variable {
            let mut arrays = Vec::new();
            for i in 0..dim {
                for j in i..dim {
                    arrays.push((0..np).map(|p| stress(p, i, j)).collect::<Vec<f64>>());
                }
            }
            for j in 0..dim {
                arrays.push((0..np).map(|p| pts[p].kappa * dth(j)[p]).collect());
            }
            let sp = self.transform.many_to_coeffs(&arrays);
            let pos = |i: usize, j: usize| {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                a * dim - a * (a + 1) / 2 + b
            };
            let mut div_specs: Vec<Vec<Complex64>> = Vec::new();
            for i in 0..dim {
                let mut v = vec![Complex64::new(0.0, 0.0); lat.len()];
                for (idx, z) in v.iter_mut().enumerate() {
                    let k = lat.k_of(idx);
                    for j in 0..dim {
                        *z += I * k[j] * sp[pos(i, j)][idx];
                    }
                }
                div_specs.push(v);
            }
            let nsym = dim * (dim + 1) / 2;
            let mut v = vec![Complex64::new(0.0, 0.0); lat.len()];
            for (idx, z) in v.iter_mut().enumerate() {
                let k = lat.k_of(idx);
                for j in 0..dim {
                    *z += I * k[j] * sp[nsym + j][idx];
                }
            }
            div_specs.push(v);
            let refs: Vec<&[Complex64]> = div_specs.iter().map(|v| v.as_slice()).collect();
            let mut gg = self.transform.many_to_grid(&refs);
            let heat = gg.pop().expect("heat flux divergence");
            (gg, heat)
        } else {
            ((0..dim).map(|i| visc0(i).clone()).collect(), lap_th.iter().map(|x| c.kappa * x).collect())
        };

        let kappa_ref = c.kappa / (rho0 * r0.e_t);
        let g_ref = theta0 * r0.p_t / (rho0 * r0.e_t);
        let mut out: Vec<Vec<f64>> = vec![vec![0.0; np]; dim + dim + 1];
        let (flux, rest) = out.split_at_mut(dim);
        let (mom, temp) = rest.split_at_mut(dim);
        let temp = &mut temp[0];
        for p in 0..np {
            let pt = &pts[p];
            let rho = pt.rho;
            let th = theta0 + eps * fld(dim + 1)[p];
            let tp = &pt.tp;
            let mut div = 0.0;
            for l in 0..dim {
                div += du(l, l)[p];
            }
            for j in 0..dim {
                flux[j][p] = fld(0)[p] * fld(1 + j)[p];
            }
            let ar = tp.p_r / rho - r0.p_r / rho0;
            let at = tp.p_t / rho - r0.p_t / rho0;
            for i in 0..dim {
                let mut adv = 0.0;
                for j in 0..dim {
                    adv += fld(1 + j)[p] * du(i, j)[p];
                }
                mom[i][p] = -adv - (ar * drho(i)[p] + at * dth(i)[p]) / eps + visc[i][p] / rho - visc0(i)[p] / rho0;
            }
            let mut adv = 0.0;
            let mut sdu = 0.0;
            for j in 0..dim {
                adv += fld(1 + j)[p] * dth(j)[p];
                for i in 0..dim {
                    sdu += stress(p, i, j) * du(i, j)[p];
                }
            }
            let gcoef = th * tp.p_t / (rho * tp.e_t) - g_ref;
            temp[p] = -adv - gcoef * div / eps + heat[p] / (rho * tp.e_t) - kappa_ref * lap_th[p]
                + eps * sdu / (rho * tp.e_t);
        }
        let sp = self.transform.many_to_coeffs(&out);
        let mut comps = Vec::with_capacity(nc);
        let mut rho_rate = vec![Complex64::new(0.0, 0.0); lat.len()];
        for (idx, z) in rho_rate.iter_mut().enumerate() {
            let k = lat.k_of(idx);
            for j in 0..dim {
                *z -= I * k[j] * sp[j][idx];
            }
        }
        comps.push(rho_rate);
        comps.extend(sp.into_iter().skip(dim));
        let n = SpectralField::from_comps(lat.clone(), comps)?;
        if !n.max_abs().is_finite() {
            return Err(Error::NonFinite(t));
        }
        Ok(n)
    }

    /// Apply the exact linear propagator over one step.
    pub fn propagate(&self, u: &mut SpectralField) {
        self.prop.apply(u);
    }

    /// One Lawson–Heun step from time `t`.
    pub fn step(&self, u: &SpectralField, t: f64) -> Result<SpectralField> {
        let h = self.dt;
        let n0 = self.nonlinear(u, t)?;
        let mut pred = u.clone();
        pred.axpy(ONE * h, &n0)?;
        self.prop.apply(&mut pred);
        let n1 = self.nonlinear(&pred, t + h)?;
        let mut next = u.clone();
        next.axpy(ONE * (0.5 * h), &n0)?;
        self.prop.apply(&mut next);
        next.axpy(ONE * (0.5 * h), &n1)?;
        if !next.max_abs().is_finite() {
            return Err(Error::NonFinite(t + h));
        }
        let (rmin, tmin) = self.extrema(&next);
        if !(rmin > 0.0 && tmin > 0.0) {
            return Err(Error::Positivity { t: t + h, detail: format!("min ρ = {rmin}, min θ = {tmin}") });
        }
        Ok(next)
    }

    /// Grid quadrature of the conserved quantities.
    pub fn conserved(&self, u: &SpectralField) -> Conserved {
        let dim = self.lattice.dim();
        let specs: Vec<&[Complex64]> = (0..dim + 2).map(|c| u.comp(c)).collect();
        let g = self.transform.many_to_grid(&specs);
        let np = self.transform.npoints();
        let (rho0, theta0, eps) = (self.consts.rho0, self.consts.theta0, self.eps);
        let w = self.lattice.volume() / np as f64;
        // sequential so that the sums are reproducible bit for bit
        let (mut mass, mut momentum, mut energy, mut scale) = (0.0, vec![0.0; dim], 0.0, 0.0);
        for p in 0..np {
            let rho = rho0 + eps * g[0][p];
            let th = theta0 + eps * g[dim + 1][p];
            let mut u2 = 0.0;
            for j in 0..dim {
                momentum[j] += rho * g[1 + j][p];
                u2 += g[1 + j][p] * g[1 + j][p];
            }
            mass += rho;
            energy += 0.5 * eps * eps * rho * u2 + rho * self.eos.eval(rho, th).e;
            scale += rho * u2.sqrt();
        }
        Conserved {
            mass: mass * w,
            momentum: momentum.into_iter().map(|m| m * w).collect(),
            energy: energy * w,
            momentum_scale: scale * w,
        }
    }
}
