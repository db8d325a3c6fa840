//! The quadratic form `Q` of the fluctuation system,
//!
//! `Q(U, U) = (div(ρu), u·∇u + C₁ρ∇ρ + C₂θ∇θ + C₃θ∇ρ + C₄ρ∇θ,
//!             u·∇θ + (C₅θ + C₆ρ) div u)`,
//!
//! and its polarisation `Q(U₁, U₂) = ½(B(U₁, U₂) + B(U₂, U₁))`, where `B`
//! puts the undifferentiated factor on `U₁` and the derivative on `U₂`.
//! Two evaluation routes are provided: dealiased pseudo-spectral products on
//! whole fields, and the exact amplitude of `B` on two single Fourier modes.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::acoustic::Amplitude;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::thermo::StateConstants;
use crate::transform::SpectralTransform;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Amplitude at `k + l` of `B(a e^{ik·x}, b e^{il·x})`.
pub fn bilinear_single(a: &[Complex64], k: &[f64], b: &[Complex64], l: &[f64], c: &StateConstants) -> Amplitude {
    let dim = k.len();
    let (ar, at) = (a[0], a[dim + 1]);
    let (br, bt) = (b[0], b[dim + 1]);
    let mut a_dot_l = Complex64::new(0.0, 0.0);
    let mut l_dot_bu = Complex64::new(0.0, 0.0);
    let mut m_dot_bu = Complex64::new(0.0, 0.0);
    for j in 0..dim {
        a_dot_l += a[1 + j] * l[j];
        l_dot_bu += l[j] * b[1 + j];
        m_dot_bu += (k[j] + l[j]) * b[1 + j];
    }
    let mut out = Amplitude::new();
    out.push(I * ar * m_dot_bu);
    let scal = c.c(1) * ar * br + c.c(2) * at * bt + c.c(3) * at * br + c.c(4) * ar * bt;
    for j in 0..dim {
        out.push(I * a_dot_l * b[1 + j] + I * l[j] * scal);
    }
    out.push(I * a_dot_l * bt + (c.c(5) * at + c.c(6) * ar) * I * l_dot_bu);
    out
}

/// Amplitude at `k + l` of the polarised `Q(a e^{ik·x}, b e^{il·x})`.
pub fn q_single(a: &[Complex64], k: &[f64], b: &[Complex64], l: &[f64], c: &StateConstants) -> Amplitude {
    let x = bilinear_single(a, k, b, l, c);
    let y = bilinear_single(b, l, a, k, c);
    x.iter().zip(&y).map(|(p, q)| 0.5 * (p + q)).collect()
}

fn grid(t: &SpectralTransform, f: &[Complex64]) -> Vec<Complex64> {
    t.coeffs_to_grid_complex(f)
}

/// `B(U₁, U₂)` by dealiased pseudo-spectral products.
pub fn bilinear_field(
    u1: &SpectralField,
    u2: &SpectralField,
    c: &StateConstants,
    t: &SpectralTransform,
) -> Result<SpectralField> {
    if !u1.is_state() || !u2.is_state() {
        return Err(Error::ShapeMismatch("quadratic form acts on state fields".into()));
    }
    let lat = u1.lattice().clone();
    let dim = lat.dim();
    let nc = dim + 2;
    let g1: Vec<Vec<Complex64>> = (0..nc).into_par_iter().map(|j| grid(t, u1.comp(j))).collect();
    // derivative spectra of U2: ∂_j of every component, plus div u2
    let mut specs: Vec<Vec<Complex64>> = Vec::with_capacity(nc * dim + dim);
    for comp in 0..nc {
        let g = u2.gradient(comp);
        for j in 0..dim {
            specs.push(g.comp(j).to_vec());
        }
    }
    for j in 0..dim {
        specs.push(u2.comp(1 + j).to_vec());
    }
    let g2: Vec<Vec<Complex64>> = specs.par_iter().map(|s| grid(t, s)).collect();
    let d = |comp: usize, j: usize| &g2[comp * dim + j];
    let u2g = |j: usize| &g2[nc * dim + j];
    let np = t.npoints();
    let (c1, c2, c3, c4, c5, c6) = (c.c(1), c.c(2), c.c(3), c.c(4), c.c(5), c.c(6));

    // ρ₁ u₂, whose divergence is the density entry
    let flux: Vec<Vec<Complex64>> =
        (0..dim).map(|j| (0..np).map(|p| g1[0][p] * u2g(j)[p]).collect()).collect();
    let mut outs: Vec<Vec<Complex64>> = Vec::with_capacity(dim + 1);
    for i in 0..dim {
        let v: Vec<Complex64> = (0..np)
            .map(|p| {
                let mut adv = Complex64::new(0.0, 0.0);
                for j in 0..dim {
                    adv += g1[1 + j][p] * d(1 + i, j)[p];
                }
                let (r1, t1) = (g1[0][p], g1[dim + 1][p]);
                adv + c1 * r1 * d(0, i)[p]
                    + c2 * t1 * d(dim + 1, i)[p]
                    + c3 * t1 * d(0, i)[p]
                    + c4 * r1 * d(dim + 1, i)[p]
            })
            .collect();
        outs.push(v);
    }
    let temp: Vec<Complex64> = (0..np)
        .map(|p| {
            let mut adv = Complex64::new(0.0, 0.0);
            let mut div = Complex64::new(0.0, 0.0);
            for j in 0..dim {
                adv += g1[1 + j][p] * d(dim + 1, j)[p];
                div += d(1 + j, j)[p];
            }
            adv + (c5 * g1[dim + 1][p] + c6 * g1[0][p]) * div
        })
        .collect();
    outs.push(temp);
    let mut back: Vec<Vec<Complex64>> = flux.par_iter().chain(outs.par_iter()).map(|g| t.grid_to_coeffs_complex(g)).collect();
    let flux_spec = SpectralField::from_comps(lat.clone(), back.drain(..dim).collect())?;
    let div = flux_spec.divergence(0);
    let mut comps = Vec::with_capacity(nc);
    comps.push(div.comp(0).to_vec());
    comps.extend(back);
    SpectralField::from_comps(lat, comps)
}

/// Polarised `Q(U₁, U₂)` by dealiased pseudo-spectral products.
pub fn quadratic_form(
    u1: &SpectralField,
    u2: &SpectralField,
    c: &StateConstants,
    t: &SpectralTransform,
) -> Result<SpectralField> {
    let mut a = bilinear_field(u1, u2, c, t)?;
    let b = bilinear_field(u2, u1, c, t)?;
    a.axpy(Complex64::new(1.0, 0.0), &b)?;
    a.scale(0.5);
    Ok(a)
}
