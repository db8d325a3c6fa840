//! Projections of the quadratic and dissipative terms onto the acoustic
//! eigenbasis, in oscillating (fast time `τ = t/ε`) and resonance-averaged
//! form.
//!
//! Coefficients are computed from the physical-space form `Q`:
//! `⟨Q(H^α_k, H^β_l), H^γ_m⟩_H` for triads and
//! `2⟨Q(Û_l e^{il·x}, H^α_k), H^γ_m⟩_H` for the coupling through a kernel
//! field `U`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::acoustic::{apply_dissipation, decompose, eigen_amplitude, eigenmode, entropy_inner, Amplitude, OscCoeffs};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::interaction::{q_single, quadratic_form};
use crate::lattice::{sg, Exact, FrequencyLattice, ModeIndex};
use crate::thermo::StateConstants;
use crate::transform::SpectralTransform;

use super::prime;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn inner_amp(q: &[Complex64], h: &[Complex64], c: &StateConstants) -> Complex64 {
    let mut s = ZERO;
    for (j, (a, b)) in q.iter().zip(h).enumerate() {
        s += c.weight(j) * a * b.conj();
    }
    s * c.volume
}

/// `⟨Q(H^α_k, H^β_l), H^γ_m⟩_H`; zero when `m ≠ k + l`.
#[allow(clippy::too_many_arguments)]
pub fn triad_coeff(
    lat: &FrequencyLattice,
    c: &StateConstants,
    alpha: i32,
    k: &[i64],
    beta: i32,
    l: &[i64],
    gamma: i32,
    m: &[i64],
) -> Result<Complex64> {
    let hk = eigen_amplitude(alpha, k, lat, c)?;
    let hl = eigen_amplitude(beta, l, lat, c)?;
    let hm = eigen_amplitude(gamma, m, lat, c)?;
    if k.iter().zip(l).zip(m).any(|((a, b), s)| a + b != *s) {
        return Ok(ZERO);
    }
    let q = q_single(&hk, &lat.wave_vector(k), &hl, &lat.wave_vector(l), c);
    Ok(inner_amp(&q, &hm, c))
}

/// `2⟨Q(u_l e^{il·x}, H^α_k), H^γ_m⟩_H` for a state amplitude `u_l` at
/// `l = m - k`; zero otherwise.
#[allow(clippy::too_many_arguments)]
pub fn pair_coeff(
    lat: &FrequencyLattice,
    c: &StateConstants,
    u_l: &[Complex64],
    l: &[i64],
    alpha: i32,
    k: &[i64],
    gamma: i32,
    m: &[i64],
) -> Result<Complex64> {
    if u_l.len() != lat.dim() + 2 {
        return Err(Error::ShapeMismatch("state amplitude has the wrong length".into()));
    }
    let hk = eigen_amplitude(alpha, k, lat, c)?;
    let hm = eigen_amplitude(gamma, m, lat, c)?;
    if k.iter().zip(l).zip(m).any(|((a, b), s)| a + b != *s) {
        return Ok(ZERO);
    }
    let q = q_single(u_l, &lat.wave_vector(l), &hk, &lat.wave_vector(k), c);
    Ok(2.0 * inner_amp(&q, &hm, c))
}

/// `μ̄` from the inner product, `-⟨D H^γ_m, H^γ_m⟩_H / |m|²`.
pub fn mu_bar_derived(lat: &Arc<FrequencyLattice>, c: &StateConstants, m: &[i64]) -> Result<f64> {
    let h = eigenmode(1, m, lat, c)?;
    let dh = apply_dissipation(&h, c)?;
    Ok(-entropy_inner(&dh, &h, c)?.re / lat.norm_sq(m))
}

/// Resonant two-wave coupling `(α, k) → (γ, m)` through the kernel mode
/// `l = m - k`; `row · Û_l` is the coefficient.
#[derive(Debug, Clone)]
pub struct PairEntry {
    pub alpha: i32,
    pub k: usize,
    pub gamma: i32,
    pub m: usize,
    pub l: usize,
    pub row: Amplitude,
}

/// Resonant triad `(α, k) + (α, l) → (α, m)` with its coefficient.
#[derive(Debug, Clone, Copy)]
pub struct TriadEntry {
    pub alpha: i32,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub coeff: Complex64,
}

/// Precomputed resonant couplings on a lattice cube.
#[derive(Debug, Clone)]
pub struct ResonanceTables {
    lattice: Arc<FrequencyLattice>,
    pub pairs: Vec<PairEntry>,
    pub triads: Vec<TriadEntry>,
}

fn cube_shells(lat: &FrequencyLattice) -> Result<Vec<Vec<usize>>> {
    let z = lat.zero_index();
    if lat.is_exact() {
        let mut map: HashMap<Exact, Vec<usize>> = HashMap::new();
        for idx in 0..lat.len() {
            if idx != z {
                map.entry(lat.norm_sq_exact(&lat.mode(idx))?).or_default().push(idx);
            }
        }
        let mut v: Vec<(Exact, Vec<usize>)> = map.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        return Ok(v.into_iter().map(|e| e.1).collect());
    }
    let tol = lat.resonance_tolerance().ok_or_else(|| {
        Error::InexactLattice("resonance tables on an irrational lattice need a resonance tolerance".into())
    })?;
    let mut idx: Vec<usize> = (0..lat.len()).filter(|&i| i != z).collect();
    idx.sort_by(|a, b| lat.k_norm_sq_of(*a).total_cmp(&lat.k_norm_sq_of(*b)));
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        let r = lat.k_norm_sq_of(i).sqrt();
        match out.last_mut() {
            Some(sh) if (lat.k_norm_sq_of(sh[0]).sqrt() - r).abs() <= tol => sh.push(i),
            _ => out.push(vec![i]),
        }
    }
    Ok(out)
}

impl ResonanceTables {
    pub fn new(lat: Arc<FrequencyLattice>, c: &StateConstants) -> Result<Self> {
        let dim = lat.dim();
        let mut pairs = Vec::new();
        for shell in cube_shells(&lat)? {
            for &ki in &shell {
                let k = lat.mode(ki);
                for &mi in &shell {
                    let m = lat.mode(mi);
                    let l: ModeIndex = m.iter().zip(&k).map(|(a, b)| a - b).collect();
                    let Some(li) = lat.index(&l) else { continue };
                    for alpha in [1, -1] {
                        let gamma = alpha * sg(&k)? * sg(&m)?;
                        let mut row = Amplitude::new();
                        for j in 0..dim + 2 {
                            let mut e = vec![ZERO; dim + 2];
                            e[j] = Complex64::new(1.0, 0.0);
                            row.push(pair_coeff(&lat, c, &e, &l, alpha, &k, gamma, &m)?);
                        }
                        pairs.push(PairEntry { alpha, k: ki, gamma, m: mi, l: li, row });
                    }
                }
            }
        }
        let mut triads = Vec::new();
        let big = lat.cutoff() as f64 * lat.aspect().iter().fold(0.0f64, |a, b| a.max(1.0 / b)) * (dim as f64).sqrt();
        for p in prime::primitive_directions(&lat, big) {
            let e = prime::line_extent(&lat, &p);
            if e == 0 {
                continue;
            }
            let at = |n: i64| -> ModeIndex { p.iter().map(|x| x * n).collect() };
            for n1 in -e..=e {
                for n2 in -e..=e {
                    let n3 = n1 + n2;
                    if n1 == 0 || n2 == 0 || n3 == 0 || n3.abs() > e {
                        continue;
                    }
                    let (k, l, m) = (at(n1), at(n2), at(n3));
                    for alpha in [1, -1] {
                        triads.push(TriadEntry {
                            alpha,
                            k: lat.try_index(&k)?,
                            l: lat.try_index(&l)?,
                            m: lat.try_index(&m)?,
                            coeff: triad_coeff(&lat, c, alpha, &k, alpha, &l, alpha, &m)?,
                        });
                    }
                }
            }
        }
        Ok(ResonanceTables { lattice: lat, pairs, triads })
    }

    pub fn lattice(&self) -> &Arc<FrequencyLattice> {
        &self.lattice
    }

    /// Averaged two-wave operator `Q̄₂(U, B)` for a state field `U`.
    pub fn q2_avg(&self, u: &SpectralField, b: &OscCoeffs) -> OscCoeffs {
        let mut out = OscCoeffs::zeros(self.lattice.clone());
        for e in &self.pairs {
            let bk = b.at(e.alpha, e.k);
            if bk == ZERO {
                continue;
            }
            let mut s = ZERO;
            for (j, r) in e.row.iter().enumerate() {
                s += r * u.comp(j)[e.l];
            }
            *out.at_mut(e.gamma, e.m) += s * bk;
        }
        out
    }

    /// Averaged three-wave operator `Q̄₃(A, B)`.
    pub fn q3_avg(&self, a: &OscCoeffs, b: &OscCoeffs) -> OscCoeffs {
        let mut out = OscCoeffs::zeros(self.lattice.clone());
        for t in &self.triads {
            let v = a.at(t.alpha, t.k) * b.at(t.alpha, t.l);
            if v != ZERO {
                *out.at_mut(t.alpha, t.m) += t.coeff * v;
            }
        }
        out
    }
}

/// Averaged dissipation `D̄ A = -μ̄ |m|² A`.
pub fn dbar(a: &OscCoeffs, mu_bar: f64) -> OscCoeffs {
    let lat = a.lattice().clone();
    let mut out = a.clone();
    for alpha in [1, -1] {
        for (idx, z) in out.branch_mut(alpha).iter_mut().enumerate() {
            *z *= -mu_bar * lat.k_norm_sq_of(idx);
        }
    }
    out
}

/// Oscillating two-wave operator
/// `Q₂(U, B; τ) = e^{τA} P^⊥ 2Q(U, e^{-τA} B)` in coefficients.
pub fn q2_eps(
    u: &SpectralField,
    b: &OscCoeffs,
    tau: f64,
    c: &StateConstants,
    t: &SpectralTransform,
) -> Result<OscCoeffs> {
    let bf = b.filter(-tau, c).to_field(c);
    let mut q = quadratic_form(u, &bf, c, t)?;
    q.scale(2.0);
    Ok(decompose(&q, c)?.1.filter(tau, c))
}

/// Oscillating three-wave operator
/// `Q₃(A, B; τ) = e^{τA} P^⊥ Q(e^{-τA} A, e^{-τA} B)` in coefficients.
pub fn q3_eps(
    a: &OscCoeffs,
    b: &OscCoeffs,
    tau: f64,
    c: &StateConstants,
    t: &SpectralTransform,
) -> Result<OscCoeffs> {
    let af = a.filter(-tau, c).to_field(c);
    let bf = b.filter(-tau, c).to_field(c);
    let q = quadratic_form(&af, &bf, c, t)?;
    Ok(decompose(&q, c)?.1.filter(tau, c))
}

/// Oscillating dissipation `D(A; τ) = e^{τA} P^⊥ D e^{-τA} A`.
pub fn d_eps(a: &OscCoeffs, tau: f64, c: &StateConstants) -> Result<OscCoeffs> {
    let af = a.filter(-tau, c).to_field(c);
    Ok(decompose(&apply_dissipation(&af, c)?, c)?.1.filter(tau, c))
}
