//! Entropy inner product, the acoustic operator and its spectral resolution.
//!
//! The acoustic operator is skew-adjoint for the weighted inner product
//! `⟨V₁, V₂⟩_H = |T| Σ_k V₁(k)ᵀ W conj(V₂(k))`; its eigenmodes
//! `H^α_k = c_N (ρ°, c° α sg(k) k/|k|, θ° p_θ/(ρ° e_θ)) e^{ik·x}` have
//! eigenvalues `λ^α_k = i c° α sg(k) |k|` and form an orthonormal basis of
//! its range. The kernel is parametrised by a scalar `ϑ` and a
//! divergence-free velocity `ω`.

use std::sync::Arc;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::{sg, FrequencyLattice};
use crate::thermo::StateConstants;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub type Amplitude = SmallVec<[Complex64; 6]>;

/// Entropy-weighted inner product of two state fields.
pub fn entropy_inner(v1: &SpectralField, v2: &SpectralField, k: &StateConstants) -> Result<Complex64> {
    let w: Vec<f64> = (0..v1.ncomp()).map(|c| k.weight(c)).collect();
    entropy_inner_weighted(v1, v2, &w)
}

/// Inner product with explicit diagonal weights (used to probe how the
/// skew-adjointness depends on the weight).
pub fn entropy_inner_weighted(v1: &SpectralField, v2: &SpectralField, w: &[f64]) -> Result<Complex64> {
    if v1.ncomp() != v2.ncomp() || v1.ncomp() != w.len() {
        return Err(Error::ShapeMismatch("inner product of incompatible fields".into()));
    }
    let mut s = ZERO;
    for c in 0..v1.ncomp() {
        let mut sc = ZERO;
        for (a, b) in v1.comp(c).iter().zip(v2.comp(c)) {
            sc += a * b.conj();
        }
        s += w[c] * sc;
    }
    Ok(s * v1.lattice().volume())
}

/// Entropy norm.
pub fn entropy_norm(v: &SpectralField, k: &StateConstants) -> f64 {
    entropy_inner(v, v, k).map(|z| z.re.max(0.0).sqrt()).unwrap_or(f64::NAN)
}

/// Eigenvalue `λ^α_k = i c° α sg(k) |k|`.
pub fn eigenvalue(alpha: i32, n: &[i64], lattice: &FrequencyLattice, k: &StateConstants) -> Result<Complex64> {
    let s = sg(n)?;
    Ok(I * (k.c0 * (alpha * s) as f64 * lattice.norm_sq(n).sqrt()))
}

/// Amplitude vector of `H^α_k` for an arbitrary nonzero index `n`.
pub fn eigen_amplitude(alpha: i32, n: &[i64], lattice: &FrequencyLattice, k: &StateConstants) -> Result<Amplitude> {
    let s = sg(n)?;
    let kv = lattice.wave_vector(n);
    let norm = lattice.norm_sq(n).sqrt();
    Ok(amplitude_from(alpha * s, &kv, norm, k))
}

fn amplitude_from(sign: i32, kv: &[f64], norm: f64, k: &StateConstants) -> Amplitude {
    let mut a = Amplitude::new();
    a.push(Complex64::new(k.c_n * k.rho0, 0.0));
    for &ki in kv {
        a.push(Complex64::new(k.c_n * k.c0 * sign as f64 * ki / norm, 0.0));
    }
    a.push(Complex64::new(k.c_n * k.g0, 0.0));
    a
}

/// The eigenmode `H^α_k` as a field.
pub fn eigenmode(
    alpha: i32,
    n: &[i64],
    lattice: &Arc<FrequencyLattice>,
    k: &StateConstants,
) -> Result<SpectralField> {
    let a = eigen_amplitude(alpha, n, lattice, k)?;
    SpectralField::single_mode(lattice.clone(), n, &a)
}

/// Acoustic operator
/// `A(ρ, u, θ) = (ρ° div u, (p_ρ/ρ°)∇ρ + (p_θ/ρ°)∇θ, g° div u)`.
pub fn apply_acoustic(v: &SpectralField, k: &StateConstants) -> Result<SpectralField> {
    if !v.is_state() {
        return Err(Error::ShapeMismatch("acoustic operator acts on state fields".into()));
    }
    let lat = v.lattice();
    let dim = lat.dim();
    let (pr, pt) = (k.p_r() / k.rho0, k.p_t() / k.rho0);
    let mut out = SpectralField::zeros_state(lat.clone());
    for idx in 0..lat.len() {
        let kv = lat.k_of(idx);
        let mut div = ZERO;
        for j in 0..dim {
            div += kv[j] * v.comp(1 + j)[idx];
        }
        let div = I * div;
        out.comp_mut(0)[idx] = k.rho0 * div;
        out.comp_mut(dim + 1)[idx] = k.g0 * div;
        let scal = pr * v.comp(0)[idx] + pt * v.comp(dim + 1)[idx];
        for j in 0..dim {
            out.comp_mut(1 + j)[idx] = I * kv[j] * scal;
        }
    }
    Ok(out)
}

/// Constant-coefficient dissipation
/// `D(ρ, u, θ) = (0, (μ/ρ°)Δu + (((N-2)/N)μ + λ)/ρ° ∇div u, κ/(ρ° e_θ) Δθ)`.
pub fn apply_dissipation(v: &SpectralField, k: &StateConstants) -> Result<SpectralField> {
    if !v.is_state() {
        return Err(Error::ShapeMismatch("dissipation acts on state fields".into()));
    }
    let lat = v.lattice();
    let dim = lat.dim();
    let a = k.mu / k.rho0;
    let b = (((dim as f64 - 2.0) / dim as f64) * k.mu + k.lambda) / k.rho0;
    let kt = k.kappa / (k.rho0 * k.e_t());
    let mut out = SpectralField::zeros_state(lat.clone());
    for idx in 0..lat.len() {
        let kv = lat.k_of(idx);
        let k2 = lat.k_norm_sq_of(idx);
        let mut kd = ZERO;
        for j in 0..dim {
            kd += kv[j] * v.comp(1 + j)[idx];
        }
        for j in 0..dim {
            out.comp_mut(1 + j)[idx] = -a * k2 * v.comp(1 + j)[idx] - b * kv[j] * kd;
        }
        out.comp_mut(dim + 1)[idx] = -kt * k2 * v.comp(dim + 1)[idx];
    }
    Ok(out)
}

/// Coefficients `V^α_k` of the oscillating part, one dense array per branch.
#[derive(Debug, Clone)]
pub struct OscCoeffs {
    lattice: Arc<FrequencyLattice>,
    branch: [Vec<Complex64>; 2],
}

fn bi(alpha: i32) -> usize {
    if alpha > 0 {
        0
    } else {
        1
    }
}

impl OscCoeffs {
    pub fn zeros(lattice: Arc<FrequencyLattice>) -> Self {
        let len = lattice.len();
        OscCoeffs { lattice, branch: [vec![ZERO; len], vec![ZERO; len]] }
    }

    pub fn lattice(&self) -> &Arc<FrequencyLattice> {
        &self.lattice
    }

    /// Coefficient at storage index `idx`.
    pub fn at(&self, alpha: i32, idx: usize) -> Complex64 {
        self.branch[bi(alpha)][idx]
    }

    pub fn at_mut(&mut self, alpha: i32, idx: usize) -> &mut Complex64 {
        &mut self.branch[bi(alpha)][idx]
    }

    pub fn get(&self, alpha: i32, n: &[i64]) -> Complex64 {
        self.lattice.index(n).map_or(ZERO, |i| self.at(alpha, i))
    }

    pub fn set(&mut self, alpha: i32, n: &[i64], v: Complex64) -> Result<()> {
        if n.iter().all(|&c| c == 0) {
            return Err(Error::ZeroVector);
        }
        let i = self.lattice.try_index(n)?;
        self.branch[bi(alpha)][i] = v;
        Ok(())
    }

    pub fn branch(&self, alpha: i32) -> &[Complex64] {
        &self.branch[bi(alpha)]
    }

    pub fn branch_mut(&mut self, alpha: i32) -> &mut [Complex64] {
        &mut self.branch[bi(alpha)]
    }

    /// `Σ |V^α_k|²`, the squared entropy norm of `Σ V^α_k H^α_k`.
    pub fn norm_sq(&self) -> f64 {
        self.branch.iter().flat_map(|b| b.iter()).map(|z| z.norm_sqr()).sum()
    }

    /// `Σ |k|² |V^α_k|²`.
    pub fn gradient_norm_sq(&self) -> f64 {
        let lat = &self.lattice;
        self.branch
            .iter()
            .map(|b| b.iter().enumerate().map(|(i, z)| lat.k_norm_sq_of(i) * z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// `Σ_{α,k} (1 + |k|²)^s A^α_k conj(B^α_k)`; `s = 0` is the `H` inner product.
    pub fn inner_sobolev(&self, other: &OscCoeffs, s: f64) -> Complex64 {
        let lat = &self.lattice;
        let mut acc = ZERO;
        for (a, b) in self.branch.iter().zip(&other.branch) {
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                acc += (1.0 + lat.k_norm_sq_of(i)).powf(s) * x * y.conj();
            }
        }
        acc
    }

    pub fn axpy(&mut self, a: Complex64, other: &OscCoeffs) {
        for (x, y) in self.branch.iter_mut().zip(&other.branch) {
            for (xi, yi) in x.iter_mut().zip(y) {
                *xi += a * yi;
            }
        }
    }

    pub fn sub(&self, other: &OscCoeffs) -> OscCoeffs {
        let mut r = self.clone();
        r.axpy(Complex64::new(-1.0, 0.0), other);
        r
    }

    pub fn scale(&mut self, a: f64) {
        for b in &mut self.branch {
            for z in b.iter_mut() {
                *z *= a;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.branch.iter().flat_map(|b| b.iter()).fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest violation of `V^α_{-k} = conj(V^α_k)`, the condition for
    /// `Σ V^α_k H^α_k` to be real.
    pub fn reality_defect(&self) -> f64 {
        let len = self.lattice.len();
        let mut d: f64 = 0.0;
        for b in &self.branch {
            for i in 0..len {
                d = d.max((b[len - 1 - i] - b[i].conj()).norm());
            }
        }
        d
    }

    /// Multiply every coefficient by `e^{τ λ^α_k}`.
    pub fn filter(&self, tau: f64, k: &StateConstants) -> OscCoeffs {
        let lat = &self.lattice;
        let mut out = self.clone();
        for alpha in [1, -1] {
            let b = out.branch_mut(alpha);
            for (idx, z) in b.iter_mut().enumerate() {
                if *z == ZERO {
                    continue;
                }
                let n = lat.mode(idx);
                let s = sg(&n).expect("zero mode carries no coefficient");
                let ph = tau * k.c0 * (alpha * s) as f64 * lat.k_norm_sq_of(idx).sqrt();
                *z *= Complex64::from_polar(1.0, ph);
            }
        }
        out
    }

    /// The field `Σ_{α,k} V^α_k H^α_k`.
    pub fn to_field(&self, k: &StateConstants) -> SpectralField {
        let lat = &self.lattice;
        let dim = lat.dim();
        let mut f = SpectralField::zeros_state(lat.clone());
        let z = lat.zero_index();
        for idx in 0..lat.len() {
            if idx == z {
                continue;
            }
            let kv = lat.k_of(idx);
            let norm = lat.k_norm_sq_of(idx).sqrt();
            let s = sg(&lat.mode(idx)).expect("nonzero");
            let vp = self.branch[0][idx];
            let vm = self.branch[1][idx];
            let sum = vp + vm;
            let diff = (vp - vm) * s as f64;
            f.comp_mut(0)[idx] = k.c_n * k.rho0 * sum;
            for j in 0..dim {
                f.comp_mut(1 + j)[idx] = k.c_n * k.c0 * kv[j] / norm * diff;
            }
            f.comp_mut(dim + 1)[idx] = k.c_n * k.g0 * sum;
        }
        f
    }
}

/// Kernel (incompressible) part of a state: `ϑ`, divergence-free `ω`, and
/// the mean state vector.
#[derive(Debug, Clone)]
pub struct KernelPart {
    pub theta: SpectralField,
    pub omega: SpectralField,
    pub mean: Vec<Complex64>,
}

impl KernelPart {
    pub fn zeros(lattice: Arc<FrequencyLattice>) -> Self {
        let dim = lattice.dim();
        KernelPart {
            theta: SpectralField::zeros(lattice.clone(), 1),
            omega: SpectralField::zeros(lattice, dim),
            mean: vec![ZERO; dim + 2],
        }
    }

    /// `PV = (-(p_θ/p_ρ) ϑ, ω, ϑ)` without the mean.
    pub fn embed(&self, k: &StateConstants) -> SpectralField {
        let lat = self.theta.lattice();
        let dim = lat.dim();
        let mut f = SpectralField::zeros_state(lat.clone());
        let r = -k.p_t() / k.p_r();
        for idx in 0..lat.len() {
            let t = self.theta.comp(0)[idx];
            f.comp_mut(0)[idx] = r * t;
            f.comp_mut(dim + 1)[idx] = t;
            for j in 0..dim {
                f.comp_mut(1 + j)[idx] = self.omega.comp(j)[idx];
            }
        }
        f
    }

    /// Mean state `P₀V` as a field.
    pub fn mean_field(&self) -> SpectralField {
        let lat = self.theta.lattice();
        let mut f = SpectralField::zeros_state(lat.clone());
        let z = lat.zero_index();
        for (c, m) in self.mean.iter().enumerate() {
            f.comp_mut(c)[z] = *m;
        }
        f
    }
}

/// Split a state field into its kernel part, mean and oscillating coefficients.
pub fn decompose(v: &SpectralField, k: &StateConstants) -> Result<(KernelPart, OscCoeffs)> {
    if !v.is_state() {
        return Err(Error::ShapeMismatch("decomposition acts on state fields".into()));
    }
    let lat = v.lattice().clone();
    let dim = lat.dim();
    let z = lat.zero_index();
    let mut kp = KernelPart::zeros(lat.clone());
    kp.mean = v.mean();
    let mut osc = OscCoeffs::zeros(lat.clone());
    let c2 = k.c0 * k.c0;
    let a_t = k.p_r() / c2;
    let a_r = k.theta0 * k.p_t() * k.p_r() / (k.rho0 * k.rho0 * k.e_t() * c2);
    let vol = lat.volume();
    for idx in 0..lat.len() {
        if idx == z {
            continue;
        }
        let rho = v.comp(0)[idx];
        let th = v.comp(dim + 1)[idx];
        kp.theta.comp_mut(0)[idx] = a_t * th - a_r * rho;
        let kv = lat.k_of(idx);
        let k2 = lat.k_norm_sq_of(idx);
        let norm = k2.sqrt();
        let mut kd = ZERO;
        for j in 0..dim {
            kd += kv[j] * v.comp(1 + j)[idx];
        }
        for j in 0..dim {
            kp.omega.comp_mut(j)[idx] = v.comp(1 + j)[idx] - kv[j] * kd / k2;
        }
        let s = sg(&lat.mode(idx)).expect("nonzero") as f64;
        let scal = k.w_rho * k.c_n * k.rho0 * rho + k.w_theta * k.c_n * k.g0 * th;
        let vel = k.w_u * k.c_n * k.c0 * s * kd / norm;
        osc.branch[0][idx] = vol * (scal + vel);
        osc.branch[1][idx] = vol * (scal - vel);
    }
    Ok((kp, osc))
}

/// `PV`, the kernel part without the mean.
pub fn project_kernel(v: &SpectralField, k: &StateConstants) -> Result<SpectralField> {
    Ok(decompose(v, k)?.0.embed(k))
}

/// `P^⊥V`, the oscillating part.
pub fn project_osc(v: &SpectralField, k: &StateConstants) -> Result<SpectralField> {
    Ok(decompose(v, k)?.1.to_field(k))
}

/// `P₀V`, the mean.
pub fn project_mean(v: &SpectralField, k: &StateConstants) -> Result<SpectralField> {
    Ok(decompose(v, k)?.0.mean_field())
}

/// `P^⊥V` in the closed form `(π/c², v, θ p_θ π/(c² ρ² e_θ))` with
/// `π = p_ρ ρ + p_θ θ` and `v = (I - Π) u`, independent of the eigenbasis.
pub fn project_osc_closed_form(v: &SpectralField, k: &StateConstants) -> Result<SpectralField> {
    if !v.is_state() {
        return Err(Error::ShapeMismatch("projection acts on state fields".into()));
    }
    let lat = v.lattice();
    let dim = lat.dim();
    let c2 = k.c0 * k.c0;
    let mut out = SpectralField::zeros_state(lat.clone());
    let z = lat.zero_index();
    for idx in 0..lat.len() {
        if idx == z {
            continue;
        }
        let pi = k.p_r() * v.comp(0)[idx] + k.p_t() * v.comp(dim + 1)[idx];
        out.comp_mut(0)[idx] = pi / c2;
        out.comp_mut(dim + 1)[idx] = k.theta0 * k.p_t() * pi / (c2 * k.rho0 * k.rho0 * k.e_t());
        let kv = lat.k_of(idx);
        let k2 = lat.k_norm_sq_of(idx);
        let mut kd = ZERO;
        for j in 0..dim {
            kd += kv[j] * v.comp(1 + j)[idx];
        }
        for j in 0..dim {
            out.comp_mut(1 + j)[idx] = kv[j] * kd / k2;
        }
    }
    Ok(out)
}
