//! Dyadic decomposition on the lattice and the Sobolev, Besov and hybrid
//! Besov norms built from it, including time-localised trajectory norms.
//!
//! The bump `φ(r) = ψ(r/2) - ψ(r)` uses a smooth step `ψ` equal to 1 on
//! `[0, 5/6]` and 0 on `[6/5, ∞)`, so `supp φ ⊂ [5/6, 12/5]` and the dilates
//! `φ(2^{-q} r)` telescope to 1. The weights are renormalised on each lattice
//! radius so the partition of unity holds to rounding.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::FrequencyLattice;

const PSI_LO: f64 = 5.0 / 6.0;
const PSI_HI: f64 = 6.0 / 5.0;
/// Inner radius of the annulus carrying `φ`.
pub const ANNULUS_LO: f64 = 5.0 / 6.0;
/// Outer radius of the annulus carrying `φ`.
pub const ANNULUS_HI: f64 = 12.0 / 5.0;

fn bump_tail(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step, 1 below `5/6` and 0 above `6/5`.
pub fn psi(r: f64) -> f64 {
    if r <= PSI_LO {
        1.0
    } else if r >= PSI_HI {
        0.0
    } else {
        let a = bump_tail(PSI_HI - r);
        let b = bump_tail(r - PSI_LO);
        a / (a + b)
    }
}

/// Annulus bump `φ(r) = ψ(r/2) - ψ(r)`.
pub fn phi(r: f64) -> f64 {
    psi(r / 2.0) - psi(r)
}

/// Dyadic blocks `q` whose bump can be nonzero at radius `r > 0`.
fn block_range(r: f64) -> std::ops::RangeInclusive<i32> {
    let lo = (r / ANNULUS_HI).log2().floor() as i32;
    let hi = (r / ANNULUS_LO).log2().ceil() as i32;
    lo..=hi
}

type Weights = SmallVec<[(i32, f64); 3]>;

/// Per-mode dyadic weights `φ_q(|k|)` for a lattice.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    lattice: Arc<FrequencyLattice>,
    weights: Vec<Weights>,
    q_min: i32,
    q_max: i32,
}

impl DyadicPartition {
    pub fn new(lattice: Arc<FrequencyLattice>) -> Self {
        let z = lattice.zero_index();
        let mut q_min = i32::MAX;
        let mut q_max = i32::MIN;
        let weights = (0..lattice.len())
            .map(|idx| {
                let mut w = Weights::new();
                if idx == z {
                    return w;
                }
                let r = lattice.k_norm_sq_of(idx).sqrt();
                let mut total = 0.0;
                for q in block_range(r) {
                    let v = phi(r * (-q as f64).exp2());
                    if v > 0.0 {
                        w.push((q, v));
                        total += v;
                    }
                }
                for e in w.iter_mut() {
                    e.1 /= total;
                    q_min = q_min.min(e.0);
                    q_max = q_max.max(e.0);
                }
                w
            })
            .collect();
        DyadicPartition { lattice, weights, q_min, q_max }
    }

    pub fn lattice(&self) -> &Arc<FrequencyLattice> {
        &self.lattice
    }

    /// Smallest and largest block index touching the lattice.
    pub fn q_range(&self) -> (i32, i32) {
        (self.q_min, self.q_max)
    }

    /// Weight `φ_q` at storage index `idx`.
    pub fn weight(&self, idx: usize, q: i32) -> f64 {
        self.weights[idx].iter().find(|e| e.0 == q).map_or(0.0, |e| e.1)
    }

    /// Blocks carrying mode `idx` with their weights.
    pub fn blocks_of(&self, idx: usize) -> &[(i32, f64)] {
        &self.weights[idx]
    }

    /// `Δ_q u`.
    pub fn block(&self, u: &SpectralField, q: i32) -> SpectralField {
        let mut out = u.clone();
        for c in 0..out.ncomp() {
            for (idx, z) in out.comp_mut(c).iter_mut().enumerate() {
                *z *= self.weight(idx, q);
            }
        }
        out
    }

    /// `‖Δ_q u‖_{L²}` for every block in the lattice range, as
    /// `(q_min, values)`; components are combined in the Euclidean norm.
    pub fn block_norms(&self, u: &SpectralField) -> (i32, Vec<f64>) {
        let nq = (self.q_max - self.q_min + 1).max(0) as usize;
        let mut acc = vec![0.0; nq];
        for idx in 0..self.lattice.len() {
            let w = &self.weights[idx];
            if w.is_empty() {
                continue;
            }
            let a: f64 = u.comps().iter().map(|c| c[idx].norm_sqr()).sum();
            for &(q, v) in w {
                acc[(q - self.q_min) as usize] += v * v * a;
            }
        }
        let vol = self.lattice.volume();
        (self.q_min, acc.into_iter().map(|s| (vol * s).sqrt()).collect())
    }

    /// Euclidean magnitude of the mean coefficient vector `|û₀|`.
    pub fn mean_magnitude(&self, u: &SpectralField) -> f64 {
        u.mean().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// How block norms are combined over `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summation {
    /// `ℓ²` sum: Sobolev `H^s`.
    Sobolev,
    /// `ℓ¹` sum: Besov `B^s_{2,1}`.
    Besov,
}

/// Norm selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub summation: Summation,
    pub s: f64,
    /// Hybrid regularity `t` above the threshold `q₀ = -log₂ η`.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub homogeneous: bool,
}

impl NormSpec {
    pub fn sobolev(s: f64) -> Self {
        NormSpec { summation: Summation::Sobolev, s, t: None, eta: None, homogeneous: false }
    }

    pub fn besov(s: f64) -> Self {
        NormSpec { summation: Summation::Besov, s, t: None, eta: None, homogeneous: false }
    }

    /// Hybrid Besov norm `B^{s,t}_η`.
    pub fn hybrid(s: f64, t: f64, eta: f64) -> Self {
        NormSpec { summation: Summation::Besov, s, t: Some(t), eta: Some(eta), homogeneous: false }
    }

    pub fn homogeneous(mut self) -> Self {
        self.homogeneous = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (self.t, self.eta) {
            (None, None) => Ok(()),
            (Some(_), Some(eta)) if eta > 0.0 && eta.is_finite() => Ok(()),
            (Some(_), Some(eta)) => Err(Error::InvalidArgument(format!("hybrid scale η = {eta} must be positive"))),
            _ => Err(Error::InvalidArgument("hybrid norms need both t and η".into())),
        }
    }

    /// Weight of block `q`.
    pub fn block_weight(&self, q: i32) -> f64 {
        let qf = q as f64;
        match (self.t, self.eta) {
            (Some(t), Some(eta)) if qf >= -eta.log2() => (qf * t).exp2() * eta.powf(t - self.s),
            _ => (qf * self.s).exp2(),
        }
    }
}

/// A norm value with a flag telling whether a nonzero mean was discarded
/// by a homogeneous norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub dropped_mean: bool,
}

fn combine(spec: &NormSpec, mean: f64, q0: i32, blocks: &[f64]) -> f64 {
    match spec.summation {
        Summation::Besov => {
            mean + blocks.iter().enumerate().map(|(i, b)| spec.block_weight(q0 + i as i32) * b).sum::<f64>()
        }
        Summation::Sobolev => (mean * mean
            + blocks
                .iter()
                .enumerate()
                .map(|(i, b)| (spec.block_weight(q0 + i as i32) * b).powi(2))
                .sum::<f64>())
        .sqrt(),
    }
}

/// Evaluate a norm of a (possibly multi-component) field.
pub fn norm(part: &DyadicPartition, u: &SpectralField, spec: &NormSpec) -> Result<NormValue> {
    spec.validate()?;
    let m = part.mean_magnitude(u);
    let (q0, b) = part.block_norms(u);
    let dropped = spec.homogeneous && m > 0.0;
    let mean = if spec.homogeneous { 0.0 } else { m };
    Ok(NormValue { value: combine(spec, mean, q0, &b), dropped_mean: dropped })
}

/// `u_M`: modes with `|k| <= m`.
pub fn truncate_low(u: &SpectralField, m: f64) -> SpectralField {
    u.low_pass(m)
}

/// `u^M`: modes with `|k| >= m`.
pub fn truncate_high(u: &SpectralField, m: f64) -> SpectralField {
    let lat = u.lattice().clone();
    let mut out = u.clone();
    for c in 0..out.ncomp() {
        for (idx, z) in out.comp_mut(c).iter_mut().enumerate() {
            if lat.k_norm_sq_of(idx) < m * m {
                *z = num_complex::Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

/// Time aggregation for trajectory norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeNorm {
    L1,
    L2,
    LInf,
    /// Time norm taken inside each dyadic block (`L̃^∞`).
    LocalizedInf,
    /// Time norm taken inside each dyadic block (`L̃²`).
    Localized2,
}

fn time_lp(times: &[f64], vals: &[f64], r: u8) -> f64 {
    match r {
        0 => vals.iter().fold(0.0, |m, v| m.max(*v)),
        1 | 2 => {
            let mut s = 0.0;
            for i in 1..times.len() {
                let h = times[i] - times[i - 1];
                s += 0.5 * h * (vals[i].powi(r as i32) + vals[i - 1].powi(r as i32));
            }
            if r == 2 {
                s.sqrt()
            } else {
                s
            }
        }
        _ => unreachable!(),
    }
}

/// Norm of a sampled trajectory over `[times[0], times[last]]`; integrals
/// use the trapezoidal rule on the samples.
pub fn trajectory_norm(
    part: &DyadicPartition,
    times: &[f64],
    fields: &[SpectralField],
    spec: &NormSpec,
    time: TimeNorm,
) -> Result<f64> {
    spec.validate()?;
    if times.len() != fields.len() || times.is_empty() {
        return Err(Error::InvalidArgument("need one field per sample time".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("sample times must be nondecreasing".into()));
    }
    match time {
        TimeNorm::L1 | TimeNorm::L2 | TimeNorm::LInf => {
            let vals: Result<Vec<f64>> = fields.iter().map(|f| norm(part, f, spec).map(|v| v.value)).collect();
            let r = match time {
                TimeNorm::L1 => 1,
                TimeNorm::L2 => 2,
                _ => 0,
            };
            Ok(time_lp(times, &vals?, r))
        }
        TimeNorm::LocalizedInf | TimeNorm::Localized2 => {
            let r = if time == TimeNorm::LocalizedInf { 0 } else { 2 };
            let per: Vec<(f64, i32, Vec<f64>)> = fields
                .iter()
                .map(|f| {
                    let (q0, b) = part.block_norms(f);
                    (if spec.homogeneous { 0.0 } else { part.mean_magnitude(f) }, q0, b)
                })
                .collect();
            let q0 = per[0].1;
            let nb = per[0].2.len();
            let means: Vec<f64> = per.iter().map(|p| p.0).collect();
            let blocks: Vec<f64> = (0..nb)
                .map(|j| {
                    let v: Vec<f64> = per.iter().map(|p| p.2[j]).collect();
                    time_lp(times, &v, r)
                })
                .collect();
            let mean = time_lp(times, &means, r);
            Ok(match spec.summation {
                Summation::Besov => combine(spec, mean, q0, &blocks),
                Summation::Sobolev => {
                    let rest = combine(spec, 0.0, q0, &blocks);
                    mean + rest
                }
            })
        }
    }
}

/// `max(‖u‖_{L̃^∞_T H^{s-1}}, ‖u‖_{L²_T H^s})`.
pub fn gs_norm(part: &DyadicPartition, times: &[f64], fields: &[SpectralField], s: f64) -> Result<f64> {
    let a = trajectory_norm(part, times, fields, &NormSpec::sobolev(s - 1.0), TimeNorm::LocalizedInf)?;
    let b = trajectory_norm(part, times, fields, &NormSpec::sobolev(s), TimeNorm::L2)?;
    Ok(a.max(b))
}
