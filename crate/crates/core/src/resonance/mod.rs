//! Resonance sets of the acoustic eigenvalues and the operators and
//! small-divisor estimates built on them.
//!
//! Two-wave resonance `λ^α_k = λ^γ_m` holds iff `|k| = |m|` and
//! `α sg(k) = γ sg(m)`. Three-wave resonance `λ^α_k + λ^β_l = λ^γ_m` with
//! `m = k + l` holds iff `α = β = γ` and `k`, `l` are parallel: a signed sum
//! `±|k| ± |l| = ±|k + l|` forces equality in the triangle inequality, and
//! on a common line `k = n₁p`, `l = n₂p` the integer identity
//! `α n₁ + β n₂ = γ (n₁ + n₂)` has nonzero solutions only for equal signs.

pub mod divisor;
pub mod operators;
pub mod prime;

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{collinear, sg, Exact, FrequencyLattice, ModeIndex};

/// Interaction order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Two,
    Three,
}

fn nonzero(n: &[i64]) -> Result<()> {
    if n.iter().all(|&c| c == 0) {
        Err(Error::ZeroVector)
    } else {
        Ok(())
    }
}

/// `λ^α_k = λ^γ_m`. Exact on rational-square lattices; otherwise decided
/// with the lattice's resonance tolerance on `||k| - |m||`.
pub fn is_resonant_2wave(lat: &FrequencyLattice, alpha: i32, k: &[i64], gamma: i32, m: &[i64]) -> Result<bool> {
    let sk = sg(k)?;
    let sm = sg(m)?;
    if alpha * sk != gamma * sm {
        return Ok(false);
    }
    if lat.is_exact() {
        return Ok(lat.norm_sq_exact(k)? == lat.norm_sq_exact(m)?);
    }
    match lat.resonance_tolerance() {
        Some(tol) => Ok((lat.norm_sq(k).sqrt() - lat.norm_sq(m).sqrt()).abs() <= tol),
        None => Err(Error::InexactLattice(
            "two-wave resonance on a lattice with irrational squared aspect ratios needs a resonance tolerance".into(),
        )),
    }
}

/// `λ^α_k + λ^β_l = λ^γ_m` for `m = k + l`. Decided exactly on any lattice.
#[allow(clippy::too_many_arguments)]
pub fn is_resonant_3wave(
    lat: &FrequencyLattice,
    alpha: i32,
    k: &[i64],
    beta: i32,
    l: &[i64],
    gamma: i32,
    m: &[i64],
) -> Result<bool> {
    nonzero(k)?;
    nonzero(l)?;
    nonzero(m)?;
    if k.len() != lat.dim() || l.len() != lat.dim() || m.len() != lat.dim() {
        return Err(Error::ShapeMismatch("index vectors must match the lattice dimension".into()));
    }
    if k.iter().zip(l).zip(m).any(|((a, b), c)| a + b != *c) {
        return Err(Error::InvalidArgument(format!("m = {m:?} is not k + l for k = {k:?}, l = {l:?}")));
    }
    if !(alpha == beta && beta == gamma) || !collinear(k, l) {
        return Ok(false);
    }
    debug_assert_eq!(lat.dot(k, l) > 0.0, sg(k)? == sg(l)?);
    Ok(true)
}

/// Resonant two-wave pair `(α, k) → (γ, m)` with `k ≠ m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwoWave {
    pub alpha: i32,
    pub k: ModeIndex,
    pub gamma: i32,
    pub m: ModeIndex,
}

/// Resonant three-wave triad `(α, k) + (α, l) → (α, k + l)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThreeWave {
    pub alpha: i32,
    pub k: ModeIndex,
    pub l: ModeIndex,
}

/// Group the nonzero modes of the ball `|k| <= radius` by exact `|k|²`.
pub fn shells(lat: &FrequencyLattice, radius: f64) -> Result<Vec<(Exact, Vec<ModeIndex>)>> {
    let mut map: HashMap<Exact, Vec<ModeIndex>> = HashMap::new();
    for n in lat.ball(radius) {
        map.entry(lat.norm_sq_exact(&n)?).or_default().push(n);
    }
    let mut v: Vec<(Exact, Vec<ModeIndex>)> = map.into_iter().collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(v)
}

/// All resonant two-wave pairs with `|k|, |m| <= radius`, `k ≠ m`.
pub fn enumerate_2wave(lat: &FrequencyLattice, radius: f64) -> Result<Vec<TwoWave>> {
    let mut out = Vec::new();
    for (_, shell) in shells(lat, radius)? {
        for k in &shell {
            for m in &shell {
                if k == m {
                    continue;
                }
                for alpha in [1, -1] {
                    let gamma = alpha * sg(k)? * sg(m)?;
                    out.push(TwoWave { alpha, k: k.clone(), gamma, m: m.clone() });
                }
            }
        }
    }
    Ok(out)
}

/// All resonant three-wave triads with `|k|, |l| <= radius` (and `k + l ≠ 0`),
/// generated line by line through the primitive directions.
pub fn enumerate_3wave(lat: &FrequencyLattice, radius: f64) -> Result<Vec<ThreeWave>> {
    let mut out = Vec::new();
    for p in prime::primitive_directions(lat, radius) {
        let pn = lat.norm_sq(&p).sqrt();
        let nmax = (radius / pn * (1.0 + 1e-12)).floor() as i64;
        for n1 in -nmax..=nmax {
            for n2 in -nmax..=nmax {
                if n1 == 0 || n2 == 0 || n1 + n2 == 0 {
                    continue;
                }
                let k: ModeIndex = p.iter().map(|c| c * n1).collect();
                let l: ModeIndex = p.iter().map(|c| c * n2).collect();
                for alpha in [1, -1] {
                    out.push(ThreeWave { alpha, k: k.clone(), l: l.clone() });
                }
            }
        }
    }
    Ok(out)
}
