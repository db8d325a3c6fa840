//! Small-divisor constants of the truncated resonance problem.
//!
//! For the ball `|k| <= M`:
//! `C¹_M = max 1/|α sg(k)|k| - γ sg(m)|m||` over non-resonant pairs of
//! oscillating modes, and `C²_M = max 1/|α sg(k)|k| + β sg(l)|l| - γ sg(m)|m||`
//! over non-resonant triads with `m = k + l`, `|k|, |l| <= M`.
//!
//! Divisors are evaluated without cancellation: `|k| - |m|` is formed as
//! `(|k|² - |m|²)/(|k| + |m|)` with an exact numerator, and the triangle
//! excesses `|x| + |y| - |x + y| = 2(|x||y| - x·y)/(|x| + |y| + |x + y|)` use
//! `|x||y| - x·y = |x × y|²/(|x||y| + x·y)` when `x·y > 0`.

use rayon::prelude::*;
use serde::Serialize;

use super::{shells, Order};
use crate::error::{Error, Result};
use crate::lattice::{collinear, sg, FrequencyLattice, ModeIndex};

/// Extremal configuration of a divisor scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub alpha: i32,
    pub k: Vec<i64>,
    pub beta: Option<i32>,
    pub l: Option<Vec<i64>>,
    pub gamma: i32,
    pub m: Vec<i64>,
    pub divisor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisorReport {
    pub order: Order,
    pub radius: f64,
    pub aspect: Vec<f64>,
    /// `C¹_M` or `C²_M`.
    pub value: f64,
    pub witness: Option<Witness>,
    /// Counts of resonant and non-resonant sign/mode tuples.
    pub resonant: u64,
    pub nonresonant: u64,
    /// Two-wave, integer `|k|²` lattices: `1/div <= |k| + |m|` on every
    /// non-resonant pair.
    pub integer_gap_ok: Option<bool>,
    /// Three-wave: largest relative deviation of `1/(|k| + |l| - |m|)` from
    /// `(|k| + |l| + |m|)/(4|k||l|)` on opposite collinear pairs.
    pub collinear_identity_defect: Option<f64>,
    /// Three-wave: non-collinear pairs whose excess falls below the bound
    /// implied by `d_min` of `k`.
    pub dmin_branch_violations: Option<u64>,
}

/// Lower bound on the distance from the line `t k` to lattice points off it,
/// `(1/|k|) sqrt(Σ_{i<j} (gcd(n_i, n_j)/(a_i a_j))²)`.
pub fn d_min(k: &[i64], lat: &FrequencyLattice) -> Result<f64> {
    use num_integer::Integer;
    sg(k)?;
    let w = lat.inv_aspect_sq();
    let mut s = 0.0;
    for i in 0..k.len() {
        for j in i + 1..k.len() {
            let g = k[i].gcd(&k[j]) as f64;
            s += g * g * w[i] * w[j];
        }
    }
    Ok(s.sqrt() / lat.norm_sq(k).sqrt())
}

fn is_integer_lattice(lat: &FrequencyLattice) -> bool {
    lat.inv_aspect_sq_exact().map_or(false, |w| w.iter().all(|r| r.is_integer()))
}

/// Scan `C¹_M` through the shell structure of the ball.
pub fn scan_two_wave(lat: &FrequencyLattice, radius: f64) -> Result<DivisorReport> {
    let sh = shells(lat, radius)?;
    let total: u64 = sh.iter().map(|s| s.1.len() as u64).sum();
    let resonant: u64 = sh.iter().map(|s| 2 * (s.1.len() as u64) * (s.1.len() as u64 - 1)).sum();
    let all = 4 * total * total.saturating_sub(1);
    let mut report = DivisorReport {
        order: Order::Two,
        radius,
        aspect: lat.aspect().to_vec(),
        value: 0.0,
        witness: None,
        resonant,
        nonresonant: all - resonant,
        integer_gap_ok: None,
        collinear_identity_defect: None,
        dmin_branch_violations: None,
    };
    if sh.is_empty() {
        return Ok(report);
    }
    let radii: Vec<f64> = sh.iter().map(|s| (*s.0.numer() as f64 / *s.0.denom() as f64).sqrt()).collect();
    let gap = |i: usize, j: usize| -> f64 {
        let d = sh[j].0 - sh[i].0;
        (*d.numer() as f64 / *d.denom() as f64).abs() / (radii[i] + radii[j])
    };
    // same shell, opposite orientation products: divisor 2|k|
    let k0 = &sh[0].1[0];
    let m0 = sh[0].1.iter().find(|m| *m != k0).unwrap_or(k0);
    report.value = 1.0 / (2.0 * radii[0]);
    report.witness = Some(Witness {
        alpha: 1,
        k: k0.to_vec(),
        beta: None,
        l: None,
        gamma: -sg(k0)? * sg(m0)?,
        m: m0.to_vec(),
        divisor: 2.0 * radii[0],
    });
    for i in 0..sh.len().saturating_sub(1) {
        let d = gap(i, i + 1);
        if 1.0 / d > report.value {
            let (k, m) = (&sh[i].1[0], &sh[i + 1].1[0]);
            report.value = 1.0 / d;
            report.witness = Some(Witness {
                alpha: 1,
                k: k.to_vec(),
                beta: None,
                l: None,
                gamma: sg(k)? * sg(m)?,
                m: m.to_vec(),
                divisor: d,
            });
        }
    }
    if is_integer_lattice(lat) {
        let mut ok = radii.iter().all(|r| 1.0 / (2.0 * r) <= 2.0 * r);
        for i in 0..sh.len() {
            for j in i + 1..sh.len() {
                ok &= 1.0 / gap(i, j) <= (radii[i] + radii[j]) * (1.0 + 1e-12);
            }
        }
        report.integer_gap_ok = Some(ok);
    }
    Ok(report)
}

/// `|x||y| - s·x·y` for `s = ±1`, evaluated without cancellation.
fn excess_core(nx: f64, ny: f64, dot: f64, cross2: f64, s: f64) -> f64 {
    let d = s * dot;
    if d > 0.0 {
        cross2 / (nx * ny + d)
    } else {
        nx * ny - d
    }
}

struct PairScan {
    inv: f64,
    witness: (i32, i32, i32, f64),
    resonant: u64,
    collinear_defect: f64,
    dmin_violation: bool,
}

fn scan_pair(lat: &FrequencyLattice, k: &[i64], l: &[i64], dmin_k: f64) -> Option<PairScan> {
    let m: ModeIndex = k.iter().zip(l).map(|(a, b)| a + b).collect();
    if m.iter().all(|&c| c == 0) {
        return None;
    }
    let (k2, l2) = (lat.norm_sq(k), lat.norm_sq(l));
    let (nk, nl, nm) = (k2.sqrt(), l2.sqrt(), lat.norm_sq(&m).sqrt());
    let kl = lat.dot(k, l);
    let cross2 = lat.cross_sq(k, l);
    let col = collinear(k, l);
    let s = nk + nl + nm;
    let d1 = 2.0 * excess_core(nk, nl, kl, cross2, 1.0) / s;
    let d2 = 2.0 * excess_core(nk, nm, k2 + kl, cross2, -1.0) / s;
    let d3 = 2.0 * excess_core(nl, nm, l2 + kl, cross2, -1.0) / s;
    let (sk, sl, sm) = (sg(k).ok()?, sg(l).ok()?, sg(&m).ok()?);
    let cands = [(d1, sk, sl, sm), (d2, sk, -sl, -sm), (d3, -sk, sl, -sm)];
    let mut best: Option<(f64, i32, i32, i32)> = None;
    for &(d, a, b, g) in &cands {
        if col && d == 0.0 {
            continue;
        }
        if best.map_or(true, |x| d < x.0) {
            best = Some((d, a, b, g));
        }
    }
    let (d, a, b, g) = best?;
    let mut collinear_defect = 0.0;
    let mut dmin_violation = false;
    if col && kl < 0.0 {
        let expect = s / (4.0 * nk * nl);
        collinear_defect = ((1.0 / d1) - expect).abs() / expect;
    }
    if !col {
        let r = dmin_k / nl;
        if r > 1.0 + 1e-12 {
            dmin_violation = true;
        } else {
            let r = r.min(1.0);
            let one_minus_cos = r * r / (1.0 + (1.0 - r * r).sqrt());
            let bound = 2.0 * nk * nl * one_minus_cos / s;
            dmin_violation = d1 < bound * (1.0 - 1e-10);
        }
    }
    Some(PairScan {
        inv: 1.0 / d,
        witness: (a, b, g, d),
        resonant: if col { 2 } else { 0 },
        collinear_defect,
        dmin_violation,
    })
}

/// Scan `C²_M` for every radius in `radii` in one pass over the largest ball.
pub fn scan_three_wave(lat: &FrequencyLattice, radii: &[f64]) -> Result<Vec<DivisorReport>> {
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    if radii.is_empty() || !(rmax > 0.0) {
        return Err(Error::InvalidArgument("need at least one positive radius".into()));
    }
    let ball = lat.ball(rmax);
    let levels: Vec<f64> = ball.iter().map(|n| lat.norm_sq(n).sqrt()).collect();
    let nr = radii.len();
    let tol = 1.0 + 1e-12;

    #[derive(Clone)]
    struct Acc {
        best: Vec<Option<(f64, usize, usize, (i32, i32, i32, f64))>>,
        resonant: Vec<u64>,
        pairs: Vec<u64>,
        defect: Vec<f64>,
        violations: Vec<u64>,
    }
    let empty = Acc {
        best: vec![None; nr],
        resonant: vec![0; nr],
        pairs: vec![0; nr],
        defect: vec![0.0; nr],
        violations: vec![0; nr],
    };
    let better = |a: &Option<(f64, usize, usize, (i32, i32, i32, f64))>, v: f64, i: usize, j: usize| match a {
        None => true,
        Some((bv, bi, bj, _)) => v > *bv || (v == *bv && (i, j) < (*bi, *bj)),
    };
    let acc = (0..ball.len())
        .into_par_iter()
        .fold(
            || empty.clone(),
            |mut acc, i| {
                let k = &ball[i];
                let dk = d_min(k, lat).unwrap_or(0.0);
                for j in 0..ball.len() {
                    let Some(p) = scan_pair(lat, k, &ball[j], dk) else { continue };
                    for (r, &rad) in radii.iter().enumerate() {
                        if levels[i] > rad * tol || levels[j] > rad * tol {
                            continue;
                        }
                        acc.pairs[r] += 1;
                        acc.resonant[r] += p.resonant;
                        acc.defect[r] = acc.defect[r].max(p.collinear_defect);
                        acc.violations[r] += p.dmin_violation as u64;
                        if better(&acc.best[r], p.inv, i, j) {
                            acc.best[r] = Some((p.inv, i, j, p.witness));
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || empty.clone(),
            |mut a, b| {
                for r in 0..nr {
                    a.pairs[r] += b.pairs[r];
                    a.resonant[r] += b.resonant[r];
                    a.defect[r] = a.defect[r].max(b.defect[r]);
                    a.violations[r] += b.violations[r];
                    if let Some((v, i, j, w)) = b.best[r] {
                        if better(&a.best[r], v, i, j) {
                            a.best[r] = Some((v, i, j, w));
                        }
                    }
                }
                a
            },
        );
    Ok((0..nr)
        .map(|r| {
            let witness = acc.best[r].map(|(_, i, j, (a, b, g, d))| {
                let k = ball[i].to_vec();
                let l = ball[j].to_vec();
                let m = k.iter().zip(&l).map(|(x, y)| x + y).collect();
                Witness { alpha: a, k, beta: Some(b), l: Some(l), gamma: g, m, divisor: d }
            });
            DivisorReport {
                order: Order::Three,
                radius: radii[r],
                aspect: lat.aspect().to_vec(),
                value: acc.best[r].map_or(0.0, |b| b.0),
                witness,
                resonant: acc.resonant[r],
                nonresonant: 8 * acc.pairs[r] - acc.resonant[r],
                integer_gap_ok: None,
                collinear_identity_defect: Some(acc.defect[r]),
                dmin_branch_violations: Some(acc.violations[r]),
            }
        })
        .collect())
}

/// Scan one radius and order.
pub fn divisor_scan(lat: &FrequencyLattice, radius: f64, order: Order) -> Result<DivisorReport> {
    match order {
        Order::Two => scan_two_wave(lat, radius),
        Order::Three => Ok(scan_three_wave(lat, &[radius])?.remove(0)),
    }
}

/// Least-squares exponent of `C_M ≈ A (1 + M)^σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero with fewer than three points).
    pub stderr: f64,
}

pub fn bound_fit(reports: &[DivisorReport]) -> Result<BoundFit> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.value > 0.0)
        .map(|r| ((1.0 + r.radius).ln(), r.value.ln()))
        .collect();
    loglog_fit(&pts)
}

/// Least-squares line through `(x, y)` points.
pub fn loglog_fit(pts: &[(f64, f64)]) -> Result<BoundFit> {
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("a slope needs at least two points".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if pts.len() > 2 {
        let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (ss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(BoundFit { slope, intercept, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_min_examples() {
        let l = FrequencyLattice::isotropic(2, 4).unwrap();
        assert!((d_min(&[1, 0], &l).unwrap() - 1.0).abs() < 1e-15);
        assert!((d_min(&[2, 1], &l).unwrap() - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((d_min(&[2, 2], &l).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(d_min(&[0, 0], &l).is_err());
    }

    #[test]
    fn two_wave_extremum_at_m3() {
        let l = FrequencyLattice::isotropic(2, 4).unwrap();
        let r = scan_two_wave(&l, 3.0).unwrap();
        assert!((r.value - (3.0 + 8f64.sqrt())).abs() < 1e-12);
        assert!(r.value <= 6.0);
        assert_eq!(r.integer_gap_ok, Some(true));
    }

    #[test]
    fn three_wave_witness_divisor() {
        let l = FrequencyLattice::isotropic(2, 4).unwrap();
        let r = divisor_scan(&l, 3.0, Order::Three).unwrap();
        let w = r.witness.unwrap();
        let nk = l.norm_sq(&w.k).sqrt();
        let lv = w.l.unwrap();
        let nl = l.norm_sq(&lv).sqrt();
        let nm = l.norm_sq(&w.m).sqrt();
        let direct = (w.alpha as f64 * sg(&w.k).unwrap() as f64 * nk
            + w.beta.unwrap() as f64 * sg(&lv).unwrap() as f64 * nl
            - w.gamma as f64 * sg(&w.m).unwrap() as f64 * nm)
            .abs();
        assert!((direct - w.divisor).abs() < 1e-12);
        assert!((r.value - 1.0 / w.divisor).abs() < 1e-9 * r.value);
        assert_eq!(r.dmin_branch_violations, Some(0));
        assert!(r.collinear_identity_defect.unwrap() < 1e-12);
    }

    #[test]
    fn fit_recovers_power() {
        let pts: Vec<(f64, f64)> = [4.0f64, 8.0, 16.0].iter().map(|m| ((1.0 + m).ln(), 3.0 * (1.0 + m).ln() + 0.2)).collect();
        let f = loglog_fit(&pts).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
    }
}
