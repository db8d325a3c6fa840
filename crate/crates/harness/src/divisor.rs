//! Small-divisor scans over a radius grid and a sample of rational squared
//! aspect ratios, with power-law fits of `C_M ≈ A (1 + M)^σ`.

use machflow_core::lattice::FrequencyLattice;
use machflow_core::resonance::divisor::{loglog_fit, scan_three_wave, scan_two_wave, DivisorReport};
use machflow_core::resonance::Order;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::converge::pool;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisorRow {
    /// Squared aspect ratios, `p/q` separated by `;`.
    pub aspect_sq: String,
    pub order: &'static str,
    pub radius: f64,
    pub value: f64,
    pub resonant: u64,
    pub nonresonant: u64,
    pub witness: String,
}

impl DivisorRow {
    pub const COLUMNS: [&'static str; 7] = ["aspect_sq", "order", "radius", "value", "resonant", "nonresonant", "witness"];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    /// Aspect label, or `pooled` for all sampled aspects together.
    pub aspect_sq: String,
    pub order: &'static str,
    pub slope: f64,
    pub stderr: f64,
    /// Largest admissible exponent.
    pub bound: f64,
    pub pass: bool,
}

impl FitRow {
    pub const COLUMNS: [&'static str; 6] = ["aspect_sq", "order", "slope", "stderr", "bound", "pass"];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisorSeries {
    pub rows: Vec<DivisorRow>,
    pub fits: Vec<FitRow>,
    /// `C¹_M <= 2M` at every radius of the isotropic lattice.
    pub integer_gap_bound: bool,
    /// Every isotropic three-wave constant is finite.
    pub three_wave_finite: bool,
}

fn label(aspect_sq: &[(i64, i64)]) -> String {
    aspect_sq.iter().map(|(p, q)| format!("{p}/{q}")).collect::<Vec<_>>().join(";")
}

/// `dim - 1` reduced fractions `p/q ≠ 1` per sample, first axis fixed to 1,
/// without repeats.
pub fn sample_aspects(dim: usize, count: usize, max_den: i64, seed: u64) -> Vec<Vec<(i64, i64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<(i64, i64)>> = Vec::new();
    let distinct = (max_den * max_den) as usize;
    let mut attempts = 0;
    while out.len() < count && attempts < 1000 * count.max(1) + distinct {
        attempts += 1;
        let mut a = vec![(1, 1)];
        for _ in 1..dim {
            let (p, q) = (rng.gen_range(1..=max_den), rng.gen_range(1..=max_den));
            let g = p.gcd(&q);
            a.push((p / g, q / g));
        }
        if a[1..].iter().all(|r| *r == (1, 1)) || out.contains(&a) {
            continue;
        }
        out.push(a);
    }
    out
}

fn lattice_for(aspect_sq: &[(i64, i64)], radius: f64) -> Result<FrequencyLattice> {
    let amax = aspect_sq.iter().map(|(p, q)| (*p as f64 / *q as f64).sqrt()).fold(1.0, f64::max);
    Ok(FrequencyLattice::with_aspect_sq(aspect_sq, (radius * amax).ceil() as i64 + 1)?)
}

fn row(aspect: &str, r: &DivisorReport) -> DivisorRow {
    DivisorRow {
        aspect_sq: aspect.to_string(),
        order: match r.order {
            Order::Two => "two",
            Order::Three => "three",
        },
        radius: r.radius,
        value: r.value,
        resonant: r.resonant,
        nonresonant: r.nonresonant,
        witness: r
            .witness
            .as_ref()
            .map(|w| match &w.l {
                Some(l) => format!("{:?} {:?} -> {:?} ({:.3e})", w.k, l, w.m, w.divisor),
                None => format!("{:?} -> {:?} ({:.3e})", w.k, w.m, w.divisor),
            })
            .unwrap_or_default(),
    }
}

fn fit(aspect: &str, order: &'static str, rows: &[&DivisorRow], lo: f64, hi: f64) -> Option<FitRow> {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.value > 0.0).map(|r| ((1.0 + r.radius).ln(), r.value.ln())).collect();
    let f = loglog_fit(&pts).ok()?;
    let finite = rows.iter().all(|r| r.value.is_finite());
    Some(FitRow {
        aspect_sq: aspect.to_string(),
        order,
        slope: f.slope,
        stderr: f.stderr,
        bound: hi,
        pass: finite && f.slope >= lo && f.slope <= hi,
    })
}

pub fn run_divisor(cfg: &ExperimentConfig) -> Result<DivisorSeries> {
    let dc = &cfg.divisor;
    let dim = cfg.lattice.dim;
    let mut radii = dc.radii.clone();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let rmax = *radii.last().unwrap_or(&1.0);
    let iso = vec![(1, 1); dim];
    let mut aspects = vec![iso.clone()];
    aspects.extend(sample_aspects(dim, dc.aspect_samples, dc.max_denominator, dc.aspect_seed));

    let per_aspect: Vec<Vec<DivisorRow>> = pool().install(|| {
        aspects
            .par_iter()
            .enumerate()
            .map(|(i, a)| {
                let lat = lattice_for(a, rmax)?;
                let name = label(a);
                let mut rows = Vec::new();
                for &r in &radii {
                    rows.push(row(&name, &scan_two_wave(&lat, r)?));
                }
                if i == 0 || dc.three_wave_sampled {
                    for rep in scan_three_wave(&lat, &radii)? {
                        rows.push(row(&name, &rep));
                    }
                }
                Ok(rows)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let two_bound = 2.0 * dim as f64 + 2.0 * cfg.sweep.tau - 1.0 + 1.0;
    let mut fits = Vec::new();
    let iso_rows = &per_aspect[0];
    let iso_name = label(&iso);
    let pick = |rows: &[DivisorRow], o: &str| -> Vec<DivisorRow> { rows.iter().filter(|r| r.order == o).cloned().collect() };
    let iso_two = pick(iso_rows, "two");
    let iso_three = pick(iso_rows, "three");
    fits.extend(fit(&iso_name, "two", &iso_two.iter().collect::<Vec<_>>(), 0.7, 1.3));
    fits.extend(fit(&iso_name, "three", &iso_three.iter().collect::<Vec<_>>(), f64::NEG_INFINITY, 5.5));
    let mut pooled = Vec::new();
    for rows in &per_aspect[1..] {
        let two = pick(rows, "two");
        fits.extend(fit(&two[0].aspect_sq, "two", &two.iter().collect::<Vec<_>>(), f64::NEG_INFINITY, two_bound));
        pooled.extend(two);
    }
    if !pooled.is_empty() {
        fits.extend(fit("pooled", "two", &pooled.iter().collect::<Vec<_>>(), f64::NEG_INFINITY, two_bound));
    }
    let integer_gap_bound = iso_two.iter().all(|r| r.value <= 2.0 * r.radius);
    let three_wave_finite = iso_three.iter().all(|r| r.value.is_finite());
    Ok(DivisorSeries { rows: per_aspect.into_iter().flatten().collect(), fits, integer_gap_bound, three_wave_finite })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_aspects_are_distinct_and_reduced() {
        let a = sample_aspects(2, 10, 9, 7);
        assert_eq!(a.len(), 10);
        for (i, x) in a.iter().enumerate() {
            assert_eq!(x[0], (1, 1));
            assert_ne!(x[1], (1, 1));
            assert_eq!(x[1].0.gcd(&x[1].1), 1);
            assert!(!a[..i].contains(x));
        }
        assert_eq!(a, sample_aspects(2, 10, 9, 7));
    }

    #[test]
    fn small_scan_fits() {
        let mut cfg = ExperimentConfig::default();
        cfg.divisor.radii = vec![3.0, 6.0, 12.0];
        cfg.divisor.aspect_samples = 2;
        let s = run_divisor(&cfg).unwrap();
        assert!(s.integer_gap_bound && s.three_wave_finite);
        assert_eq!(s.rows.len(), 3 * 2 + 2 * 3);
        assert!(s.fits.iter().any(|f| f.aspect_sq == "pooled"));
    }
}
