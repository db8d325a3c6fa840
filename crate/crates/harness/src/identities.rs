//! Randomised invariant suite: eigenstructure, projections, filtering,
//! cancellation of the averaged operators, line decomposition and the
//! dyadic machinery.

use std::sync::Arc;

use machflow_core::acoustic::{
    apply_acoustic, eigenmode, eigenvalue, entropy_inner, entropy_inner_weighted, entropy_norm, project_kernel,
    project_mean, project_osc, OscCoeffs,
};
use machflow_core::besov::{norm, truncate_high, truncate_low, DyadicPartition, NormSpec, Summation};
use machflow_core::field::SpectralField;
use machflow_core::lattice::FrequencyLattice;
use machflow_core::random::{random_field, random_kernel, random_osc, random_state};
use machflow_core::resonance::operators::ResonanceTables;
use machflow_core::resonance::prime::PrimeDecomposition;
use machflow_core::thermo::{derive_constants, StateConstants};
use machflow_core::transform::{Padding, SpectralTransform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub samples: usize,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub const COLUMNS: [&'static str; 5] = ["name", "samples", "residual", "threshold", "pass"];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Running maximum of a residual.
struct Acc {
    name: &'static str,
    threshold: f64,
    samples: usize,
    worst: f64,
}

impl Acc {
    fn new(name: &'static str, threshold: f64) -> Self {
        Acc { name, threshold, samples: 0, worst: 0.0 }
    }

    fn push(&mut self, r: f64) {
        self.samples += 1;
        self.worst = if r.is_nan() { f64::NAN } else { self.worst.max(r) };
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            samples: self.samples,
            residual: self.worst,
            threshold: self.threshold,
            pass: self.worst < self.threshold,
        }
    }
}

/// `a / b`, or `a` when `b` vanishes (zero inputs).
fn rel(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

struct Case {
    lattice: Arc<FrequencyLattice>,
    constants: StateConstants,
}

fn cases(cfg: &ExperimentConfig) -> Result<Vec<Case>> {
    let k = cfg.identities.cutoff;
    let lattices = [
        FrequencyLattice::isotropic(2, k)?,
        FrequencyLattice::with_aspect_sq(&[(1, 1), (2, 3)], k)?,
        FrequencyLattice::isotropic(3, k.min(4))?,
        FrequencyLattice::with_aspect_sq(&[(1, 1), (2, 3), (5, 4)], k.min(4))?,
    ];
    let eos = cfg.eos.build();
    let transport = cfg.transport.build();
    lattices
        .into_iter()
        .map(|l| {
            let constants =
                derive_constants(eos.as_ref(), &transport, cfg.state.rho0, cfg.state.theta0, l.dim(), l.volume())?;
            Ok(Case { lattice: Arc::new(l), constants })
        })
        .collect()
}

fn random_mode(lat: &FrequencyLattice, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let k = lat.cutoff();
    loop {
        let n: Vec<i64> = (0..lat.dim()).map(|_| rng.gen_range(-k..=k)).collect();
        if n.iter().any(|&c| c != 0) {
            return n;
        }
    }
}

pub fn run_identities(cfg: &ExperimentConfig) -> Result<PropertyReport> {
    let ic = &cfg.identities;
    let mut rng = ChaCha8Rng::seed_from_u64(ic.seed);
    let amp = if ic.zero_inputs { 0.0 } else { 1.0 };
    let cases = cases(cfg)?;
    let mut checks = Vec::new();

    let mut eig = Acc::new("eigen_residual", 1e-12);
    let mut skew = Acc::new("skew_adjointness", 1e-10);
    for i in 0..ic.modes {
        let case = &cases[i % cases.len()];
        let (lat, c) = (&case.lattice, &case.constants);
        let alpha = if rng.gen_bool(0.5) { 1 } else { -1 };
        let n = random_mode(lat, &mut rng);
        let h = eigenmode(alpha, &n, lat, c)?.scaled(amp);
        let mut r = apply_acoustic(&h, c)?;
        r.axpy(-eigenvalue(alpha, &n, lat, c)?, &h)?;
        eig.push(rel(entropy_norm(&r, c), entropy_norm(&h, c)));

        let v1 = random_state(lat, f64::INFINITY, 1.0, true, &mut rng).scaled(amp);
        let v2 = random_state(lat, f64::INFINITY, 1.0, true, &mut rng).scaled(amp);
        let mut w: Vec<f64> = (0..v1.ncomp()).map(|j| c.weight(j)).collect();
        w[0] *= 1.0 + ic.weight_perturbation;
        let s = entropy_inner_weighted(&v1, &apply_acoustic(&v2, c)?, &w)?
            + entropy_inner_weighted(&apply_acoustic(&v1, c)?, &v2, &w)?;
        skew.push(rel(s.norm(), entropy_norm(&v1, c) * entropy_norm(&v2, c)));
    }
    checks.push(eig.finish());
    checks.push(skew.finish());

    let mut sum = Acc::new("projection_sum", 1e-12);
    let mut idem = Acc::new("projection_idempotence", 1e-12);
    let mut orth = Acc::new("projection_orthogonality", 1e-12);
    for i in 0..ic.fields {
        let case = &cases[i % cases.len()];
        let c = &case.constants;
        let v = random_state(&case.lattice, f64::INFINITY, 1.0, true, &mut rng).scaled(amp);
        let nv = entropy_norm(&v, c);
        let parts = [project_kernel(&v, c)?, project_osc(&v, c)?, project_mean(&v, c)?];
        let total = parts[0].add(&parts[1])?.add(&parts[2])?;
        sum.push(rel(entropy_norm(&total.sub(&v)?, c), nv));
        let again = [project_kernel(&parts[0], c)?, project_osc(&parts[1], c)?, project_mean(&parts[2], c)?];
        let mut d: f64 = 0.0;
        for (a, b) in again.iter().zip(&parts) {
            d = d.max(entropy_norm(&a.sub(b)?, c));
        }
        idem.push(rel(d, nv));
        let mut o: f64 = 0.0;
        for a in 0..3 {
            for b in a + 1..3 {
                o = o.max(entropy_inner(&parts[a], &parts[b], c)?.norm());
            }
        }
        orth.push(rel(o, nv * nv));
    }
    checks.extend([sum.finish(), idem.finish(), orth.finish()]);

    let mut iso = Acc::new("filter_isometry", 1e-12);
    let mut group = Acc::new("filter_group_law", 1e-12);
    for i in 0..ic.fields {
        let case = &cases[i % cases.len()];
        let c = &case.constants;
        let mut v = random_osc(&case.lattice, c, f64::INFINITY, 1.0, &mut rng)?;
        v.scale(amp);
        let tau = rng.gen_range(-100.0..100.0);
        let f = v.filter(tau, c);
        let n0 = entropy_norm(&v.to_field(c), c);
        iso.push(rel((entropy_norm(&f.to_field(c), c) - n0).abs(), n0));
        group.push(rel(f.filter(-tau, c).sub(&v).norm_sq().sqrt(), v.norm_sq().sqrt()));
    }
    checks.extend([iso.finish(), group.finish()]);

    let mut q3 = Acc::new("cancellation_q3", 1e-9);
    let mut q2_0 = Acc::new("cancellation_q2_s0", 1e-9);
    let mut q2_1 = Acc::new("cancellation_q2_s1", 1e-9);
    let mut prime = Acc::new("prime_energy_partition", 1e-12);
    let tables: Vec<(ResonanceTables, &Case)> = cases[..3]
        .iter()
        .map(|case| {
            let cutoff = case.lattice.cutoff().min(if case.lattice.dim() == 2 { 6 } else { 3 });
            let lat = Arc::new(case.lattice.with_cutoff(cutoff)?);
            Ok((ResonanceTables::new(lat, &case.constants)?, case))
        })
        .collect::<Result<_>>()?;
    for i in 0..ic.cancellation_inputs {
        let (tab, case) = &tables[i % tables.len()];
        let c = &case.constants;
        let lat = tab.lattice();
        let mut v = random_osc(lat, c, f64::INFINITY, 1.0, &mut rng)?;
        v.scale(amp);
        let u = random_kernel(lat, c, f64::INFINITY, 1.0, &mut rng)?.scaled(amp);
        let cosine = |a: &OscCoeffs, b: &OscCoeffs, s: f64| {
            rel(a.inner_sobolev(b, s).norm(), (a.inner_sobolev(a, s).re * b.inner_sobolev(b, s).re).sqrt())
        };
        q3.push(cosine(&tab.q3_avg(&v, &v), &v, 0.0));
        let q2 = tab.q2_avg(&u, &v);
        q2_0.push(cosine(&q2, &v, 0.0));
        q2_1.push(cosine(&q2, &v, 1.0));
        let d = PrimeDecomposition::new(&v);
        let e = v.norm_sq();
        prime.push(rel((d.energy() - e).abs(), e).max(rel(d.recompose().sub(&v).max_abs(), v.max_abs())));
    }
    checks.extend([q3.finish(), q2_0.finish(), q2_1.finish(), prime.finish()]);

    checks.extend(besov_checks(cfg, &mut rng, amp)?);
    Ok(PropertyReport { seed: ic.seed, checks })
}

/// Constants of the dyadic checks, from `supp φ ⊂ [5/6, 12/5]`.
pub mod constants {
    /// `‖u‖_{B^{s,t}_η} <= ‖u‖_{B^s} + η^{t-s}‖u‖_{B^t} <= 2 ‖u‖_{B^{s,t}_η}` for `t >= s`, `η <= 1`.
    pub const HYBRID_EQUIVALENCE: f64 = 2.0;
    /// `‖u_M‖_{H^σ} <= (6/5)^δ M^δ ‖u‖_{H^{σ-δ}}` for `M >= 1`.
    pub const LOW_TRUNCATION_BASE: f64 = 6.0 / 5.0;
    /// `‖u^M‖_{H^σ} <= (12/5)^δ M^{-δ} ‖u‖_{H^{σ+δ}}`.
    pub const HIGH_TRUNCATION_BASE: f64 = 12.0 / 5.0;
}

fn sobolev_hybrid(s: f64, t: f64, eta: f64) -> NormSpec {
    NormSpec { summation: Summation::Sobolev, s, t: Some(t), eta: Some(eta), homogeneous: false }
}

fn besov_checks(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, amp: f64) -> Result<Vec<Check>> {
    let k = cfg.identities.cutoff.max(4);
    let lats = [
        Arc::new(FrequencyLattice::isotropic(2, 2 * k)?),
        Arc::new(FrequencyLattice::with_aspect_sq(&[(1, 1), (2, 3)], 2 * k)?),
        Arc::new(FrequencyLattice::isotropic(3, k)?),
    ];
    let parts: Vec<DyadicPartition> = lats.iter().map(|l| DyadicPartition::new(l.clone())).collect();
    let transforms: Vec<SpectralTransform> =
        lats.iter().map(|l| SpectralTransform::new(l.clone(), Padding::ThreeHalves)).collect();
    let mut recon = Acc::new("besov_reconstruction", 1e-12);
    let mut quasi = Acc::new("besov_quasi_orthogonality", 1e-12);
    let mut paraproduct = Acc::new("besov_paraproduct_support", 1e-12);
    let mut equiv_b = Acc::new("besov_norm_equivalence", 1e-12);
    let mut equiv_h = Acc::new("sobolev_norm_equivalence", 1e-12);
    let mut low = Acc::new("truncation_low", 1e-12);
    let mut high = Acc::new("truncation_high", 1e-12);
    // distance of `a / b` from `[lo, hi]`; zero when both sides vanish
    let outside = |a: f64, b: f64, lo: f64, hi: f64| {
        if a == 0.0 && b == 0.0 {
            return 0.0;
        }
        let x = a / b;
        if x.is_nan() {
            f64::NAN
        } else {
            (lo - x).max(x - hi).max(0.0)
        }
    };
    for i in 0..cfg.identities.fields {
        let j = i % lats.len();
        let (lat, part) = (&lats[j], &parts[j]);
        let decay = rng.gen_range(0.0..3.0);
        let u = random_field(lat, 1, f64::INFINITY, decay, true, rng).scaled(amp);
        let scale = u.max_abs();
        let (q0, q1) = part.q_range();

        let mut sum = part.block(&u, q0);
        for q in q0 + 1..=q1 {
            sum = sum.add(&part.block(&u, q))?;
        }
        let z = lat.zero_index();
        sum.comp_mut(0)[z] += u.comp(0)[z];
        recon.push(rel(sum.sub(&u)?.max_abs(), scale));

        let blocks: Vec<SpectralField> = (q0..=q1).map(|q| part.block(&u, q)).collect();
        let mut worst: f64 = 0.0;
        for p in q0..=q1 {
            for q in q0..=q1 {
                if (p - q).abs() >= 2 {
                    worst = worst.max(part.block(&blocks[(q - q0) as usize], p).max_abs());
                }
            }
        }
        quasi.push(rel(worst, scale));

        let mut worst: f64 = 0.0;
        let mut size: f64 = 0.0;
        let mut low_part = SpectralField::zeros(lat.clone(), 1);
        low_part.comp_mut(0)[z] = u.comp(0)[z];
        for q in q0..=q1 {
            // low_part = S_{q-1} u
            let prod = transforms[j].product(low_part.comp(0), blocks[(q - q0) as usize].comp(0));
            let prod = SpectralField::from_comps(lat.clone(), vec![prod])?;
            size = size.max(prod.max_abs());
            for p in q0..=q1 {
                if (p - q).abs() >= 4 {
                    worst = worst.max(part.block(&prod, p).max_abs());
                }
            }
            if q - 1 >= q0 {
                low_part = low_part.add(&blocks[(q - 1 - q0) as usize])?;
            }
        }
        paraproduct.push(rel(worst, size));

        let s = rng.gen_range(-1.0..2.0);
        let t = s + rng.gen_range(0.0..2.0);
        let eta = 10f64.powf(rng.gen_range(-3.0..0.0));
        let nb = |spec: &NormSpec| norm(part, &u, spec).map(|v| v.value);
        let hb = nb(&NormSpec::hybrid(s, t, eta))?;
        let split = nb(&NormSpec::besov(s))? + eta.powf(t - s) * nb(&NormSpec::besov(t))?;
        equiv_b.push(outside(split, hb, 1.0 - 1e-13, constants::HYBRID_EQUIVALENCE));
        let hh = nb(&sobolev_hybrid(s, t, eta))?;
        let split = (nb(&NormSpec::sobolev(s))?.powi(2) + eta.powf(2.0 * (t - s)) * nb(&NormSpec::sobolev(t))?.powi(2)).sqrt();
        equiv_h.push(outside(split, hh, 1.0 - 1e-13, constants::HYBRID_EQUIVALENCE.sqrt()));

        let m = rng.gen_range(1.0..lat.cutoff() as f64);
        let sigma = rng.gen_range(-1.0..2.0);
        let delta = rng.gen_range(0.05..2.0);
        let hs = |f: &SpectralField, r: f64| norm(part, f, &NormSpec::sobolev(r)).map(|v| v.value);
        let bound = (constants::LOW_TRUNCATION_BASE * m).powf(delta) * hs(&u, sigma - delta)?;
        low.push(outside(hs(&truncate_low(&u, m), sigma)?, bound, 0.0, 1.0));
        let bound = (constants::HIGH_TRUNCATION_BASE / m).powf(delta) * hs(&u, sigma + delta)?;
        high.push(outside(hs(&truncate_high(&u, m), sigma)?, bound, 0.0, 1.0));
    }
    Ok(vec![
        recon.finish(),
        quasi.finish(),
        paraproduct.finish(),
        equiv_b.finish(),
        equiv_h.finish(),
        low.finish(),
        high.finish(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.identities.modes = 24;
        cfg.identities.fields = 12;
        cfg.identities.cancellation_inputs = 6;
        cfg
    }

    #[test]
    fn default_seed_passes() {
        let r = run_identities(&small()).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn perturbed_weight_breaks_skew_adjointness() {
        let mut cfg = small();
        cfg.identities.weight_perturbation = 1e-3;
        let r = run_identities(&cfg).unwrap();
        assert!(!r.get("skew_adjointness").unwrap().pass);
        assert!(r.get("eigen_residual").unwrap().pass);
    }

    #[test]
    fn zero_inputs_pass_trivially() {
        let mut cfg = small();
        cfg.identities.zero_inputs = true;
        let r = run_identities(&cfg).unwrap();
        assert!(r.all_pass());
        assert!(r.checks.iter().all(|c| c.residual == 0.0), "{:?}", r.checks);
    }
}
