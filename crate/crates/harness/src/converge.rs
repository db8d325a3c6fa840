//! Mach-number sweeps: the full system at each ε against the incompressible
//! and averaged oscillating limits started from the same data.

use std::sync::Arc;

use machflow_core::acoustic::{decompose, KernelPart, OscCoeffs};
use machflow_core::besov::{gs_norm, norm, NormSpec};
use machflow_core::field::SpectralField;
use machflow_core::resonance::divisor::loglog_fit;
use machflow_core::resonance::operators::ResonanceTables;
use machflow_core::resonance::prime::PrimeDecomposition;
use machflow_core::snapshot::write_snapshot;
use machflow_core::solver::insf::InsfSystem;
use machflow_core::solver::limit::{simpson, AveragedLimit, BurgersLimit};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::setup::Setup;

/// One row per ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsRow {
    pub eps: f64,
    pub steps: usize,
    pub dt: f64,
    /// Kernel gap `‖PŨ^ε - U‖` in the trajectory norm `G^s`, `s = N/2 - δ`.
    pub w: f64,
    /// Filtered oscillating gap `‖e^{tA/ε}P⊥Ũ^ε - V‖` in `G^s`.
    pub z: f64,
    /// `sup_t |P₀Ũ^ε(t) - P₀Ũ_in|`.
    pub mean_gap: f64,
    /// `‖PŨ^ε‖` and `‖e^{tA/ε}P⊥Ũ^ε‖` in `G^s`.
    pub x: f64,
    pub y: f64,
    /// Largest per-step difference quotient of the filtered and the raw
    /// oscillating coefficients, in the entropy norm.
    pub filtered_rate_max: f64,
    pub unfiltered_rate_max: f64,
    pub mass_drift: f64,
    pub momentum_drift: f64,
    pub energy_drift: f64,
    pub min_rho: f64,
    pub min_theta: f64,
    pub seed: u64,
    pub snapshot_sha256: String,
}

impl EpsRow {
    pub const COLUMNS: [&'static str; 17] = [
        "eps",
        "steps",
        "dt",
        "w",
        "z",
        "mean_gap",
        "x",
        "y",
        "filtered_rate_max",
        "unfiltered_rate_max",
        "mass_drift",
        "momentum_drift",
        "energy_drift",
        "min_rho",
        "min_theta",
        "seed",
        "snapshot_sha256",
    ];
}

/// Long-format sample of a sweep member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub eps: f64,
    pub t: f64,
    pub quantity: &'static str,
    pub value: f64,
}

impl SeriesPoint {
    pub const COLUMNS: [&'static str; 4] = ["eps", "t", "quantity", "value"];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub slope: f64,
    pub stderr: f64,
    pub target: f64,
    pub pass: bool,
}

/// Diagnostics of the limit solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitReport {
    pub mu_bar: f64,
    pub kappa3: f64,
    /// `|‖V(T)‖² + 2μ̄∫‖∇V‖² - ‖V(0)‖²| / ‖V(0)‖²`.
    pub energy_identity_defect: f64,
    /// `‖V_averaged(T) - V_burgers(T)‖` in the entropy norm, if run.
    pub burgers_gap: Option<f64>,
    pub v_norm_initial: f64,
    pub v_norm_final: f64,
    pub insf_divergence: f64,
}

pub struct LimitTrajectory {
    pub times: Vec<f64>,
    pub kernel: Vec<SpectralField>,
    pub osc: Vec<OscCoeffs>,
    pub report: LimitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<EpsRow>,
    pub series: Vec<SeriesPoint>,
    /// Regularity index `s = N/2 - δ` of the diagnostic norm.
    pub s: f64,
    pub w_fit: Option<SlopeCheck>,
    pub mean_fit: Option<SlopeCheck>,
    pub z_nonincreasing: Option<bool>,
    pub note: Option<String>,
    pub limit: LimitReport,
}

fn is_sample(n: usize, every: usize, steps: usize) -> bool {
    n % every == 0 || n == steps
}

fn kernel_field(kp: &KernelPart, setup: &Setup) -> SpectralField {
    let mut f = kp.embed(&setup.constants);
    f.axpy(Complex64::new(1.0, 0.0), &kp.mean_field()).expect("same lattice");
    f
}

/// Run the incompressible and averaged oscillating limits from `u_in`.
pub fn run_limits(setup: &Setup, cfg: &ExperimentConfig, u_in: &SpectralField) -> Result<LimitTrajectory> {
    let c = &setup.constants;
    let dt = cfg.sweep.dt;
    let steps = cfg.sweep.steps()?;
    let (mut kp, mut v) = decompose(u_in, c)?;
    let insf = InsfSystem::new(setup.transform.clone(), c, dt)?;
    let tables = Arc::new(ResonanceTables::new(setup.lattice.clone(), c)?);
    let ls = AveragedLimit::new(tables.clone(), c, dt)?;
    let mut burgers = if cfg.sweep.burgers_check {
        let d = PrimeDecomposition::new(&v);
        let mut b = BurgersLimit::new(tables, c, dt)?;
        b.prepare(&d);
        Some((b, d))
    } else {
        None
    };
    let v_norm_initial = v.norm_sq();
    let mut grad = vec![v.gradient_norm_sq()];
    let (mut times, mut kernel, mut osc) = (Vec::new(), Vec::new(), Vec::new());
    let mut u_now = kernel_field(&kp, setup);
    for n in 0..=steps {
        let t = n as f64 * dt;
        if is_sample(n, cfg.sweep.sample_every, steps) {
            times.push(t);
            kernel.push(kp.embed(c));
            osc.push(v.clone());
        }
        if n == steps {
            break;
        }
        kp = insf.step(&kp, t)?;
        let u_next = kernel_field(&kp, setup);
        v = ls.step(&v, Some(&u_now), Some(&u_next), t)?;
        if let Some((b, d)) = burgers.as_mut() {
            *d = b.step(d, Some(&u_now), Some(&u_next), t)?;
        }
        grad.push(v.gradient_norm_sq());
        u_now = u_next;
    }
    let v_norm_final = v.norm_sq();
    let dissipated = 2.0 * ls.mu_bar * simpson(dt, &grad);
    let scale = if v_norm_initial > 0.0 { v_norm_initial } else { 1.0 };
    let report = LimitReport {
        mu_bar: ls.mu_bar,
        kappa3: c.resonant_triad_constant(),
        energy_identity_defect: (v_norm_final + dissipated - v_norm_initial).abs() / scale,
        burgers_gap: burgers.map(|(_, d)| d.recompose().sub(&v).norm_sq().sqrt()),
        v_norm_initial: v_norm_initial.sqrt(),
        v_norm_final: v_norm_final.sqrt(),
        insf_divergence: insf.divergence_defect(&kp),
    };
    Ok(LimitTrajectory { times, kernel, osc, report })
}

fn mean_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn snapshot_hash(u: &SpectralField) -> String {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, u).expect("in-memory write");
    hex(&Sha256::digest(&buf))
}

/// The full system at one ε, compared against a limit trajectory.
pub fn run_eps(
    setup: &Setup,
    cfg: &ExperimentConfig,
    eps: f64,
    u_in: &SpectralField,
    limit: &LimitTrajectory,
) -> Result<(EpsRow, Vec<SeriesPoint>)> {
    let tag = |e: machflow_core::Error| HarnessError::Run { eps, source: e };
    let c = &setup.constants;
    let dt = cfg.sweep.dt;
    let steps = cfg.sweep.steps()?;
    let s = setup.lattice.dim() as f64 / 2.0 - cfg.sweep.delta;
    let hs = NormSpec::sobolev(s);
    let sys = setup.full_system(cfg, eps).map_err(|e| match e {
        HarnessError::Core(e) => tag(e),
        other => other,
    })?;
    let c0 = sys.conserved(u_in);
    let mean_in = u_in.mean();
    let mut u = u_in.clone();
    let (kp0, osc0) = decompose(u_in, c).map_err(tag)?;
    let (mut prev_f, mut prev_raw) = (osc0.clone(), osc0);
    let (mut rate_f, mut rate_raw, mut mean_gap) = (0.0f64, 0.0f64, 0.0f64);
    let (mut min_rho, mut min_theta) = sys.extrema(u_in);
    let mut fields: [Vec<SpectralField>; 4] = Default::default();
    let mut series = Vec::new();
    let mut sample = 0usize;
    let mut record = |fields: &mut [Vec<SpectralField>; 4], t: f64, kp: &KernelPart, f: &OscCoeffs, gap: f64| -> Result<()> {
        let kf = kp.embed(c);
        let w = kf.sub(&limit.kernel[sample]).map_err(tag)?;
        let z = f.sub(&limit.osc[sample]).to_field(c);
        series.push(SeriesPoint { eps, t, quantity: "w_hs", value: norm(&setup.partition, &w, &hs).map_err(tag)?.value });
        series.push(SeriesPoint { eps, t, quantity: "z_hs", value: norm(&setup.partition, &z, &hs).map_err(tag)?.value });
        series.push(SeriesPoint { eps, t, quantity: "mean_gap", value: gap });
        fields[0].push(w);
        fields[1].push(z);
        fields[2].push(kf);
        fields[3].push(f.to_field(c));
        sample += 1;
        Ok(())
    };
    record(&mut fields, 0.0, &kp0, &prev_f, 0.0)?;
    for n in 0..steps {
        let t = n as f64 * dt;
        u = sys.step(&u, t).map_err(tag)?;
        let t1 = (n + 1) as f64 * dt;
        let (kp, osc) = decompose(&u, c).map_err(tag)?;
        let f = osc.filter(t1 / eps, c);
        rate_f = rate_f.max(f.sub(&prev_f).norm_sq().sqrt() / dt);
        rate_raw = rate_raw.max(osc.sub(&prev_raw).norm_sq().sqrt() / dt);
        let gap = mean_distance(&u.mean(), &mean_in);
        mean_gap = mean_gap.max(gap);
        if is_sample(n + 1, cfg.sweep.sample_every, steps) {
            let (r, th) = sys.extrema(&u);
            min_rho = min_rho.min(r);
            min_theta = min_theta.min(th);
            record(&mut fields, t1, &kp, &f, gap)?;
        }
        prev_f = f;
        prev_raw = osc;
    }
    let times = &limit.times;
    let gs = |f: &[SpectralField]| gs_norm(&setup.partition, times, f, s).map_err(tag);
    let c1 = sys.conserved(&u);
    let momentum_drift = c1
        .momentum
        .iter()
        .zip(&c0.momentum)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / c0.momentum_scale.max(f64::MIN_POSITIVE);
    let row = EpsRow {
        eps,
        steps,
        dt,
        w: gs(&fields[0])?,
        z: gs(&fields[1])?,
        mean_gap,
        x: gs(&fields[2])?,
        y: gs(&fields[3])?,
        filtered_rate_max: rate_f,
        unfiltered_rate_max: rate_raw,
        mass_drift: ((c1.mass - c0.mass) / c0.mass).abs(),
        momentum_drift,
        energy_drift: ((c1.energy - c0.energy) / c0.energy).abs(),
        min_rho,
        min_theta,
        seed: cfg.initial.seed,
        snapshot_sha256: snapshot_hash(&u),
    };
    Ok((row, series))
}

fn slope(rows: &[EpsRow], f: impl Fn(&EpsRow) -> f64, target: f64) -> Option<SlopeCheck> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps.ln(), f(r).ln())).collect();
    if pts.iter().any(|p| !p.1.is_finite()) {
        return None;
    }
    let fit = loglog_fit(&pts).ok()?;
    Some(SlopeCheck { slope: fit.slope, stderr: fit.stderr, target, pass: fit.slope >= target })
}

/// Worker pool honouring `MACHFLOW_THREADS`.
pub fn pool() -> rayon::ThreadPool {
    let n = std::env::var("MACHFLOW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool")
}

pub fn run_converge(cfg: &ExperimentConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let u_in = setup.initial_data(cfg)?;
    let limit = run_limits(&setup, cfg, &u_in)?;
    let results: Vec<(EpsRow, Vec<SeriesPoint>)> = pool().install(|| {
        cfg.sweep.eps.par_iter().map(|&eps| run_eps(&setup, cfg, eps, &u_in, &limit)).collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::with_capacity(results.len());
    let mut series = Vec::new();
    for (r, s) in results {
        rows.push(r);
        series.extend(s);
    }
    let (w_fit, mean_fit, z_nonincreasing, note) = if rows.len() < 2 {
        (None, None, None, Some("insufficient for fit".to_string()))
    } else {
        (
            slope(&rows, |r| r.w, cfg.sweep.delta - 0.1),
            slope(&rows, |r| r.mean_gap, 0.8),
            Some(rows.windows(2).all(|w| w[1].z <= w[0].z)),
            None,
        )
    };
    Ok(ConvergenceTable {
        rows,
        series,
        s: setup.lattice.dim() as f64 / 2.0 - cfg.sweep.delta,
        w_fit,
        mean_fit,
        z_nonincreasing,
        note,
        limit: limit.report,
    })
}
