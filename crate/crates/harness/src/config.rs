//! Experiment configuration: a versioned TOML tree with command-line
//! overrides of individual keys.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use machflow_core::besov::NormSpec;
use machflow_core::lattice::FrequencyLattice;
use machflow_core::solver::initial::InitialRecipe;
use machflow_core::thermo::{EquationOfState, IdealGas, Monomial, PolynomialEos, Transport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub eos: EosConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub transport: TransportConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub divisor: DivisorConfig,
    #[serde(default)]
    pub identities: IdentitiesConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("machflow-out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema: SCHEMA,
            output: default_output(),
            lattice: LatticeConfig::default(),
            eos: EosConfig::default(),
            state: StateConfig::default(),
            transport: TransportConfig::default(),
            initial: InitialConfig::default(),
            sweep: SweepConfig::default(),
            divisor: DivisorConfig::default(),
            identities: IdentitiesConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

/// Box and truncation. `aspect_sq` takes precedence over `aspect`; with
/// neither the box is `[0, 2π]^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub dim: usize,
    pub cutoff: i64,
    /// Squared aspect ratios as `[numerator, denominator]` pairs.
    pub aspect_sq: Option<Vec<[i64; 2]>>,
    pub aspect: Option<Vec<f64>>,
    pub resonance_tolerance: Option<f64>,
    /// Pad grids by 3/2 for dealiased products.
    pub dealias: bool,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig { dim: 2, cutoff: 32, aspect_sq: None, aspect: None, resonance_tolerance: None, dealias: true }
    }
}

impl LatticeConfig {
    pub fn build(&self) -> Result<Arc<FrequencyLattice>> {
        let lat = match (&self.aspect_sq, &self.aspect) {
            (Some(sq), _) => {
                if sq.len() != self.dim {
                    return Err(HarnessError::Config(format!(
                        "lattice.aspect_sq has {} entries for dim = {}",
                        sq.len(),
                        self.dim
                    )));
                }
                let pairs: Vec<(i64, i64)> = sq.iter().map(|p| (p[0], p[1])).collect();
                FrequencyLattice::with_aspect_sq(&pairs, self.cutoff)?
            }
            (None, Some(a)) => {
                if a.len() != self.dim {
                    return Err(HarnessError::Config(format!(
                        "lattice.aspect has {} entries for dim = {}",
                        a.len(),
                        self.dim
                    )));
                }
                FrequencyLattice::with_aspect(a, self.cutoff)?
            }
            (None, None) => FrequencyLattice::isotropic(self.dim, self.cutoff)?,
        };
        Ok(Arc::new(match self.resonance_tolerance {
            Some(t) => lat.with_resonance_tolerance(t),
            None => lat,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EosConfig {
    Ideal { cv: f64 },
    Polynomial { pressure: Vec<Monomial>, energy: Vec<Monomial> },
}

impl Default for EosConfig {
    fn default() -> Self {
        EosConfig::Ideal { cv: 1.0 }
    }
}

impl EosConfig {
    pub fn build(&self) -> Arc<dyn EquationOfState> {
        match self {
            EosConfig::Ideal { cv } => Arc::new(IdealGas { cv: *cv }),
            EosConfig::Polynomial { pressure, energy } => {
                Arc::new(PolynomialEos { pressure: pressure.clone(), energy: energy.clone() })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateConfig {
    pub rho0: f64,
    pub theta0: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig { rho0: 1.0, theta0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportConfig {
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    /// Power law `(θ/θ°)^exponent` applied to all coefficients.
    pub exponent: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { mu: 0.05, lambda: 0.0, kappa: 0.05, exponent: 0.0 }
    }
}

impl TransportConfig {
    pub fn build(&self) -> Transport {
        Transport { mu: self.mu, lambda: self.lambda, kappa: self.kappa, exponent: self.exponent }
    }
}

/// Target for the initial hybrid norm, with anchor `η = ε₀ ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormTarget {
    pub value: f64,
    pub s: f64,
    /// High-frequency regularity; absent means the plain `B^s` norm.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "one")]
    pub nu: f64,
}

fn one() -> f64 {
    1.0
}

impl NormTarget {
    pub fn spec(&self, eps0: f64) -> NormSpec {
        match self.t {
            Some(t) => NormSpec::hybrid(self.s, t, eps0 * self.nu),
            None => NormSpec::besov(self.s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kernel_amplitude: f64,
    pub osc_amplitude: f64,
    pub decay: f64,
    pub radius: Option<f64>,
    pub seed: u64,
    pub norm: Option<NormTarget>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kernel_amplitude: 1.0,
            osc_amplitude: 1.0,
            decay: 3.0,
            radius: None,
            seed: 1,
            norm: Some(NormTarget { value: 0.05, s: 0.0, t: Some(2.0), nu: 1.0 }),
        }
    }
}

impl InitialConfig {
    pub fn recipe(&self) -> InitialRecipe {
        InitialRecipe {
            kernel_amplitude: self.kernel_amplitude,
            osc_amplitude: self.osc_amplitude,
            decay: self.decay,
            radius: self.radius,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Mach numbers, strictly decreasing.
    pub eps: Vec<f64>,
    pub eps0: f64,
    pub t_end: f64,
    /// Fixed step; `t_end / dt` must be an integer.
    pub dt: f64,
    /// Trajectory norms sample every this many steps (and at `t_end`).
    pub sample_every: usize,
    pub delta: f64,
    pub tau: f64,
    /// Also run the line-by-line Burgers form of the limit and compare.
    pub burgers_check: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            eps: vec![0.1, 0.05, 0.025, 0.0125],
            eps0: 0.1,
            t_end: 0.5,
            dt: 2.5e-4,
            sample_every: 20,
            delta: 0.5,
            tau: 1.0,
            burgers_check: true,
        }
    }
}

impl SweepConfig {
    pub fn steps(&self) -> Result<usize> {
        let n = self.t_end / self.dt;
        let r = n.round();
        if !(self.dt > 0.0 && self.t_end > 0.0) || (n - r).abs() > 1e-9 * n.max(1.0) || r < 1.0 {
            return Err(HarnessError::Config(format!(
                "sweep.t_end = {} must be a positive integer multiple of sweep.dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(r as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DivisorConfig {
    pub radii: Vec<f64>,
    /// Number of sampled rational squared aspect ratios besides `a = 1`.
    pub aspect_samples: usize,
    pub aspect_seed: u64,
    /// Numerators and denominators of sampled `a_i²` are drawn from `1..=max_denominator`.
    pub max_denominator: i64,
    /// Run the three-wave scan on sampled aspects too (isotropic always runs).
    pub three_wave_sampled: bool,
}

impl Default for DivisorConfig {
    fn default() -> Self {
        DivisorConfig {
            radii: vec![4.0, 8.0, 16.0, 32.0],
            aspect_samples: 10,
            aspect_seed: 7,
            max_denominator: 9,
            three_wave_sampled: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesConfig {
    pub seed: u64,
    pub modes: usize,
    pub fields: usize,
    pub cancellation_inputs: usize,
    pub cutoff: i64,
    /// Relative perturbation of the density weight in the skew-adjointness
    /// pairing; nonzero values should make that check fail.
    pub weight_perturbation: f64,
    /// Replace every random input with zero.
    pub zero_inputs: bool,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        IdentitiesConfig {
            seed: 11,
            modes: 200,
            fields: 100,
            cancellation_inputs: 50,
            cutoff: 5,
            weight_perturbation: 0.0,
            zero_inputs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub eps: f64,
    /// Number of evenly spaced snapshots written after the initial one.
    pub snapshots: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { eps: 0.1, snapshots: 5 }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let parse = |t: toml::Table| -> Result<ExperimentConfig> {
            toml::Value::Table(t).try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))
        };
        let tree: toml::Table = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if overrides.is_empty() {
            let cfg = parse(tree)?;
            cfg.validate()?;
            return Ok(cfg);
        }
        // Overrides apply on top of the filled-in file, so a nested key can
        // be set without restating its whole section.
        let mut tree: toml::Table = toml::from_str(&parse(tree)?.to_toml()).expect("serialised configuration parses");
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        let cfg = parse(tree)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.schema != SCHEMA {
            return bad(format!("unsupported schema {} (expected {SCHEMA})", self.schema));
        }
        let s = &self.sweep;
        if s.eps.is_empty() {
            return bad("sweep.eps is empty".into());
        }
        if s.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return bad(format!("sweep.eps must be strictly decreasing: {:?}", s.eps));
        }
        if s.eps.iter().any(|&e| !(e > 0.0 && e <= s.eps0)) {
            return bad(format!("every ε must lie in (0, ε₀ = {}]: {:?}", s.eps0, s.eps));
        }
        if !(s.delta > 0.0 && s.delta <= 1.0) {
            return bad(format!("sweep.delta = {} must lie in (0, 1]", s.delta));
        }
        if !(s.tau > 0.0 && s.tau.is_finite()) {
            return bad(format!("sweep.tau = {} must be positive", s.tau));
        }
        if s.sample_every == 0 {
            return bad("sweep.sample_every must be at least 1".into());
        }
        s.steps()?;
        if !(self.simulate.eps > 0.0) {
            return bad("simulate.eps must be positive".into());
        }
        if self.divisor.radii.iter().any(|r| !(*r > 0.0)) {
            return bad("divisor.radii must be positive".into());
        }
        if self.divisor.max_denominator < 1 {
            return bad("divisor.max_denominator must be at least 1".into());
        }
        if let Some(n) = &self.initial.norm {
            n.spec(s.eps0).validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialisation, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("configuration serialises");
        hex(&Sha256::digest(bytes))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Apply `a.b.c=value`; the value is parsed as a TOML literal and falls back
/// to a bare string.
pub fn apply_override(tree: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::Config(format!("malformed key `{key}`")));
    }
    let mut node = tree;
    for p in &parts[..parts.len() - 1] {
        let entry = node.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
