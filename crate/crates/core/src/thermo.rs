//! Equations of state, admissibility checks and the reference-state constants
//! used by the acoustic operator and the quadratic interaction form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pressure, internal energy and their partial derivatives up to second order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ThermoPoint {
    pub p: f64,
    pub p_r: f64,
    pub p_t: f64,
    pub p_rr: f64,
    pub p_rt: f64,
    pub p_tt: f64,
    pub e: f64,
    pub e_r: f64,
    pub e_t: f64,
    pub e_rr: f64,
    pub e_rt: f64,
    pub e_tt: f64,
}

impl ThermoPoint {
    /// `e_ρ - (p - θ p_θ)/ρ²`, zero for thermodynamically consistent laws.
    pub fn compatibility_residual(&self, rho: f64, theta: f64) -> f64 {
        self.e_r - (self.p - theta * self.p_t) / (rho * rho)
    }
}

pub trait EquationOfState: Send + Sync + std::fmt::Debug {
    fn eval(&self, rho: f64, theta: f64) -> ThermoPoint;
    fn name(&self) -> String;
}

/// `p = ρθ`, `e = c_v θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealGas {
    pub cv: f64,
}

impl EquationOfState for IdealGas {
    fn eval(&self, rho: f64, theta: f64) -> ThermoPoint {
        ThermoPoint {
            p: rho * theta,
            p_r: theta,
            p_t: rho,
            p_rt: 1.0,
            e: self.cv * theta,
            e_t: self.cv,
            ..Default::default()
        }
    }

    fn name(&self) -> String {
        format!("ideal gas (c_v = {})", self.cv)
    }
}

/// One monomial `c ρ^i θ^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub rho_pow: i32,
    pub theta_pow: i32,
}

/// Polynomial (Laurent allowed) law for `p` and `e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialEos {
    pub pressure: Vec<Monomial>,
    pub energy: Vec<Monomial>,
}

fn poly_derivs(terms: &[Monomial], rho: f64, theta: f64) -> [f64; 6] {
    let mut d = [0.0; 6];
    for m in terms {
        let (i, j) = (m.rho_pow, m.theta_pow);
        let (fi, fj) = (i as f64, j as f64);
        let pw = |x: f64, e: i32| if e == 0 { 1.0 } else { x.powi(e) };
        d[0] += m.coeff * pw(rho, i) * pw(theta, j);
        if i != 0 {
            d[1] += m.coeff * fi * pw(rho, i - 1) * pw(theta, j);
        }
        if j != 0 {
            d[2] += m.coeff * fj * pw(rho, i) * pw(theta, j - 1);
        }
        if i != 0 && i != 1 {
            d[3] += m.coeff * fi * (fi - 1.0) * pw(rho, i - 2) * pw(theta, j);
        }
        if i != 0 && j != 0 {
            d[4] += m.coeff * fi * fj * pw(rho, i - 1) * pw(theta, j - 1);
        }
        if j != 0 && j != 1 {
            d[5] += m.coeff * fj * (fj - 1.0) * pw(rho, i) * pw(theta, j - 2);
        }
    }
    d
}

impl EquationOfState for PolynomialEos {
    fn eval(&self, rho: f64, theta: f64) -> ThermoPoint {
        let p = poly_derivs(&self.pressure, rho, theta);
        let e = poly_derivs(&self.energy, rho, theta);
        ThermoPoint {
            p: p[0],
            p_r: p[1],
            p_t: p[2],
            p_rr: p[3],
            p_rt: p[4],
            p_tt: p[5],
            e: e[0],
            e_r: e[1],
            e_t: e[2],
            e_rr: e[3],
            e_rt: e[4],
            e_tt: e[5],
        }
    }

    fn name(&self) -> String {
        "polynomial".into()
    }
}

/// Viscosities and conductivity, `μ = μ°(θ/θ°)^s` and likewise for `λ`, `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transport {
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    /// Temperature exponent `s`; zero gives constant coefficients.
    #[serde(default)]
    pub exponent: f64,
}

impl Transport {
    pub fn constant(mu: f64, lambda: f64, kappa: f64) -> Self {
        Transport { mu, lambda, kappa, exponent: 0.0 }
    }

    /// `(μ, λ, κ)` at temperature `theta` for reference temperature `theta0`.
    pub fn at(&self, theta: f64, theta0: f64) -> (f64, f64, f64) {
        if self.exponent == 0.0 {
            (self.mu, self.lambda, self.kappa)
        } else {
            let f = (theta / theta0).powf(self.exponent);
            (self.mu * f, self.lambda * f, self.kappa * f)
        }
    }
}

/// Tolerance on the compatibility residual.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// Check `e_θ > 0`, `p_ρ > 0` and thermodynamic compatibility at `(ρ, θ)`.
pub fn validate_eos(eos: &dyn EquationOfState, rho: f64, theta: f64) -> Result<ThermoPoint> {
    let fail = |reason: String| Error::Inadmissible { rho, theta, reason };
    if !(rho > 0.0 && theta > 0.0) {
        return Err(fail("reference density and temperature must be positive".into()));
    }
    let tp = eos.eval(rho, theta);
    if !(tp.e_t > 0.0) {
        return Err(fail(format!("e_θ = {} is not positive", tp.e_t)));
    }
    if !(tp.p_r > 0.0) {
        return Err(fail(format!("p_ρ = {} is not positive", tp.p_r)));
    }
    let r = tp.compatibility_residual(rho, theta);
    if !(r.abs() < COMPATIBILITY_TOL) {
        return Err(fail(format!("compatibility residual e_ρ - (p - θp_θ)/ρ² = {r:e}")));
    }
    Ok(tp)
}

/// Constants of the linearisation about `(ρ°, θ°)` on a box of volume `|T|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateConstants {
    pub dim: usize,
    pub rho0: f64,
    pub theta0: f64,
    pub volume: f64,
    pub thermo: ThermoPoint,
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    /// `(2 - 2/N) μ° + λ°`.
    pub nu: f64,
    /// Sound speed.
    pub c0: f64,
    /// Eigenmode normalisation.
    pub c_n: f64,
    /// `C_1 .. C_11` stored at indices `0 .. 10`.
    pub c: [f64; 11],
    /// Diagonal of the entropy weight: density, velocity, temperature.
    pub w_rho: f64,
    pub w_u: f64,
    pub w_theta: f64,
    /// `θ° p_θ° / (ρ° e_θ°)`, the temperature entry of the acoustic operator.
    pub g0: f64,
}

impl StateConstants {
    pub fn c(&self, i: usize) -> f64 {
        self.c[i - 1]
    }

    pub fn p_r(&self) -> f64 {
        self.thermo.p_r
    }

    pub fn p_t(&self) -> f64 {
        self.thermo.p_t
    }

    pub fn e_t(&self) -> f64 {
        self.thermo.e_t
    }

    /// Weight of component `c` in a state vector.
    pub fn weight(&self, c: usize) -> f64 {
        if c == 0 {
            self.w_rho
        } else if c <= self.dim {
            self.w_u
        } else {
            self.w_theta
        }
    }

    /// Averaged diffusion coefficient `μ̄ = -⟨D H, H⟩ / |m|²`, closed form
    /// `ν°/(2ρ°) + κ° θ° p_θ² / (2 ρ°³ c°² e_θ²)`.
    pub fn mu_bar(&self) -> f64 {
        let t = &self.thermo;
        self.nu / (2.0 * self.rho0)
            + self.kappa * self.theta0 * t.p_t * t.p_t
                / (2.0 * self.rho0.powi(3) * self.c0 * self.c0 * t.e_t * t.e_t)
    }

    /// Diffusivity of the temperature-like kernel variable in the
    /// incompressible limit, `κ p_ρ / (c² ρ e_θ)`.
    pub fn kernel_diffusivity(&self) -> f64 {
        self.kappa * self.thermo.p_r / (self.c0 * self.c0 * self.rho0 * self.thermo.e_t)
    }

    /// Closed-form value `κ₃` with `⟨Q(H_k, H_l), H_m⟩ = i κ₃ γ sg(m)|m|` on
    /// resonant collinear triads.
    pub fn resonant_triad_constant(&self) -> f64 {
        let r = self.c_n * self.rho0;
        let th = self.c_n * self.g0;
        let u = self.c_n * self.c0;
        let c = |i: usize| self.c(i);
        self.volume
            * (self.w_rho * r * r * u
                + self.w_u * 0.5 * u * (u * u + c(1) * r * r + c(2) * th * th + (c(3) + c(4)) * r * th)
                + self.w_theta * th * 0.5 * u * ((1.0 + c(5)) * th + c(6) * r))
    }
}

/// Derive all reference constants; fails on inadmissible laws.
pub fn derive_constants(
    eos: &dyn EquationOfState,
    transport: &Transport,
    rho0: f64,
    theta0: f64,
    dim: usize,
    volume: f64,
) -> Result<StateConstants> {
    let t = validate_eos(eos, rho0, theta0)?;
    let (r, th) = (rho0, theta0);
    let c0 = (t.p_r + th * t.p_t * t.p_t / (r * r * t.e_t)).sqrt();
    let c_n = (th / (2.0 * r)).sqrt() / (c0 * volume.sqrt());
    let c1 = t.p_rr / r - t.p_r / (r * r);
    let c2 = t.p_tt / r;
    let c3 = t.p_rt / r;
    let c4 = t.p_rt / r - t.p_t / (r * r);
    let c5 = t.p_t / (r * t.e_t) + th * t.p_tt / (r * t.e_t) - th * t.p_t * t.e_tt / (r * t.e_t * t.e_t);
    let c6 = th * t.p_rt / (r * t.e_t) - th * t.p_t / (r * r * t.e_t) - th * t.p_t * t.e_rt / (r * t.e_t * t.e_t);
    let g0 = th * t.p_t / (r * t.e_t);
    let ratio = th * t.p_t * t.p_t / (r * t.e_t * t.p_r);
    let c7 = c3 * r - c2 * ratio;
    let c8 = c2 * r - c3 * ratio;
    let c9 = g0 * c4 - r * t.p_t / t.p_r * c1;
    let c10 = r * c5 + g0 * c6;
    let c11 = c6 - t.p_t / t.p_r * c1;
    let (mu, lambda, kappa) = transport.at(th, th);
    let nu = (2.0 - 2.0 / dim as f64) * mu + lambda;
    Ok(StateConstants {
        dim,
        rho0,
        theta0,
        volume,
        thermo: t,
        mu,
        lambda,
        kappa,
        nu,
        c0,
        c_n,
        c: [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11],
        w_rho: t.p_r / (r * th),
        w_u: r / th,
        w_theta: r * t.e_t / (th * th),
        g0,
    })
}
