use std::sync::Arc;

use machflow_core::acoustic::{decompose, eigenvalue};
use machflow_core::field::SpectralField;
use machflow_core::lattice::FrequencyLattice;
use machflow_core::solver::full::FullSystem;
use machflow_core::solver::initial::{make_initial, InitialRecipe};
use machflow_core::solver::linear::LinearPropagator;
use machflow_core::thermo::{IdealGas, Monomial, PolynomialEos, Transport};

fn system(k: i64, eps: f64, dt: f64, transport: Transport) -> FullSystem {
    let lat = Arc::new(FrequencyLattice::isotropic(2, k).unwrap());
    FullSystem::new(lat, Arc::new(IdealGas { cv: 1.0 }), transport, 1.0, 1.0, eps, dt).unwrap()
}

fn data(sys: &FullSystem, amplitude: f64, decay: f64) -> SpectralField {
    let recipe = InitialRecipe { decay, ..Default::default() };
    make_initial(sys.lattice(), sys.constants(), &recipe).unwrap().scaled(amplitude)
}

fn run(sys: &FullSystem, u0: &SpectralField, steps: usize) -> SpectralField {
    let mut u = u0.clone();
    for n in 0..steps {
        u = sys.step(&u, n as f64 * sys.dt()).unwrap();
    }
    u
}

#[test]
fn constant_state_is_stationary() {
    let sys = system(6, 0.1, 1e-3, Transport::constant(0.05, 0.0, 0.05));
    let u = run(&sys, &SpectralField::zeros_state(sys.lattice().clone()), 20);
    assert_eq!(u.max_abs(), 0.0);
}

#[test]
fn linear_regime_rotates_with_acoustic_phases() {
    let (eps, dt) = (0.05, 1e-3);
    let sys = system(6, eps, dt, Transport::constant(0.0, 0.0, 0.0));
    let u0 = data(&sys, 1e-8, 1.0);
    let u = run(&sys, &u0, 100);
    let c = sys.constants();
    let lat = sys.lattice();
    let (_, v0) = decompose(&u0, c).unwrap();
    let (_, v) = decompose(&u, c).unwrap();
    let t = 100.0 * dt;
    let mut worst: f64 = 0.0;
    for idx in 0..lat.len() {
        if idx == lat.zero_index() {
            continue;
        }
        let n = lat.mode(idx);
        for alpha in [1, -1] {
            let a = v0.at(alpha, idx);
            if a.norm() < 1e-3 * v0.max_abs() {
                continue;
            }
            let expect = a * (-eigenvalue(alpha, &n, lat, c).unwrap() * (t / eps)).exp();
            worst = worst.max((v.at(alpha, idx) / expect).arg().abs());
        }
    }
    assert!(worst < 1e-6, "phase error {worst}");
}

#[test]
fn linear_regime_matches_exact_viscous_propagation() {
    let (eps, dt) = (0.05, 1e-3);
    let sys = system(6, eps, dt, Transport::constant(0.1, 0.02, 0.08));
    let u0 = data(&sys, 1e-8, 1.0);
    let u = run(&sys, &u0, 100);
    let mut exact = u0.clone();
    LinearPropagator::new(sys.lattice().clone(), sys.constants(), eps, 100.0 * dt).unwrap().apply(&mut exact);
    assert!(u.sub(&exact).unwrap().max_abs() < 1e-6 * u0.max_abs());
}

#[test]
fn conservation_over_a_run() {
    let sys = system(8, 0.1, 2e-3, Transport::constant(0.05, 0.01, 0.05));
    let u0 = data(&sys, 0.3, 2.0);
    let c0 = sys.conserved(&u0);
    let u = run(&sys, &u0, 100);
    let c1 = sys.conserved(&u);
    assert!(((c1.mass - c0.mass) / c0.mass).abs() < 1e-12);
    for j in 0..2 {
        assert!(((c1.momentum[j] - c0.momentum[j]) / c0.momentum_scale).abs() < 1e-6);
    }
    assert!(((c1.energy - c0.energy) / c0.energy).abs() < 1e-6);
    assert!(u.is_real());
}

#[test]
fn constant_state_conserved_values() {
    let sys = system(4, 0.1, 1e-3, Transport::constant(0.05, 0.0, 0.05));
    let c = sys.conserved(&SpectralField::zeros_state(sys.lattice().clone()));
    let vol = sys.lattice().volume();
    assert!((c.mass - vol).abs() < 1e-12 * vol);
    assert!(c.momentum.iter().all(|m| m.abs() < 1e-15));
    assert!((c.energy - vol).abs() < 1e-12 * vol);
}

#[test]
fn variable_coefficients_and_polynomial_law_run() {
    let lat = Arc::new(FrequencyLattice::with_aspect_sq(&[(1, 1), (3, 2)], 6).unwrap());
    // p = ρθ + ρ², e = θ + ρ: compatible since e_ρ = (p - θp_θ)/ρ² = 1
    let m = |coeff, rho_pow, theta_pow| Monomial { coeff, rho_pow, theta_pow };
    let eos = PolynomialEos { pressure: vec![m(1.0, 1, 1), m(1.0, 2, 0)], energy: vec![m(1.0, 0, 1), m(1.0, 1, 0)] };
    let transport = Transport { mu: 0.05, lambda: 0.0, kappa: 0.05, exponent: 0.7 };
    let sys = FullSystem::new(lat, Arc::new(eos), transport, 1.0, 1.0, 0.1, 2e-3).unwrap();
    let u0 = data(&sys, 0.3, 2.0);
    let c0 = sys.conserved(&u0);
    let u = run(&sys, &u0, 50);
    let c1 = sys.conserved(&u);
    assert!(((c1.mass - c0.mass) / c0.mass).abs() < 1e-12);
    assert!(((c1.energy - c0.energy) / c0.energy).abs() < 1e-6);
}

#[test]
fn second_order_in_time() {
    let t_end = 0.16;
    let transport = Transport::constant(0.05, 0.0, 0.05);
    let reference = {
        let sys = system(8, 0.1, t_end / 320.0, transport);
        let u0 = data(&sys, 0.5, 2.0);
        (run(&sys, &u0, 320), u0)
    };
    let errs: Vec<f64> = [20usize, 40, 80]
        .iter()
        .map(|&n| {
            let sys = system(8, 0.1, t_end / n as f64, transport);
            run(&sys, &reference.1, n).sub(&reference.0).unwrap().norm_l2()
        })
        .collect();
    let o1 = (errs[0] / errs[1]).log2();
    let o2 = (errs[1] / errs[2]).log2();
    assert!(o1 >= 1.8 && o2 >= 1.8, "orders {o1} {o2} (errors {errs:?})");
}

#[test]
fn positivity_violation_is_reported() {
    let sys = system(4, 0.5, 1e-3, Transport::constant(0.05, 0.0, 0.05));
    let mut u = SpectralField::zeros_state(sys.lattice().clone());
    u.set(0, &[1, 0], num_complex::Complex64::new(3.0, 0.0)).unwrap();
    u.set(0, &[-1, 0], num_complex::Complex64::new(3.0, 0.0)).unwrap();
    assert!(matches!(sys.step(&u, 0.0), Err(machflow_core::Error::Positivity { .. })));
}
