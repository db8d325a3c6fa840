use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use machflow_core::acoustic::{decompose, entropy_norm, project_osc, project_osc_closed_form};
use machflow_core::besov::phi;
use machflow_core::lattice::{collinear, sg, FrequencyLattice};
use machflow_core::random::{random_osc, random_state};
use machflow_core::resonance::divisor::d_min;
use machflow_core::resonance::prime::{fold, primitive_part};
use machflow_core::resonance::{is_resonant_2wave, is_resonant_3wave};
use machflow_core::thermo::{derive_constants, IdealGas, StateConstants, Transport};

fn nonzero_vec(dim: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-9i64..=9, dim).prop_filter("nonzero", |v| v.iter().any(|&c| c != 0))
}

fn constants(lat: &FrequencyLattice, cv: f64) -> StateConstants {
    derive_constants(&IdealGas { cv }, &Transport::constant(0.05, 0.01, 0.05), 1.3, 0.8, lat.dim(), lat.volume()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sign_is_odd(n in nonzero_vec(3)) {
        let neg: Vec<i64> = n.iter().map(|c| -c).collect();
        prop_assert_eq!(sg(&n).unwrap(), -sg(&neg).unwrap());
    }

    #[test]
    fn primitive_part_reconstructs(n in nonzero_vec(3), alpha in prop::sample::select(vec![1, -1])) {
        let (p, mult) = primitive_part(&n).unwrap();
        prop_assert_eq!(sg(&p).unwrap(), 1);
        let back: Vec<i64> = p.iter().map(|c| c * mult).collect();
        prop_assert_eq!(&back, &n);
        let (q, m2) = fold(alpha, &n).unwrap();
        prop_assert_eq!(sg(&q).unwrap(), alpha);
        let back: Vec<i64> = q.iter().map(|c| c * m2).collect();
        prop_assert_eq!(back, n);
    }

    #[test]
    fn two_wave_resonance_is_symmetric(k in nonzero_vec(2), m in nonzero_vec(2), a in prop::sample::select(vec![1, -1]), g in prop::sample::select(vec![1, -1])) {
        let lat = FrequencyLattice::with_aspect_sq(&[(1, 1), (2, 3)], 10).unwrap();
        prop_assert_eq!(
            is_resonant_2wave(&lat, a, &k, g, &m).unwrap(),
            is_resonant_2wave(&lat, g, &m, a, &k).unwrap()
        );
        prop_assert_eq!(
            is_resonant_2wave(&lat, a, &k, g, &m).unwrap(),
            is_resonant_2wave(&lat, -a, &k, -g, &m).unwrap()
        );
    }

    #[test]
    fn three_wave_resonance_needs_collinearity(k in nonzero_vec(3), l in nonzero_vec(3), a in prop::sample::select(vec![1, -1])) {
        let m: Vec<i64> = k.iter().zip(&l).map(|(x, y)| x + y).collect();
        prop_assume!(m.iter().any(|&c| c != 0));
        let lat = FrequencyLattice::isotropic(3, 20).unwrap();
        let r = is_resonant_3wave(&lat, a, &k, a, &l, a, &m).unwrap();
        prop_assert_eq!(r, collinear(&k, &l));
        if r {
            let s = |v: &[i64]| a as f64 * sg(v).unwrap() as f64 * lat.norm_sq(v).sqrt();
            prop_assert!((s(&k) + s(&l) - s(&m)).abs() < 1e-12);
        }
    }

    #[test]
    fn d_min_is_scale_invariant_in_direction(k in nonzero_vec(2), t in 1i64..5) {
        let lat = FrequencyLattice::isotropic(2, 50).unwrap();
        let tk: Vec<i64> = k.iter().map(|c| c * t).collect();
        let a = d_min(&k, &lat).unwrap();
        let b = d_min(&tk, &lat).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dyadic_bumps_sum_to_one(r in 0.01f64..1000.0) {
        let s: f64 = (-10..14).map(|q| phi(r * (-(q as f64)).exp2())).sum();
        prop_assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn decomposition_is_orthogonal_and_complete(seed in 0u64..1000, cv in 0.5f64..3.0) {
        let lat = Arc::new(FrequencyLattice::with_aspect_sq(&[(1, 1), (4, 3)], 4).unwrap());
        let c = constants(&lat, cv);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_state(&lat, f64::INFINITY, 1.0, true, &mut rng);
        let (kp, osc) = decompose(&u, &c).unwrap();
        let parts = [kp.embed(&c), osc.to_field(&c), kp.mean_field()];
        let mut sum = parts[0].add(&parts[1]).unwrap();
        sum = sum.add(&parts[2]).unwrap();
        prop_assert!(sum.sub(&u).unwrap().max_abs() < 1e-12 * u.max_abs());
        let n2: f64 = parts.iter().map(|p| entropy_norm(p, &c).powi(2)).sum();
        prop_assert!((n2 - entropy_norm(&u, &c).powi(2)).abs() < 1e-11 * n2);
        let closed = project_osc_closed_form(&u, &c).unwrap();
        prop_assert!(closed.sub(&project_osc(&u, &c).unwrap()).unwrap().max_abs() < 1e-12 * u.max_abs());
    }

    #[test]
    fn filter_is_a_unitary_group(seed in 0u64..1000, s in -50.0f64..50.0, t in -50.0f64..50.0) {
        let lat = Arc::new(FrequencyLattice::isotropic(2, 5).unwrap());
        let c = constants(&lat, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_osc(&lat, &c, f64::INFINITY, 1.0, &mut rng).unwrap();
        let a = v.filter(s, &c).filter(t, &c);
        let b = v.filter(s + t, &c);
        prop_assert!(a.sub(&b).max_abs() < 1e-12 * v.max_abs());
        prop_assert!((a.norm_sq() - v.norm_sq()).abs() < 1e-12 * v.norm_sq());
        prop_assert!(a.reality_defect() < 1e-12 * v.max_abs());
        prop_assert_eq!(v.filter(0.0, &c).sub(&v).max_abs(), 0.0);
    }
}
