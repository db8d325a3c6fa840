//! Seeded random test fields with prescribed spectral decay.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::acoustic::{decompose, OscCoeffs};
use crate::error::Result;
use crate::field::SpectralField;
use crate::lattice::FrequencyLattice;
use crate::thermo::StateConstants;

/// Real field with `ncomp` components, supported in `|k| <= radius`, with
/// coefficient amplitudes drawn uniformly and damped by `(1 + |k|²)^{-decay/2}`.
pub fn random_field<R: Rng + ?Sized>(
    lat: &Arc<FrequencyLattice>,
    ncomp: usize,
    radius: f64,
    decay: f64,
    with_mean: bool,
    rng: &mut R,
) -> SpectralField {
    let mut f = SpectralField::zeros(lat.clone(), ncomp);
    let z = lat.zero_index();
    let r2 = radius * radius * (1.0 + 1e-12);
    for c in 0..ncomp {
        let comp = f.comp_mut(c);
        for (idx, v) in comp.iter_mut().enumerate() {
            let k2 = lat.k_norm_sq_of(idx);
            if k2 > r2 || (idx == z && !with_mean) {
                continue;
            }
            let amp = (1.0 + k2).powf(-0.5 * decay);
            *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
        }
    }
    f.symmetrize();
    f
}

/// Real state field (`N + 2` components).
pub fn random_state<R: Rng + ?Sized>(
    lat: &Arc<FrequencyLattice>,
    radius: f64,
    decay: f64,
    with_mean: bool,
    rng: &mut R,
) -> SpectralField {
    random_field(lat, lat.dim() + 2, radius, decay, with_mean, rng)
}

/// Real kernel-valued state `PV` of a random state, without mean.
pub fn random_kernel<R: Rng + ?Sized>(
    lat: &Arc<FrequencyLattice>,
    c: &StateConstants,
    radius: f64,
    decay: f64,
    rng: &mut R,
) -> Result<SpectralField> {
    Ok(decompose(&random_state(lat, radius, decay, false, rng), c)?.0.embed(c))
}

/// Oscillating coefficients of a real random state.
pub fn random_osc<R: Rng + ?Sized>(
    lat: &Arc<FrequencyLattice>,
    c: &StateConstants,
    radius: f64,
    decay: f64,
    rng: &mut R,
) -> Result<OscCoeffs> {
    Ok(decompose(&random_state(lat, radius, decay, false, rng), c)?.1)
}
