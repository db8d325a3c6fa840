//! Objects shared by every run of one configuration.

use std::sync::Arc;

use machflow_core::besov::DyadicPartition;
use machflow_core::field::SpectralField;
use machflow_core::lattice::FrequencyLattice;
use machflow_core::solver::full::FullSystem;
use machflow_core::solver::initial::{make_initial, rescale_to_norm};
use machflow_core::thermo::{derive_constants, EquationOfState, StateConstants, Transport};
use machflow_core::transform::{Padding, SpectralTransform};

use crate::config::ExperimentConfig;
use crate::error::Result;

pub struct Setup {
    pub lattice: Arc<FrequencyLattice>,
    pub eos: Arc<dyn EquationOfState>,
    pub transport: Transport,
    pub constants: StateConstants,
    pub transform: Arc<SpectralTransform>,
    pub partition: DyadicPartition,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let lattice = cfg.lattice.build()?;
        let eos = cfg.eos.build();
        let transport = cfg.transport.build();
        let constants = derive_constants(
            eos.as_ref(),
            &transport,
            cfg.state.rho0,
            cfg.state.theta0,
            lattice.dim(),
            lattice.volume(),
        )?;
        let padding = if cfg.lattice.dealias { Padding::ThreeHalves } else { Padding::None };
        let transform = Arc::new(SpectralTransform::new(lattice.clone(), padding));
        let partition = DyadicPartition::new(lattice.clone());
        Ok(Setup { lattice, eos, transport, constants, transform, partition })
    }

    /// Initial fluctuation, rescaled to the configured norm target. The
    /// target uses `ε₀`, so the data are the same for every ε of a sweep.
    pub fn initial_data(&self, cfg: &ExperimentConfig) -> Result<SpectralField> {
        let u = make_initial(&self.lattice, &self.constants, &cfg.initial.recipe())?;
        Ok(match &cfg.initial.norm {
            Some(n) => rescale_to_norm(&u, &self.partition, &n.spec(cfg.sweep.eps0), n.value)?,
            None => u,
        })
    }

    pub fn full_system(&self, cfg: &ExperimentConfig, eps: f64) -> Result<FullSystem> {
        Ok(FullSystem::with_transform(
            self.lattice.clone(),
            self.eos.clone(),
            self.transport,
            self.constants.clone(),
            eps,
            cfg.sweep.dt,
            self.transform.clone(),
        )?)
    }
}
