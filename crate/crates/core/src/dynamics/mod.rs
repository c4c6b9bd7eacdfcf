//! NV transition probabilities for a pulse schedule and a nuclear bath.

mod cluster;
mod conditional;
mod effective;
mod full;
mod ou;
mod sweep;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

pub use cluster::ClusterModel;
pub use conditional::{
    combine_clusters, conditional_coherence, probability_from_coherence, pulse_factor, Coherence,
    ConditionalEngine,
};
pub use effective::{effective_prediction, effective_probability};
pub use full::{evolve_full, FullEngine};
pub use ou::{ou_trajectory, OuParams, NOISE_STREAM_BASE};
pub use sweep::{sweep, FrequencyGrid, Manifest, SequenceFamily, Spectrum};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PulseMode {
    #[default]
    Instantaneous,
    Finite,
}

impl fmt::Display for PulseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Instantaneous => "instantaneous",
            Self::Finite => "finite",
        })
    }
}

impl FromStr for PulseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "instantaneous" => Ok(Self::Instantaneous),
            "finite" => Ok(Self::Finite),
            _ => Err(Error::Domain(format!("unknown pulse mode {s:?}"))),
        }
    }
}

/// Engine settings. Frequencies are ordinary frequencies in MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub pulse_mode: PulseMode,
    /// Drive detuning Δ/2π, MHz.
    pub detuning_mhz: f64,
    /// Relative Rabi amplitude error δ.
    pub amplitude_error: f64,
    /// Nominal Rabi frequency Ω/2π, MHz; a π pulse lasts `1/(2 Ω/2π)` µs.
    pub rabi_mhz: f64,
    pub ou: OuParams,
    /// Constant pieces per pulse when drive noise is on.
    pub substeps: usize,
    /// Largest cluster simulated exactly.
    pub max_cluster_spins: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            pulse_mode: PulseMode::Instantaneous,
            detuning_mhz: 0.0,
            amplitude_error: 0.0,
            rabi_mhz: 40.0,
            ou: OuParams::default(),
            substeps: 4,
            max_cluster_spins: 7,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rabi_mhz > 0.0) || !self.rabi_mhz.is_finite() {
            return Err(Error::Domain(format!("Rabi frequency must be positive, got {}", self.rabi_mhz)));
        }
        if !self.detuning_mhz.is_finite() || !self.amplitude_error.is_finite() || self.amplitude_error <= -1.0 {
            return Err(Error::Domain("detuning and amplitude error must be finite, δ > −1".into()));
        }
        if self.pulse_mode == PulseMode::Finite && self.substeps < 4 {
            return Err(Error::Domain(format!("finite mode needs at least 4 substeps, got {}", self.substeps)));
        }
        if self.ou.enabled {
            self.ou.validate()?;
        }
        Ok(())
    }

    /// Δ, rad/µs.
    pub fn detuning(&self) -> f64 {
        2.0 * PI * self.detuning_mhz
    }

    /// Ω, rad/µs.
    pub fn rabi(&self) -> f64 {
        2.0 * PI * self.rabi_mhz
    }
}
