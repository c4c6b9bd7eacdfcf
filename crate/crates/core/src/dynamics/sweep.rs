use std::fmt;

use rayon::prelude::*;

use crate::bath::BathModel;
use crate::error::{Error, Result};
use crate::modfunc::CompositeTimings;
use crate::sequence::{apply_finite_width, build_axy, build_cpmg, build_xtilde, PhaseOrder, PulseSchedule};

use super::cluster::ClusterModel;
use super::conditional::{probability_from_coherence, pulse_factor, ConditionalEngine};
use super::full::FullEngine;
use super::{PulseMode, SimulationConfig};

/// A sequence rebuilt at every sweep point with a new period.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceFamily {
    Axy { n: usize, timings: CompositeTimings, order: PhaseOrder, repeats: usize },
    XTilde { n: usize, timings: CompositeTimings, repeats: usize },
    Cpmg { repeats: usize },
}

impl SequenceFamily {
    pub fn build(&self, tau: f64) -> Result<PulseSchedule> {
        match self {
            Self::Axy { n, timings, order, repeats } => build_axy(*n, timings, tau, *repeats, *order),
            Self::XTilde { n, timings, repeats } => build_xtilde(*n, timings, tau, *repeats),
            Self::Cpmg { repeats } => build_cpmg(tau, *repeats),
        }
    }
}

impl fmt::Display for SequenceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = |t: &CompositeTimings| t.times().map(|v| format!("{v:?}")).join(",");
        match self {
            Self::Axy { n, timings, order, repeats } => {
                write!(f, "AXY-{n} order={order} x=[{}] repeats={repeats}", x(timings))
            }
            Self::XTilde { n, timings, repeats } => write!(f, "XTILDE-{n} x=[{}] repeats={repeats}", x(timings)),
            Self::Cpmg { repeats } => write!(f, "CPMG repeats={repeats}"),
        }
    }
}

/// `points` evenly spaced frequencies from `start_mhz` to `stop_mhz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
}

impl FrequencyGrid {
    /// Window of half-width `half_width_mhz` about `center_mhz`.
    pub fn centered(center_mhz: f64, half_width_mhz: f64, points: usize) -> Self {
        Self { start_mhz: center_mhz - half_width_mhz, stop_mhz: center_mhz + half_width_mhz, points }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let ok = self.points >= 1
            && self.start_mhz > 0.0
            && self.stop_mhz.is_finite()
            && (self.points == 1 || self.stop_mhz > self.start_mhz);
        if !ok {
            return Err(Error::Grid(format!(
                "need 0 < start < stop and points ≥ 1, got ({}, {}, {})",
                self.start_mhz, self.stop_mhz, self.points
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.start_mhz]);
        }
        let step = (self.stop_mhz - self.start_mhz) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.start_mhz + step * i as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// Filled in by callers that own the configuration text.
    pub config_hash: String,
    pub seed: u64,
    pub schedule: String,
    pub k_dd: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Matched sequence frequency `k_DD ω_DD / 2π`, MHz.
    pub freq_mhz: Vec<f64>,
    pub tau_us: Vec<f64>,
    pub probability: Vec<f64>,
    pub manifest: Manifest,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.freq_mhz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_mhz.is_empty()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Grid("empty frequency grid".into()));
    }
    if grid.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
        return Err(Error::Grid("frequencies must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid("frequency grid must be strictly increasing".into()));
    }
    Ok(())
}

enum Engine {
    Conditional(Vec<ConditionalEngine>),
    Full(FullEngine),
}

/// Spectrum of `family` over `grid` (MHz), the period at each point set by
/// `τ = k_DD / f`. Points run in parallel; the result does not depend on
/// scheduling.
pub fn sweep(
    bath: &BathModel,
    family: &SequenceFamily,
    grid: &[f64],
    k_dd: usize,
    config: &SimulationConfig,
) -> Result<Spectrum> {
    check_grid(grid)?;
    config.validate()?;
    if k_dd == 0 {
        return Err(Error::Domain("harmonic k_DD must be positive".into()));
    }
    if bath.max_cluster_size() > config.max_cluster_spins {
        return Err(Error::Capacity(format!(
            "largest cluster has {} spins, limit is {}",
            bath.max_cluster_size(),
            config.max_cluster_spins
        )));
    }
    let engine = match config.pulse_mode {
        PulseMode::Instantaneous => Engine::Conditional(
            bath.clusters
                .iter()
                .map(|c| ClusterModel::from_bath(bath, c).map(|m| ConditionalEngine::new(&m)))
                .collect::<Result<_>>()?,
        ),
        PulseMode::Finite => {
            let cluster = match bath.clusters.as_slice() {
                [] => ClusterModel::empty(bath.bz, bath.ms)?,
                [only] => ClusterModel::from_bath(bath, only)?,
                _ => {
                    return Err(Error::Mode(format!(
                        "finite-width mode simulates a single cluster, bath has {}",
                        bath.clusters.len()
                    )))
                }
            };
            Engine::Full(FullEngine::new(&cluster, config)?)
        }
    };
    let tau: Vec<f64> = grid.iter().map(|f| k_dd as f64 / f).collect();
    let probability = tau
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let schedule = family.build(t)?;
            match &engine {
                Engine::Conditional(clusters) => {
                    let mut l = pulse_factor(&schedule);
                    for c in clusters {
                        l *= c.coherence(&schedule)?.bath;
                    }
                    Ok(probability_from_coherence(l))
                }
                Engine::Full(full) => {
                    let schedule = apply_finite_width(&schedule, config.rabi())?;
                    if config.ou.enabled {
                        full.probability_noisy(&schedule, config, &mut config.ou.point_rng(i))
                    } else {
                        full.probability(&schedule)
                    }
                }
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Spectrum {
        freq_mhz: grid.to_vec(),
        tau_us: tau,
        probability,
        manifest: Manifest {
            config_hash: String::new(),
            seed: config.ou.seed,
            schedule: family.to_string(),
            k_dd,
        },
    })
}

