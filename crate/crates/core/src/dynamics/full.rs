use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{CMat, HermitianEig, C64};
use crate::sequence::PulseSchedule;

use super::cluster::ClusterModel;
use super::conditional::clamp_probability;
use super::ou::ou_trajectory;
use super::SimulationConfig;

/// Joint NV ⊗ cluster propagation in the frame rotating with the drive.
///
/// NV basis is `{|m_s⟩, |0⟩}`; the joint index is `nv · d + nuclear`.
#[derive(Debug, Clone)]
pub struct FullEngine {
    free: CMat,
    dim: usize,
    rabi: f64,
    amplitude_error: f64,
}

impl FullEngine {
    pub fn new(cluster: &ClusterModel, config: &SimulationConfig) -> Result<Self> {
        if cluster.len() > config.max_cluster_spins {
            return Err(Error::Capacity(format!(
                "cluster of {} spins exceeds the limit of {} ({}-dimensional joint space)",
                cluster.len(),
                config.max_cluster_spins,
                2 << config.max_cluster_spins
            )));
        }
        let d = cluster.dim();
        let (h0, h1) = cluster.conditional_hamiltonians();
        let half_det = C64::new(config.detuning() / 2.0, 0.0);
        let mut free = CMat::zeros(2 * d, 2 * d);
        free.view_mut((0, 0), (d, d)).copy_from(&(h1 + CMat::identity(d, d) * half_det));
        free.view_mut((d, d), (d, d)).copy_from(&(h0 - CMat::identity(d, d) * half_det));
        Ok(Self { free, dim: d, rabi: config.rabi(), amplitude_error: config.amplitude_error })
    }

    /// Generator while driving with amplitude `amp` and phase `phase`.
    fn driven(&self, amp: f64, phase: f64) -> CMat {
        let d = self.dim;
        let mut h = self.free.clone();
        let e = C64::from_polar(amp / 2.0, phase);
        for i in 0..d {
            h[(i, d + i)] += e.conj();
            h[(d + i, i)] += e;
        }
        h
    }

    fn nominal_amp(&self) -> f64 {
        self.rabi * (1.0 + self.amplitude_error)
    }

    /// `|x₋⟩` population after the schedule from `|x₊⟩ ⊗ 1/d`, given the
    /// propagated block `U(|x₊⟩ ⊗ 1)`.
    fn readout(&self, s: &CMat) -> f64 {
        let d = self.dim;
        let m = (s.rows(d, d) - s.rows(0, d)) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        clamp_probability(m.norm_squared() / d as f64)
    }

    fn initial(&self) -> CMat {
        let d = self.dim;
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut s = CMat::zeros(2 * d, d);
        for i in 0..d {
            s[(i, i)] = h;
            s[(d + i, i)] = h;
        }
        s
    }

    fn check_unit(schedule: &PulseSchedule) -> Result<()> {
        let unit = schedule.unit();
        let inside = unit.first().is_none_or(|e| e.start() >= 0.0)
            && unit.last().is_none_or(|e| e.end() <= schedule.unit_duration());
        if !inside {
            return Err(Error::Schedule("pulses must not straddle the repeating-unit boundary".into()));
        }
        Ok(())
    }

    /// Static control errors only: the unit propagator is raised to the
    /// repeat count.
    pub fn probability(&self, schedule: &PulseSchedule) -> Result<f64> {
        Self::check_unit(schedule)?;
        let mut eigs: HashMap<u64, HermitianEig> = HashMap::new();
        let free = HermitianEig::new(&self.free);
        let mut props: HashMap<(Option<u64>, u64), CMat> = HashMap::new();
        let mut u = CMat::identity(2 * self.dim, 2 * self.dim);
        let mut t = 0.0;
        let mut step = |key: Option<u64>, dt: f64, u: &mut CMat, eig: &HermitianEig| {
            if dt > 0.0 {
                let p = props.entry((key, dt.to_bits())).or_insert_with(|| eig.propagator(dt));
                *u = &*p * &*u;
            }
        };
        for e in schedule.unit() {
            step(None, e.start() - t, &mut u, &free);
            let eig = eigs
                .entry(e.phase.to_bits())
                .or_insert_with(|| HermitianEig::new(&self.driven(self.nominal_amp(), e.phase)));
            step(Some(e.phase.to_bits()), e.duration, &mut u, eig);
            t = e.end();
        }
        step(None, schedule.unit_duration() - t, &mut u, &free);
        let total = matrix_pow(&u, schedule.repeats);
        Ok(self.readout(&(total * self.initial())))
    }

    /// With Ornstein-Uhlenbeck amplitude noise; each pulse is split into
    /// `substeps` constant pieces sampled at their midpoints.
    pub fn probability_noisy<R: Rng + ?Sized>(
        &self,
        schedule: &PulseSchedule,
        config: &SimulationConfig,
        rng: &mut R,
    ) -> Result<f64> {
        Self::check_unit(schedule)?;
        let n = config.substeps;
        let times: Vec<f64> = schedule
            .events()
            .flat_map(|e| (0..n).map(move |k| e.start() + e.duration * (k as f64 + 0.5) / n as f64))
            .collect();
        let noise = ou_trajectory(&config.ou, self.rabi, &times, rng);
        let free = HermitianEig::new(&self.free);
        let mut gaps: HashMap<u64, CMat> = HashMap::new();
        let mut s = self.initial();
        let mut t = 0.0;
        let mut noise = noise.into_iter();
        for e in schedule.events() {
            let gap = e.start() - t;
            if gap > 0.0 {
                let g = gaps.entry(gap.to_bits()).or_insert_with(|| free.propagator(gap));
                s = &*g * s;
            }
            let dt = e.duration / n as f64;
            for _ in 0..n {
                let amp = self.nominal_amp() + noise.next().unwrap_or(0.0);
                s = HermitianEig::new(&self.driven(amp, e.phase)).propagator(dt) * s;
            }
            t = e.end();
        }
        let tail = schedule.total_time() - t;
        if tail > 0.0 {
            s = free.propagator(tail) * s;
        }
        Ok(self.readout(&s))
    }
}

fn matrix_pow(m: &CMat, mut n: usize) -> CMat {
    let mut result = CMat::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Transition probability with finite pulses, detuning, amplitude error and
/// optional drive noise.
pub fn evolve_full<R: Rng + ?Sized>(
    schedule: &PulseSchedule,
    cluster: &ClusterModel,
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<f64> {
    config.validate()?;
    let engine = FullEngine::new(cluster, config)?;
    if config.ou.enabled {
        engine.probability_noisy(schedule, config, rng)
    } else {
        engine.probability(schedule)
    }
}
