use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{CMat, HermitianEig, C64, ONE};
use crate::sequence::PulseSchedule;

use super::cluster::ClusterModel;

/// NV index of `|m_s⟩`; `|0⟩` is index 1.
pub(crate) const MS: usize = 0;

/// Coherence split into the bath-independent pulse phase and the bath
/// overlap `Tr[W_a W_b†]/d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coherence {
    pub pulse: C64,
    pub bath: C64,
}

impl Coherence {
    pub fn value(&self) -> C64 {
        self.pulse * self.bath
    }

    pub fn probability(&self) -> f64 {
        probability_from_coherence(self.value())
    }
}

/// `p = (1 − Re L)/2`, clamped to `[0, 1]`.
pub fn probability_from_coherence(l: C64) -> f64 {
    clamp_probability((1.0 - l.re) / 2.0)
}

pub(crate) fn clamp_probability(p: f64) -> f64 {
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        log::warn!("transition probability {p} outside [0, 1], clamping");
    }
    p.clamp(0.0, 1.0)
}

/// Product of per-cluster coherences.
pub fn combine_clusters(factors: &[C64]) -> C64 {
    factors.iter().product()
}

/// State of one NV path after a stretch of evolution: NV basis index,
/// accumulated pulse amplitude and the nuclear propagator.
#[derive(Debug, Clone)]
struct Path {
    nv: usize,
    amp: C64,
    nuclear: CMat,
}

/// Map from starting NV state to path state; composable and powerable.
#[derive(Debug, Clone)]
struct Transfer([Path; 2]);

impl Transfer {
    fn identity(dim: usize) -> Self {
        Self([0, 1].map(|nv| Path { nv, amp: ONE, nuclear: CMat::identity(dim, dim) }))
    }

    /// `self` followed by `next`.
    fn then(&self, next: &Transfer) -> Self {
        Self([0, 1].map(|s| {
            let a = &self.0[s];
            let b = &next.0[a.nv];
            Path { nv: b.nv, amp: a.amp * b.amp, nuclear: &b.nuclear * &a.nuclear }
        }))
    }

    fn pow(&self, mut n: usize) -> Self {
        let mut result = Self::identity(self.0[0].nuclear.nrows());
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.then(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.then(&base);
            }
        }
        result
    }
}

/// Amplitude `⟨to|−iσ_φ|from⟩` of an ideal π pulse.
pub(crate) fn pulse_amplitude(from: usize, phase: f64) -> C64 {
    let e = C64::from_polar(1.0, if from == MS { phase } else { -phase });
    C64::new(0.0, -1.0) * e
}

/// Exact two-branch propagation of one cluster under instantaneous pulses.
#[derive(Debug, Clone)]
pub struct ConditionalEngine {
    /// Indexed by NV state: `|m_s⟩` evolves under `H₁`, `|0⟩` under `H₀`.
    branches: [HermitianEig; 2],
    dim: usize,
}

impl ConditionalEngine {
    pub fn new(cluster: &ClusterModel) -> Self {
        let (h0, h1) = cluster.conditional_hamiltonians();
        Self { branches: [HermitianEig::new(&h1), HermitianEig::new(&h0)], dim: cluster.dim() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn unit_transfer(&self, schedule: &PulseSchedule) -> Transfer {
        let mut cache: HashMap<(usize, u64), CMat> = HashMap::new();
        let mut segment = |nv: usize, dt: f64| -> CMat {
            cache
                .entry((nv, dt.to_bits()))
                .or_insert_with(|| self.branches[nv].propagator(dt))
                .clone()
        };
        let mut paths = Transfer::identity(self.dim);
        for path in paths.0.iter_mut() {
            let mut t = 0.0;
            for e in schedule.unit() {
                let u = segment(path.nv, e.center_time - t);
                path.nuclear = u * &path.nuclear;
                path.amp *= pulse_amplitude(path.nv, e.phase);
                path.nv = 1 - path.nv;
                t = e.center_time;
            }
            let u = segment(path.nv, schedule.unit_duration() - t);
            path.nuclear = u * &path.nuclear;
        }
        paths
    }

    /// Coherence of the whole pulse train for this cluster.
    pub fn coherence(&self, schedule: &PulseSchedule) -> Result<Coherence> {
        if !schedule.is_instantaneous() {
            return Err(Error::Mode("conditional evolution needs instantaneous pulses".into()));
        }
        let total = self.unit_transfer(schedule).pow(schedule.repeats);
        let [a, b] = &total.0;
        let overlap = (&a.nuclear * b.nuclear.adjoint()).trace() / C64::new(self.dim as f64, 0.0);
        Ok(Coherence { pulse: a.amp * b.amp.conj(), bath: overlap })
    }
}

/// Coherence `L = Tr[ρ U₊†U₋]` for one cluster, NV prepared in `|x₊⟩`.
pub fn conditional_coherence(schedule: &PulseSchedule, cluster: &ClusterModel) -> Result<Coherence> {
    ConditionalEngine::new(cluster).coherence(schedule)
}

/// Pulse phase factor alone, independent of any bath.
pub fn pulse_factor(schedule: &PulseSchedule) -> C64 {
    let mut amp = [ONE, ONE];
    for (s, a) in amp.iter_mut().enumerate() {
        let mut nv = s;
        for e in schedule.unit() {
            *a *= pulse_amplitude(nv, e.phase);
            nv = 1 - nv;
        }
    }
    let r = amp[MS] * amp[1 - MS].conj();
    let n = schedule.repeats as u32;
    if schedule.unit().len() % 2 == 0 {
        r.powu(n)
    } else {
        // paths swap every unit, alternating r and r*
        r.powu(n.div_ceil(2)) * r.conj().powu(n / 2)
    }
}
