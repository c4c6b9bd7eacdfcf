//! Sweep configuration files (TOML). Unknown keys are rejected.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use axy_core::bath::{generate_lattice_bath, BathModel, DipolarMode, LatticeSpec, NuclearSpin, PhysicalConstants};
use axy_core::dynamics::{FrequencyGrid, OuParams, PulseMode, SequenceFamily, SimulationConfig};
use axy_core::modfunc::CompositeTimings;
use axy_core::sequence::PhaseOrder;
use axy_core::timing::{solve_first_harmonic, solve_general, solve_third_harmonic, HarmonicTarget, TimingSolution};
use nalgebra::Vector3;
use serde::Deserialize;

use crate::formats::read_bath;
use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub k_dd: usize,
    pub sequence: SequenceSection,
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    pub grid: GridSection,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Axy,
    Xtilde,
    Cpmg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSection {
    pub kind: SequenceKind,
    #[serde(default = "eight")]
    pub n: usize,
    pub order: Option<String>,
    pub repeats: Option<usize>,
    /// Total pulse count; alternative to `repeats`.
    pub pulses: Option<usize>,
    /// Explicit composite times x₁..x₅.
    pub x: Option<[f64; 5]>,
    pub f1: Option<f64>,
    pub f3: Option<f64>,
    pub harmonic: Option<usize>,
    pub value: Option<f64>,
    #[serde(default)]
    pub zero: Vec<usize>,
}

fn eight() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinEntry {
    pub position_nm: [f64; 3],
    /// Defaults to the point-dipole value at `position_nm`.
    pub hyperfine_mhz: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub radius_nm: f64,
    pub abundance: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DipolarSetting {
    #[default]
    Full,
    Secular,
    Off,
}

impl From<DipolarSetting> for DipolarMode {
    fn from(d: DipolarSetting) -> Self {
        match d {
            DipolarSetting::Full => DipolarMode::Full,
            DipolarSetting::Secular => DipolarMode::Secular,
            DipolarSetting::Off => DipolarMode::Off,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub file: Option<PathBuf>,
    pub generate: Option<GenerateSection>,
    pub spins: Option<Vec<SpinEntry>>,
    pub bz_gauss: Option<f64>,
    pub ms: Option<i8>,
    pub max_cluster: Option<usize>,
    #[serde(default)]
    pub dipolar: DipolarSetting,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuSection {
    #[serde(default)]
    pub enabled: bool,
    pub tau_mw_us: Option<f64>,
    pub delta_omega: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub pulse_mode: Option<String>,
    pub detuning_mhz: Option<f64>,
    pub amplitude_error: Option<f64>,
    pub rabi_mhz: Option<f64>,
    pub substeps: Option<usize>,
    pub max_cluster_spins: Option<usize>,
    pub ou: Option<OuSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start_mhz: Option<f64>,
    pub stop_mhz: Option<f64>,
    pub center_on_spin: Option<usize>,
    pub half_width_mhz: Option<f64>,
    pub points: usize,
}

/// Everything a sweep needs, resolved from a config file.
#[derive(Debug, Clone)]
pub struct ResolvedSweep {
    pub bath: BathModel,
    pub family: SequenceFamily,
    pub timing: Option<TimingSolution>,
    pub grid: Vec<f64>,
    pub k_dd: usize,
    pub sim: SimulationConfig,
    pub seed: u64,
}

fn cfg(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| cfg(format!("config: {e}")))
    }

    /// `base` anchors relative paths; `seed` overrides the file's seed.
    pub fn resolve(&self, base: &Path, seed: Option<u64>) -> Result<ResolvedSweep, CliError> {
        let seed = seed.or(self.seed).unwrap_or(0);
        if self.k_dd == 0 {
            return Err(cfg("k_dd must be a positive integer"));
        }
        let sim = self.simulation.resolve(seed)?;
        let bath = self.bath.resolve(base, seed)?;
        let (family, timing) = self.sequence.resolve()?;
        let grid = self.grid.resolve(&bath)?;
        Ok(ResolvedSweep { bath, family, timing, grid, k_dd: self.k_dd, sim, seed })
    }
}

impl SequenceSection {
    fn timings(&self) -> Result<Option<TimingSolution>, CliError> {
        let given = [self.x.is_some(), self.f1.is_some(), self.f3.is_some(), self.harmonic.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            return Err(cfg("sequence: give at most one of `x`, `f1`, `f3`, `harmonic`"));
        }
        if self.harmonic.is_none() && (self.value.is_some() || !self.zero.is_empty()) {
            return Err(cfg("sequence: `value` and `zero` require `harmonic`"));
        }
        Ok(if let Some(f1) = self.f1 {
            Some(solve_first_harmonic(f1)?)
        } else if let Some(f3) = self.f3 {
            Some(solve_third_harmonic(f3)?)
        } else if let Some(k) = self.harmonic {
            let v = self.value.ok_or_else(|| cfg("sequence: `harmonic` requires `value`"))?;
            Some(solve_general(&HarmonicTarget::new(k, v, self.zero.clone())?)?)
        } else {
            None
        })
    }

    pub fn resolve(&self) -> Result<(SequenceFamily, Option<TimingSolution>), CliError> {
        let per_repeat = match self.kind {
            SequenceKind::Cpmg => 2,
            _ => 5 * self.n,
        };
        let repeats = match (self.repeats, self.pulses) {
            (Some(_), Some(_)) => return Err(cfg("sequence: give `repeats` or `pulses`, not both")),
            (Some(r), None) => r,
            (None, Some(p)) if per_repeat > 0 && p % per_repeat == 0 => p / per_repeat,
            (None, Some(p)) => {
                return Err(cfg(format!("sequence: {p} pulses is not a multiple of {per_repeat}")));
            }
            (None, None) => return Err(cfg("sequence: `repeats` or `pulses` is required")),
        };
        if self.kind == SequenceKind::Cpmg {
            if self.x.is_some() || self.f1.is_some() || self.f3.is_some() || self.harmonic.is_some() || self.order.is_some()
            {
                return Err(cfg("sequence: cpmg takes no timings or order"));
            }
            return Ok((SequenceFamily::Cpmg { repeats }, None));
        }
        let solution = self.timings()?;
        let timings = match (&solution, self.x) {
            (Some(s), _) => s.timings,
            (None, Some(x)) => CompositeTimings::new(x)?,
            (None, None) => CompositeTimings::equally_spaced(),
        };
        let family = match self.kind {
            SequenceKind::Axy => {
                let order = match &self.order {
                    Some(o) => o.parse::<PhaseOrder>()?,
                    None => PhaseOrder::default(),
                };
                SequenceFamily::Axy { n: self.n, timings, order, repeats }
            }
            SequenceKind::Xtilde => {
                if self.order.is_some() {
                    return Err(cfg("sequence: xtilde takes no `order`"));
                }
                SequenceFamily::XTilde { n: self.n, timings, repeats }
            }
            SequenceKind::Cpmg => unreachable!(),
        };
        Ok((family, solution))
    }
}

impl BathSection {
    pub fn resolve(&self, base: &Path, seed: u64) -> Result<BathModel, CliError> {
        let sources = [self.file.is_some(), self.generate.is_some(), self.spins.is_some()];
        let consts = PhysicalConstants::default();
        let mut bath = match sources {
            [true, false, false] => {
                let path = base.join(self.file.as_ref().unwrap());
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| cfg(format!("bath file {}: {e}", path.display())))?;
                let bath = read_bath(&text)?;
                if self.bz_gauss.is_some_and(|b| b != bath.bz) || self.ms.is_some_and(|m| m != bath.ms) {
                    return Err(cfg("bath: `bz_gauss`/`ms` disagree with the bath file"));
                }
                bath
            }
            [false, true, false] => {
                let g = self.generate.as_ref().unwrap();
                let spec = LatticeSpec {
                    seed,
                    radius: g.radius_nm,
                    abundance: g.abundance,
                    bz: self.field()?,
                    ms: self.branch()?,
                };
                generate_lattice_bath(&spec, &consts)?
            }
            [false, false, true] => {
                let (bz, ms) = (self.field()?, self.branch()?);
                let spins = self
                    .spins
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|s| {
                        let r = Vector3::from(s.position_nm);
                        match s.hyperfine_mhz {
                            Some(a) => NuclearSpin::with_hyperfine(
                                r,
                                consts.gamma_c13,
                                Vector3::from(a) * (2.0 * PI),
                                bz,
                                ms,
                            ),
                            None => NuclearSpin::carbon(r, bz, ms, &consts),
                        }
                    })
                    .collect::<axy_core::Result<Vec<_>>>()?;
                BathModel::from_spins(spins, bz, ms)
            }
            [false, false, false] => BathModel::from_spins(Vec::new(), self.field()?, self.branch()?),
            _ => return Err(cfg("bath: give at most one of `file`, `generate`, `spins`")),
        };
        bath.dipolar = self.dipolar.into();
        Ok(match self.max_cluster {
            Some(0) => return Err(cfg("bath: max_cluster must be positive")),
            Some(m) => bath.with_clusters(m),
            None => bath,
        })
    }

    fn field(&self) -> Result<f64, CliError> {
        self.bz_gauss.ok_or_else(|| cfg("bath: `bz_gauss` is required"))
    }

    fn branch(&self) -> Result<i8, CliError> {
        match self.ms {
            Some(m @ (-1 | 1)) => Ok(m),
            Some(m) => Err(cfg(format!("bath: ms must be -1 or 1, got {m}"))),
            None => Err(cfg("bath: `ms` is required")),
        }
    }
}

impl SimulationSection {
    pub fn resolve(&self, seed: u64) -> Result<SimulationConfig, CliError> {
        let d = SimulationConfig::default();
        let pulse_mode = match &self.pulse_mode {
            Some(m) => m.parse::<PulseMode>()?,
            None => d.pulse_mode,
        };
        let ou = match &self.ou {
            Some(o) => OuParams {
                enabled: o.enabled,
                tau_mw: o.tau_mw_us.unwrap_or(d.ou.tau_mw),
                delta_omega: o.delta_omega.unwrap_or(d.ou.delta_omega),
                seed,
            },
            None => OuParams { seed, ..d.ou },
        };
        if ou.enabled && pulse_mode != PulseMode::Finite {
            return Err(cfg("simulation: drive noise needs pulse_mode = \"finite\""));
        }
        let sim = SimulationConfig {
            pulse_mode,
            detuning_mhz: self.detuning_mhz.unwrap_or(d.detuning_mhz),
            amplitude_error: self.amplitude_error.unwrap_or(d.amplitude_error),
            rabi_mhz: self.rabi_mhz.unwrap_or(d.rabi_mhz),
            ou,
            substeps: self.substeps.unwrap_or(d.substeps),
            max_cluster_spins: self.max_cluster_spins.unwrap_or(d.max_cluster_spins),
        };
        if pulse_mode == PulseMode::Instantaneous && (sim.detuning_mhz != 0.0 || sim.amplitude_error != 0.0) {
            return Err(cfg("simulation: control errors need pulse_mode = \"finite\""));
        }
        sim.validate()?;
        Ok(sim)
    }
}

impl GridSection {
    pub fn resolve(&self, bath: &BathModel) -> Result<Vec<f64>, CliError> {
        let grid = match (self.start_mhz, self.stop_mhz, self.center_on_spin, self.half_width_mhz) {
            (Some(a), Some(b), None, None) => FrequencyGrid { start_mhz: a, stop_mhz: b, points: self.points },
            (None, None, Some(j), Some(w)) => {
                let spin = bath
                    .spins
                    .get(j)
                    .ok_or_else(|| cfg(format!("grid: center_on_spin {j} not in bath of {}", bath.len())))?;
                // the sweep axis is the matched frequency k_DD/τ, so spin j
                // resonates at ω_j/2π whatever the harmonic
                FrequencyGrid::centered(spin.omega() / (2.0 * PI), w, self.points)
            }
            _ => {
                return Err(cfg(
                    "grid: give either `start_mhz` and `stop_mhz`, or `center_on_spin` and `half_width_mhz`",
                ))
            }
        };
        Ok(grid.values()?)
    }
}
