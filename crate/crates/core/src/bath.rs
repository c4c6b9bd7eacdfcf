//! Nuclear-spin environment of the NV sensor.
//!
//! Frequencies are angular (rad/µs) throughout, lengths in nm and fields in
//! gauss. Conversions to ordinary frequency (MHz) happen only at I/O.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Diamond conventional cell edge, nm.
pub const DIAMOND_LATTICE_CONSTANT: f64 = 0.356_7;
/// C–C bond length, nm.
pub const CC_BOND_LENGTH: f64 = 0.154_5;
/// Sites closer than this to the NV are not occupied, nm.
pub const VACANCY_EXCLUSION_RADIUS: f64 = 0.25;

/// Named sub-stream of the master seed used for lattice occupation.
pub const BATH_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Electron gyromagnetic ratio, rad/µs/G.
    pub gamma_e: f64,
    /// ¹³C gyromagnetic ratio, rad/µs/G.
    pub gamma_c13: f64,
    /// μ₀ħ/4π in units where `prefactor · γ₁γ₂ / r³` is rad/µs for γ in
    /// rad/µs/G and r in nm.
    pub dipolar_prefactor: f64,
    /// Zero-field splitting, rad/µs. Never enters the rotating-frame dynamics.
    pub zero_field_splitting: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            gamma_e: 2.0 * PI * 2.802_495,
            gamma_c13: 2.0 * PI * 1.070_84e-3,
            // 1e-7 T m/A · 1.054571817e-34 J s, rescaled: (rad/s/T)^2 -> (rad/µs/G)^2
            // is 1e20, m^3 -> nm^3 is 1e-27, rad/s -> rad/µs is 1e-6
            dipolar_prefactor: 1.054_571_817,
            zero_field_splitting: 2.0 * PI * 2870.0,
        }
    }
}

/// Dipolar hyperfine vector `A = (μ₀γₑγₙ/4π|r|³)[ẑ − 3(ẑ·r)r/|r|²]`, rad/µs.
pub fn hyperfine_from_position(
    r: &Vector3<f64>,
    gamma_n: f64,
    consts: &PhysicalConstants,
) -> Result<Vector3<f64>> {
    let d = r.norm();
    if d == 0.0 || !d.is_finite() {
        return Err(Error::Singular(format!("nucleus at NV site: r = {r:?}")));
    }
    let b = consts.dipolar_prefactor * consts.gamma_e * gamma_n / d.powi(3);
    let z = Vector3::z();
    Ok((z - r * (3.0 * r.z / (d * d))) * b)
}

/// Larmor vector and the hyperfine part perpendicular to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveFrame {
    pub omega_vec: Vector3<f64>,
    pub omega_hat: Vector3<f64>,
    pub omega: f64,
    pub a_perp: Vector3<f64>,
}

/// `ω⃗ = γB ẑ − (m_s/2)A⃗`, `a⃗ = A⃗ − (A⃗·ω̂)ω̂`.
pub fn effective_frame(
    hyperfine: &Vector3<f64>,
    gamma_n: f64,
    bz: f64,
    ms: i8,
) -> Result<EffectiveFrame> {
    if ms != 1 && ms != -1 {
        return Err(Error::Domain(format!("m_s must be ±1, got {ms}")));
    }
    let omega_vec = Vector3::z() * (gamma_n * bz) - hyperfine * (f64::from(ms) / 2.0);
    let omega = omega_vec.norm();
    if omega == 0.0 {
        return Err(Error::DegenerateFrame);
    }
    let omega_hat = omega_vec / omega;
    let a_perp = hyperfine - omega_hat * hyperfine.dot(&omega_hat);
    Ok(EffectiveFrame { omega_vec, omega_hat, omega, a_perp })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NuclearSpin {
    /// nm, relative to the NV site.
    pub position: Vector3<f64>,
    /// rad/µs/G.
    pub gamma: f64,
    /// rad/µs.
    pub hyperfine: Vector3<f64>,
    pub frame: EffectiveFrame,
}

impl NuclearSpin {
    /// Spin with an explicitly given hyperfine vector.
    pub fn with_hyperfine(
        position: Vector3<f64>,
        gamma: f64,
        hyperfine: Vector3<f64>,
        bz: f64,
        ms: i8,
    ) -> Result<Self> {
        let frame = effective_frame(&hyperfine, gamma, bz, ms)?;
        Ok(Self { position, gamma, hyperfine, frame })
    }

    /// ¹³C at `position` with the dipolar hyperfine vector.
    pub fn carbon(
        position: Vector3<f64>,
        bz: f64,
        ms: i8,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        let a = hyperfine_from_position(&position, consts.gamma_c13, consts)?;
        Self::with_hyperfine(position, consts.gamma_c13, a, bz, ms)
    }

    pub fn omega(&self) -> f64 {
        self.frame.omega
    }

    pub fn a_perp_norm(&self) -> f64 {
        self.frame.a_perp.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DipolarMode {
    #[default]
    Full,
    /// Secular with respect to ẑ.
    Secular,
    Off,
}

/// Point-dipole magnitude `b = μ₀ħγᵢγⱼ/(4π r³)`.
fn dipolar_strength(a: &NuclearSpin, b: &NuclearSpin, consts: &PhysicalConstants) -> Result<(f64, Vector3<f64>)> {
    let d = b.position - a.position;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::Singular("coincident nuclear positions".into()));
    }
    Ok((consts.dipolar_prefactor * a.gamma * b.gamma / r.powi(3), d / r))
}

/// Coupling tensor `T` acting as `Σ_ab Iᵢᵃ T_ab Iⱼᵇ`, rad/µs.
pub fn dipolar_coupling(
    a: &NuclearSpin,
    b: &NuclearSpin,
    consts: &PhysicalConstants,
    mode: DipolarMode,
) -> Result<Matrix3<f64>> {
    let (strength, n) = dipolar_strength(a, b, consts)?;
    Ok(match mode {
        DipolarMode::Full => (Matrix3::identity() - n * n.transpose() * 3.0) * strength,
        DipolarMode::Secular => {
            let c = strength * (1.0 - 3.0 * n.z * n.z);
            Matrix3::from_diagonal(&Vector3::new(-0.5 * c, -0.5 * c, c))
        }
        DipolarMode::Off => Matrix3::zeros(),
    })
}

/// Inputs of a random lattice bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub seed: u64,
    /// nm
    pub radius: f64,
    pub abundance: f64,
    /// G
    pub bz: f64,
    pub ms: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathModel {
    pub spins: Vec<NuclearSpin>,
    pub clusters: Vec<Vec<usize>>,
    pub seed: u64,
    /// G
    pub bz: f64,
    pub ms: i8,
    pub abundance: f64,
    /// nm
    pub radius: f64,
    pub dipolar: DipolarMode,
    pub consts: PhysicalConstants,
}

impl BathModel {
    /// Bath from explicit spins; every spin starts in its own cluster.
    pub fn from_spins(spins: Vec<NuclearSpin>, bz: f64, ms: i8) -> Self {
        let clusters = (0..spins.len()).map(|i| vec![i]).collect();
        Self {
            spins,
            clusters,
            seed: 0,
            bz,
            ms,
            abundance: 0.0,
            radius: 0.0,
            dipolar: DipolarMode::Full,
            consts: PhysicalConstants::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Dipolar tensor between spins `i` and `j` under the bath's mode.
    pub fn coupling(&self, i: usize, j: usize) -> Result<Matrix3<f64>> {
        dipolar_coupling(&self.spins[i], &self.spins[j], &self.consts, self.dipolar)
    }

    /// Re-partition into clusters of at most `max_size` spins.
    pub fn with_clusters(mut self, max_size: usize) -> Self {
        self.clusters = cluster_partition(&self, max_size);
        self
    }

    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Diamond sites rotated so that [111] lies along ẑ, within `radius` of the
/// origin vacancy, excluding the vacancy neighbourhood.
pub fn diamond_sites(radius: f64) -> Vec<Vector3<f64>> {
    let a = DIAMOND_LATTICE_CONSTANT;
    let ez = Vector3::new(1.0, 1.0, 1.0) / 3f64.sqrt();
    let ex = Vector3::new(1.0, 1.0, -2.0) / 6f64.sqrt();
    let ey = ez.cross(&ex);
    let basis = [
        [0.0, 0.0, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
        [0.5, 0.5, 0.0],
        [0.25, 0.25, 0.25],
        [0.25, 0.75, 0.75],
        [0.75, 0.25, 0.75],
        [0.75, 0.75, 0.25],
    ];
    let n = (radius / a).ceil() as i64 + 1;
    let mut sites = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                for b in &basis {
                    let c = Vector3::new(i as f64 + b[0], j as f64 + b[1], k as f64 + b[2]) * a;
                    let d = c.norm();
                    if d <= radius && d >= VACANCY_EXCLUSION_RADIUS {
                        sites.push(Vector3::new(c.dot(&ex), c.dot(&ey), c.dot(&ez)));
                    }
                }
            }
        }
    }
    sites
}

/// Random ¹³C bath on diamond sites, each occupied with probability
/// `abundance`. Spins start unclustered (singletons).
pub fn generate_lattice_bath(spec: &LatticeSpec, consts: &PhysicalConstants) -> Result<BathModel> {
    if !(spec.abundance >= 0.0 && spec.abundance <= 1.0) {
        return Err(Error::Domain(format!("abundance {} outside [0, 1]", spec.abundance)));
    }
    if !(spec.radius > 0.0) {
        return Err(Error::Domain(format!("radius {} must be positive", spec.radius)));
    }
    let sites = diamond_sites(spec.radius);
    if sites.is_empty() {
        log::warn!("radius {} nm contains no lattice sites; bath is empty", spec.radius);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(BATH_STREAM);
    let mut spins = Vec::new();
    for site in sites {
        let draw: f64 = rng.random();
        if draw < spec.abundance {
            spins.push(NuclearSpin::carbon(site, spec.bz, spec.ms, consts)?);
        }
    }
    let mut bath = BathModel::from_spins(spins, spec.bz, spec.ms);
    bath.seed = spec.seed;
    bath.abundance = spec.abundance;
    bath.radius = spec.radius;
    bath.consts = *consts;
    Ok(bath)
}

/// Greedy agglomeration: pairs in order of decreasing dipolar strength are
/// merged while the merged group stays within `max_size`.
pub fn cluster_partition(bath: &BathModel, max_size: usize) -> Vec<Vec<usize>> {
    let n = bath.spins.len();
    let max_size = max_size.max(1);
    let mut pairs = Vec::new();
    if max_size > 1 {
        for i in 0..n {
            for j in i + 1..n {
                if let Ok((b, _)) = dipolar_strength(&bath.spins[i], &bath.spins[j], &bath.consts) {
                    pairs.push((b, i, j));
                }
            }
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));

    let mut parent: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (_, i, j) in pairs {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj && size[ri] + size[rj] <= max_size {
            let (keep, drop) = if ri < rj { (ri, rj) } else { (rj, ri) };
            parent[drop] = keep;
            size[keep] += size[drop];
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut clusters: Vec<Vec<usize>> = groups.into_values().collect();
    clusters.sort_by_key(|c| c[0]);
    clusters
}

#[derive(Debug, Clone, PartialEq)]
pub struct AddressabilityEntry {
    pub index: usize,
    /// `|γⱼB| / (k|a⃗ⱼ|)`: large when off-harmonic terms are negligible.
    pub harmonic_ratio: f64,
    /// `|ωⱼ − ωₙ| / (|f_k||a⃗ⱼ|)`; `None` for the target itself.
    pub crosstalk_ratio: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AddressabilityReport {
    pub target: usize,
    pub margin: f64,
    pub entries: Vec<AddressabilityEntry>,
}

impl AddressabilityReport {
    pub fn flagged(&self) -> impl Iterator<Item = &AddressabilityEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }
}

/// Default margin below which a ratio is flagged.
pub const DEFAULT_ADDRESSABILITY_MARGIN: f64 = 10.0;

pub fn addressability_report(
    bath: &BathModel,
    target: usize,
    k_dd: usize,
    f_kdd: f64,
    margin: f64,
) -> Result<AddressabilityReport> {
    let Some(t) = bath.spins.get(target) else {
        return Err(Error::Domain(format!("target {target} not in bath of {}", bath.len())));
    };
    let omega_n = t.omega();
    let entries = bath
        .spins
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let a = s.a_perp_norm();
            let harmonic_ratio = (s.gamma * bath.bz).abs() / (k_dd as f64 * a);
            let crosstalk_ratio =
                (j != target).then(|| (s.omega() - omega_n).abs() / (f_kdd.abs() * a));
            let flagged = harmonic_ratio < margin || crosstalk_ratio.is_some_and(|r| r < margin);
            AddressabilityEntry { index: j, harmonic_ratio, crosstalk_ratio, flagged }
        })
        .collect();
    Ok(AddressabilityReport { target, margin, entries })
}
