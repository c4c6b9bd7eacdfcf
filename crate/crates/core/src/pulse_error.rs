//! Control-error algebra of composite π pulses and the order at which
//! AXY-type sequences cancel those errors.
//!
//! Times are in units of `1/Ω`. A pulse with amplitude mismatch `δ` and
//! relative detuning `ε` is `exp[−i(π − 2δ)(σ_φ + εσ_z)/2]`; between pulses
//! the qubit precesses as `exp(−iΔσ_z t/2)` at a fixed rate `Δ`. Distances
//! are measured against the same construction with perfect pulses, so only
//! the pulse errors are probed.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::linalg::{sigma_phi, sigma_x, sigma_y, sigma_z, su2_exp, C64, I};
use crate::modfunc::CompositeTimings;
use crate::sequence::{build_axy, Composite, PhaseOrder, PulseSchedule, KNILL_PHASES};

pub type U2 = Matrix2<C64>;

/// Static pulse errors at one scale `η`: `δ = ηδ̃`, `ε = ηε̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseErrors {
    pub delta: f64,
    pub epsilon: f64,
}

impl PulseErrors {
    pub const NONE: Self = Self { delta: 0.0, epsilon: 0.0 };
}

/// Fixed error shape and free-precession settings swept in `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorParams {
    pub delta_tilde: f64,
    pub eps_tilde: f64,
    /// Free precession rate between pulses, in units of Ω.
    pub detuning: f64,
    /// Period in units of `1/Ω`.
    pub tau: f64,
}

impl Default for ErrorParams {
    fn default() -> Self {
        Self { delta_tilde: 1.0, eps_tilde: 0.7, detuning: 2.0 * PI, tau: 1.0 }
    }
}

impl ErrorParams {
    pub fn at(&self, eta: f64) -> PulseErrors {
        PulseErrors { delta: eta * self.delta_tilde, epsilon: eta * self.eps_tilde }
    }
}

/// Exact imperfect π rotation about `σ_φ`.
pub fn imperfect_rotation(phi: f64, e: PulseErrors) -> U2 {
    su2_exp((PI - 2.0 * e.delta) / 2.0, [phi.cos(), phi.sin(), e.epsilon])
}

/// Second-order expansion `−i(1 − (δ²+ε²)/2)σ_φ − iεσ_z + (δ − ε²π/4)·1`.
pub fn rotation_expansion(phi: f64, e: PulseErrors) -> U2 {
    let (d, eps) = (e.delta, e.epsilon);
    sigma_phi(phi) * (-I * (1.0 - (d * d + eps * eps) / 2.0)) - sigma_z() * (I * eps)
        + U2::identity() * C64::new(d - eps * eps * PI / 4.0, 0.0)
}

/// `exp(−iΔσ_z t/2)`.
pub fn free_precession(detuning: f64, t: f64) -> U2 {
    su2_exp(detuning * t / 2.0, [0.0, 0.0, 1.0])
}

fn composite_phases(c: Composite) -> [f64; 5] {
    let off = if c == Composite::Y { PI / 2.0 } else { 0.0 };
    KNILL_PHASES.map(|p| p + off)
}

/// One composite pulse: each of its five rotations is preceded by the gap
/// since the previous one (`x₁τ` before the first), no trailing gap.
pub fn composite_with_delays(
    timings: &CompositeTimings,
    tau: f64,
    detuning: f64,
    errors: PulseErrors,
    composite: Composite,
) -> U2 {
    let x = timings.times();
    let mut u = U2::identity();
    let mut prev = 0.0;
    for (xi, phi) in x.iter().zip(composite_phases(composite)) {
        u = imperfect_rotation(phi, errors) * free_precession(detuning, (xi - prev) * tau) * u;
        prev = *xi;
    }
    u
}

/// The five rotations back to back.
pub fn composite_without_delays(errors: PulseErrors, composite: Composite) -> U2 {
    composite_phases(composite)
        .iter()
        .fold(U2::identity(), |u, &phi| imperfect_rotation(phi, errors) * u)
}

/// Whole instantaneous-pulse schedule with every pulse carrying `errors`.
pub fn sequence_propagator(schedule: &PulseSchedule, detuning: f64, errors: PulseErrors) -> U2 {
    let mut u = U2::identity();
    let mut t = 0.0;
    for e in schedule.events() {
        u = imperfect_rotation(e.phase, errors) * free_precession(detuning, e.center_time - t) * u;
        t = e.center_time;
    }
    free_precession(detuning, schedule.total_time() - t) * u
}

/// `√(1 − |Tr U|²/4)`, evaluated as `√(Σₖ|Tr(Uσₖ)|²)/2` which agrees for
/// unitaries and keeps full relative precision near the identity.
pub fn distance_from_identity(u: &U2) -> f64 {
    let s: f64 = [sigma_x(), sigma_y(), sigma_z()].iter().map(|p| (u * p).trace().norm_sqr()).sum();
    s.sqrt() / 2.0
}

/// Distance of `u` from `reference` up to a global phase.
pub fn distance(u: &U2, reference: &U2) -> f64 {
    distance_from_identity(&(reference.adjoint() * u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingSequence {
    XUnequalDelays,
    XNoDelay,
    Axy4,
    Axy8,
}

impl ScalingSequence {
    pub const ALL: [Self; 4] = [Self::XUnequalDelays, Self::XNoDelay, Self::Axy4, Self::Axy8];
}

impl fmt::Display for ScalingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::XUnequalDelays => "x_unequal_delays",
            Self::XNoDelay => "x_no_delay",
            Self::Axy4 => "axy4",
            Self::Axy8 => "axy8",
        })
    }
}

impl FromStr for ScalingSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Domain(format!("unknown sequence kind {s:?}")))
    }
}

/// Default `η` grid: 8 logarithmic points over `[1e−3, 1e−2]`.
pub fn default_eta_grid() -> Vec<f64> {
    (0..8).map(|i| 10f64.powf(-3.0 + i as f64 / 7.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub kind: ScalingSequence,
    pub slope: f64,
    /// `(η, d)` for every grid point, including ones left out of the fit.
    pub points: Vec<(f64, f64)>,
}

/// Points with `d` below this are dropped from the fit.
pub const FIT_FLOOR: f64 = 1e-12;
/// All points below this: nothing to fit.
pub const DEGENERATE_FLOOR: f64 = 1e-13;

fn propagator(kind: ScalingSequence, timings: &CompositeTimings, p: &ErrorParams, e: PulseErrors) -> Result<U2> {
    Ok(match kind {
        ScalingSequence::XUnequalDelays => composite_with_delays(timings, p.tau, p.detuning, e, Composite::X),
        ScalingSequence::XNoDelay => composite_without_delays(e, Composite::X),
        ScalingSequence::Axy4 | ScalingSequence::Axy8 => {
            let n = if kind == ScalingSequence::Axy4 { 4 } else { 8 };
            let s = build_axy(n, timings, p.tau, 1, PhaseOrder::XyxyYxyx)?;
            sequence_propagator(&s, p.detuning, e)
        }
    })
}

/// Least-squares slope of `ln d` against `ln η`.
pub fn order_scaling_fit(
    kind: ScalingSequence,
    timings: &CompositeTimings,
    params: &ErrorParams,
    etas: &[f64],
) -> Result<ScalingFit> {
    let (lo, hi) = etas.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    if etas.iter().any(|&e| !(e > 0.0 && e <= 0.1)) || hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::Grid("η grid must lie in (0, 0.1] and span at least a decade".into()));
    }
    let reference = propagator(kind, timings, params, PulseErrors::NONE)?;
    let points = etas
        .iter()
        .map(|&eta| Ok((eta, distance(&propagator(kind, timings, params, params.at(eta))?, &reference))))
        .collect::<Result<Vec<_>>>()?;
    if points.iter().all(|&(_, d)| d < DEGENERATE_FLOOR) {
        return Err(Error::DegenerateFit(format!("{kind}: distance below {DEGENERATE_FLOOR:e} everywhere")));
    }
    let used: Vec<(f64, f64)> =
        points.iter().filter(|&&(_, d)| d >= FIT_FLOOR).map(|&(e, d)| (e.ln(), d.ln())).collect();
    if used.len() < 2 {
        return Err(Error::DegenerateFit(format!("{kind}: fewer than two points above the floor")));
    }
    Ok(ScalingFit { kind, slope: ls_slope(&used), points })
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Whether the gap pattern of `timings` satisfies
/// `D₄ + D₅ = D₂ + D₁`, `D₄ = D₂`, `D₅ = D₁` (to 1e−12), where `tᵢ` are
/// the gaps before each pulse and `Dᵢ = tᵢ − Dᵢ₋₁` telescoped.
pub fn symmetry_delay_check(timings: &CompositeTimings) -> bool {
    let x = timings.times();
    let t = [x[0], x[1] - x[0], x[2] - x[1], x[3] - x[2], x[4] - x[3]];
    let d1 = t[0];
    let d2 = t[1] - t[0];
    let d4 = t[3] + t[1] - t[2] - t[0];
    let d5 = t[4] + t[2] + t[0] - t[3] - t[1];
    let tol = 1e-12;
    ((d4 + d5) - (d2 + d1)).abs() < tol && (d4 - d2).abs() < tol && (d5 - d1).abs() < tol
}

/// Ideal composite X, `iσ_{−π/6} = iσ_x e^{−iσ_z π/6}`.
pub fn ideal_x_composite() -> U2 {
    sigma_x() * su2_exp(PI / 6.0, [0.0, 0.0, 1.0]) * I
}
