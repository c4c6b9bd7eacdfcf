//! Concrete pulse schedules built from composite timing units.
//!
//! A schedule stores one repeating unit (a whole number of periods τ) and a
//! repeat count; [`PulseSchedule::events`] expands the full train lazily.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::modfunc::CompositeTimings;

/// Phases of the five π-pulses of an X composite; Y adds π/2 to each.
pub const KNILL_PHASES: [f64; 5] = [PI / 6.0, 0.0, PI / 2.0, 0.0, PI / 6.0];

/// Phase used for every CPMG pulse (y axis).
pub const CPMG_PHASE: f64 = PI / 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEvent {
    /// µs
    pub center_time: f64,
    /// Rotation-axis angle in the transverse plane, rad.
    pub phase: f64,
    /// µs; zero for an instantaneous pulse.
    pub duration: f64,
    /// rad
    pub nominal_angle: f64,
}

impl PulseEvent {
    pub fn instant(center_time: f64, phase: f64) -> Self {
        Self { center_time, phase, duration: 0.0, nominal_angle: PI }
    }

    pub fn start(&self) -> f64 {
        self.center_time - 0.5 * self.duration
    }

    pub fn end(&self) -> f64 {
        self.center_time + 0.5 * self.duration
    }
}

/// Ordering of X and Y composites inside an eight-composite super-period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseOrder {
    /// XYXY XYXY
    Xyxyxyxy,
    /// XYXY YXYX, the ordering that cancels second-order pulse errors.
    #[default]
    XyxyYxyx,
}

impl std::str::FromStr for PhaseOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xyxyxyxy" => Ok(Self::Xyxyxyxy),
            "xyxy_yxyx" => Ok(Self::XyxyYxyx),
            _ => Err(Error::Domain(format!("unknown phase order `{s}`"))),
        }
    }
}

impl std::fmt::Display for PhaseOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Xyxyxyxy => "xyxyxyxy",
            Self::XyxyYxyx => "xyxy_yxyx",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composite {
    X,
    Y,
}

impl Composite {
    fn phase_offset(self) -> f64 {
        match self {
            Composite::X => 0.0,
            Composite::Y => PI / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    Axy { n: usize, order: PhaseOrder },
    XTilde { n: usize },
    Cpmg,
    Custom,
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScheduleKind::Axy { n, order } => write!(f, "AXY-{n} ({order})"),
            ScheduleKind::XTilde { n } => write!(f, "X~-{n}"),
            ScheduleKind::Cpmg => f.write_str("CPMG"),
            ScheduleKind::Custom => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub kind: ScheduleKind,
    /// Events of one repeating unit, sorted, times relative to the unit start.
    unit: Vec<PulseEvent>,
    /// Periods τ per unit.
    unit_periods: usize,
    /// µs
    pub period: f64,
    /// Number of unit repetitions.
    pub repeats: usize,
}

impl PulseSchedule {
    /// Schedule from one repeating unit spanning `unit_periods · period`.
    pub fn from_unit(
        kind: ScheduleKind,
        mut unit: Vec<PulseEvent>,
        period: f64,
        unit_periods: usize,
        repeats: usize,
    ) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Schedule(format!("period must be positive, got {period}")));
        }
        let span = period * unit_periods as f64;
        if unit.iter().any(|e| !(0.0..span).contains(&e.center_time) || e.duration < 0.0) {
            return Err(Error::Schedule("unit events must lie inside the unit span".into()));
        }
        unit.sort_by(|a, b| a.center_time.total_cmp(&b.center_time));
        let s = Self { kind, unit, unit_periods, period, repeats };
        s.check_overlap()?;
        Ok(s)
    }

    pub fn unit(&self) -> &[PulseEvent] {
        &self.unit
    }

    pub fn unit_periods(&self) -> usize {
        self.unit_periods
    }

    /// µs
    pub fn unit_duration(&self) -> f64 {
        self.period * self.unit_periods as f64
    }

    /// Count of τ-periods over the whole train.
    pub fn repetitions(&self) -> usize {
        self.unit_periods * self.repeats
    }

    /// µs
    pub fn total_time(&self) -> f64 {
        self.period * self.repetitions() as f64
    }

    pub fn pulse_count(&self) -> usize {
        self.unit.len() * self.repeats
    }

    pub fn is_instantaneous(&self) -> bool {
        self.unit.iter().all(|e| e.duration == 0.0)
    }

    pub fn events(&self) -> impl Iterator<Item = PulseEvent> + '_ {
        let span = self.unit_duration();
        (0..self.repeats).flat_map(move |r| {
            let offset = r as f64 * span;
            self.unit.iter().map(move |e| PulseEvent { center_time: e.center_time + offset, ..*e })
        })
    }

    fn check_overlap(&self) -> Result<()> {
        let span = self.unit_duration();
        let n = self.unit.len();
        for i in 0..n {
            let a = self.unit[i];
            let (b, shift) = if i + 1 < n {
                (self.unit[i + 1], 0.0)
            } else if self.repeats > 1 {
                (self.unit[0], span)
            } else {
                break;
            };
            if b.start() + shift < a.end() {
                return Err(Error::Schedule(format!(
                    "pulses at {:.6} µs and {:.6} µs overlap",
                    a.center_time,
                    b.center_time + shift
                )));
            }
        }
        if let (Some(first), Some(last)) = (self.unit.first(), self.unit.last()) {
            if first.start() < 0.0 || last.end() > span * self.repeats as f64 {
                return Err(Error::Schedule("pulse extends outside the sequence".into()));
            }
        }
        Ok(())
    }
}

/// Events of one period τ: `first` composite in the first half at `xᵢτ`, then
/// `second` mirrored at `(1 − x₆₋ᵢ)τ`.
fn period_events(
    timings: &CompositeTimings,
    tau: f64,
    offset: f64,
    first: Composite,
    second: Composite,
    phases: &[f64; 5],
) -> Vec<PulseEvent> {
    let x = timings.times();
    let mut ev = Vec::with_capacity(10);
    for i in 0..5 {
        ev.push(PulseEvent::instant(offset + x[i] * tau, phases[i] + first.phase_offset()));
    }
    for i in (0..5).rev() {
        ev.push(PulseEvent::instant(offset + (1.0 - x[i]) * tau, phases[i] + second.phase_offset()));
    }
    ev
}

fn composite_sequence(n: usize, order: PhaseOrder) -> Result<Vec<Composite>> {
    use Composite::{X, Y};
    match (n, order) {
        (4, _) | (8, PhaseOrder::Xyxyxyxy) => {
            Ok((0..n).map(|i| if i % 2 == 0 { X } else { Y }).collect())
        }
        (8, PhaseOrder::XyxyYxyx) => Ok(vec![X, Y, X, Y, Y, X, Y, X]),
        _ => Err(Error::Domain(format!("AXY-{n} not supported; use 4 or 8"))),
    }
}

fn build_composites(
    kind: ScheduleKind,
    composites: &[Composite],
    timings: &CompositeTimings,
    tau: f64,
    repeats: usize,
    phases: &[f64; 5],
) -> Result<PulseSchedule> {
    let periods = composites.len() / 2;
    let unit = composites
        .chunks(2)
        .enumerate()
        .flat_map(|(p, c)| period_events(timings, tau, p as f64 * tau, c[0], c[1], phases))
        .collect();
    PulseSchedule::from_unit(kind, unit, tau, periods, repeats)
}

/// AXY-n: `n` alternating Knill-type composites per super-period of `n/2` periods.
pub fn build_axy(
    n: usize,
    timings: &CompositeTimings,
    tau: f64,
    repeats: usize,
    order: PhaseOrder,
) -> Result<PulseSchedule> {
    let composites = composite_sequence(n, order)?;
    let order = if n == 4 { PhaseOrder::Xyxyxyxy } else { order };
    build_composites(ScheduleKind::Axy { n, order }, &composites, timings, tau, repeats, &KNILL_PHASES)
}

/// Same pulse times as AXY-n, every rotation about x.
pub fn build_xtilde(n: usize, timings: &CompositeTimings, tau: f64, repeats: usize) -> Result<PulseSchedule> {
    if n % 2 != 0 || n == 0 {
        return Err(Error::Domain(format!("X~ needs an even composite count, got {n}")));
    }
    let composites = vec![Composite::X; n];
    build_composites(ScheduleKind::XTilde { n }, &composites, timings, tau, repeats, &[0.0; 5])
}

/// CPMG: pulses at τ/4 and 3τ/4 of every period.
pub fn build_cpmg(tau: f64, repeats: usize) -> Result<PulseSchedule> {
    let unit = vec![
        PulseEvent::instant(0.25 * tau, CPMG_PHASE),
        PulseEvent::instant(0.75 * tau, CPMG_PHASE),
    ];
    PulseSchedule::from_unit(ScheduleKind::Cpmg, unit, tau, 1, repeats)
}

/// Gives every pulse the duration `π/Ω` about its original center.
pub fn apply_finite_width(schedule: &PulseSchedule, rabi: f64) -> Result<PulseSchedule> {
    if !(rabi > 0.0) {
        return Err(Error::Domain(format!("Rabi frequency must be positive, got {rabi}")));
    }
    let unit = schedule
        .unit
        .iter()
        .map(|e| PulseEvent { duration: e.nominal_angle / rabi, ..*e })
        .collect();
    PulseSchedule::from_unit(
        schedule.kind.clone(),
        unit,
        schedule.period,
        schedule.unit_periods,
        schedule.repeats,
    )
}
