use crate::bath::NuclearSpin;

/// Resonant flip-flop dynamics of the averaged coupling
/// `(m_s/4) f σ_z (a⃗·I⃗)`: `p(T) = [1 − cos(m_s f |a⃗| T/4)]/2`.
pub fn effective_prediction(spin: &NuclearSpin, f_kdd: f64, ms: i8, t: f64) -> f64 {
    effective_probability(spin.a_perp_norm(), f_kdd, ms, t)
}

/// As [`effective_prediction`] for a bare coupling strength `a_perp`, rad/µs.
pub fn effective_probability(a_perp: f64, f_kdd: f64, ms: i8, t: f64) -> f64 {
    (1.0 - (f64::from(ms) * f_kdd * a_perp * t / 4.0).cos()) / 2.0
}
