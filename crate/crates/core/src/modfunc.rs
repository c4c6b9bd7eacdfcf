//! Modulation function of a periodic pulse train and its cosine-series
//! coefficients.
//!
//! One period τ holds two composite units. The first unit flips the sign of
//! `F(t)` at the five relative times `x₁ < … < x₅ < 1/2`; the second unit is
//! its mirror image about the period midpoint, flipping at `1 − x₅, …, 1 − x₁`.
//! `F` therefore satisfies `F(t) = F(τ − t)` and has a pure cosine series.
//! `F(0) = +1` by convention; flipping that sign would negate every `f_k`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default number of harmonics tabulated by [`FourierSpectrum`].
pub const DEFAULT_KMAX: usize = 64;

/// The five relative pulse times of one composite half-period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeTimings {
    x: [f64; 5],
    symmetric: bool,
}

impl CompositeTimings {
    /// Validates strict ordering `0 < x₁ < … < x₅ < 1/2`.
    pub fn new(x: [f64; 5]) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTimings(format!("non-finite entry in {x:?}")));
        }
        if !(x[0] > 0.0 && x[4] < 0.5) {
            return Err(Error::InvalidTimings(format!(
                "times must lie strictly inside (0, 1/2): {x:?}"
            )));
        }
        if x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTimings(format!(
                "times must be strictly increasing: {x:?}"
            )));
        }
        let symmetric = x[2] == 0.25 && x[3] == 0.5 - x[1] && x[4] == 0.5 - x[0];
        Ok(Self { x, symmetric })
    }

    /// Symmetric construction `x₃ = 1/4`, `x₄ = 1/2 − x₂`, `x₅ = 1/2 − x₁`.
    pub fn symmetric(x1: f64, x2: f64) -> Result<Self> {
        if !(x1 > 0.0 && x1 < x2 && x2 < 0.25) {
            return Err(Error::InvalidTimings(format!(
                "symmetric timings need 0 < x1 < x2 < 1/4, got ({x1}, {x2})"
            )));
        }
        Self::new([x1, x2, 0.25, 0.5 - x2, 0.5 - x1])
    }

    /// Equally spaced unit `(1, 3, 5, 7, 9)/20`: the Knill/KDD limit.
    pub fn equally_spaced() -> Self {
        Self::symmetric(0.05, 0.15).expect("equal spacing is valid")
    }

    pub fn times(&self) -> [f64; 5] {
        self.x
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Sign-flip positions over one full period.
    pub fn pattern(&self) -> FlipPattern {
        let x = self.x;
        let mut flips = Vec::with_capacity(10);
        flips.extend_from_slice(&x);
        flips.extend(x.iter().rev().map(|v| 1.0 - v));
        FlipPattern { flips }
    }
}

/// Sorted sign-flip positions of `F` within one period, as fractions in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipPattern {
    flips: Vec<f64>,
}

impl FlipPattern {
    pub fn new(mut flips: Vec<f64>) -> Result<Self> {
        if flips.iter().any(|f| !(0.0..1.0).contains(f)) {
            return Err(Error::Domain(format!("flip positions must lie in [0, 1): {flips:?}")));
        }
        flips.sort_by(f64::total_cmp);
        Ok(Self { flips })
    }

    /// CPMG with interval τ/2: flips at τ/4 and 3τ/4.
    pub fn cpmg() -> Self {
        Self { flips: vec![0.25, 0.75] }
    }

    pub fn flips(&self) -> &[f64] {
        &self.flips
    }

    /// `F` at the period fraction `t_frac`: `+1` after an even number of flips.
    pub fn value(&self, t_frac: f64) -> Result<i8> {
        if !(0.0..1.0).contains(&t_frac) {
            return Err(Error::Domain(format!("t_frac = {t_frac} outside [0, 1)")));
        }
        let preceding = self.flips.iter().take_while(|&&f| f < t_frac).count();
        Ok(if preceding % 2 == 0 { 1 } else { -1 })
    }

    /// Iterator over `(start, end, sign)` of the sign-constant intervals.
    fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let edges = std::iter::once(0.0)
            .chain(self.flips.iter().copied())
            .chain(std::iter::once(1.0));
        let mut prev = None;
        let mut sign = -1.0;
        edges.filter_map(move |e| {
            let out = prev.map(|p| {
                sign = -sign;
                (p, e, sign)
            });
            prev = Some(e);
            out
        })
    }

    /// `f_k = 2 ∫₀¹ F(s) cos(2πks) ds`, evaluated interval by interval.
    pub fn fourier_coeff(&self, k: usize) -> f64 {
        if k == 0 {
            return 2.0 * self.intervals().map(|(a, b, s)| s * (b - a)).sum::<f64>();
        }
        let w = 2.0 * PI * k as f64;
        let sum: f64 = self
            .intervals()
            .map(|(a, b, s)| s * ((w * b).sin() - (w * a).sin()))
            .sum();
        2.0 * sum / w
    }

    /// `∂f_k/∂p` for every flip position `p`, in flip order.
    pub fn coeff_gradient(&self, k: usize) -> Vec<f64> {
        let w = 2.0 * PI * k as f64;
        self.flips
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                // sign before the flip is (-1)^i, after it is -(-1)^i
                let before = if i % 2 == 0 { 1.0 } else { -1.0 };
                2.0 * 2.0 * before * (w * p).cos()
            })
            .collect()
    }
}

/// `F(t_frac)` for a composite timing set.
pub fn modulation_value(timings: &CompositeTimings, t_frac: f64) -> Result<i8> {
    timings.pattern().value(t_frac)
}

/// Exact coefficient from the piecewise-constant integral.
pub fn fourier_coeff_numeric(pattern: &FlipPattern, k: usize) -> f64 {
    pattern.fourier_coeff(k)
}

/// Closed form for the symmetric construction; zero for every even `k`.
pub fn fourier_coeff_symmetric(x1: f64, x2: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let kf = k as f64;
    let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
    let inner: f64 = [(1, x1), (2, x2)]
        .iter()
        .map(|&(j, x)| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * (parity - 1.0) * (2.0 * PI * kf * x).sin()
        })
        .sum();
    4.0 / (PI * kf) * (inner + (kf * PI / 2.0).sin())
}

/// CPMG coefficients `f₀ = 0`, `f_k = 4 sin(kπ/2)/(kπ)`.
pub fn cpmg_coeff(k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let kf = k as f64;
    // exact zeros and signs for the quarter-period sine
    let s = match k % 4 {
        1 => 1.0,
        3 => -1.0,
        _ => 0.0,
    };
    4.0 * s / (kf * PI)
}

/// Tabulated coefficients of one modulation function.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    pub coefficients: Vec<f64>,
    /// µs
    pub period: f64,
    /// rad/µs
    pub omega_dd: f64,
}

impl FourierSpectrum {
    pub fn from_pattern(pattern: &FlipPattern, period: f64, kmax: usize) -> Self {
        Self {
            coefficients: (0..=kmax).map(|k| pattern.fourier_coeff(k)).collect(),
            period,
            omega_dd: 2.0 * PI / period,
        }
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.coefficients.get(k).copied()
    }
}
