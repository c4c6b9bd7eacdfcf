use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Stream offset for per-point drive-noise generators; stream ids below it
/// are reserved for other consumers of the master seed.
pub const NOISE_STREAM_BASE: u64 = 1 << 32;

/// Ornstein-Uhlenbeck fluctuation of the Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub enabled: bool,
    /// Correlation time, µs.
    pub tau_mw: f64,
    /// Stationary standard deviation relative to Ω.
    pub delta_omega: f64,
    pub seed: u64,
}

impl Default for OuParams {
    fn default() -> Self {
        Self { enabled: false, tau_mw: 1000.0, delta_omega: 7e-3, seed: 0 }
    }
}

impl OuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_mw > 0.0) || !(self.delta_omega >= 0.0) {
            return Err(Error::Domain(format!(
                "OU parameters need τ_mw > 0 and δ_Ω ≥ 0, got {} and {}",
                self.tau_mw, self.delta_omega
            )));
        }
        Ok(())
    }

    /// Diffusion constant `c = 2δ_Ω²Ω²/τ_mw` for Rabi frequency `rabi`.
    pub fn c_mw(&self, rabi: f64) -> f64 {
        2.0 * self.delta_omega.powi(2) * rabi.powi(2) / self.tau_mw
    }

    /// Generator for sweep point `index`, independent of evaluation order.
    pub fn point_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(NOISE_STREAM_BASE + index as u64);
        rng
    }
}

/// Samples `ΔΩ(tᵢ)` by the exact OU update, starting from the stationary
/// distribution. `times` must be nondecreasing.
pub fn ou_trajectory<R: Rng + ?Sized>(params: &OuParams, rabi: f64, times: &[f64], rng: &mut R) -> Vec<f64> {
    let sd = params.delta_omega * rabi;
    let mut out = Vec::with_capacity(times.len());
    let mut prev: Option<(f64, f64)> = None;
    for &t in times {
        let n: f64 = rng.sample(StandardNormal);
        let x = match prev {
            None => sd * n,
            Some((t0, x0)) => {
                let dt = t - t0;
                assert!(dt >= 0.0, "OU sample times must be nondecreasing");
                let decay = (-dt / params.tau_mw).exp();
                // c τ / 2 (1 − e^{−2dt/τ}) with c τ / 2 = sd²
                x0 * decay + n * sd * (-(-2.0 * dt / params.tau_mw).exp_m1()).sqrt()
            }
        };
        out.push(x);
        prev = Some((t, x));
    }
    out
}
