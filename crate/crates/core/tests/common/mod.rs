//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use axy_core::dynamics::ClusterModel;
use axy_core::linalg::{CMat, C64};
use axy_core::sequence::PulseSchedule;

/// `exp(−iHt)` by scaling and squaring of a Taylor series.
pub fn expm_i(h: &CMat, t: f64) -> CMat {
    let a = h * C64::new(0.0, -t);
    let norm = a.norm();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let a = a / C64::new(2f64.powi(s as i32), 0.0);
    let n = a.nrows();
    let mut term = CMat::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Joint NV ⊗ cluster propagation with ideal instantaneous pulses, written
/// out event by event over the whole train.
pub fn joint_probability(schedule: &PulseSchedule, cluster: &ClusterModel) -> f64 {
    let d = cluster.dim();
    let (h0, h1) = cluster.conditional_hamiltonians();
    let mut h = CMat::zeros(2 * d, 2 * d);
    h.view_mut((0, 0), (d, d)).copy_from(&h1);
    h.view_mut((d, d), (d, d)).copy_from(&h0);
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut s = CMat::zeros(2 * d, d);
    for i in 0..d {
        s[(i, i)] = r;
        s[(d + i, i)] = r;
    }
    let mut t = 0.0;
    for e in schedule.events() {
        s = expm_i(&h, e.center_time - t) * s;
        // −iσ_φ ⊗ 1
        let mut p = CMat::zeros(2 * d, 2 * d);
        let up = C64::new(0.0, -1.0) * C64::from_polar(1.0, -e.phase);
        let down = C64::new(0.0, -1.0) * C64::from_polar(1.0, e.phase);
        for i in 0..d {
            p[(i, d + i)] = up;
            p[(d + i, i)] = down;
        }
        s = p * s;
        t = e.center_time;
    }
    s = expm_i(&h, schedule.total_time() - t) * s;
    let m = (s.rows(d, d) - s.rows(0, d)) * r;
    m.norm_squared() / d as f64
}
