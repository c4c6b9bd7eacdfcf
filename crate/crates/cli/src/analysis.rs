//! Spectrum comparison and resonance-peak assignment.

use std::f64::consts::PI;

use axy_core::bath::BathModel;
use axy_core::dynamics::{effective_probability, Spectrum};
use axy_core::{Error, Result};

/// Default minimum prominence of a resonance peak, in probability units.
pub const DEFAULT_PROMINENCE: f64 = 0.02;

/// Mean `|p_a − p_b|` over the points whose frequency lies in `window`
/// (inclusive, MHz), or over all points.
pub fn spectrum_deviation(a: &Spectrum, b: &Spectrum, window: Option<(f64, f64)>) -> Result<f64> {
    if a.freq_mhz.len() != b.freq_mhz.len()
        || a.freq_mhz.iter().zip(&b.freq_mhz).any(|(x, y)| x.to_bits() != y.to_bits())
    {
        return Err(Error::Grid("spectra are sampled on different frequency grids".into()));
    }
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let diffs: Vec<f64> = a
        .freq_mhz
        .iter()
        .zip(a.probability.iter().zip(&b.probability))
        .filter(|(f, _)| (lo..=hi).contains(*f))
        .map(|(_, (p, q))| (p - q).abs())
        .collect();
    if diffs.is_empty() {
        return Err(Error::Grid(format!("no grid points inside window [{lo}, {hi}] MHz")));
    }
    Ok(diffs.iter().sum::<f64>() / diffs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    pub prominence: f64,
    /// `(f_kDD, total time µs)`: when set, only spins whose resonant
    /// effective-model signal reaches `prominence` are candidates.
    pub coupling: Option<(f64, f64)>,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self { prominence: DEFAULT_PROMINENCE, coupling: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakStatus {
    Resolved,
    Overlapping,
    Unassigned,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub spin: usize,
    /// `ω_j / (2π k_DD)`, MHz.
    pub line_mhz: f64,
    /// MHz
    pub distance_mhz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub freq_mhz: f64,
    pub height: f64,
    pub prominence: f64,
    /// Full width at half prominence, MHz.
    pub width_mhz: f64,
    pub status: PeakStatus,
    pub assignment: Option<Assignment>,
    pub candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinLine {
    pub spin: usize,
    pub line_mhz: f64,
    /// `|a⃗_⊥|/2π`, kHz.
    pub coupling_khz: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    pub lines: Vec<SpinLine>,
    pub tolerance_mhz: f64,
    /// Spins owning exactly one uniquely assigned peak.
    pub resolved_spins: Vec<usize>,
    /// Visible spins with a line inside the swept range but no peak.
    pub unresolved_spins: Vec<usize>,
    pub overlapping: usize,
    pub unassigned: usize,
}

/// Local maxima with their prominence, `(index, prominence)`.
fn local_maxima(p: &[f64]) -> Vec<(usize, f64)> {
    let n = p.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if p[i - 1] < p[i] {
            let mut k = i;
            while k + 1 < n && p[k + 1] == p[i] {
                k += 1;
            }
            if k + 1 < n && p[k + 1] < p[i] {
                let c = (i + k) / 2;
                out.push((c, prominence(p, c)));
            }
            i = k + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn prominence(p: &[f64], i: usize) -> f64 {
    let h = p[i];
    let left = p[..i].iter().rev().take_while(|&&v| v <= h).fold(h, |m, &v| m.min(v));
    let right = p[i + 1..].iter().take_while(|&&v| v <= h).fold(h, |m, &v| m.min(v));
    h - left.max(right)
}

fn half_width(f: &[f64], p: &[f64], i: usize, prom: f64) -> f64 {
    let level = p[i] - prom / 2.0;
    let cross = |j: usize, k: usize| f[j] + (level - p[j]) * (f[k] - f[j]) / (p[k] - p[j]);
    let mut l = i;
    while l > 0 && p[l - 1] >= level {
        l -= 1;
    }
    let left = if l == 0 { f[0] } else { cross(l - 1, l) };
    let mut r = i;
    while r + 1 < p.len() && p[r + 1] >= level {
        r += 1;
    }
    let right = if r + 1 == p.len() { f[r] } else { cross(r, r + 1) };
    right - left
}

/// Finds resonance peaks and assigns each to the nearest spin line
/// `ω_j/(2π k_DD)` within half the median peak spacing. Peak positions are
/// reported as modulation frequencies `1/τ`, i.e. the sweep axis over `k_DD`.
pub fn detect_peaks(spectrum: &Spectrum, bath: &BathModel, k_dd: usize, opts: &PeakOptions) -> PeakReport {
    let f: Vec<f64> = spectrum.freq_mhz.iter().map(|x| x / k_dd as f64).collect();
    let f = &f;
    let p = &spectrum.probability;
    let lines: Vec<SpinLine> = bath
        .spins
        .iter()
        .enumerate()
        .map(|(j, s)| SpinLine {
            spin: j,
            line_mhz: s.omega() / (2.0 * PI * k_dd as f64),
            coupling_khz: s.a_perp_norm() / (2.0 * PI) * 1e3,
            visible: opts
                .coupling
                .is_none_or(|(fk, t)| effective_probability(s.a_perp_norm(), fk, bath.ms, t) >= opts.prominence),
        })
        .collect();
    let mut peaks: Vec<Peak> = local_maxima(p)
        .into_iter()
        .filter(|&(_, prom)| prom >= opts.prominence)
        .map(|(i, prom)| Peak {
            index: i,
            freq_mhz: f[i],
            height: p[i],
            prominence: prom,
            width_mhz: half_width(f, p, i, prom),
            status: PeakStatus::Unassigned,
            assignment: None,
            candidates: Vec::new(),
        })
        .collect();
    let step = if f.len() > 1 { (f[f.len() - 1] - f[0]) / (f.len() - 1) as f64 } else { 0.0 };
    let tolerance = if peaks.len() >= 2 {
        let mut gaps: Vec<f64> = peaks.windows(2).map(|w| w[1].freq_mhz - w[0].freq_mhz).collect();
        gaps.sort_by(f64::total_cmp);
        let m = gaps.len();
        let median = if m % 2 == 1 { gaps[m / 2] } else { 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]) };
        (median / 2.0).max(step)
    } else {
        (2.0 * step).max(peaks.first().map_or(0.0, |pk| pk.width_mhz / 2.0))
    };
    for pk in peaks.iter_mut() {
        pk.candidates = lines
            .iter()
            .filter(|l| l.visible && (l.line_mhz - pk.freq_mhz).abs() <= tolerance)
            .map(|l| l.spin)
            .collect();
        match pk.candidates.as_slice() {
            [] => pk.status = PeakStatus::Unassigned,
            [j] => {
                pk.status = PeakStatus::Resolved;
                pk.assignment = Some(Assignment {
                    spin: *j,
                    line_mhz: lines[*j].line_mhz,
                    distance_mhz: (lines[*j].line_mhz - pk.freq_mhz).abs(),
                });
            }
            _ => pk.status = PeakStatus::Overlapping,
        }
    }
    // one peak per spin: the closest keeps it
    for j in 0..lines.len() {
        let owners: Vec<usize> =
            (0..peaks.len()).filter(|&k| peaks[k].assignment.is_some_and(|a| a.spin == j)).collect();
        if let Some(&keep) = owners.iter().min_by(|&&a, &&b| {
            let da = peaks[a].assignment.map_or(f64::INFINITY, |x| x.distance_mhz);
            let db = peaks[b].assignment.map_or(f64::INFINITY, |x| x.distance_mhz);
            da.total_cmp(&db)
        }) {
            for &k in owners.iter().filter(|&&k| k != keep) {
                peaks[k].assignment = None;
                peaks[k].status = PeakStatus::Unassigned;
            }
        }
    }
    let mut resolved_spins: Vec<usize> = peaks.iter().filter_map(|pk| pk.assignment.map(|a| a.spin)).collect();
    resolved_spins.sort_unstable();
    let (lo, hi) = (f.first().copied().unwrap_or(0.0), f.last().copied().unwrap_or(0.0));
    let unresolved_spins = lines
        .iter()
        .filter(|l| l.visible && (lo..=hi).contains(&l.line_mhz) && resolved_spins.binary_search(&l.spin).is_err())
        .map(|l| l.spin)
        .collect();
    let overlapping = peaks.iter().filter(|pk| pk.status == PeakStatus::Overlapping).count();
    let unassigned = peaks.iter().filter(|pk| pk.status == PeakStatus::Unassigned).count();
    PeakReport { peaks, lines, tolerance_mhz: tolerance, resolved_spins, unresolved_spins, overlapping, unassigned }
}

#[cfg(test)]
mod tests {
    use super::*;
    use axy_core::dynamics::Manifest;

    fn spectrum(f: Vec<f64>, p: Vec<f64>) -> Spectrum {
        let n = f.len();
        Spectrum {
            freq_mhz: f,
            tau_us: vec![1.0; n],
            probability: p,
            manifest: Manifest { config_hash: String::new(), seed: 0, schedule: String::new(), k_dd: 1 },
        }
    }

    #[test]
    fn deviation_edge_cases() {
        let f: Vec<f64> = (0..10).map(|i| 0.2 + i as f64 * 1e-3).collect();
        let a = spectrum(f.clone(), vec![0.0; 10]);
        let b = spectrum(f.clone(), vec![1.0; 10]);
        assert_eq!(spectrum_deviation(&a, &a, None).unwrap(), 0.0);
        assert_eq!(spectrum_deviation(&a, &b, None).unwrap(), 1.0);
        let c = spectrum(f.iter().map(|x| x + 1e-9).collect(), vec![0.0; 10]);
        assert!(spectrum_deviation(&a, &c, None).is_err());
        let mut d = b.clone();
        d.probability[0] = 0.0;
        assert_eq!(spectrum_deviation(&a, &d, Some((0.2005, 1.0))).unwrap(), 1.0);
    }

    #[test]
    fn prominence_of_simple_shapes() {
        let p = [0.0, 0.1, 0.5, 0.2, 0.3, 0.0];
        let m = local_maxima(&p);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].0, 2);
        assert!((m[0].1 - 0.5).abs() < 1e-15);
        assert!((m[1].1 - 0.1).abs() < 1e-15);
        // plateau maximum reported once at its middle
        let q = [0.0, 0.4, 0.4, 0.4, 0.0];
        assert_eq!(local_maxima(&q), vec![(2, 0.4)]);
    }

    #[test]
    fn width_of_triangle() {
        let f: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let p: Vec<f64> = (0..11).map(|i| 1.0 - (i as f64 - 5.0).abs() / 5.0).collect();
        assert!((half_width(&f, &p, 5, 1.0) - 5.0).abs() < 1e-12);
    }
}
