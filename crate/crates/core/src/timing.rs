//! Solving composite timings for target Fourier coefficients.
//!
//! Every solution is checked against the piecewise-exact coefficient oracle
//! in [`crate::modfunc`]. Closed forms are tried first; when their residual
//! exceeds [`RESIDUAL_TOL`] a multi-start damped Newton solve takes over.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::modfunc::{CompositeTimings, FlipPattern};

/// Oracle residual every returned solution must meet.
pub const RESIDUAL_TOL: f64 = 1e-8;

const EQUAL_SPACING: (f64, f64) = (0.05, 0.15);

/// Which route produced a timing set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePath {
    ClosedForm,
    Numeric,
}

impl std::fmt::Display for SolvePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolvePath::ClosedForm => "closed-form",
            SolvePath::Numeric => "numeric",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingSolution {
    pub timings: CompositeTimings,
    pub path: SolvePath,
    /// Largest oracle residual over all constrained harmonics.
    pub residual: f64,
}

impl TimingSolution {
    /// `(x₁, x₂)` of a symmetric solution.
    pub fn pair(&self) -> (f64, f64) {
        let x = self.timings.times();
        (x[0], x[1])
    }
}

/// A tuned harmonic plus harmonics forced to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTarget {
    pub tuned: usize,
    pub value: f64,
    pub zeroed: Vec<usize>,
}

impl HarmonicTarget {
    pub fn new(tuned: usize, value: f64, zeroed: impl Into<Vec<usize>>) -> Result<Self> {
        let zeroed = zeroed.into();
        if tuned == 0 {
            return Err(Error::Domain("tuned harmonic must be positive".into()));
        }
        if zeroed.contains(&tuned) {
            return Err(Error::Domain(format!(
                "harmonic {tuned} cannot be both tuned and zeroed"
            )));
        }
        Ok(Self { tuned, value, zeroed })
    }

    /// Odd zeroed harmonics other than the tuned one (evens vanish by symmetry).
    fn odd_zeroed(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.zeroed.iter().copied().filter(|k| k % 2 == 1).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn constraints(&self) -> Vec<(usize, f64)> {
        let mut c = vec![(self.tuned, self.value)];
        let mut z = self.zeroed.clone();
        z.sort_unstable();
        z.dedup();
        c.extend(z.into_iter().map(|k| (k, 0.0)));
        c
    }
}

/// Half-width of the open interval reachable for `f₁` with `f₃ = 0`.
pub fn first_harmonic_bound() -> f64 {
    (8.0 * (PI / 9.0).cos() - 4.0) / PI
}

/// Half-width of the open interval reachable for `f₃` with `f₁ = 0`.
pub fn third_harmonic_bound() -> f64 {
    4.0 / PI
}

fn check_range(value: f64, bound: f64) -> Result<()> {
    if value.is_finite() && value.abs() < bound {
        Ok(())
    } else {
        Err(Error::Range { value, lo: -bound, hi: bound })
    }
}

/// Largest |f_k − target| over the constraint list, via the oracle.
fn oracle_residual(pattern: &FlipPattern, constraints: &[(usize, f64)]) -> f64 {
    constraints
        .iter()
        .map(|&(k, v)| (pattern.fourier_coeff(k) - v).abs())
        .fold(0.0, f64::max)
}

/// The published closed form for `f₁` with `f₃ = 0`, transcribed literally.
/// Returns `None` when it does not produce a real, ordered pair.
fn first_harmonic_closed_form(f1: f64) -> Option<(f64, f64)> {
    let fp = f1 * PI;
    let w1 = 4.0 - fp;
    let w2 = w1 * (960.0 - 144.0 * fp - 12.0 * fp * fp + fp * fp * fp);
    let x = |s: f64| {
        let num = s * (3.0 * fp - 12.0) * w1 + 3f64.sqrt() * w2;
        let inner = w2 - 96.0 * f1 * w1 * PI + s * w1 * w1;
        let den = 6f64.sqrt() * inner.sqrt() * 3f64.sqrt() * w2;
        (num / den).atan() / (2.0 * PI)
    };
    let (x1, x2) = (x(1.0), x(-1.0));
    (x1.is_finite() && x2.is_finite()).then_some((x1, x2))
}

/// `(x₁, x₂)` with `f₁ = f1_target`, `f₃ = 0` (even harmonics vanish by symmetry).
pub fn solve_first_harmonic(f1_target: f64) -> Result<TimingSolution> {
    check_range(f1_target, first_harmonic_bound())?;
    let constraints = [(1, f1_target), (3, 0.0)];
    if let Some((x1, x2)) = first_harmonic_closed_form(f1_target) {
        if let Ok(t) = CompositeTimings::symmetric(x1, x2) {
            let residual = oracle_residual(&t.pattern(), &constraints);
            if residual < RESIDUAL_TOL {
                return Ok(TimingSolution { timings: t, path: SolvePath::ClosedForm, residual });
            }
        }
    }
    log::debug!("closed form for f1 = {f1_target} rejected; solving numerically");
    solve_symmetric_numeric(&constraints)
}

/// `(x₁, x₂)` with `f₁ = 0`, `f₃ = f3_target`.
pub fn solve_third_harmonic(f3_target: f64) -> Result<TimingSolution> {
    check_range(f3_target, third_harmonic_bound())?;
    let constraints = [(3, f3_target), (1, 0.0)];
    let root = (5.0 + PI * f3_target).sqrt();
    let x = |j: i32| {
        let q = 4.0 / (root + f64::from((-1i32).pow(j as u32)));
        0.25 - (q * q - 1.0).sqrt().atan() / (2.0 * PI)
    };
    if let Ok(t) = CompositeTimings::symmetric(x(1), x(2)) {
        let residual = oracle_residual(&t.pattern(), &constraints);
        if residual < RESIDUAL_TOL {
            return Ok(TimingSolution { timings: t, path: SolvePath::ClosedForm, residual });
        }
    }
    solve_symmetric_numeric(&constraints)
}

/// Numeric solve for an arbitrary tuned harmonic plus zeroed harmonics.
///
/// When the tuned harmonic is odd and at most one odd harmonic is zeroed, the
/// symmetric two-variable problem is solved; otherwise all five times are free.
pub fn solve_general(target: &HarmonicTarget) -> Result<TimingSolution> {
    let constraints = target.constraints();
    if target.tuned % 2 == 1 && target.odd_zeroed().len() <= 1 {
        // even harmonics and f0 vanish identically under the symmetric construction
        let active: Vec<(usize, f64)> = constraints
            .iter()
            .copied()
            .filter(|&(k, _)| k % 2 == 1)
            .collect();
        let sol = solve_symmetric_numeric(&active)?;
        let residual = oracle_residual(&sol.timings.pattern(), &constraints);
        return Ok(TimingSolution { residual, ..sol });
    }
    let mut full = constraints;
    if !full.iter().any(|&(k, _)| k == 0) {
        full.push((0, 0.0));
    }
    solve_free_numeric(&full)
}

/// Multi-start seeds over the triangle `0 < x₁ < x₂ < 1/4`.
fn symmetric_seeds() -> Vec<(f64, f64)> {
    let mut seeds = vec![EQUAL_SPACING];
    let n = 8;
    for i in 0..n {
        for j in 0..n {
            let x1 = 0.25 * (i as f64 + 0.5) / n as f64;
            let x2 = 0.25 * (j as f64 + 0.5) / n as f64;
            if x1 < x2 {
                seeds.push((x1, x2));
            }
        }
    }
    seeds
}

fn solve_symmetric_numeric(constraints: &[(usize, f64)]) -> Result<TimingSolution> {
    let to_timings = |v: &DVector<f64>| CompositeTimings::symmetric(v[0], v[1]).ok();
    let chain = |v: &DVector<f64>| {
        // x1 moves flips 0, 5 forward and 4, 9 backward; x2 moves 1, 6 and 3, 8
        let t = to_timings(v)?;
        let p = t.pattern();
        let rows = constraints.len();
        let mut jac = DMatrix::zeros(rows, 2);
        for (r, &(k, _)) in constraints.iter().enumerate() {
            let g = p.coeff_gradient(k);
            jac[(r, 0)] = g[0] - g[9] - g[4] + g[5];
            jac[(r, 1)] = g[1] - g[8] - g[3] + g[6];
        }
        Some((p, jac))
    };
    let seeds: Vec<DVector<f64>> = symmetric_seeds()
        .into_iter()
        .map(|(a, b)| DVector::from_vec(vec![a, b]))
        .collect();
    let reference = DVector::from_vec(vec![EQUAL_SPACING.0, EQUAL_SPACING.1]);
    multistart(constraints, &seeds, &reference, |v| {
        let (p, jac) = chain(v)?;
        Some((to_timings(v)?, p, jac))
    })
}

fn solve_free_numeric(constraints: &[(usize, f64)]) -> Result<TimingSolution> {
    let to_timings = |v: &DVector<f64>| {
        CompositeTimings::new([v[0], v[1], v[2], v[3], v[4]]).ok()
    };
    let seeds: Vec<DVector<f64>> = symmetric_seeds()
        .into_iter()
        .map(|(a, b)| DVector::from_vec(vec![a, b, 0.25, 0.5 - b, 0.5 - a]))
        .collect();
    let reference = DVector::from_vec(vec![0.05, 0.15, 0.25, 0.35, 0.45]);
    multistart(constraints, &seeds, &reference, |v| {
        let t = to_timings(v)?;
        let p = t.pattern();
        let mut jac = DMatrix::zeros(constraints.len(), 5);
        for (r, &(k, _)) in constraints.iter().enumerate() {
            let g = p.coeff_gradient(k);
            for i in 0..5 {
                // flip i sits at x_i, flip 9-i at 1 - x_i
                jac[(r, i)] = g[i] - g[9 - i];
            }
        }
        Some((t, p, jac))
    })
}

/// Runs damped Newton from every seed, keeps converged solutions and returns
/// the one nearest `reference`.
fn multistart<F>(
    constraints: &[(usize, f64)],
    seeds: &[DVector<f64>],
    reference: &DVector<f64>,
    eval: F,
) -> Result<TimingSolution>
where
    F: Fn(&DVector<f64>) -> Option<(CompositeTimings, FlipPattern, DMatrix<f64>)>,
{
    let residual_vec = |p: &FlipPattern| {
        DVector::from_iterator(
            constraints.len(),
            constraints.iter().map(|&(k, v)| p.fourier_coeff(k) - v),
        )
    };
    let mut best_residual = f64::INFINITY;
    let mut best: Option<(f64, TimingSolution)> = None;

    for seed in seeds {
        let Some(mut current) = eval(seed) else { continue };
        let mut x = seed.clone();
        let mut r = residual_vec(&current.1);
        let mut norm = r.norm();
        for _ in 0..100 {
            if norm < 1e-13 {
                break;
            }
            let jac = &current.2;
            // least-squares / minimum-norm Newton step
            let Ok(step) = jac.clone().svd(true, true).solve(&(-&r), 1e-14) else { break };
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-6 {
                let trial = &x + &step * lambda;
                if let Some(next) = eval(&trial) {
                    let rn = residual_vec(&next.1);
                    if rn.norm() < norm {
                        x = trial;
                        norm = rn.norm();
                        r = rn;
                        current = next;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let residual = oracle_residual(&current.1, constraints);
        best_residual = best_residual.min(residual);
        if residual < RESIDUAL_TOL {
            let dist = (&x - reference).norm();
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((
                    dist,
                    TimingSolution { timings: current.0, path: SolvePath::Numeric, residual },
                ));
            }
        }
    }
    best.map(|(_, s)| s).ok_or(Error::Infeasible { best_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!((first_harmonic_bound() - 1.1196).abs() < 1e-4);
        assert!((first_harmonic_bound() * PI - 3.5175).abs() < 1e-4);
    }

    #[test]
    fn first_harmonic_out_of_range() {
        let err = solve_first_harmonic(4.0 / PI + 1.0).unwrap_err();
        assert!(matches!(err, Error::Range { .. }));
        assert!(solve_first_harmonic(f64::NAN).is_err());
    }

    #[test]
    fn first_harmonic_zero_is_equal_spacing() {
        let s = solve_first_harmonic(0.0).unwrap();
        let (x1, x2) = s.pair();
        assert!((x1 - 0.05).abs() < 1e-9 && (x2 - 0.15).abs() < 1e-9, "{x1} {x2}");
    }

    #[test]
    fn first_harmonic_fig2_target() {
        let target = 0.1 * 4.0 / PI;
        let s = solve_first_harmonic(target).unwrap();
        let p = s.timings.pattern();
        assert!((p.fourier_coeff(1) - target).abs() < 1e-8);
        for k in [2, 3, 4] {
            assert!(p.fourier_coeff(k).abs() < 1e-8);
        }
        let (x1, x2) = s.pair();
        assert!(0.0 < x1 && x1 < x2 && x2 < 0.25);
    }

    #[test]
    fn third_harmonic_zero_is_equal_spacing() {
        let s = solve_third_harmonic(0.0).unwrap();
        assert_eq!(s.path, SolvePath::ClosedForm);
        let (x1, x2) = s.pair();
        assert!((x1 - 0.05).abs() < 1e-9 && (x2 - 0.15).abs() < 1e-9);
    }

    #[test]
    fn third_harmonic_range() {
        assert!(matches!(solve_third_harmonic(2.0), Err(Error::Range { .. })));
        let s = solve_third_harmonic(4.0 / (111.0 * PI)).unwrap();
        let p = s.timings.pattern();
        assert!(p.fourier_coeff(1).abs() < 1e-8);
        assert!((p.fourier_coeff(3) - 4.0 / (111.0 * PI)).abs() < 1e-8);
    }

    #[test]
    fn general_agrees_with_first_harmonic() {
        let f = 0.1 * 4.0 / PI;
        let g = solve_general(&HarmonicTarget::new(1, f, vec![2, 3, 4]).unwrap()).unwrap();
        let a = solve_first_harmonic(f).unwrap();
        let (gx, ax) = (g.timings.times(), a.timings.times());
        for i in 0..5 {
            assert!((gx[i] - ax[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn general_agrees_with_third_harmonic() {
        let f = 4.0 / (111.0 * PI);
        let g = solve_general(&HarmonicTarget::new(3, f, vec![1, 2, 4]).unwrap()).unwrap();
        let a = solve_third_harmonic(f).unwrap();
        let (gx, ax) = (g.pair(), a.pair());
        assert!((gx.0 - ax.0).abs() < 1e-8 && (gx.1 - ax.1).abs() < 1e-8);
    }

    #[test]
    fn general_cpmg_maximum_is_infeasible() {
        let t = HarmonicTarget::new(1, 4.0 / PI, vec![3]).unwrap();
        assert!(matches!(solve_general(&t), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn general_five_dimensional() {
        // f1 tuned, f3, f5, f7 zeroed: needs all five times free
        let t = HarmonicTarget::new(1, 0.2, vec![3, 5, 7]).unwrap();
        let s = solve_general(&t).unwrap();
        let p = s.timings.pattern();
        assert!((p.fourier_coeff(1) - 0.2).abs() < 1e-8);
        for k in [0, 3, 5, 7] {
            assert!(p.fourier_coeff(k).abs() < 1e-8, "k={k}: {}", p.fourier_coeff(k));
        }
    }

    #[test]
    fn target_validation() {
        assert!(HarmonicTarget::new(1, 0.1, vec![1]).is_err());
        assert!(HarmonicTarget::new(0, 0.1, vec![]).is_err());
    }
}
