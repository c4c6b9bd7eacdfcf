mod common;

use std::f64::consts::PI;

use axy_core::bath::{dipolar_coupling, BathModel, DipolarMode, NuclearSpin, PhysicalConstants};
use axy_core::dynamics::{
    combine_clusters, conditional_coherence, effective_prediction, effective_probability, evolve_full,
    ou_trajectory, probability_from_coherence, sweep, ClusterModel, FrequencyGrid, OuParams, PulseMode,
    SequenceFamily, SimulationConfig,
};
use axy_core::linalg::{CMat, C64};
use axy_core::modfunc::CompositeTimings;
use axy_core::sequence::{
    apply_finite_width, build_axy, build_cpmg, PhaseOrder, PulseEvent, PulseSchedule, ScheduleKind,
};
use axy_core::timing::solve_first_harmonic;
use axy_core::Error;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{expm_i, joint_probability};

const BZ: f64 = 200.0;

fn carbon(x: f64, y: f64, z: f64) -> NuclearSpin {
    NuclearSpin::carbon(Vector3::new(x, y, z), BZ, 1, &PhysicalConstants::default()).unwrap()
}

fn single(spin: NuclearSpin) -> ClusterModel {
    ClusterModel::single(spin, BZ, 1).unwrap()
}

fn axy8(f1: f64, tau: f64, repeats: usize) -> PulseSchedule {
    let t = solve_first_harmonic(f1).unwrap().timings;
    build_axy(8, &t, tau, repeats, PhaseOrder::XyxyYxyx).unwrap()
}

#[test]
fn vanishing_hyperfine_gives_unit_coherence() {
    let spin = NuclearSpin::with_hyperfine(Vector3::new(0.5, 0.0, 0.3), 0.0067, Vector3::zeros(), BZ, 1).unwrap();
    let s = axy8(0.3, 4.0, 3);
    let c = conditional_coherence(&s, &single(spin)).unwrap();
    assert!((c.value() - C64::new(1.0, 0.0)).norm() < 1e-12);
    assert!(c.probability() < 1e-12);
}

#[test]
fn free_evolution_matches_direct_exponentials() {
    let spin = carbon(0.3, 0.2, 0.45);
    let cluster = single(spin);
    let t_total = 37.0;
    let s = PulseSchedule::from_unit(ScheduleKind::Custom, vec![], t_total, 1, 1).unwrap();
    let (h0, h1) = cluster.conditional_hamiltonians();
    let l = (expm_i(&h0, t_total).adjoint() * expm_i(&h1, t_total)).trace() / C64::new(2.0, 0.0);
    let c = conditional_coherence(&s, &cluster).unwrap();
    assert!((c.value().re - l.re).abs() < 1e-10);
    assert!((c.probability() - joint_probability(&s, &cluster)).abs() < 1e-10);
}

#[test]
fn matches_joint_brute_force_for_axy_and_custom_trains() {
    let cluster = single(carbon(0.4, -0.2, 0.35));
    for s in [
        axy8(0.4, 4.3, 2),
        build_axy(4, &CompositeTimings::symmetric(0.03, 0.17).unwrap(), 4.6, 3, PhaseOrder::default()).unwrap(),
        build_cpmg(3.1, 5).unwrap(),
        // odd pulse count per unit, arbitrary phases
        PulseSchedule::from_unit(
            ScheduleKind::Custom,
            vec![PulseEvent::instant(0.3, 0.4), PulseEvent::instant(1.1, 2.0), PulseEvent::instant(1.7, -1.0)],
            2.0,
            1,
            5,
        )
        .unwrap(),
    ] {
        let p = conditional_coherence(&s, &cluster).unwrap().probability();
        let q = joint_probability(&s, &cluster);
        assert!((p - q).abs() < 1e-10, "{:?}: {p} vs {q}", s.kind);
    }
}

/// Single-spin CPMG signal from the two conditional precession axes.
fn cpmg_closed_form(spin: &NuclearSpin, tau: f64, pulses: usize) -> f64 {
    let w0 = Vector3::new(0.0, 0.0, -spin.gamma * BZ);
    let w1 = w0 + spin.hyperfine;
    let (a, b) = (w0.norm() * tau / 4.0, w1.norm() * tau / 4.0);
    let c = w0.normalize().dot(&w1.normalize());
    let cos_phi = a.cos() * b.cos() - c * a.sin() * b.sin();
    let phi = cos_phi.clamp(-1.0, 1.0).acos();
    let m = 1.0
        - (1.0 - c * c) * (1.0 - a.cos()) * (1.0 - b.cos()) / (1.0 + cos_phi) * (pulses as f64 * phi / 2.0).sin().powi(2);
    (1.0 - m) / 2.0
}

#[test]
fn cpmg_resonance_matches_closed_form() {
    let spin = carbon(0.25, 0.1, 0.3);
    let cluster = single(spin.clone());
    let tau_res = 2.0 * PI / spin.omega();
    for (tau, repeats) in [(tau_res, 40), (tau_res * 1.01, 40), (tau_res * 0.7, 13), (tau_res * 3.0, 8)] {
        let s = build_cpmg(tau, repeats).unwrap();
        let p = conditional_coherence(&s, &cluster).unwrap().probability();
        let q = cpmg_closed_form(&spin, tau, 2 * repeats);
        assert!((p - q).abs() < 1e-9, "τ = {tau}: {p} vs {q}");
    }
    let deep = conditional_coherence(&build_cpmg(tau_res, 40).unwrap(), &cluster).unwrap().probability();
    assert!(deep > 0.3, "resonant CPMG signal too weak: {deep}");
}

#[test]
fn finite_mode_rejects_oversized_cluster() {
    let spins: Vec<_> = (0..3).map(|i| carbon(0.3 + 0.2 * i as f64, 0.1, 0.4)).collect();
    let cluster = ClusterModel::new(spins, vec![], BZ, 1).unwrap();
    let config = SimulationConfig { pulse_mode: PulseMode::Finite, max_cluster_spins: 2, ..Default::default() };
    let s = apply_finite_width(&build_cpmg(5.0, 2).unwrap(), config.rabi()).unwrap();
    let err = evolve_full(&s, &cluster, &config, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
    assert!(matches!(err, Error::Capacity(_)));
}

#[test]
fn conditional_mode_rejects_finite_pulses() {
    let s = apply_finite_width(&build_cpmg(5.0, 2).unwrap(), 2.0 * PI * 40.0).unwrap();
    let err = conditional_coherence(&s, &ClusterModel::empty(BZ, 1).unwrap()).unwrap_err();
    assert!(matches!(err, Error::Mode(_)));
}

#[test]
fn empty_cluster_perfect_pulses_return_to_start() {
    let config = SimulationConfig { pulse_mode: PulseMode::Finite, ..Default::default() };
    let empty = ClusterModel::empty(BZ, 1).unwrap();
    for s in [axy8(0.2, 4.67, 5), build_cpmg(4.67, 7).unwrap()] {
        let s = apply_finite_width(&s, config.rabi()).unwrap();
        let p = evolve_full(&s, &empty, &config, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(p < 1e-12, "{p}");
    }
}

#[test]
fn narrow_pulses_converge_to_instantaneous() {
    let spin = carbon(0.3, 0.0, 0.5);
    let cluster = single(spin.clone());
    let tau = 2.0 * PI / spin.omega();
    let s = axy8(0.5, tau, 4);
    let config = SimulationConfig {
        pulse_mode: PulseMode::Finite,
        rabi_mhz: 0.5 / (1e-4 * tau),
        ..Default::default()
    };
    let fin = evolve_full(&apply_finite_width(&s, config.rabi()).unwrap(), &cluster, &config, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    let inst = conditional_coherence(&s, &cluster).unwrap().probability();
    assert!((fin - inst).abs() < 1e-4, "{fin} vs {inst}");
}

fn six_spins() -> Vec<NuclearSpin> {
    vec![
        carbon(0.31, 0.12, 0.44),
        carbon(0.52, 0.05, 0.37),
        carbon(0.40, 0.30, 0.52),
        carbon(-0.35, -0.22, 0.41),
        carbon(-0.50, -0.10, 0.30),
        carbon(-0.42, -0.35, 0.55),
    ]
}

#[test]
fn decoupled_clusters_multiply_exactly() {
    let spins = six_spins();
    let consts = PhysicalConstants::default();
    let mut intra = Vec::new();
    for g in [0..3, 3..6] {
        for i in g.clone() {
            for j in i + 1..g.end {
                intra.push((i, j, dipolar_coupling(&spins[i], &spins[j], &consts, DipolarMode::Full).unwrap()));
            }
        }
    }
    let joint = ClusterModel::new(spins.clone(), intra.clone(), BZ, 1).unwrap();
    let shift = |v: &[(usize, usize, nalgebra::Matrix3<f64>)], by: usize| -> Vec<_> {
        v.iter().map(|(i, j, t)| (i - by, j - by, *t)).collect()
    };
    let a = ClusterModel::new(spins[..3].to_vec(), intra[..3].to_vec(), BZ, 1).unwrap();
    let b = ClusterModel::new(spins[3..].to_vec(), shift(&intra[3..], 3), BZ, 1).unwrap();
    let s = axy8(0.35, 4.5, 3);
    let la = conditional_coherence(&s, &a).unwrap();
    let lb = conditional_coherence(&s, &b).unwrap();
    let lj = conditional_coherence(&s, &joint).unwrap();
    let product = la.pulse * combine_clusters(&[la.bath, lb.bath]);
    assert!((product - lj.value()).norm() < 1e-12, "{product} vs {}", lj.value());
}

#[test]
fn combine_edge_cases() {
    let one = C64::new(1.0, 0.0);
    assert_eq!(probability_from_coherence(combine_clusters(&[one, one, one])), 0.0);
    assert_eq!(probability_from_coherence(combine_clusters(&[one, -one, one])), 1.0);
}

#[test]
fn effective_model_closed_form_matches_two_qubit_evolution() {
    let spin = carbon(0.3, 0.2, 0.4);
    let f = 0.7;
    let a = spin.frame.a_perp;
    let an = a.normalize();
    // (m_s/4) f σ_z ⊗ (a·I), NV basis {|m_s⟩, |0⟩}
    let h = |sign: f64| -> CMat {
        CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(an.z, 0.0),
                C64::new(an.x, -an.y),
                C64::new(an.x, an.y),
                C64::new(-an.z, 0.0),
            ],
        ) * C64::new(sign * f * a.norm() / 8.0, 0.0)
    };
    for t in [0.0, 10.0, 123.0, 400.0] {
        let up = expm_i(&h(1.0), t);
        let down = expm_i(&h(-1.0), t);
        let l = (down.adjoint() * up).trace() / C64::new(2.0, 0.0);
        let p = (1.0 - l.re) / 2.0;
        assert!((effective_prediction(&spin, f, 1, t) - p).abs() < 1e-12);
    }
    assert_eq!(effective_probability(1.0, 0.0, 1, 100.0), 0.0);
    let quarter = 2.0 * PI / (f * a.norm());
    assert!((effective_prediction(&spin, f, -1, quarter) - 0.5).abs() < 1e-12);
}

#[test]
fn effective_model_tracks_resonant_axy() {
    let spin = carbon(0.9, 0.4, 1.1);
    assert!(spin.a_perp_norm() / spin.omega() < 0.05);
    let cluster = single(spin.clone());
    let f1 = 0.5;
    let tau = 2.0 * PI / spin.omega();
    // half an oscillation of the effective model
    let t_half = 4.0 * PI / (f1 * spin.a_perp_norm());
    let units = (t_half / (4.0 * tau)).round() as usize;
    for r in [units / 4, units / 2, 3 * units / 4, units] {
        let s = axy8(f1, tau, r);
        let p = conditional_coherence(&s, &cluster).unwrap().probability();
        let q = effective_prediction(&spin, f1, 1, s.total_time());
        assert!((p - q).abs() <= 0.02 * q, "T = {}: {p} vs {q}", s.total_time());
    }
}

#[test]
fn ou_stationary_spread_and_correlation_time() {
    let p = OuParams { enabled: true, tau_mw: 1000.0, delta_omega: 7e-3, seed: 11 };
    let rabi = 2.0 * PI * 40.0;
    let dt = 10.0;
    let times: Vec<f64> = (0..1_000_000).map(|i| i as f64 * dt).collect();
    let x = ou_trajectory(&p, rabi, &times, &mut p.point_rng(0));
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    assert!((sd / (p.delta_omega * rabi) - 1.0).abs() < 0.02, "sd {sd}");
    // least-squares slope of ln ρ(lag) over lags up to one correlation time
    let lags: Vec<usize> = (1..=100).collect();
    let pts: Vec<(f64, f64)> = lags
        .iter()
        .map(|&k| {
            let c = x.iter().zip(&x[k..]).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / (n - k as f64);
            (k as f64 * dt, (c / var).ln())
        })
        .collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (u, v)| (a + u, b + v));
    let (mx, my) = (sx / m, sy / m);
    let slope = pts.iter().map(|(u, v)| (u - mx) * (v - my)).sum::<f64>()
        / pts.iter().map(|(u, _)| (u - mx).powi(2)).sum::<f64>();
    let tau_fit = -1.0 / slope;
    assert!((tau_fit / p.tau_mw - 1.0).abs() < 0.05, "fitted τ {tau_fit}");
}

fn single_spin_bath(spin: NuclearSpin) -> BathModel {
    BathModel::from_spins(vec![spin], BZ, 1)
}

#[test]
fn empty_bath_sweep_is_flat_zero() {
    let bath = BathModel::from_spins(vec![], BZ, 1);
    let fam = SequenceFamily::Axy {
        n: 8,
        timings: solve_first_harmonic(0.3).unwrap().timings,
        order: PhaseOrder::XyxyYxyx,
        repeats: 10,
    };
    let grid = FrequencyGrid { start_mhz: 0.1, stop_mhz: 0.3, points: 21 }.values().unwrap();
    let sp = sweep(&bath, &fam, &grid, 1, &SimulationConfig::default()).unwrap();
    assert!(sp.probability.iter().all(|&p| p < 1e-12));
}

#[test]
fn single_spin_sweep_peaks_at_larmor_frequency() {
    let spin = carbon(0.9, 0.4, 1.1);
    let target = spin.omega() / (2.0 * PI);
    let bath = single_spin_bath(spin);
    let fam = SequenceFamily::Axy {
        n: 8,
        timings: solve_first_harmonic(0.4 / PI).unwrap().timings,
        order: PhaseOrder::XyxyYxyx,
        repeats: 76,
    };
    let grid = FrequencyGrid::centered(target, 0.01, 201).values().unwrap();
    let sp = sweep(&bath, &fam, &grid, 1, &SimulationConfig::default()).unwrap();
    let imax = (0..grid.len()).max_by(|&a, &b| sp.probability[a].total_cmp(&sp.probability[b])).unwrap();
    let inear = (0..grid.len())
        .min_by(|&a, &b| (grid[a] - target).abs().total_cmp(&(grid[b] - target).abs()))
        .unwrap();
    assert!(imax.abs_diff(inear) <= 1, "peak at {} vs expected {}", grid[imax], grid[inear]);
}

#[test]
fn sweep_is_thread_count_independent_with_noise() {
    let bath = single_spin_bath(carbon(0.5, 0.3, 0.6));
    let fam = SequenceFamily::Cpmg { repeats: 30 };
    let grid = FrequencyGrid { start_mhz: 0.2, stop_mhz: 0.23, points: 12 }.values().unwrap();
    let config = SimulationConfig {
        pulse_mode: PulseMode::Finite,
        detuning_mhz: 1.0,
        ou: OuParams { enabled: true, tau_mw: 1000.0, delta_omega: 7e-3, seed: 99 },
        ..Default::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sweep(&bath, &fam, &grid, 1, &config).unwrap())
    };
    let a = run(1);
    let b = run(4);
    let bits = |s: &axy_core::dynamics::Spectrum| s.probability.iter().map(|p| p.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn sweep_rejects_bad_grids_and_multi_cluster_finite_mode() {
    let bath = BathModel::from_spins(vec![carbon(0.5, 0.3, 0.6), carbon(-0.5, 0.2, 0.7)], BZ, 1);
    let fam = SequenceFamily::Cpmg { repeats: 3 };
    let cfg = SimulationConfig::default();
    assert!(matches!(sweep(&bath, &fam, &[0.2, 0.1], 1, &cfg), Err(Error::Grid(_))));
    let finite = SimulationConfig { pulse_mode: PulseMode::Finite, ..Default::default() };
    assert!(matches!(sweep(&bath, &fam, &[0.2], 1, &finite), Err(Error::Mode(_))));
    let too_small = SimulationConfig { max_cluster_spins: 1, ..Default::default() };
    assert!(matches!(sweep(&bath.clone().with_clusters(2), &fam, &[0.2], 1, &too_small), Err(Error::Capacity(_))));
}
