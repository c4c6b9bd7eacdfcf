use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use axy_core::bath::{addressability_report, generate_lattice_bath, LatticeSpec, PhysicalConstants};
use axy_core::dynamics::{sweep, PulseMode, Spectrum};
use axy_core::modfunc::{fourier_coeff_numeric, CompositeTimings};
use axy_core::pulse_error::{default_eta_grid, order_scaling_fit, ErrorParams, ScalingSequence};
use axy_core::sequence::apply_finite_width;
use axy_core::timing::{solve_first_harmonic, solve_general, solve_third_harmonic, HarmonicTarget};

use crate::analysis::{detect_peaks, spectrum_deviation, PeakOptions, PeakStatus};
use crate::cli::*;
use crate::config::SweepConfig;
use crate::formats::{read_bath, read_spectrum_csv, write_bath, write_schedule, write_spectrum_csv, RunManifest};
use crate::{read_input, CliError};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Design(a) => emit(out, &design(a)?),
        Command::Bath(BathCommand::Gen(a)) => emit(out, &bath_gen(a, cli.seed.unwrap_or(0))?),
        Command::Bath(BathCommand::Inspect(a)) => emit(out, &bath_inspect(a)?),
        Command::Sweep(a) => run_sweep(a, cli.seed, out),
        Command::Deviation(a) => emit(out, &deviation(a)?),
        Command::Peaks(a) => emit(out, &peaks(a)?),
        Command::OrderScaling(a) => emit(out, &order_scaling(a)?),
        Command::Schedule(ScheduleCommand::Dump(a)) => emit(out, &schedule_dump(a, cli.seed)?),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text),
        None => match std::io::stdout().write_all(text.as_bytes()) {
            // a closed pipe (e.g. `| head`) is not an error
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source }),
        },
    }
}

pub fn design(a: &DesignArgs) -> Result<String, CliError> {
    let sol = match (a.target.f1, a.target.f3, a.target.harmonic) {
        (Some(f1), _, _) => solve_first_harmonic(f1)?,
        (_, Some(f3), _) => solve_third_harmonic(f3)?,
        (_, _, Some(k)) => {
            let v = a.value.ok_or_else(|| CliError::Config("--harmonic needs --value".into()))?;
            solve_general(&HarmonicTarget::new(k, v, a.zero.clone())?)?
        }
        _ => return Err(CliError::Config("give --f1, --f3 or --harmonic".into())),
    };
    let mut s = String::new();
    writeln!(s, "path {}", sol.path).unwrap();
    writeln!(s, "residual {:.3e}", sol.residual).unwrap();
    for (i, x) in sol.timings.times().iter().enumerate() {
        writeln!(s, "x{} {x:.15}", i + 1).unwrap();
    }
    writeln!(s, "k f_k").unwrap();
    let pattern = sol.timings.pattern();
    for k in 0..=a.kmax {
        writeln!(s, "{k} {:+.12e}", fourier_coeff_numeric(&pattern, k)).unwrap();
    }
    Ok(s)
}

fn bath_gen(a: &BathGenArgs, seed: u64) -> Result<String, CliError> {
    let spec = LatticeSpec { seed, radius: a.radius_nm, abundance: a.abundance, bz: a.bz_gauss, ms: a.ms };
    let bath = generate_lattice_bath(&spec, &PhysicalConstants::default())?;
    log::info!("generated {} spins within {} nm", bath.len(), a.radius_nm);
    Ok(write_bath(&bath))
}

fn bath_inspect(a: &BathInspectArgs) -> Result<String, CliError> {
    let mut bath = read_bath(&read_input(&a.file)?)?;
    if let Some(m) = a.max_cluster {
        if m == 0 {
            return Err(CliError::Config("--max-cluster must be positive".into()));
        }
        bath = bath.with_clusters(m);
    }
    let mut cluster_of = vec![0; bath.len()];
    for (c, members) in bath.clusters.iter().enumerate() {
        for &j in members {
            cluster_of[j] = c;
        }
    }
    let khz = |w: f64| w / (2.0 * PI) * 1e3;
    let mut s = String::new();
    writeln!(s, "# spins {} clusters {} largest {}", bath.len(), bath.clusters.len(), bath.max_cluster_size())
        .unwrap();
    writeln!(s, "index r_nm omega_kHz line_MHz a_perp_kHz A_par_kHz cluster").unwrap();
    for (j, sp) in bath.spins.iter().enumerate() {
        writeln!(
            s,
            "{j} {:.4} {:.4} {:.6} {:.4} {:.4} {}",
            sp.position.norm(),
            khz(sp.omega()),
            sp.omega() / (2.0 * PI * a.k_dd as f64),
            khz(sp.a_perp_norm()),
            khz(sp.hyperfine.dot(&sp.frame.omega_hat)),
            cluster_of[j]
        )
        .unwrap();
    }
    if let (Some(t), Some(f)) = (a.target, a.f_kdd) {
        let r = addressability_report(&bath, t, a.k_dd, f, a.margin)?;
        writeln!(s, "# addressability target {t} margin {}", r.margin).unwrap();
        writeln!(s, "index harmonic_ratio crosstalk_ratio flagged").unwrap();
        for e in &r.entries {
            let c = e.crosstalk_ratio.map_or("-".to_string(), |c| format!("{c:.3e}"));
            writeln!(s, "{} {:.3e} {c} {}", e.index, e.harmonic_ratio, e.flagged).unwrap();
        }
    }
    Ok(s)
}

/// Runs the sweep described by the config at `path`, returning the spectrum,
/// the CSV text and the manifest text.
pub fn sweep_from_config(path: &Path, seed: Option<u64>) -> Result<(Spectrum, String, String), CliError> {
    let text = read_input(path)?;
    let config = SweepConfig::parse(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let r = config.resolve(base, seed)?;
    if let Some(sol) = &r.timing {
        log::info!("timings via {} solver, residual {:.2e}", sol.path, sol.residual);
    }
    let spectrum = sweep(&r.bath, &r.family, &r.grid, r.k_dd, &r.sim)?;
    let csv = write_spectrum_csv(&spectrum);
    let manifest = RunManifest::new(&text, r.seed, &spectrum, &csv).to_json();
    Ok((spectrum, csv, manifest))
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn run_sweep(a: &SweepArgs, seed: Option<u64>, out: Option<&Path>) -> Result<(), CliError> {
    let out = out.ok_or_else(|| CliError::Config("sweep needs --out for the spectrum CSV".into()))?;
    let start = Instant::now();
    let (spectrum, csv, manifest) = sweep_from_config(&a.config, seed)?;
    write_file(out, &csv)?;
    write_file(&manifest_path(out), &manifest)?;
    eprintln!(
        "{} points in {:.3} s on {} threads",
        spectrum.len(),
        start.elapsed().as_secs_f64(),
        rayon::current_num_threads()
    );
    Ok(())
}

fn deviation(a: &DeviationArgs) -> Result<String, CliError> {
    let sa = read_spectrum_csv(&read_input(&a.a)?)?;
    let sb = read_spectrum_csv(&read_input(&a.b)?)?;
    let window = a.window.as_ref().map(|w| (w[0], w[1]));
    Ok(format!("{:.12e}\n", spectrum_deviation(&sa, &sb, window)?))
}

fn peaks(a: &PeaksArgs) -> Result<String, CliError> {
    let spectrum = read_spectrum_csv(&read_input(&a.spectrum)?)?;
    if spectrum.is_empty() {
        return Err(CliError::Config("spectrum has no points".into()));
    }
    let bath = read_bath(&read_input(&a.bath)?)?;
    let opts = PeakOptions { prominence: a.prominence, coupling: a.f_kdd.zip(a.total_time_us) };
    let r = detect_peaks(&spectrum, &bath, a.k_dd, &opts);
    let mut s = String::new();
    writeln!(
        s,
        "# peaks {} resolved {} overlapping {} unassigned {} unresolved_spins {} tolerance_MHz {:.6e}",
        r.peaks.len(),
        r.resolved_spins.len(),
        r.overlapping,
        r.unassigned,
        r.unresolved_spins.len(),
        r.tolerance_mhz
    )
    .unwrap();
    writeln!(s, "freq_MHz height prominence width_MHz status spin line_MHz distance_MHz coupling_kHz").unwrap();
    for pk in &r.peaks {
        let status = match pk.status {
            PeakStatus::Resolved => "resolved",
            PeakStatus::Overlapping => "overlapping",
            PeakStatus::Unassigned => "unassigned",
        };
        let assigned = match pk.assignment {
            Some(x) => format!("{} {:.9} {:.3e} {:.4}", x.spin, x.line_mhz, x.distance_mhz, r.lines[x.spin].coupling_khz),
            None => "- - - -".into(),
        };
        writeln!(
            s,
            "{:.9} {:.6} {:.6} {:.3e} {status} {assigned}",
            pk.freq_mhz, pk.height, pk.prominence, pk.width_mhz
        )
        .unwrap();
    }
    for j in &r.unresolved_spins {
        writeln!(s, "# unresolved spin {j} line_MHz {:.9}", r.lines[*j].line_mhz).unwrap();
    }
    Ok(s)
}

fn order_scaling(a: &OrderScalingArgs) -> Result<String, CliError> {
    let timings = CompositeTimings::symmetric(a.x[0], a.x[1])?;
    let params = ErrorParams { delta_tilde: a.delta_tilde, eps_tilde: a.eps_tilde, detuning: a.detuning, tau: a.tau };
    let etas = if a.eta.is_empty() { default_eta_grid() } else { a.eta.clone() };
    let fits = ScalingSequence::ALL
        .iter()
        .map(|&k| order_scaling_fit(k, &timings, &params, &etas))
        .collect::<axy_core::Result<Vec<_>>>()?;
    let mut s = String::from("eta,distance,sequence_kind\n");
    for fit in &fits {
        for (eta, d) in &fit.points {
            writeln!(s, "{eta:.16e},{d:.16e},{}", fit.kind).unwrap();
        }
    }
    for fit in &fits {
        writeln!(s, "# slope {} {:.4}", fit.kind, fit.slope).unwrap();
    }
    Ok(s)
}

fn schedule_dump(a: &ScheduleDumpArgs, seed: Option<u64>) -> Result<String, CliError> {
    let config = SweepConfig::parse(&read_input(&a.config)?)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let r = config.resolve(base, seed)?;
    if !(a.freq_mhz > 0.0) {
        return Err(CliError::Config("--freq-mhz must be positive".into()));
    }
    let mut schedule = r.family.build(r.k_dd as f64 / a.freq_mhz)?;
    if r.sim.pulse_mode == PulseMode::Finite {
        schedule = apply_finite_width(&schedule, r.sim.rabi())?;
    }
    Ok(write_schedule(&schedule))
}
