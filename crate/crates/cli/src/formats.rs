//! Text formats: bath files, spectrum CSV, schedule dumps and run manifests.
//!
//! Floats in bath files use the shortest round-trip representation; spectra
//! are written with 17 significant digits. Both reload to identical values.

use std::f64::consts::PI;
use std::fmt::Write as _;

use axy_core::bath::{BathModel, NuclearSpin, PhysicalConstants};
use axy_core::dynamics::{Manifest, Spectrum};
use axy_core::sequence::PulseSchedule;
use nalgebra::Vector3;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

const BATH_MAGIC: &str = "# axy-bath 1";
const BATH_COLUMNS: &str = "# index x_nm y_nm z_nm Ax_MHz Ay_MHz Az_MHz";
pub const SPECTRUM_HEADER: &str = "freq_MHz,tau_us,probability";

fn to_mhz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Angular frequency whose conversion back to MHz reproduces `mhz` exactly,
/// when one exists next to the naive product.
fn from_mhz(mhz: f64) -> f64 {
    let w = mhz * 2.0 * PI;
    let mut candidates = [w; 9];
    let (mut up, mut down) = (w, w);
    for k in 0..4 {
        up = up.next_up();
        down = down.next_down();
        candidates[1 + 2 * k] = up;
        candidates[2 + 2 * k] = down;
    }
    candidates.into_iter().find(|&c| to_mhz(c) == mhz).unwrap_or(w)
}

pub fn write_bath(bath: &BathModel) -> String {
    let mut s = String::new();
    writeln!(s, "{BATH_MAGIC}").unwrap();
    writeln!(s, "# seed {}", bath.seed).unwrap();
    writeln!(s, "# bz_gauss {}", bath.bz).unwrap();
    writeln!(s, "# ms {}", bath.ms).unwrap();
    writeln!(s, "# abundance {}", bath.abundance).unwrap();
    writeln!(s, "# radius_nm {}", bath.radius).unwrap();
    writeln!(s, "{BATH_COLUMNS}").unwrap();
    for (i, spin) in bath.spins.iter().enumerate() {
        let (r, a) = (spin.position, spin.hyperfine);
        writeln!(s, "{i} {} {} {} {} {} {}", r.x, r.y, r.z, to_mhz(a.x), to_mhz(a.y), to_mhz(a.z)).unwrap();
    }
    s
}

pub fn read_bath(text: &str) -> Result<BathModel, CliError> {
    let bad = |line: usize, msg: &str| CliError::Config(format!("bath file line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some(BATH_MAGIC) {
        return Err(bad(1, "missing `# axy-bath 1` header"));
    }
    let mut header = |key: &str| -> Result<String, CliError> {
        let (n, l) = lines.next().ok_or_else(|| bad(0, "truncated header"))?;
        l.strip_prefix("# ")
            .and_then(|r| r.strip_prefix(key))
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_owned)
            .ok_or_else(|| bad(n + 1, &format!("expected `# {key} <value>`")))
    };
    let num = |v: String, key: &str| -> Result<f64, CliError> {
        v.parse().map_err(|_| CliError::Config(format!("bath file: bad {key} value {v:?}")))
    };
    let seed: u64 = header("seed")?.parse().map_err(|_| bad(2, "bad seed"))?;
    let bz = num(header("bz_gauss")?, "bz_gauss")?;
    let ms: i8 = header("ms")?.parse().map_err(|_| bad(4, "bad ms"))?;
    let abundance = num(header("abundance")?, "abundance")?;
    let radius = num(header("radius_nm")?, "radius_nm")?;
    match lines.next() {
        Some((_, l)) if l == BATH_COLUMNS => {}
        Some((n, _)) => return Err(bad(n + 1, "expected the column header")),
        None => return Err(bad(7, "missing column header")),
    }
    let consts = PhysicalConstants::default();
    let mut spins = Vec::new();
    for (n, l) in lines {
        let fields: Vec<&str> = l.split(' ').collect();
        if fields.len() != 7 || fields[0] != spins.len().to_string() {
            return Err(bad(n + 1, "expected `index x y z Ax Ay Az` with consecutive indices"));
        }
        let v: Vec<f64> = fields[1..]
            .iter()
            .map(|x| x.parse::<f64>().map_err(|_| bad(n + 1, &format!("bad number {x:?}"))))
            .collect::<Result<_, _>>()?;
        let position = Vector3::new(v[0], v[1], v[2]);
        let hyperfine = Vector3::new(from_mhz(v[3]), from_mhz(v[4]), from_mhz(v[5]));
        spins.push(NuclearSpin::with_hyperfine(position, consts.gamma_c13, hyperfine, bz, ms)?);
    }
    let mut bath = BathModel::from_spins(spins, bz, ms);
    bath.seed = seed;
    bath.abundance = abundance;
    bath.radius = radius;
    Ok(bath)
}

pub fn write_spectrum_csv(sp: &Spectrum) -> String {
    let mut s = String::with_capacity(64 * (sp.len() + 1));
    writeln!(s, "{SPECTRUM_HEADER}").unwrap();
    for i in 0..sp.len() {
        writeln!(s, "{:.16e},{:.16e},{:.16e}", sp.freq_mhz[i], sp.tau_us[i], sp.probability[i]).unwrap();
    }
    s
}

pub fn read_spectrum_csv(text: &str) -> Result<Spectrum, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(SPECTRUM_HEADER) {
        return Err(CliError::Config(format!("spectrum file must start with `{SPECTRUM_HEADER}`")));
    }
    let mut sp = Spectrum {
        freq_mhz: Vec::new(),
        tau_us: Vec::new(),
        probability: Vec::new(),
        manifest: Manifest { config_hash: String::new(), seed: 0, schedule: String::new(), k_dd: 1 },
    };
    for (n, l) in lines.enumerate() {
        let v: Vec<f64> = l
            .split(',')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("spectrum line {}: bad number", n + 2)))?;
        let [f, t, p] = v[..] else {
            return Err(CliError::Config(format!("spectrum line {}: expected 3 columns", n + 2)));
        };
        sp.freq_mhz.push(f);
        sp.tau_us.push(t);
        sp.probability.push(p);
    }
    Ok(sp)
}

pub fn write_schedule(s: &PulseSchedule) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "# {} period_us={} repeats={} pulses={}",
        s.kind,
        s.period,
        s.repeats,
        s.pulse_count()
    )
    .unwrap();
    writeln!(out, "center_time_us,phase_rad,duration_us").unwrap();
    for e in s.events() {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", e.center_time, e.phase, e.duration).unwrap();
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Sidecar describing a sweep; everything needed to rerun it, and nothing
/// that varies between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub k_dd: usize,
    pub schedule: String,
    pub points: usize,
    pub csv_sha256: String,
    pub config: String,
}

impl RunManifest {
    pub fn new(config_text: &str, seed: u64, spectrum: &Spectrum, csv: &str) -> Self {
        Self {
            tool: "axy",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: sha256_hex(config_text.as_bytes()),
            seed,
            k_dd: spectrum.manifest.k_dd,
            schedule: spectrum.manifest.schedule.clone(),
            points: spectrum.len(),
            csv_sha256: sha256_hex(csv.as_bytes()),
            config: config_text.to_owned(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
