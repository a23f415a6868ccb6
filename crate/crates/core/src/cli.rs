//! Command-line driver: one subcommand per figure family, plus golden-file
//! regression.
//!
//! Every run writes its table to `--out` and a one-line JSON manifest with
//! the fully resolved parameters to `<out>.manifest.json`. Failures are
//! reported as JSON lines on stderr; exit codes are 0 (ok), 1 (physics or
//! numerics) and 2 (usage).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::medium::{spectrum_scan, write_spectrum_csv, Branch};
use crate::params::{apply_overrides, default_rb85_params, parse_config_text, PhysicalParams};
use crate::potential::{
    blockade_radius_with_threshold, classify_regime_with_threshold, default_z_grid, potential_full,
    potential_simplified, write_potential_csv, DefectPotential,
};
use crate::quadrature::QuadratureOptions;
use crate::stochastic::{
    ensemble_transfer, write_ensemble_csv, DelocalizationMode, DelocalizationSpec, EnsembleStats,
};
use crate::transfer::{find_pi_phase, sweep, write_sweep_csv, Gate, ScanVar, SweepPoint};
use crate::units::{linspace, parse_quantity, parse_scan, Kind};
use crate::wavepacket::{propagate, write_binary_grid, WavepacketField, WavepacketSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug, Clone)]
#[command(name = "rydberg-qubit", version, about = "Photon polarization qubit in a Rydberg double-EIT medium")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Gate-free dispersion spectra K±(ω).
    Spectra(SpectraArgs),
    /// Defect potential profiles V±(z) and regime classification.
    Potential(PotentialArgs),
    /// η± and φ± versus optical depth in the dissipative regime.
    SwitchCurve(CurveArgs),
    /// η± and φ± versus optical depth in the dispersive regime.
    PhaseCurve(CurveArgs),
    /// η± and φ± versus magnetic field.
    Magnetometer(MagnetometerArgs),
    /// Spectral propagation of the qubit wavepacket.
    Wavepacket(WavepacketArgs),
    /// Monte Carlo average over gate-atom delocalization.
    Delocalize(DelocalizeArgs),
    /// Re-run the pinned figure configs and compare with golden files.
    Regress(RegressArgs),
    /// Regenerate golden files.
    Bless(BlessArgs),
}

/// Parameter overrides shared by all physics subcommands. Precedence, lowest
/// first: built-in figure defaults, `--config`, `--set`, explicit flags.
#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    /// Parameter file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", allow_hyphen_values = true)]
    pub set: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta3: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta4: Option<String>,
    #[arg(long = "omega-c", allow_hyphen_values = true)]
    pub omega_c: Option<String>,
    #[arg(long = "Na")]
    pub density: Option<String>,
    #[arg(long = "L")]
    pub length: Option<String>,
    #[arg(long)]
    pub zg: Option<String>,
    #[arg(long = "C6", allow_hyphen_values = true)]
    pub c6: Option<String>,
    /// Output file.
    #[arg(short = 'o', long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchChoice {
    Plus,
    Minus,
    Both,
}

impl BranchChoice {
    fn branches(self) -> Vec<Branch> {
        match self {
            BranchChoice::Plus => vec![Branch::Plus],
            BranchChoice::Minus => vec![Branch::Minus],
            BranchChoice::Both => Branch::BOTH.to_vec(),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SpectraArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Probe frequency scan lo:hi:n.
    #[arg(long, allow_hyphen_values = true, default_value = "-20MHz:20MHz:1000")]
    pub omega: String,
    #[arg(long = "B", allow_hyphen_values = true)]
    pub b_field: Option<String>,
    /// Fixed vdW detuning Δd.
    #[arg(long = "delta-d", allow_hyphen_values = true, default_value = "0")]
    pub delta_d: String,
    #[arg(long, value_enum, default_value = "both")]
    pub branch: BranchChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormChoice {
    Full,
    Simplified,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long = "B", allow_hyphen_values = true)]
    pub b_field: Option<String>,
    #[arg(long, value_enum, default_value = "both")]
    pub branch: BranchChoice,
    #[arg(long, value_enum, default_value = "both")]
    pub form: FormChoice,
    /// Blockade radius condition |Δd(r_b)| = threshold × |Ωc|²/γ31.
    #[arg(long = "rb-threshold", default_value_t = 1.0)]
    pub rb_threshold: f64,
    /// Ratio separating dissipative and dispersive regimes.
    #[arg(long = "regime-threshold", default_value_t = 3.0)]
    pub regime_threshold: f64,
}

#[derive(Args, Debug, Clone)]
pub struct CurveArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Optical depth scan lo:hi:n (varied through |g|²N at fixed L).
    #[arg(long)]
    pub od: Option<String>,
    #[arg(long = "B", allow_hyphen_values = true)]
    pub b_field: Option<String>,
    /// Also locate the optical depths where |φ±| = π inside the scan range.
    #[arg(long = "find-pi")]
    pub find_pi: bool,
}

#[derive(Args, Debug, Clone)]
pub struct MagnetometerArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Field scan lo:hi:n.
    #[arg(long = "B", allow_hyphen_values = true, default_value = "-10G:10G:400")]
    pub b_field: String,
    /// Locate φ₊ = π on [0, hi] and φ₋ = π on [lo, 0].
    #[arg(long = "find-pi")]
    pub find_pi: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldFormat {
    Csv,
    BinaryGrid,
}

#[derive(Args, Debug, Clone)]
pub struct WavepacketArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long = "B", allow_hyphen_values = true)]
    pub b_field: Option<String>,
    /// FWHM of the input intensity.
    #[arg(long, default_value = "100ns")]
    pub t0: String,
    /// Weight of the σ+ component; σ- gets the rest.
    #[arg(long = "a-plus", default_value_t = 0.5)]
    pub a_plus: f64,
    /// Time samples (power of two).
    #[arg(long, default_value_t = 8192)]
    pub samples: usize,
    /// Window length in units of t0.
    #[arg(long = "span-t0", default_value_t = 256.0)]
    pub span_t0: f64,
    /// Number of output positions across [0, L].
    #[arg(long = "z-points", default_value_t = 201)]
    pub z_points: usize,
    #[arg(long, value_enum, default_value = "on")]
    pub gate: OnOff,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FieldFormat,
    /// Keep every k-th time sample in the export.
    #[arg(long = "t-stride", default_value_t = 1)]
    pub t_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DelocScan {
    Delta3,
    #[value(name = "B")]
    MagneticField,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    Weighted,
    Position,
}

#[derive(Args, Debug, Clone)]
pub struct DelocalizeArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long = "B", allow_hyphen_values = true)]
    pub b_field: Option<String>,
    /// Scanned parameter; `none` writes the per-sample table of one ensemble.
    #[arg(long, value_enum, default_value = "delta3")]
    pub scan: DelocScan,
    /// Scan lo:hi:n in the units of the scanned parameter.
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, default_value = "5um")]
    pub sigma: String,
    /// Displacement range lo:hi.
    #[arg(long = "xi-range", allow_hyphen_values = true, default_value = "-10um:10um")]
    pub xi_range: String,
    #[arg(long, value_enum, default_value = "weighted")]
    pub mode: ModeChoice,
}

#[derive(Args, Debug, Clone)]
pub struct RegressArgs {
    pub golden_dir: PathBuf,
    /// Parameter override applied to every case (sensitivity checks).
    #[arg(long = "set", value_name = "KEY=VALUE", allow_hyphen_values = true)]
    pub set: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct BlessArgs {
    pub golden_dir: PathBuf,
}

/// Table bytes plus manifest content of one run.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub command: &'static str,
    pub data: Vec<u8>,
    pub params: PhysicalParams,
    pub run: Value,
    pub results: Value,
    pub default_name: &'static str,
}

impl Artifact {
    pub fn manifest(&self) -> Result<Value> {
        Ok(json!({
            "tool": "rydberg-qubit",
            "version": VERSION,
            "command": self.command,
            "params": serde_json::to_value(&self.params)?,
            "run": self.run,
            "results": self.results,
        }))
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn resolve_params(pinned: &[(&str, &str)], args: &ParamArgs, extra: &[(&str, Option<&String>)]) -> Result<PhysicalParams> {
    let mut settings: BTreeMap<String, String> =
        pinned.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        settings.extend(parse_config_text(&text)?);
    }
    for item in &args.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
        settings.insert(k.trim().to_string(), v.trim().to_string());
    }
    let flags = [
        ("delta3", args.delta3.as_ref()),
        ("delta4", args.delta4.as_ref()),
        ("omega-c", args.omega_c.as_ref()),
        ("Na", args.density.as_ref()),
        ("L", args.length.as_ref()),
        ("zg", args.zg.as_ref()),
        ("C6", args.c6.as_ref()),
    ];
    for (k, v) in flags.iter().chain(extra) {
        if let Some(v) = v {
            settings.insert(k.to_string(), v.to_string());
        }
    }
    apply_overrides(&default_rb85_params(), &settings)
}

fn run_spectra(a: &SpectraArgs) -> Result<Artifact> {
    let params = resolve_params(&[("Na", "3e10"), ("B", "1.6")], &a.params, &[("B", a.b_field.as_ref())])?;
    let scan = parse_scan(&a.omega, Kind::AngularFrequency)?;
    let delta_d = parse_quantity(&a.delta_d, Kind::AngularFrequency)?;
    let grid = scan.values();
    let mut samples = Vec::new();
    for branch in a.branch.branches() {
        samples.extend(spectrum_scan(&grid, branch, &params, delta_d)?);
    }
    let mut buf = Vec::new();
    write_spectrum_csv(&mut buf, &samples)?;
    Ok(Artifact {
        command: "spectra",
        data: buf,
        params,
        run: json!({"omega_lo": scan.lo, "omega_hi": scan.hi, "n": scan.n, "delta_d": delta_d, "branch": format!("{:?}", a.branch)}),
        results: json!({}),
        default_name: "spectra.csv",
    })
}

fn run_potential(a: &PotentialArgs) -> Result<Artifact> {
    let params = resolve_params(&[], &a.params, &[("B", a.b_field.as_ref())])?;
    let rb = blockade_radius_with_threshold(&params, a.rb_threshold)?;
    let grid = default_z_grid(&params);
    let mut profiles: Vec<DefectPotential> = Vec::new();
    let mut regimes = Vec::new();
    for branch in a.branch.branches() {
        if matches!(a.form, FormChoice::Full | FormChoice::Both) {
            let full = potential_full(&grid, branch, &params)?;
            let report = classify_regime_with_threshold(&full, a.regime_threshold)?;
            regimes.push(json!({"branch": branch.label(), "ratio": report.ratio, "regime": format!("{:?}", report.regime)}));
            profiles.push(full);
        }
        if matches!(a.form, FormChoice::Simplified | FormChoice::Both) {
            profiles.push(potential_simplified(&grid, branch, &params)?);
        }
    }
    let mut buf = Vec::new();
    write_potential_csv(&mut buf, &profiles, params.gate_position(), rb)?;
    Ok(Artifact {
        command: "potential",
        data: buf,
        params,
        run: json!({"grid_points": grid.len(), "rb_threshold": a.rb_threshold, "regime_threshold": a.regime_threshold}),
        results: json!({"blockade_radius_um": rb, "regimes": regimes}),
        default_name: "potential.csv",
    })
}

fn first_crossing(points: &[SweepPoint], value: impl Fn(&SweepPoint) -> f64, level: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (value(&w[0]) - level, value(&w[1]) - level);
        (a.signum() != b.signum() || a == 0.0).then(|| {
            if a == b {
                w[0].value
            } else {
                w[0].value + (w[1].value - w[0].value) * a / (a - b)
            }
        })
    })
}

fn run_curve(a: &CurveArgs, command: &'static str) -> Result<Artifact> {
    let (pinned, default_scan, name): (&[(&str, &str)], &str, &'static str) = match command {
        "switch-curve" => (&[("delta3", "0"), ("B", "1.5G"), ("L", "100um")], "0:80:200", "switch-curve.csv"),
        _ => (&[("delta3", "2pi*100MHz"), ("B", "1.5G"), ("L", "100um")], "0:200:200", "phase-curve.csv"),
    };
    let params = resolve_params(pinned, &a.params, &[("B", a.b_field.as_ref())])?;
    let scan = parse_scan(a.od.as_deref().unwrap_or(default_scan), Kind::Dimensionless)?;
    let points = sweep(&params, ScanVar::OpticalDepth, &scan.values(), Gate::Fixed, &QuadratureOptions::default())?;
    let mut results = json!({
        "od_eta_plus_equals_1": first_crossing(&points, |p| p.result.eta_plus, 1.0),
        "od_eta_minus_equals_1": first_crossing(&points, |p| p.result.eta_minus, 1.0),
    });
    if a.find_pi {
        for branch in Branch::BOTH {
            let od = find_pi_phase(&params, branch, ScanVar::OpticalDepth, (scan.lo, scan.hi))?;
            results[format!("od_pi_phase_{}", branch.label())] = json!(od);
        }
    }
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, ScanVar::OpticalDepth, &points)?;
    Ok(Artifact {
        command,
        data: buf,
        params,
        run: json!({"scan": "od", "lo": scan.lo, "hi": scan.hi, "n": scan.n}),
        results,
        default_name: name,
    })
}

fn run_magnetometer(a: &MagnetometerArgs) -> Result<Artifact> {
    let params = resolve_params(&[("delta3", "0"), ("L", "50um"), ("Na", "3e12")], &a.params, &[])?;
    let scan = parse_scan(&a.b_field, Kind::MagneticField)?;
    let points = sweep(&params, ScanVar::MagneticField, &scan.values(), Gate::Fixed, &QuadratureOptions::default())?;
    let mut results = json!({});
    if a.find_pi {
        let plus = find_pi_phase(&params, Branch::Plus, ScanVar::MagneticField, (0.0, scan.hi.max(0.0)))?;
        let minus = find_pi_phase(&params, Branch::Minus, ScanVar::MagneticField, (scan.lo.min(0.0), 0.0))?;
        results = json!({"b_pi_phase_plus": plus, "b_pi_phase_minus": minus});
    }
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, ScanVar::MagneticField, &points)?;
    Ok(Artifact {
        command: "magnetometer",
        data: buf,
        params,
        run: json!({"scan": "B", "lo": scan.lo, "hi": scan.hi, "n": scan.n}),
        results,
        default_name: "magnetometer.csv",
    })
}

fn thin(field: &WavepacketField, stride: usize) -> WavepacketField {
    let pick = |rows: &[Vec<num_complex::Complex64>]| -> Vec<Vec<num_complex::Complex64>> {
        rows.iter().map(|r| r.iter().step_by(stride).copied().collect()).collect()
    };
    WavepacketField {
        t_grid: field.t_grid.iter().step_by(stride).copied().collect(),
        plus: pick(&field.plus),
        minus: pick(&field.minus),
        ..field.clone()
    }
}

fn run_wavepacket(a: &WavepacketArgs) -> Result<Artifact> {
    let params = resolve_params(
        &[("delta3", "2pi*100MHz"), ("B", "1.5G"), ("Na", "3e12")],
        &a.params,
        &[("B", a.b_field.as_ref())],
    )?;
    if a.z_points < 1 || a.t_stride < 1 {
        return Err(Error::param("z-points", "z-points and t-stride must be >= 1"));
    }
    let t0 = parse_quantity(&a.t0, Kind::Time)?;
    let mut spec = WavepacketSpec::new(t0, a.a_plus, params.length())?.with_window(a.samples, a.span_t0 * t0)?;
    spec.z_grid = linspace(0.0, params.length(), a.z_points);
    let field = propagate(&spec, &params, a.gate == OnOff::On)?;
    let export = thin(&field, a.t_stride);
    let mut buf = Vec::new();
    match a.format {
        FieldFormat::Csv => crate::wavepacket::write_field_csv(&mut buf, &export)?,
        FieldFormat::BinaryGrid => write_binary_grid(&mut buf, &export)?,
    }
    Ok(Artifact {
        command: "wavepacket",
        data: buf,
        params,
        run: json!({
            "t0": t0, "a_plus": spec.a_plus, "a_minus": spec.a_minus, "samples": spec.n_samples,
            "span": spec.span, "t_start": spec.t_start, "z_points": a.z_points,
            "gate": a.gate == OnOff::On, "t_stride": a.t_stride,
            "format": format!("{:?}", a.format),
        }),
        results: json!({"norm_in": field.norm_in, "norm_out": field.norm_out}),
        default_name: match a.format {
            FieldFormat::Csv => "wavepacket.csv",
            FieldFormat::BinaryGrid => "wavepacket.bin",
        },
    })
}

fn parse_range(input: &str, kind: Kind) -> Result<(f64, f64)> {
    let (lo, hi) = input.split_once(':').ok_or_else(|| Error::Quantity {
        input: input.into(),
        reason: "range must look like lo:hi".into(),
    })?;
    Ok((parse_quantity(lo, kind)?, parse_quantity(hi, kind)?))
}

fn stats_columns(s: &EnsembleStats) -> [f64; 12] {
    [
        s.mean.eta_plus,
        s.std.eta_plus,
        s.reference.eta_plus,
        s.mean.eta_minus,
        s.std.eta_minus,
        s.reference.eta_minus,
        s.mean.phi_plus,
        s.std.phi_plus,
        s.reference.phi_plus,
        s.mean.phi_minus,
        s.std.phi_minus,
        s.reference.phi_minus,
    ]
}

fn run_delocalize(a: &DelocalizeArgs) -> Result<Artifact> {
    let params = resolve_params(
        &[("L", "80um"), ("B", "1.4G"), ("Na", "3e12")],
        &a.params,
        &[("B", a.b_field.as_ref())],
    )?;
    let spec = DelocalizationSpec {
        sigma: parse_quantity(&a.sigma, Kind::Length)?,
        xi_range: parse_range(&a.xi_range, Kind::Length)?,
        n_samples: a.samples,
        seed: a.seed,
        mode: match a.mode {
            ModeChoice::Weighted => DelocalizationMode::WeightedDelta,
            ModeChoice::Position => DelocalizationMode::PositionOnly,
        },
    };
    spec.validate()?;
    let mut buf = Vec::new();
    let run = json!({
        "sigma": spec.sigma, "xi_lo": spec.xi_range.0, "xi_hi": spec.xi_range.1,
        "samples": spec.n_samples, "seed": spec.seed, "mode": spec.mode.label(),
        "distribution": "uniform", "scan": format!("{:?}", a.scan), "values": a.values,
    });
    let (var, kind, default_values) = match a.scan {
        DelocScan::None => {
            let stats = ensemble_transfer(&spec, &params)?;
            write_ensemble_csv(&mut buf, &spec, &stats)?;
            return Ok(Artifact {
                command: "delocalize",
                data: buf,
                params,
                run,
                results: json!({"excluded": stats.excluded}),
                default_name: "delocalize.csv",
            });
        }
        DelocScan::Delta3 => (ScanVar::Delta3, Kind::AngularFrequency, "-100MHz:100MHz:41"),
        DelocScan::MagneticField => (ScanVar::MagneticField, Kind::MagneticField, "-10G:10G:41"),
    };
    let scan = parse_scan(a.values.as_deref().unwrap_or(default_values), kind)?;
    writeln_meta(&mut buf, &spec)?;
    let mut header = String::from(var.column());
    for q in ["eta_plus", "eta_minus", "phi_plus", "phi_minus"] {
        write!(header, ",mean_{q},std_{q},ref_{q}").expect("string write");
    }
    header.push_str(",excluded\n");
    buf.extend_from_slice(header.as_bytes());
    let mut excluded = 0;
    for value in scan.values() {
        let p = var.apply(&params, value)?;
        let stats = ensemble_transfer(&spec, &p)?;
        excluded += stats.excluded;
        let mut row = format!("{:e}", var.to_display(value));
        for v in stats_columns(&stats) {
            write!(row, ",{v:e}").expect("string write");
        }
        row.push_str(&format!(",{}\n", stats.excluded));
        buf.extend_from_slice(row.as_bytes());
    }
    Ok(Artifact {
        command: "delocalize",
        data: buf,
        params,
        run,
        results: json!({"excluded_total": excluded}),
        default_name: "delocalize.csv",
    })
}

fn writeln_meta(buf: &mut Vec<u8>, spec: &DelocalizationSpec) -> Result<()> {
    use std::io::Write;
    writeln!(
        buf,
        "# seed={} mode={} sigma={} xi_lo={} xi_hi={} n_samples={} distribution=uniform",
        spec.seed,
        spec.mode.label(),
        spec.sigma,
        spec.xi_range.0,
        spec.xi_range.1,
        spec.n_samples
    )?;
    Ok(())
}

/// Runs a physics subcommand in memory.
pub fn produce(command: &Command) -> Result<Artifact> {
    match command {
        Command::Spectra(a) => run_spectra(a),
        Command::Potential(a) => run_potential(a),
        Command::SwitchCurve(a) => run_curve(a, "switch-curve"),
        Command::PhaseCurve(a) => run_curve(a, "phase-curve"),
        Command::Magnetometer(a) => run_magnetometer(a),
        Command::Wavepacket(a) => run_wavepacket(a),
        Command::Delocalize(a) => run_delocalize(a),
        Command::Regress(_) | Command::Bless(_) => Err(Error::Config("not a figure subcommand".into())),
    }
}

fn out_path(command: &Command) -> Option<&PathBuf> {
    match command {
        Command::Spectra(a) => a.params.out.as_ref(),
        Command::Potential(a) => a.params.out.as_ref(),
        Command::SwitchCurve(a) | Command::PhaseCurve(a) => a.params.out.as_ref(),
        Command::Magnetometer(a) => a.params.out.as_ref(),
        Command::Wavepacket(a) => a.params.out.as_ref(),
        Command::Delocalize(a) => a.params.out.as_ref(),
        Command::Regress(_) | Command::Bless(_) => None,
    }
}

fn write_artifact(artifact: &Artifact, out: &Path) -> Result<()> {
    fs::write(out, &artifact.data)?;
    let mut line = serde_json::to_string(&artifact.manifest()?)?;
    line.push('\n');
    fs::write(manifest_path(out), line)?;
    Ok(())
}

// ---------------------------------------------------------------- regression

/// A pinned figure configuration checked by `regress`.
#[derive(Debug, Clone, Copy)]
pub struct RegressCase {
    pub name: &'static str,
    pub args: &'static [&'static str],
    /// Largest allowed column deviation relative to the column's magnitude.
    pub tolerance: f64,
}

pub const REGRESS_CASES: &[RegressCase] = &[
    RegressCase { name: "spectra_eit", args: &["spectra", "--omega", "-20MHz:20MHz:401"], tolerance: 1e-9 },
    RegressCase {
        name: "spectra_two_level",
        args: &["spectra", "--omega", "-20MHz:20MHz:401", "--omega-c", "0"],
        tolerance: 1e-9,
    },
    RegressCase { name: "potential_dissipative", args: &["potential"], tolerance: 1e-9 },
    RegressCase { name: "potential_dispersive", args: &["potential", "--delta3", "2pi*100MHz"], tolerance: 1e-9 },
    RegressCase { name: "switch_curve", args: &["switch-curve", "--od", "0:80:41"], tolerance: 1e-6 },
    RegressCase { name: "phase_curve", args: &["phase-curve", "--od", "0:200:41"], tolerance: 1e-6 },
    RegressCase { name: "magnetometer", args: &["magnetometer", "--B", "-10G:10G:41"], tolerance: 1e-6 },
    RegressCase {
        name: "wavepacket",
        args: &["wavepacket", "--z-points", "3", "--t-stride", "64"],
        tolerance: 1e-6,
    },
    RegressCase {
        name: "delocalize",
        args: &["delocalize", "--values", "-100MHz:100MHz:5", "--samples", "50"],
        tolerance: 1e-6,
    },
];

#[derive(Debug, Clone)]
pub struct ColumnDeviation {
    pub column: String,
    pub max_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct CaseReport {
    pub name: &'static str,
    pub tolerance: f64,
    pub passed: bool,
    pub columns: Vec<ColumnDeviation>,
    /// Structural mismatch (row count, labels), if any.
    pub problem: Option<String>,
    pub manifest_diff: Vec<String>,
}

fn case_command(case: &RegressCase, sets: &[String]) -> Result<Command> {
    let mut argv: Vec<String> = vec!["rydberg-qubit".into()];
    argv.extend(case.args.iter().map(|s| s.to_string()));
    for s in sets {
        argv.push(format!("--set={s}"));
    }
    RunConfig::try_parse_from(argv)
        .map(|c| c.command)
        .map_err(|e| Error::Config(format!("case {}: {e}", case.name)))
}

fn tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c == '=' || c.is_whitespace()).collect()
}

/// Compares two tables column by column. Numeric cells are compared with a
/// deviation relative to the largest magnitude in the golden column; other
/// cells must match exactly.
pub fn compare_tables(golden: &str, fresh: &str) -> (Vec<ColumnDeviation>, Option<String>) {
    let g: Vec<&str> = golden.lines().collect();
    let f: Vec<&str> = fresh.lines().collect();
    if g.len() != f.len() {
        return (Vec::new(), Some(format!("row count {} != golden {}", f.len(), g.len())));
    }
    let header: Vec<&str> = g.iter().find(|l| !l.starts_with('#')).map(|l| tokens(l)).unwrap_or_default();
    let mut dev: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for (row, (gl, fl)) in g.iter().zip(&f).enumerate() {
        let (gt, ft) = (tokens(gl), tokens(fl));
        if gt.len() != ft.len() {
            return (Vec::new(), Some(format!("line {}: field count differs", row + 1)));
        }
        for (i, (a, b)) in gt.iter().zip(&ft).enumerate() {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    let name = if gl.starts_with('#') {
                        format!("#{}", gt[i.saturating_sub(1)])
                    } else {
                        header.get(i).map_or(format!("col{i}"), |h| h.to_string())
                    };
                    let entry = dev.entry(name).or_insert((0.0, 0.0));
                    let diff = if x == y { 0.0 } else { (x - y).abs() };
                    entry.0 = entry.0.max(if diff.is_nan() { f64::INFINITY } else { diff });
                    entry.1 = entry.1.max(x.abs());
                }
                _ if a == b => {}
                _ => return (Vec::new(), Some(format!("line {}: `{b}` differs from golden `{a}`", row + 1))),
            }
        }
    }
    let cols = dev
        .into_iter()
        .map(|(column, (d, scale))| ColumnDeviation {
            column,
            max_deviation: if d == 0.0 { 0.0 } else { d / scale.max(f64::MIN_POSITIVE) },
        })
        .collect();
    (cols, None)
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&format!("{prefix}{k}."), v, out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&format!("{prefix}{i}."), v, out);
            }
        }
        other => {
            out.insert(prefix.trim_end_matches('.').to_string(), other.to_string());
        }
    }
}

/// Keys whose values differ between two manifests.
pub fn manifest_diff(golden: &Value, fresh: &Value) -> Vec<String> {
    let (mut a, mut b) = (BTreeMap::new(), BTreeMap::new());
    flatten("", golden, &mut a);
    flatten("", fresh, &mut b);
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| {
            format!(
                "{k}: {} -> {}",
                a.get(k).map_or("(absent)", |s| s.as_str()),
                b.get(k).map_or("(absent)", |s| s.as_str())
            )
        })
        .collect()
}

fn golden_paths(dir: &Path, case: &RegressCase) -> (PathBuf, PathBuf) {
    let table = dir.join(format!("{}.csv", case.name));
    let manifest = manifest_path(&table);
    (table, manifest)
}

/// Writes golden tables and manifests for every pinned case.
pub fn bless(golden_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(golden_dir)?;
    let mut written = Vec::new();
    for case in REGRESS_CASES {
        let artifact = produce(&case_command(case, &[])?)?;
        let (table, _) = golden_paths(golden_dir, case);
        write_artifact(&artifact, &table)?;
        written.push(table);
    }
    Ok(written)
}

/// Re-runs every pinned case (with optional overrides) against the goldens.
pub fn regress(golden_dir: &Path, sets: &[String]) -> Result<Vec<CaseReport>> {
    for case in REGRESS_CASES {
        let (table, manifest) = golden_paths(golden_dir, case);
        for p in [&table, &manifest] {
            if !p.exists() {
                return Err(Error::MissingGolden(p.display().to_string()));
            }
        }
    }
    let mut reports = Vec::new();
    for case in REGRESS_CASES {
        let (table, manifest) = golden_paths(golden_dir, case);
        let artifact = produce(&case_command(case, sets)?)?;
        let golden = fs::read_to_string(&table)?;
        let fresh = String::from_utf8_lossy(&artifact.data).into_owned();
        let (columns, problem) = compare_tables(&golden, &fresh);
        let golden_manifest: Value = serde_json::from_str(&fs::read_to_string(&manifest)?)?;
        let diff = manifest_diff(&golden_manifest, &artifact.manifest()?);
        let passed = problem.is_none() && columns.iter().all(|c| c.max_deviation <= case.tolerance);
        reports.push(CaseReport {
            name: case.name,
            tolerance: case.tolerance,
            passed,
            columns,
            problem,
            manifest_diff: diff,
        });
    }
    Ok(reports)
}

pub fn format_report(reports: &[CaseReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(s, "{} {} (tolerance {:e})", if r.passed { "PASS" } else { "FAIL" }, r.name, r.tolerance);
        if let Some(p) = &r.problem {
            let _ = writeln!(s, "    {p}");
        }
        for c in &r.columns {
            let flag = if c.max_deviation > r.tolerance { "  <-- exceeds" } else { "" };
            let _ = writeln!(s, "    {:<24} max deviation {:.3e}{flag}", c.column, c.max_deviation);
        }
        if !r.passed {
            for d in &r.manifest_diff {
                let _ = writeln!(s, "    manifest {d}");
            }
        }
    }
    s
}

// ---------------------------------------------------------------- entry point

fn error_line(kind: &str, message: &str, code: i32) -> String {
    json!({"error": kind, "message": message, "exit_code": code}).to_string()
}

fn execute(config: RunConfig) -> Result<String> {
    match &config.command {
        Command::Bless(a) => {
            let written = bless(&a.golden_dir)?;
            Ok(format!("blessed {} golden files in {}\n", written.len(), a.golden_dir.display()))
        }
        Command::Regress(a) => {
            let reports = regress(&a.golden_dir, &a.set)?;
            let text = format_report(&reports);
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
            if failed.is_empty() {
                Ok(text)
            } else {
                print!("{text}");
                Err(Error::Regression(format!("{} case(s) failed: {}", failed.len(), failed.join(", "))))
            }
        }
        command => {
            let artifact = produce(command)?;
            let out = out_path(command).cloned().unwrap_or_else(|| PathBuf::from(artifact.default_name));
            write_artifact(&artifact, &out)?;
            let mut msg = format!("wrote {} and {}\n", out.display(), manifest_path(&out).display());
            if artifact.results.as_object().is_some_and(|m| !m.is_empty()) {
                msg.push_str(&format!("{}\n", artifact.results));
            }
            Ok(msg)
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            eprintln!("{}", error_line("usage", e.to_string().trim(), 2));
            return 2;
        }
    };
    match execute(config) {
        Ok(msg) => {
            print!("{msg}");
            0
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("{}", error_line(e.kind(), &e.to_string(), code));
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_comparison() {
        let a = "x,y,branch\n1,2,plus\n3,4,plus\n";
        let (cols, problem) = compare_tables(a, a);
        assert!(problem.is_none());
        assert!(cols.iter().all(|c| c.max_deviation == 0.0));
        let b = "x,y,branch\n1,2.02,plus\n3,4,plus\n";
        let (cols, _) = compare_tables(a, b);
        let y = cols.iter().find(|c| c.column == "y").unwrap();
        assert!((y.max_deviation - 0.005).abs() < 1e-12);
        assert!(compare_tables(a, "x,y,branch\n1,2,minus\n3,4,plus\n").1.is_some());
        assert!(compare_tables(a, "x,y,branch\n1,2,plus\n").1.is_some());
    }

    #[test]
    fn manifest_diff_lists_changed_leaves() {
        let a = json!({"params": {"gamma31": 1.0, "L": 100.0}});
        let b = json!({"params": {"gamma31": 1.01, "L": 100.0}});
        let d = manifest_diff(&a, &b);
        assert_eq!(d, vec!["params.gamma31: 1.0 -> 1.01".to_string()]);
    }

    #[test]
    fn precedence_of_overrides() {
        let args = ParamArgs {
            set: vec!["L=70um".into()],
            delta3: Some("2pi*10MHz".into()),
            ..Default::default()
        };
        let p = resolve_params(&[("L", "50um"), ("delta3", "0")], &args, &[]).unwrap();
        assert_eq!(p.length(), 70.0);
        assert!((p.delta3() - 2.0 * std::f64::consts::PI * 1e7).abs() < 1e-6);
        let bad = ParamArgs { set: vec!["nonsense".into()], ..Default::default() };
        assert!(resolve_params(&[], &bad, &[]).is_err());
    }
}
