//! Spectral propagation of the two-component single-photon wavepacket.
//!
//! Fourier convention: Φ̃(ω) = (2π)^{-1/2} ∫ Φ(t) e^{iωt} dt, so each
//! spectral component evolves as Φ̃(z, ω) = Φ̃(0, ω) exp(i ∫₀ᶻ K(z', ω) dz').

use std::f64::consts::{LN_2, PI};
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::medium::{delta_d_at_separation, Branch, DispersionKernel};
use crate::params::PhysicalParams;
use crate::quadrature::{integrate_cumulative, Core, QuadratureOptions};
use crate::transfer::{core_half_width, Gate};
use crate::units::linspace;

pub const DEFAULT_SAMPLES: usize = 2048;
pub const DEFAULT_SPAN_WIDTHS: f64 = 16.0;
/// Share of the window placed before the input peak.
pub const LEAD_FRACTION: f64 = 0.25;
pub const DEFAULT_Z_OUTPUTS: usize = 201;
/// Minimum number of time samples across the FWHM t0.
pub const MIN_SAMPLES_PER_WIDTH: f64 = 32.0;
/// Spectral components weaker than this, relative to the peak, are dropped.
const NEGLIGIBLE_AMPLITUDE: f64 = 1e-14;
/// Fraction of the window at each edge watched for wrapped-around energy.
const EDGE_FRACTION: f64 = 0.05;
const ALIASING_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketSpec {
    /// FWHM of |Φ(0, t)|², s.
    pub t0: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    /// Number of time samples, a power of two.
    pub n_samples: usize,
    /// Window length, s.
    pub span: f64,
    /// Time of the first sample, s. t = 0 is the input peak at z = 0.
    pub t_start: f64,
    /// Output positions, um, sorted within [0, L].
    pub z_grid: Vec<f64>,
}

impl WavepacketSpec {
    /// Default grids: 2048 samples over 16 t0 and 201 positions across [0, length].
    pub fn new(t0: f64, a_plus: f64, length: f64) -> Result<Self> {
        let spec = Self {
            t0,
            a_plus,
            a_minus: 1.0 - a_plus,
            n_samples: DEFAULT_SAMPLES,
            span: DEFAULT_SPAN_WIDTHS * t0,
            t_start: -LEAD_FRACTION * DEFAULT_SPAN_WIDTHS * t0,
            z_grid: linspace(0.0, length, DEFAULT_Z_OUTPUTS),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Replaces the time grid by `n_samples` over `span` seconds, a quarter of
    /// it ahead of the input peak.
    pub fn with_window(mut self, n_samples: usize, span: f64) -> Result<Self> {
        self.n_samples = n_samples;
        self.span = span;
        self.t_start = -LEAD_FRACTION * span;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::param("t0", format!("must be > 0, got {}", self.t0)));
        }
        if self.a_plus < 0.0 || self.a_minus < 0.0 || (self.a_plus + self.a_minus - 1.0).abs() > 1e-12 {
            return Err(Error::param(
                "A",
                format!("weights must be >= 0 and sum to 1, got {} + {}", self.a_plus, self.a_minus),
            ));
        }
        if !self.n_samples.is_power_of_two() || self.n_samples < 2 {
            return Err(Error::param("samples", format!("must be a power of two, got {}", self.n_samples)));
        }
        if !(self.span >= 8.0 * self.t0) {
            return Err(Error::param("span", format!("must cover at least 8 t0, got {:e} s", self.span)));
        }
        if self.t0 / self.dt() < MIN_SAMPLES_PER_WIDTH {
            return Err(Error::param(
                "samples",
                format!("need at least {MIN_SAMPLES_PER_WIDTH} samples per t0, got {}", self.t0 / self.dt()),
            ));
        }
        if !self.t_start.is_finite() {
            return Err(Error::param("t_start", "must be finite"));
        }
        if self.z_grid.windows(2).any(|w| w[1] < w[0]) || self.z_grid.iter().any(|&z| !(z >= 0.0)) {
            return Err(Error::param("z_grid", "must be sorted and non-negative"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.span / self.n_samples as f64
    }

    pub fn d_omega(&self) -> f64 {
        2.0 * PI / self.span
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples).map(|k| self.t_start + k as f64 * self.dt()).collect()
    }

    /// Angular frequencies in FFT order: 0, dω, ..., -dω.
    pub fn omegas(&self) -> Vec<f64> {
        let n = self.n_samples as i64;
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n } as f64 * self.d_omega())
            .collect()
    }

    pub fn weight(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.a_plus,
            Branch::Minus => self.a_minus,
        }
    }
}

/// Φ(0, t) for unit weight.
pub fn gaussian_pulse(t: f64, t0: f64) -> f64 {
    (2.0 * LN_2.sqrt() / (t0 * PI.sqrt())).sqrt() * (-2.0 * LN_2 * t * t / (t0 * t0)).exp()
}

/// Analytic Φ̃(0, ω) for unit weight.
pub fn gaussian_spectrum(omega: f64, t0: f64) -> f64 {
    (2.0 * LN_2.sqrt() / (t0 * PI.sqrt())).sqrt() * t0 / (2.0 * LN_2.sqrt())
        * (-t0 * t0 * omega * omega / (8.0 * LN_2)).exp()
}

/// Input samples of one branch: time samples and the analytic spectrum on
/// the FFT frequency grid.
pub fn gaussian_input(spec: &WavepacketSpec, branch: Branch) -> (Vec<Complex64>, Vec<Complex64>) {
    let amp = spec.weight(branch).sqrt();
    let time = spec
        .times()
        .iter()
        .map(|&t| Complex64::new(amp * gaussian_pulse(t, spec.t0), 0.0))
        .collect();
    let spectrum = spec
        .omegas()
        .iter()
        .map(|&w| Complex64::new(amp * gaussian_spectrum(w, spec.t0), 0.0))
        .collect();
    (time, spectrum)
}

/// Time samples to spectral samples under the crate's convention.
pub fn to_spectrum(spec: &WavepacketSpec, time: &[Complex64]) -> Vec<Complex64> {
    let mut buf = time.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let scale = spec.dt() / (2.0 * PI).sqrt();
    buf.iter()
        .zip(spec.omegas())
        .map(|(v, w)| v * Complex64::from_polar(scale, w * spec.t_start))
        .collect()
}

/// Spectral samples back to time samples.
pub fn to_time(spec: &WavepacketSpec, spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .zip(spec.omegas())
        .map(|(v, w)| v * Complex64::from_polar(1.0, -w * spec.t_start))
        .collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let scale = spec.d_omega() / (2.0 * PI).sqrt();
    buf.iter().map(|v| v * scale).collect()
}

/// ∫ |Φ|² dt on the grid.
pub fn energy(samples: &[Complex64], dt: f64) -> f64 {
    samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * dt
}

/// ∫ conj(a) b dt.
pub fn overlap(a: &[Complex64], b: &[Complex64], dt: f64) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dt
}

/// Share of the energy sitting in the outer 5% at either end of the window.
pub fn edge_fraction(samples: &[Complex64]) -> f64 {
    let total: f64 = samples.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let edge = ((samples.len() as f64 * EDGE_FRACTION).ceil() as usize).max(1);
    let head: f64 = samples[..edge].iter().map(|v| v.norm_sqr()).sum();
    let tail: f64 = samples[samples.len() - edge..].iter().map(|v| v.norm_sqr()).sum();
    (head + tail) / total
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketField {
    pub z_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Φ₊[z][t].
    pub plus: Vec<Vec<Complex64>>,
    /// Φ₋[z][t].
    pub minus: Vec<Vec<Complex64>>,
    /// Σ_j ∫|Φ_j|² dt at each output position.
    pub norms: Vec<f64>,
    /// Norm of the sampled input at z = 0.
    pub norm_in: f64,
    /// Norm at the last output position.
    pub norm_out: f64,
}

impl WavepacketField {
    pub fn branch(&self, branch: Branch) -> &[Vec<Complex64>] {
        match branch {
            Branch::Plus => &self.plus,
            Branch::Minus => &self.minus,
        }
    }

    pub fn dt(&self) -> f64 {
        match self.t_grid.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        }
    }
}

/// exp(i ∫₀ᶻ K dz') for every output position at one frequency.
fn spectral_transfer(
    kernel: &DispersionKernel,
    omega: f64,
    params: &PhysicalParams,
    gate: Gate,
    z_grid: &[f64],
    opts: &QuadratureOptions,
) -> Result<Vec<Complex64>> {
    let length = params.length();
    let integrals = match gate {
        Gate::Absent => integrate_cumulative(|_| kernel.k(omega, 0.0), 0.0, length, z_grid, None, opts),
        Gate::Fixed | Gate::Displaced { .. } => {
            let (center, weight) = match gate {
                Gate::Displaced { center, weight } => (center, weight),
                _ => (params.gate_position(), 1.0),
            };
            let c6 = params.c6() * weight;
            let half_width = core_half_width(params, weight);
            let core = (half_width > 0.0).then_some(Core { center, half_width });
            integrate_cumulative(
                |z| kernel.k(omega, delta_d_at_separation(center - z, c6)),
                0.0,
                length,
                z_grid,
                core,
                opts,
            )
        }
    };
    let integrals = integrals.map_err(|e| Error::SpectralComponent { omega, source: Box::new(e) })?;
    Ok(integrals.iter().map(|s| (Complex64::i() * s).exp()).collect())
}

fn propagate_branch(
    spec: &WavepacketSpec,
    params: &PhysicalParams,
    gate: Gate,
    branch: Branch,
    opts: &QuadratureOptions,
) -> Result<Vec<Vec<Complex64>>> {
    let (time, _) = gaussian_input(spec, branch);
    let spectrum = to_spectrum(spec, &time);
    let peak = spectrum.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let kernel = DispersionKernel::new(branch, params);
    let omegas = spec.omegas();

    // factors[m][z]; negligible components are dropped entirely.
    let factors: Vec<Option<Vec<Complex64>>> = omegas
        .par_iter()
        .zip(&spectrum)
        .map(|(&omega, amp)| {
            if peak == 0.0 || amp.norm() <= NEGLIGIBLE_AMPLITUDE * peak {
                return Ok(None);
            }
            spectral_transfer(&kernel, omega, params, gate, &spec.z_grid, opts).map(Some)
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<_>>()?;

    spec.z_grid
        .iter()
        .enumerate()
        .map(|(iz, &z)| {
            let shifted: Vec<Complex64> = spectrum
                .iter()
                .zip(&factors)
                .map(|(amp, f)| f.as_ref().map_or(Complex64::new(0.0, 0.0), |f| amp * f[iz]))
                .collect();
            let field = to_time(spec, &shifted);
            let fraction = edge_fraction(&field);
            if fraction > ALIASING_LIMIT {
                return Err(Error::Aliasing { z, fraction });
            }
            Ok(field)
        })
        .collect()
}

/// Propagates both polarization components through the medium.
pub fn propagate(spec: &WavepacketSpec, params: &PhysicalParams, gate_present: bool) -> Result<WavepacketField> {
    let gate = if gate_present { Gate::Fixed } else { Gate::Absent };
    propagate_with(spec, params, gate, &QuadratureOptions::default())
}

pub fn propagate_with(
    spec: &WavepacketSpec,
    params: &PhysicalParams,
    gate: Gate,
    opts: &QuadratureOptions,
) -> Result<WavepacketField> {
    spec.validate()?;
    if let Some(&z) = spec.z_grid.iter().find(|&&z| z > params.length()) {
        return Err(Error::param("z_grid", format!("position {z} um lies beyond the medium")));
    }
    let plus = propagate_branch(spec, params, gate, Branch::Plus, opts)?;
    let minus = propagate_branch(spec, params, gate, Branch::Minus, opts)?;
    let dt = spec.dt();
    let norms: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| energy(p, dt) + energy(m, dt)).collect();
    let norm_in = energy(&gaussian_input(spec, Branch::Plus).0, dt) + energy(&gaussian_input(spec, Branch::Minus).0, dt);
    let norm_out = norms.last().copied().unwrap_or(norm_in);
    Ok(WavepacketField {
        z_grid: spec.z_grid.clone(),
        t_grid: spec.times(),
        plus,
        minus,
        norms,
        norm_in,
        norm_out,
    })
}

/// Writes `z,t,abs,arg,branch` rows (um, s, amplitude in s^-1/2, rad).
pub fn write_field_csv<W: Write>(mut out: W, field: &WavepacketField) -> Result<()> {
    writeln!(out, "z,t,abs,arg,branch")?;
    for branch in Branch::BOTH {
        for (z, row) in field.z_grid.iter().zip(field.branch(branch)) {
            for (t, v) in field.t_grid.iter().zip(row) {
                writeln!(out, "{z:e},{t:e},{:e},{:e},{branch}", v.norm(), v.arg())?;
            }
        }
    }
    Ok(())
}

/// Magic bytes opening a binary field grid.
pub const GRID_MAGIC: &[u8; 8] = b"RQWFGRID";
pub const GRID_VERSION: u32 = 1;

/// Binary grid, all little-endian:
///
/// ```text
/// magic      8 bytes  "RQWFGRID"
/// version    u32      1
/// n_branch   u32      2 (plus, then minus)
/// n_z        u32
/// n_t        u32
/// z grid     n_z f64  (um)
/// t grid     n_t f64  (s)
/// field      n_branch * n_z * n_t pairs of f64 (re, im), row-major [branch][z][t]
/// ```
pub fn write_binary_grid<W: Write>(mut out: W, field: &WavepacketField) -> Result<()> {
    out.write_all(GRID_MAGIC)?;
    for v in [GRID_VERSION, 2, field.z_grid.len() as u32, field.t_grid.len() as u32] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in field.z_grid.iter().chain(&field.t_grid) {
        out.write_all(&v.to_le_bytes())?;
    }
    for branch in Branch::BOTH {
        for row in field.branch(branch) {
            for v in row {
                out.write_all(&v.re.to_le_bytes())?;
                out.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Grid read back from [`write_binary_grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryGrid {
    pub z_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub plus: Vec<Vec<Complex64>>,
    pub minus: Vec<Vec<Complex64>>,
}

pub fn read_binary_grid<R: Read>(mut input: R) -> Result<BinaryGrid> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(Error::Config("not a wavepacket grid file".into()));
    }
    let mut u32s = [0u32; 4];
    for v in &mut u32s {
        let mut b = [0u8; 4];
        input.read_exact(&mut b)?;
        *v = u32::from_le_bytes(b);
    }
    let [version, n_branch, n_z, n_t] = u32s;
    if version != GRID_VERSION || n_branch != 2 {
        return Err(Error::Config(format!("unsupported grid version {version} with {n_branch} branches")));
    }
    let mut read_f64 = || -> Result<f64> {
        let mut b = [0u8; 8];
        input.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    };
    let z_grid = (0..n_z).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
    let t_grid = (0..n_t).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
    let mut branches = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut rows = Vec::with_capacity(n_z as usize);
        for _ in 0..n_z {
            let row = (0..n_t)
                .map(|_| Ok(Complex64::new(read_f64()?, read_f64()?)))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        branches.push(rows);
    }
    let minus = branches.pop().expect("two branches");
    let plus = branches.pop().expect("two branches");
    Ok(BinaryGrid { z_grid, t_grid, plus, minus })
}
