//! Frequency-domain transfer through the medium: attenuation η± and phase φ±
//! of each polarization component, group velocities and the output qubit.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::{delta_d, delta_d_at_separation, group_velocity, Branch, DispersionKernel};
use crate::params::{PhysicalParams, SPEED_OF_LIGHT};
use crate::quadrature::{integrate, Core, QuadratureOptions};

/// Core window half-width in units of the blockade radius.
const CORE_RADII: f64 = 3.0;

/// How the stored gate excitation enters the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// No gate photon: Δd ≡ 0.
    Absent,
    /// Gate atom at the configured position.
    Fixed,
    /// Gate atom at `center` with its vdW shift multiplied by `weight`.
    Displaced { center: f64, weight: f64 },
}

impl Gate {
    fn resolve(self, params: &PhysicalParams) -> Option<(f64, f64)> {
        match self {
            Gate::Absent => None,
            Gate::Fixed => Some((params.gate_position(), 1.0)),
            Gate::Displaced { center, weight } => Some((center, weight)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferResult {
    pub eta_plus: f64,
    pub eta_minus: f64,
    /// Unwrapped phase, rad.
    pub phi_plus: f64,
    pub phi_minus: f64,
    /// Group velocity far from the gate, fraction of c.
    pub vg_plus: f64,
    pub vg_minus: f64,
    pub od: f64,
    pub gate_present: bool,
}

impl TransferResult {
    pub fn eta(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.eta_plus,
            Branch::Minus => self.eta_minus,
        }
    }

    pub fn phi(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.phi_plus,
            Branch::Minus => self.phi_minus,
        }
    }
}

/// a31(z) for the plus branch, a32(z) for minus; (|g|²N/c) a = K(z, 0).
pub fn kernel_a(z: f64, branch: Branch, params: &PhysicalParams) -> Result<Complex64> {
    let dd = delta_d(z, params)?;
    Ok(DispersionKernel::new(branch, params).response(0.0, dd)? / 2.0)
}

/// Half-width of the densely resolved window around a gate with the given
/// vdW weight: a few radii where |Δd| equals the EIT linewidth.
pub fn core_half_width(params: &PhysicalParams, weight: f64) -> f64 {
    let width = params.omega_c().powi(2).max(params.gamma31().powi(2)) / params.gamma31();
    CORE_RADII * (params.c6().abs() * weight.abs() / width).powf(1.0 / 6.0)
}

/// ∫₀ᴸ K(z, 0) dz = φ + iη for one branch.
pub fn transfer_integral(
    params: &PhysicalParams,
    branch: Branch,
    gate: Gate,
    opts: &QuadratureOptions,
) -> Result<Complex64> {
    let kernel = DispersionKernel::new(branch, params);
    let length = params.length();
    match gate.resolve(params) {
        None => integrate(|_| kernel.k_atomic(0.0, 0.0), 0.0, length, None, opts),
        Some((center, weight)) => {
            let c6 = params.c6() * weight;
            let half_width = core_half_width(params, weight);
            let core = (half_width > 0.0).then_some(Core { center, half_width });
            integrate(
                |z| kernel.k_atomic(0.0, delta_d_at_separation(center - z, c6)),
                0.0,
                length,
                core,
                opts,
            )
        }
    }
}

/// Attenuation and phase of both components, with default quadrature.
pub fn transfer(params: &PhysicalParams, gate_present: bool) -> Result<TransferResult> {
    let gate = if gate_present { Gate::Fixed } else { Gate::Absent };
    transfer_with(params, gate, &QuadratureOptions::default())
}

pub fn transfer_with(params: &PhysicalParams, gate: Gate, opts: &QuadratureOptions) -> Result<TransferResult> {
    let plus = transfer_integral(params, Branch::Plus, gate, opts)?;
    let minus = transfer_integral(params, Branch::Minus, gate, opts)?;
    Ok(TransferResult {
        eta_plus: plus.im,
        eta_minus: minus.im,
        phi_plus: plus.re,
        phi_minus: minus.re,
        vg_plus: group_velocity(Branch::Plus, params)?,
        vg_minus: group_velocity(Branch::Minus, params)?,
        od: params.optical_depth(),
        gate_present: gate != Gate::Absent,
    })
}

/// Polarization qubit c₊|σ+> + c₋|σ->.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

impl QubitState {
    /// A normalized input state; |c₊|² + |c₋|² must be 1 within 1e-12.
    pub fn new(c_plus: Complex64, c_minus: Complex64) -> Result<Self> {
        let state = Self { c_plus, c_minus };
        if (state.norm_sqr() - 1.0).abs() > 1e-12 {
            return Err(Error::param(
                "qubit",
                format!("input state must be normalized, |c+|²+|c-|² = {}", state.norm_sqr()),
            ));
        }
        Ok(state)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_plus.norm_sqr() + self.c_minus.norm_sqr()
    }
}

/// Applies e^{-η} e^{iφ} to each component when the gate is present. The
/// result is not renormalized.
pub fn output_state(input: QubitState, result: &TransferResult) -> QubitState {
    if !result.gate_present {
        return input;
    }
    let factor = |eta: f64, phi: f64| Complex64::from_polar((-eta).exp(), phi);
    QubitState {
        c_plus: input.c_plus * factor(result.eta_plus, result.phi_plus),
        c_minus: input.c_minus * factor(result.eta_minus, result.phi_minus),
    }
}

/// Parameter swept in curves and root finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanVar {
    /// Field in gauss.
    MagneticField,
    /// Optical depth, varied through |g|²N at fixed length.
    OpticalDepth,
    /// One-photon detuning in rad/s.
    Delta3,
}

impl ScanVar {
    pub fn apply(self, params: &PhysicalParams, value: f64) -> Result<PhysicalParams> {
        match self {
            ScanVar::MagneticField => params.with_b_field(value),
            ScanVar::OpticalDepth => params.with_optical_depth(value),
            ScanVar::Delta3 => params.with_delta3(value),
        }
    }

    /// CSV column name; Δ3 is written in MHz (cycles).
    pub fn column(self) -> &'static str {
        match self {
            ScanVar::MagneticField => "B_G",
            ScanVar::OpticalDepth => "od",
            ScanVar::Delta3 => "delta3_MHz",
        }
    }

    pub fn to_display(self, value: f64) -> f64 {
        match self {
            ScanVar::Delta3 => value / (2.0 * std::f64::consts::PI * 1e6),
            _ => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub result: TransferResult,
}

/// Evaluates the transfer at every scan value in parallel; output keeps scan order.
pub fn sweep(
    params: &PhysicalParams,
    var: ScanVar,
    values: &[f64],
    gate: Gate,
    opts: &QuadratureOptions,
) -> Result<Vec<SweepPoint>> {
    let results: Vec<Result<SweepPoint>> = values
        .par_iter()
        .map(|&value| {
            let p = var.apply(params, value)?;
            Ok(SweepPoint { value, result: transfer_with(&p, gate, opts)? })
        })
        .collect();
    results.into_iter().collect()
}

/// Scan value where |φ| = π for the given branch, by bisection to 1e-3.
pub fn find_pi_phase(
    params: &PhysicalParams,
    branch: Branch,
    var: ScanVar,
    bracket: (f64, f64),
) -> Result<f64> {
    find_pi_phase_with(params, branch, var, bracket, &QuadratureOptions::default())
}

pub fn find_pi_phase_with(
    params: &PhysicalParams,
    branch: Branch,
    var: ScanVar,
    bracket: (f64, f64),
    opts: &QuadratureOptions,
) -> Result<f64> {
    const TOLERANCE: f64 = 1e-3;
    let excess = |x: f64| -> Result<f64> {
        let p = var.apply(params, x)?;
        Ok(transfer_integral(&p, branch, Gate::Fixed, opts)?.re.abs() - std::f64::consts::PI)
    };
    let (mut lo, mut hi) = bracket;
    let (f_lo, f_hi) = (excess(lo)?, excess(hi)?);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let mut sign_lo = f_lo.signum();
    while (hi - lo).abs() > TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let f_mid = excess(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == sign_lo {
            lo = mid;
            sign_lo = f_mid.signum();
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Writes the sweep table: scan variable, η₊, η₋, φ₊, φ₋, Vg₊, Vg₋.
pub fn write_sweep_csv<W: Write>(mut out: W, var: ScanVar, points: &[SweepPoint]) -> Result<()> {
    writeln!(out, "{},eta_plus,eta_minus,phi_plus,phi_minus,vg_plus,vg_minus", var.column())?;
    for p in points {
        let r = &p.result;
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            var.to_display(p.value),
            r.eta_plus,
            r.eta_minus,
            r.phi_plus,
            r.phi_minus,
            r.vg_plus,
            r.vg_minus
        )?;
    }
    Ok(())
}

/// (|g|²N / c), the prefactor turning ∫a dz into η and φ.
pub fn kernel_prefactor(params: &PhysicalParams) -> f64 {
    params.coupling_g2n() / SPEED_OF_LIGHT
}
