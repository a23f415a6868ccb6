//! Rydberg defect potential V±(z) = -ħ c K±(z, 0) seen by the probe.
//!
//! Potentials are stored as V/ħ in rad/s. Exports use units of ħ × 2π MHz.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::{delta_d_at_separation, Branch, ComplexDetunings};
use crate::params::{zeeman_detunings, PhysicalParams};

/// Which closed-form expression produced a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Form {
    Full,
    /// γ4α = 0 and the Zeeman shift dropped next to Δd.
    Simplified,
}

impl Form {
    pub fn label(self) -> &'static str {
        match self {
            Form::Full => "full",
            Form::Simplified => "simplified",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectPotential {
    pub z_grid: Vec<f64>,
    /// Re V / ħ, rad/s.
    pub re_v: Vec<f64>,
    /// Im V / ħ, rad/s.
    pub im_v: Vec<f64>,
    pub branch: Branch,
    pub form: Form,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Dissipative,
    Dispersive,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub branch: Branch,
    /// max|Im V| / max|Re V| over the grid.
    pub ratio: f64,
    pub regime: Regime,
}

/// Default ratio threshold separating the regimes.
pub const DEFAULT_REGIME_THRESHOLD: f64 = 3.0;

/// Number of cells in the default position grid.
pub const DEFAULT_GRID_CELLS: usize = 2001;

/// Cell centres of a uniform 2001-cell partition of [0, L], with the centre
/// nearest the gate removed.
pub fn default_z_grid(params: &PhysicalParams) -> Vec<f64> {
    let n = DEFAULT_GRID_CELLS;
    let step = params.length() / n as f64;
    let zg = params.gate_position();
    let mut grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * step).collect();
    let nearest = grid
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - zg).abs().total_cmp(&(b.1 - zg).abs()))
        .map(|(i, _)| i)
        .expect("grid is nonempty");
    grid.remove(nearest);
    grid
}

fn check_grid(z_grid: &[f64], params: &PhysicalParams) -> Result<()> {
    let zg = params.gate_position();
    if let Some(&z) = z_grid.iter().find(|&&z| z == zg) {
        return Err(Error::GateCoincidence { z });
    }
    Ok(())
}

fn zeeman_for(branch: Branch, params: &PhysicalParams) -> f64 {
    let (delta1, delta2) = zeeman_detunings(params.b_field());
    match branch {
        Branch::Plus => delta1,
        Branch::Minus => delta2,
    }
}

/// Re and Im of V/ħ from the full expressions (Δ4 = 0).
pub fn potential_full(z_grid: &[f64], branch: Branch, params: &PhysicalParams) -> Result<DefectPotential> {
    if params.delta4() != 0.0 {
        return Err(Error::param("delta4", "the full potential form requires zero two-photon detuning"));
    }
    check_grid(z_grid, params)?;
    let prefactor = params.coupling_g2n() / 2.0;
    let omega_c_sq = params.omega_c().powi(2);
    let zeeman = zeeman_for(branch, params);
    let (d3, d4) = ComplexDetunings::new(params).for_branch(branch);
    let (g3, g4) = (d3.im, d4.im);
    let offset = params.delta3() - zeeman;
    let zg = params.gate_position();

    let (re_v, im_v) = z_grid
        .iter()
        .map(|&z| {
            let u = delta_d_at_separation(zg - z, params.c6()) + zeeman;
            let den_re = omega_c_sq + offset * u + g3 * g4;
            let den_im = g3 * u - offset * g4;
            let den = den_re * den_re + den_im * den_im;
            let re = prefactor * (u * (omega_c_sq + offset * u) + offset * g4 * g4) / den;
            let im = -prefactor * (u * u * g3 + omega_c_sq * g4 + g3 * g4 * g4) / den;
            (re, im)
        })
        .unzip();
    Ok(DefectPotential {
        z_grid: z_grid.to_vec(),
        re_v,
        im_v,
        branch,
        form: Form::Full,
    })
}

/// Re and Im of V/ħ with γ4α = 0 and the Zeeman shift dropped next to Δd.
pub fn potential_simplified(
    z_grid: &[f64],
    branch: Branch,
    params: &PhysicalParams,
) -> Result<DefectPotential> {
    if params.delta4() != 0.0 {
        return Err(Error::param("delta4", "the simplified potential form requires zero two-photon detuning"));
    }
    check_grid(z_grid, params)?;
    let prefactor = params.coupling_g2n() / 2.0;
    let omega_c_sq = params.omega_c().powi(2);
    let (d3, _) = ComplexDetunings::new(params).for_branch(branch);
    let zg = params.gate_position();

    let (re_v, im_v) = z_grid
        .iter()
        .map(|&z| {
            let dd = delta_d_at_separation(zg - z, params.c6());
            let den = (omega_c_sq + d3 * dd).norm_sqr();
            let re = prefactor * dd * (omega_c_sq + d3.re * dd) / den;
            let im = -prefactor * d3.im * dd * dd / den;
            (re, im)
        })
        .unzip();
    Ok(DefectPotential {
        z_grid: z_grid.to_vec(),
        re_v,
        im_v,
        branch,
        form: Form::Simplified,
    })
}

/// Blockade radius where |Δd(r)| = |Ωc|²/γ31, in um.
pub fn blockade_radius(params: &PhysicalParams) -> Result<f64> {
    blockade_radius_with_threshold(params, 1.0)
}

/// Radius where |Δd(r)| = threshold × |Ωc|²/γ31.
pub fn blockade_radius_with_threshold(params: &PhysicalParams, threshold: f64) -> Result<f64> {
    if params.omega_c() == 0.0 {
        return Err(Error::param("omega-c", "blockade radius is unbounded without a control field"));
    }
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::param("threshold", format!("must be > 0, got {threshold}")));
    }
    let width = threshold * params.omega_c().powi(2) / params.gamma31();
    Ok((params.c6().abs() / width).powf(1.0 / 6.0))
}

/// Classifies a profile with the default threshold.
pub fn classify_regime(potential: &DefectPotential) -> Result<RegimeReport> {
    classify_regime_with_threshold(potential, DEFAULT_REGIME_THRESHOLD)
}

pub fn classify_regime_with_threshold(potential: &DefectPotential, threshold: f64) -> Result<RegimeReport> {
    if potential.z_grid.is_empty() {
        return Err(Error::param("z_grid", "cannot classify an empty profile"));
    }
    if !(threshold >= 1.0) {
        return Err(Error::param("threshold", format!("must be >= 1, got {threshold}")));
    }
    let max_abs = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let (re, im) = (max_abs(&potential.re_v), max_abs(&potential.im_v));
    let ratio = match (re == 0.0, im == 0.0) {
        (true, true) => 1.0,
        (true, false) => f64::INFINITY,
        _ => im / re,
    };
    let regime = if ratio > threshold {
        Regime::Dissipative
    } else if ratio < 1.0 / threshold {
        Regime::Dispersive
    } else {
        Regime::Mixed
    };
    Ok(RegimeReport {
        branch: potential.branch,
        ratio,
        regime,
    })
}

/// Writes `z/r_b,ReV,ImV,branch,form` rows. Positions are measured from the
/// gate in units of the blockade radius; potentials in ħ × 2π MHz.
pub fn write_potential_csv<W: Write>(
    mut out: W,
    profiles: &[DefectPotential],
    gate_position: f64,
    blockade_radius: f64,
) -> Result<()> {
    let unit = 2.0 * PI * 1e6;
    writeln!(out, "z/r_b,ReV,ImV,branch,form")?;
    for p in profiles {
        for ((z, re), im) in p.z_grid.iter().zip(&p.re_v).zip(&p.im_v) {
            writeln!(
                out,
                "{:e},{:e},{:e},{},{}",
                (z - gate_position) / blockade_radius,
                re / unit,
                im / unit,
                p.branch,
                p.form.label()
            )?;
        }
    }
    Ok(())
}
