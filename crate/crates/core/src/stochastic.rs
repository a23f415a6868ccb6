//! Monte Carlo average over a delocalized gate atom.
//!
//! Each sample displaces the gate by ξ, drawn uniformly from a range. In the
//! weighted mode the vdW detuning is also multiplied by the distribution
//! f(ξ) = exp(-(ξ/σ)²) / (√π σ), taken numerically with σ and ξ in um.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::delta_d_at_separation;
use crate::params::PhysicalParams;
use crate::quadrature::QuadratureOptions;
use crate::transfer::{transfer_with, Gate, TransferResult};

pub const DEFAULT_SIGMA: f64 = 5.0;
pub const DEFAULT_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DelocalizationMode {
    /// Δd(z, ξ) = -f(ξ) C6 / |zg + ξ - z|⁶.
    WeightedDelta,
    /// Δd(z, ξ) = -C6 / |zg + ξ - z|⁶.
    PositionOnly,
}

impl DelocalizationMode {
    pub fn label(self) -> &'static str {
        match self {
            DelocalizationMode::WeightedDelta => "weighted_delta",
            DelocalizationMode::PositionOnly => "position_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelocalizationSpec {
    /// Width of f, um.
    pub sigma: f64,
    /// Displacement range (lo, hi) in um; lo == hi pins every sample.
    pub xi_range: (f64, f64),
    pub n_samples: usize,
    pub seed: u64,
    pub mode: DelocalizationMode,
}

impl DelocalizationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::param("samples", "need at least one sample"));
        }
        let (lo, hi) = self.xi_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::param("xi-range", format!("need finite lo <= hi, got [{lo}, {hi}]")));
        }
        if self.mode == DelocalizationMode::WeightedDelta && !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::param("sigma", format!("must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    /// f(ξ) in the weighted mode, 1 otherwise.
    pub fn weight(&self, xi: f64) -> f64 {
        match self.mode {
            DelocalizationMode::WeightedDelta => distribution(xi, self.sigma),
            DelocalizationMode::PositionOnly => 1.0,
        }
    }

    /// Displacement of sample `index`. Each sample owns a ChaCha stream, so
    /// the draw does not depend on evaluation order.
    pub fn draw(&self, index: usize) -> f64 {
        let (lo, hi) = self.xi_range;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let u: f64 = rng.random();
        lo + (hi - lo) * u
    }

    fn gate(&self, params: &PhysicalParams, xi: f64) -> Gate {
        Gate::Displaced {
            center: params.gate_position() + xi,
            weight: self.weight(xi),
        }
    }
}

/// f(ξ) = exp(-(ξ/σ)²) / (√π σ).
pub fn distribution(xi: f64, sigma: f64) -> f64 {
    (-(xi / sigma).powi(2)).exp() / (PI.sqrt() * sigma)
}

pub fn delta_d_delocalized(z: f64, xi: f64, spec: &DelocalizationSpec, params: &PhysicalParams) -> Result<f64> {
    let separation = params.gate_position() + xi - z;
    if separation == 0.0 {
        return Err(Error::GateCoincidence { z });
    }
    Ok(delta_d_at_separation(separation, spec.weight(xi) * params.c6()))
}

/// η± and φ± of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Observables {
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
}

impl Observables {
    fn from_result(r: &TransferResult) -> Self {
        Self {
            eta_plus: r.eta_plus,
            eta_minus: r.eta_minus,
            phi_plus: r.phi_plus,
            phi_minus: r.phi_minus,
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [self.eta_plus, self.eta_minus, self.phi_plus, self.phi_minus]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            eta_plus: a[0],
            eta_minus: a[1],
            phi_plus: a[2],
            phi_minus: a[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub index: usize,
    pub xi: f64,
    /// `None` when the transfer failed for this draw.
    pub values: Option<Observables>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub samples: Vec<Sample>,
    /// Number of samples dropped because their transfer failed.
    pub excluded: usize,
    pub mean: Observables,
    /// Sample standard deviation (n - 1 denominator; 0 for a single sample).
    pub std: Observables,
    pub min: Observables,
    pub max: Observables,
    /// Same mode evaluated at ξ = 0.
    pub reference: Observables,
}

pub fn ensemble_transfer(spec: &DelocalizationSpec, params: &PhysicalParams) -> Result<EnsembleStats> {
    ensemble_transfer_with(spec, params, &QuadratureOptions::default())
}

pub fn ensemble_transfer_with(
    spec: &DelocalizationSpec,
    params: &PhysicalParams,
    opts: &QuadratureOptions,
) -> Result<EnsembleStats> {
    spec.validate()?;
    let reference = Observables::from_result(&transfer_with(params, spec.gate(params, 0.0), opts)?);
    let samples: Vec<Sample> = (0..spec.n_samples)
        .into_par_iter()
        .map(|index| {
            let xi = spec.draw(index);
            let values = transfer_with(params, spec.gate(params, xi), opts)
                .ok()
                .map(|r| Observables::from_result(&r));
            Sample { index, xi, values }
        })
        .collect();

    let good: Vec<[f64; 4]> = samples.iter().filter_map(|s| s.values.map(|v| v.as_array())).collect();
    let excluded = samples.len() - good.len();
    if good.is_empty() {
        return Err(Error::param("samples", "every sample failed; no statistics available"));
    }
    let n = good.len() as f64;
    let mut mean = [0.0; 4];
    let mut min = [f64::INFINITY; 4];
    let mut max = [f64::NEG_INFINITY; 4];
    for row in &good {
        for k in 0..4 {
            mean[k] += row[k];
            min[k] = min[k].min(row[k]);
            max[k] = max[k].max(row[k]);
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = [0.0; 4];
    if good.len() > 1 {
        for row in &good {
            for k in 0..4 {
                std[k] += (row[k] - mean[k]).powi(2);
            }
        }
        for s in &mut std {
            *s = (*s / (n - 1.0)).sqrt();
        }
    }
    // Rounding in the mean must not push it outside the sample range.
    for k in 0..4 {
        mean[k] = mean[k].clamp(min[k], max[k]);
    }
    Ok(EnsembleStats {
        samples,
        excluded,
        mean: Observables::from_array(mean),
        std: Observables::from_array(std),
        min: Observables::from_array(min),
        max: Observables::from_array(max),
        reference,
    })
}

/// Writes a `#` metadata header, one row per sample and a `#` stats footer.
pub fn write_ensemble_csv<W: Write>(mut out: W, spec: &DelocalizationSpec, stats: &EnsembleStats) -> Result<()> {
    writeln!(
        out,
        "# seed={} mode={} sigma={} xi_lo={} xi_hi={} n_samples={} excluded={}",
        spec.seed,
        spec.mode.label(),
        spec.sigma,
        spec.xi_range.0,
        spec.xi_range.1,
        spec.n_samples,
        stats.excluded
    )?;
    writeln!(out, "index,xi,eta_plus,eta_minus,phi_plus,phi_minus")?;
    for s in &stats.samples {
        match s.values {
            Some(v) => writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e}",
                s.index, s.xi, v.eta_plus, v.eta_minus, v.phi_plus, v.phi_minus
            )?,
            None => writeln!(out, "{},{:e},,,,", s.index, s.xi)?,
        }
    }
    for (label, v) in [
        ("mean", stats.mean),
        ("std", stats.std),
        ("min", stats.min),
        ("max", stats.max),
        ("reference", stats.reference),
    ] {
        writeln!(
            out,
            "# {label},{:e},{:e},{:e},{:e}",
            v.eta_plus, v.eta_minus, v.phi_plus, v.phi_minus
        )?;
    }
    Ok(())
}
