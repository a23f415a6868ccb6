//! Gate-induced detuning and the linear dispersion relations K±(z, ω).

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{zeeman_detunings, PhysicalParams, SPEED_OF_LIGHT};

/// Polarization component of the probe photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// σ+, couples |1> to |3>.
    Plus,
    /// σ-, couples |2> to |3>.
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    pub fn label(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Complex detunings d_ab = Delta_a - Delta_b + i gamma_ab, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexDetunings {
    pub d31: Complex64,
    pub d32: Complex64,
    pub d41: Complex64,
    pub d42: Complex64,
}

impl ComplexDetunings {
    pub fn new(params: &PhysicalParams) -> Self {
        let (delta1, delta2) = zeeman_detunings(params.b_field());
        let delta3 = params.delta3();
        let delta4 = params.delta4();
        Self {
            d31: Complex64::new(delta3 - delta1, params.gamma31()),
            d32: Complex64::new(delta3 - delta2, params.gamma32()),
            d41: Complex64::new(delta4 - delta1, params.gamma41()),
            d42: Complex64::new(delta4 - delta2, params.gamma42()),
        }
    }

    /// (d3a, d4a) for the branch: a = 1 for plus, 2 for minus.
    pub fn for_branch(&self, branch: Branch) -> (Complex64, Complex64) {
        match branch {
            Branch::Plus => (self.d31, self.d41),
            Branch::Minus => (self.d32, self.d42),
        }
    }
}

/// Detuning from the vdW shift at distance `separation` (um): -C6 / r^6.
pub fn delta_d_at_separation(separation: f64, c6: f64) -> f64 {
    if c6 == 0.0 {
        return 0.0;
    }
    -c6 / separation.abs().powi(6)
}

/// Position-dependent detuning Delta_d(z) = -C6 / |zg - z|^6 in rad/s.
pub fn delta_d(z: f64, params: &PhysicalParams) -> Result<f64> {
    let separation = params.gate_position() - z;
    if separation == 0.0 {
        return Err(Error::GateCoincidence { z });
    }
    Ok(delta_d_at_separation(separation, params.c6()))
}

/// Precomputed per-branch coefficients of the dispersion relation.
///
/// K(ω, Δd) = ω/c + (|g|²N / 2c) · Y / D with Y = ω + d4 - Δd and
/// D = |Ωc|² - (ω + d3) Y.
#[derive(Debug, Clone, Copy)]
pub struct DispersionKernel {
    pub branch: Branch,
    /// |g_p|²N / (2c), rad²/s² per um/s.
    pub half_coupling: f64,
    pub omega_c_sq: f64,
    pub d3: Complex64,
    pub d4: Complex64,
}

/// Above this |Y| the response is evaluated as 1/(|Ωc|²/Y - w3) to avoid
/// overflow in the complex division.
const LARGE_Y: f64 = 1e100;

impl DispersionKernel {
    pub fn new(branch: Branch, params: &PhysicalParams) -> Self {
        let (d3, d4) = ComplexDetunings::new(params).for_branch(branch);
        Self {
            branch,
            half_coupling: params.coupling_g2n() / (2.0 * SPEED_OF_LIGHT),
            omega_c_sq: params.omega_c() * params.omega_c(),
            d3,
            d4,
        }
    }

    /// The dimensionless-per-frequency response Y/D (units s/rad).
    pub fn response(&self, omega: f64, delta_d: f64) -> Result<Complex64> {
        let w3 = self.d3 + omega;
        if delta_d.is_infinite() {
            return Ok(-w3.inv());
        }
        let y = self.d4 + omega - delta_d;
        let r = if y.norm() > LARGE_Y {
            (self.omega_c_sq / y - w3).inv()
        } else {
            let d = self.omega_c_sq - w3 * y;
            if d == Complex64::new(0.0, 0.0) {
                return Err(Error::Pole { omega });
            }
            y / d
        };
        if !(r.re.is_finite() && r.im.is_finite()) {
            return Err(Error::Pole { omega });
        }
        Ok(r)
    }

    /// K in um^-1.
    pub fn k(&self, omega: f64, delta_d: f64) -> Result<Complex64> {
        Ok(omega / SPEED_OF_LIGHT + self.half_coupling * self.response(omega, delta_d)?)
    }

    /// K without the vacuum term ω/c, i.e. the atomic contribution only.
    pub fn k_atomic(&self, omega: f64, delta_d: f64) -> Result<Complex64> {
        Ok(self.half_coupling * self.response(omega, delta_d)?)
    }

    /// dK/dω in um^-1 per rad/s.
    pub fn slope(&self, omega: f64, delta_d: f64) -> Result<Complex64> {
        let w3 = self.d3 + omega;
        let y = self.d4 + omega - delta_d;
        let d = self.omega_c_sq - w3 * y;
        if d == Complex64::new(0.0, 0.0) {
            return Err(Error::Pole { omega });
        }
        let dr = (d + y * (y + w3)) / (d * d);
        Ok(1.0 / SPEED_OF_LIGHT + self.half_coupling * dr)
    }
}

/// One sample of K±(z, ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexDispersion {
    /// Wave number, um^-1.
    pub k: Complex64,
    pub branch: Branch,
    /// Position in um; `None` for samples taken at an explicit Δd.
    pub z: Option<f64>,
    pub omega: f64,
}

/// K(z, ω) with Δd from the gate geometry.
pub fn dispersion(z: f64, omega: f64, branch: Branch, params: &PhysicalParams) -> Result<ComplexDispersion> {
    let dd = delta_d(z, params)?;
    let k = DispersionKernel::new(branch, params).k(omega, dd)?;
    Ok(ComplexDispersion { k, branch, z: Some(z), omega })
}

/// K at an explicitly supplied Δd (rad/s).
pub fn dispersion_with_delta_d(
    delta_d: f64,
    omega: f64,
    branch: Branch,
    params: &PhysicalParams,
) -> Result<ComplexDispersion> {
    let k = DispersionKernel::new(branch, params).k(omega, delta_d)?;
    Ok(ComplexDispersion { k, branch, z: None, omega })
}

/// Gate-free (bare double-EIT) dispersion, Δd = 0.
pub fn bare_dispersion(omega: f64, branch: Branch, params: &PhysicalParams) -> Result<ComplexDispersion> {
    dispersion_with_delta_d(0.0, omega, branch, params)
}

/// Taylor coefficients (K0, K1) at ω = 0 for fixed Δd.
pub fn expansion(branch: Branch, params: &PhysicalParams, delta_d: f64) -> Result<(Complex64, Complex64)> {
    let kernel = DispersionKernel::new(branch, params);
    Ok((kernel.k(0.0, delta_d)?, kernel.slope(0.0, delta_d)?))
}

/// Group velocity far from the gate (Δd = 0), as a fraction of c.
pub fn group_velocity(branch: Branch, params: &PhysicalParams) -> Result<f64> {
    let (_, k1) = expansion(branch, params, 0.0)?;
    Ok(1.0 / (SPEED_OF_LIGHT * k1.re))
}

/// Evaluates K on a sorted, finite ω grid at fixed Δd.
pub fn spectrum_scan(
    omega_grid: &[f64],
    branch: Branch,
    params: &PhysicalParams,
    delta_d: f64,
) -> Result<Vec<ComplexDispersion>> {
    if let Some(bad) = omega_grid.iter().find(|w| !w.is_finite()) {
        return Err(Error::param("omega", format!("grid contains non-finite value {bad}")));
    }
    if omega_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("omega", "grid must be sorted ascending"));
    }
    let kernel = DispersionKernel::new(branch, params);
    omega_grid
        .iter()
        .map(|&omega| {
            let k = kernel.k(omega, delta_d)?;
            Ok(ComplexDispersion { k, branch, z: None, omega })
        })
        .collect()
}

/// Writes `z,omega,branch,ReK,ImK` rows. Samples without a position get an
/// empty z field.
pub fn write_spectrum_csv<W: Write>(mut out: W, samples: &[ComplexDispersion]) -> Result<()> {
    writeln!(out, "z,omega,branch,ReK,ImK")?;
    for s in samples {
        let z = s.z.map(|z| format!("{z:e}")).unwrap_or_default();
        writeln!(out, "{z},{:e},{},{:e},{:e}", s.omega, s.branch, s.k.re, s.k.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::default_rb85_params;
    use std::f64::consts::PI;

    const TWO_PI_MHZ: f64 = 2.0 * PI * 1e6;

    #[test]
    fn delta_d_sign_and_power_law() {
        let p = default_rb85_params();
        let zg = p.gate_position();
        assert!(delta_d(zg + 3.0, &p).unwrap() > 0.0);
        let near = delta_d(zg - 2.0, &p).unwrap();
        let far = delta_d(zg - 4.0, &p).unwrap();
        assert!((near / far - 64.0).abs() < 1e-12);
        let five = delta_d(zg + 5.0, &p).unwrap();
        assert!((five / TWO_PI_MHZ - 40.0384).abs() < 1e-9);
        assert!(matches!(delta_d(zg, &p), Err(Error::GateCoincidence { .. })));
    }

    #[test]
    fn zero_field_detunings_coincide() {
        let d = ComplexDetunings::new(&default_rb85_params());
        assert_eq!(d.d31, d.d32);
        assert_eq!(d.d41, d.d42);
    }

    #[test]
    fn detuning_swap_under_field_reversal() {
        let p = default_rb85_params().with_b_field(2.3).unwrap();
        let q = p.with_b_field(-2.3).unwrap();
        let (a, b) = (ComplexDetunings::new(&p), ComplexDetunings::new(&q));
        assert_eq!(a.d31, b.d32);
        assert_eq!(a.d41, b.d42);
    }

    #[test]
    fn strong_control_is_transparent() {
        let p = default_rb85_params()
            .modify(|i| {
                i.omega_c = 1e30;
                i.decay_4 = 0.0;
                i.decay_12 = 0.0;
                i.decay_21 = 0.0;
            })
            .unwrap();
        let k = bare_dispersion(0.0, Branch::Plus, &p).unwrap().k;
        assert_eq!(k, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn saturation_limit() {
        let p = default_rb85_params();
        let kernel = DispersionKernel::new(Branch::Plus, &p);
        let huge = 1e6 * p.omega_c().powi(2) / p.gamma31();
        let k = kernel.k_atomic(0.0, huge).unwrap();
        let limit = -kernel.half_coupling / kernel.d3;
        assert!((k - limit).norm() / limit.norm() < 1e-5);
        let inf = kernel.k_atomic(0.0, f64::INFINITY).unwrap();
        assert_eq!(inf, limit);
    }

    #[test]
    fn far_field_approaches_bare() {
        let p = default_rb85_params();
        let bare = bare_dispersion(0.0, Branch::Plus, &p).unwrap().k;
        let gap = |r: f64| (dispersion(p.gate_position() + r, 0.0, Branch::Plus, &p).unwrap().k - bare).norm();
        let gaps: Vec<f64> = [20.0, 25.0, 30.0, 40.0, 45.0].iter().map(|&r| gap(r)).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert!(gaps[4] < 1e-3 * gap(6.0));
    }

    #[test]
    fn calibrated_group_velocity() {
        let p = default_rb85_params();
        let vg = group_velocity(Branch::Plus, &p).unwrap();
        assert!((vg - 6.46e-7).abs() < 1e-18);
    }

    #[test]
    fn scan_validation() {
        let p = default_rb85_params();
        assert!(spectrum_scan(&[], Branch::Plus, &p, 0.0).unwrap().is_empty());
        assert!(spectrum_scan(&[1.0, 0.0], Branch::Plus, &p, 0.0).is_err());
        assert!(spectrum_scan(&[f64::NAN], Branch::Plus, &p, 0.0).is_err());
        let one = spectrum_scan(&[0.0], Branch::Plus, &p, 0.0).unwrap();
        assert_eq!(one[0].k, bare_dispersion(0.0, Branch::Plus, &p).unwrap().k);
    }

    #[test]
    fn csv_header() {
        let p = default_rb85_params();
        let s = spectrum_scan(&[0.0, 1.0], Branch::Minus, &p, 0.0).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("z,omega,branch,ReK,ImK\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
