//! Physical parameters of the four-level inverted-Y medium.
//!
//! Internal units: angular frequencies in rad/s, lengths in um, time in s,
//! magnetic field in gauss, atomic density in cm^-3. Every "2pi x MHz" value
//! is stored premultiplied by 2pi.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{parse_quantity, Kind};

/// Speed of light in um/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e14;

/// Bohr magneton over hbar, in rad/s per gauss (2pi x 1.3996 MHz/G).
pub const MU_B_OVER_HBAR: f64 = 2.0 * PI * 1.3996e6;

/// Group velocity (fraction of c) quoted for the 85Rb defaults at
/// Na = 3e12 cm^-3 and Omega_c = 2pi x 6.37 MHz.
pub const RB85_GROUP_VELOCITY: f64 = 6.46e-7;

/// Medium length used when none is given, um.
pub const DEFAULT_LENGTH: f64 = 100.0;

const TWO_PI_MHZ: f64 = 2.0 * PI * 1e6;

/// Extra dephasing added to each probe-relevant coherence decay rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Dephasing {
    pub d31: f64,
    pub d32: f64,
    pub d41: f64,
    pub d42: f64,
}

/// How the collective probe coupling |g_p|^2 N is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coupling {
    /// |g_p|^2 N per unit density (rad^2/s^2 per cm^-3); scales with `density`.
    PerDensity(f64),
    /// |g_p|^2 N in rad^2/s^2, independent of `density`.
    Total(f64),
    /// Optical depth at the current length; |g_p|^2 N follows from it.
    OpticalDepth(f64),
}

/// Raw, unvalidated inputs. Turn them into [`PhysicalParams`] with
/// [`PhysicalParams::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamInputs {
    /// Population exchange |2> -> |1> (Gamma_12), rad/s.
    pub decay_12: f64,
    /// Population exchange |1> -> |2> (Gamma_21), rad/s.
    pub decay_21: f64,
    /// Total decay of |3>, rad/s.
    pub decay_3: f64,
    /// Total decay of |4>, rad/s.
    pub decay_4: f64,
    /// Branching decay |3> -> |1>, rad/s.
    pub decay_13: f64,
    /// Branching decay |3> -> |2>, rad/s.
    pub decay_23: f64,
    pub dephasing: Dephasing,
    /// One-photon detuning, rad/s.
    pub delta3: f64,
    /// Two-photon detuning, rad/s.
    pub delta4: f64,
    /// Magnetic field along z, gauss.
    pub b_field: f64,
    /// vdW coefficient, rad/s * um^6 (negative: repulsive).
    pub c6: f64,
    /// Control half Rabi frequency, rad/s.
    pub omega_c: f64,
    /// Atomic density, cm^-3.
    pub density: f64,
    /// Medium length, um.
    pub length: f64,
    /// Gate atom position in um; `None` puts it at the middle of the medium.
    pub gate_position: Option<f64>,
    pub coupling: Coupling,
}

impl ParamInputs {
    /// 85Rb rates and fields with the coupling left uncalibrated
    /// (`Coupling::PerDensity(0.0)`).
    pub fn rb85() -> Self {
        let decay_3 = 6.06 * TWO_PI_MHZ;
        Self {
            decay_12: 0.0016 * TWO_PI_MHZ,
            decay_21: 0.0016 * TWO_PI_MHZ,
            decay_3,
            decay_4: 0.02 * TWO_PI_MHZ,
            decay_13: decay_3 / 2.0,
            decay_23: decay_3 / 2.0,
            dephasing: Dephasing::default(),
            delta3: 0.0,
            delta4: 0.0,
            b_field: 0.0,
            c6: -2.0 * PI * 625.6e9,
            omega_c: 6.37 * TWO_PI_MHZ,
            density: 3e12,
            length: DEFAULT_LENGTH,
            gate_position: None,
            coupling: Coupling::PerDensity(0.0),
        }
    }
}

/// Validated parameter record with derived coherence rates and coupling.
///
/// Immutable: use [`PhysicalParams::modify`] (or one of the `with_*`
/// shortcuts) to get a new, revalidated record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalParams {
    inputs: ParamInputs,
    gamma31: f64,
    gamma32: f64,
    gamma41: f64,
    gamma42: f64,
    coupling_g2n: f64,
    optical_depth: f64,
    gate_position: f64,
}

fn check_rate(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::param(name, format!("must be finite, got {v}")));
    }
    Ok(())
}

impl PhysicalParams {
    pub fn new(inputs: ParamInputs) -> Result<Self> {
        let p = &inputs;
        for (name, v) in [
            ("gamma12", p.decay_12),
            ("gamma21", p.decay_21),
            ("gamma3", p.decay_3),
            ("gamma4", p.decay_4),
            ("gamma13", p.decay_13),
            ("gamma23", p.decay_23),
            ("dephasing31", p.dephasing.d31),
            ("dephasing32", p.dephasing.d32),
            ("dephasing41", p.dephasing.d41),
            ("dephasing42", p.dephasing.d42),
        ] {
            check_rate(name, v)?;
        }
        if (p.decay_13 + p.decay_23 - p.decay_3).abs() > 1e-12 * p.decay_3.max(f64::MIN_POSITIVE) {
            return Err(Error::param(
                "gamma3",
                format!(
                    "branching rates must sum to the total: {} + {} != {}",
                    p.decay_13, p.decay_23, p.decay_3
                ),
            ));
        }
        for (name, v) in [
            ("delta3", p.delta3),
            ("delta4", p.delta4),
            ("B", p.b_field),
            ("C6", p.c6),
            ("omega-c", p.omega_c),
        ] {
            check_finite(name, v)?;
        }
        if !(p.density.is_finite() && p.density > 0.0) {
            return Err(Error::param("Na", format!("must be > 0, got {}", p.density)));
        }
        if !(p.length.is_finite() && p.length > 0.0) {
            return Err(Error::param("L", format!("must be > 0, got {}", p.length)));
        }
        let gate_position = p.gate_position.unwrap_or(p.length / 2.0);
        if !(gate_position > 0.0 && gate_position < p.length) {
            return Err(Error::param(
                "zg",
                format!("must lie strictly inside (0, {}), got {gate_position}", p.length),
            ));
        }

        // Gamma_1 and Gamma_2 are the population exchange rates out of |1> and |2>.
        let total_1 = p.decay_21;
        let total_2 = p.decay_12;
        let gamma31 = (p.decay_3 + total_1) / 2.0 + p.dephasing.d31;
        let gamma32 = (p.decay_3 + total_2) / 2.0 + p.dephasing.d32;
        let gamma41 = (p.decay_4 + total_1) / 2.0 + p.dephasing.d41;
        let gamma42 = (p.decay_4 + total_2) / 2.0 + p.dephasing.d42;
        if gamma31 <= 0.0 || gamma32 <= 0.0 {
            return Err(Error::param("gamma3", "probe coherences need a nonzero decay rate"));
        }

        let od_scale = p.length / (2.0 * SPEED_OF_LIGHT * gamma31);
        let (coupling_g2n, optical_depth) = match p.coupling {
            Coupling::PerDensity(k) => (k * p.density, k * p.density * od_scale),
            Coupling::Total(g) => (g, g * od_scale),
            Coupling::OpticalDepth(od) => (od / od_scale, od),
        };
        if !(coupling_g2n.is_finite() && coupling_g2n >= 0.0) {
            return Err(Error::param(
                "coupling",
                format!("|g_p|^2 N must be finite and >= 0, got {coupling_g2n}"),
            ));
        }

        Ok(Self {
            inputs,
            gamma31,
            gamma32,
            gamma41,
            gamma42,
            coupling_g2n,
            optical_depth,
            gate_position,
        })
    }

    /// Returns a revalidated copy after applying `f` to the inputs.
    pub fn modify(&self, f: impl FnOnce(&mut ParamInputs)) -> Result<Self> {
        let mut inputs = self.inputs.clone();
        f(&mut inputs);
        Self::new(inputs)
    }

    pub fn with_b_field(&self, b: f64) -> Result<Self> {
        self.modify(|p| p.b_field = b)
    }

    pub fn with_delta3(&self, delta3: f64) -> Result<Self> {
        self.modify(|p| p.delta3 = delta3)
    }

    /// Sets the optical depth at fixed length by rescaling |g_p|^2 N.
    pub fn with_optical_depth(&self, od: f64) -> Result<Self> {
        self.modify(|p| p.coupling = Coupling::OpticalDepth(od))
    }

    /// Changes the length. The gate stays centred unless it was placed explicitly.
    pub fn with_length(&self, length: f64) -> Result<Self> {
        self.modify(|p| p.length = length)
    }

    pub fn inputs(&self) -> &ParamInputs {
        &self.inputs
    }
    pub fn gamma31(&self) -> f64 {
        self.gamma31
    }
    pub fn gamma32(&self) -> f64 {
        self.gamma32
    }
    pub fn gamma41(&self) -> f64 {
        self.gamma41
    }
    pub fn gamma42(&self) -> f64 {
        self.gamma42
    }
    /// |g_p|^2 N in rad^2/s^2.
    pub fn coupling_g2n(&self) -> f64 {
        self.coupling_g2n
    }
    pub fn optical_depth(&self) -> f64 {
        self.optical_depth
    }
    pub fn length(&self) -> f64 {
        self.inputs.length
    }
    pub fn gate_position(&self) -> f64 {
        self.gate_position
    }
    pub fn delta3(&self) -> f64 {
        self.inputs.delta3
    }
    pub fn delta4(&self) -> f64 {
        self.inputs.delta4
    }
    pub fn b_field(&self) -> f64 {
        self.inputs.b_field
    }
    pub fn c6(&self) -> f64 {
        self.inputs.c6
    }
    pub fn omega_c(&self) -> f64 {
        self.inputs.omega_c
    }
    pub fn density(&self) -> f64 {
        self.inputs.density
    }

    /// Length at which the current |g_p|^2 N gives optical depth `od`.
    pub fn length_for_optical_depth(&self, od: f64) -> f64 {
        od * 2.0 * SPEED_OF_LIGHT * self.gamma31 / self.coupling_g2n
    }
}

/// Ground-state Zeeman shifts (Delta_1, Delta_2) in rad/s for a field in gauss.
pub fn zeeman_detunings(b_field: f64) -> (f64, f64) {
    let shift = MU_B_OVER_HBAR * b_field / 3.0;
    (-shift, shift)
}

/// Slope factor Re[(D + Y (Y + d31)) / D^2] at omega = 0 with all detunings
/// and the gate switched off, where D = |Omega_c|^2 - d31 d41 and Y = d41.
fn bare_slope_factor(params: &PhysicalParams) -> Result<f64> {
    let d31 = Complex64::new(0.0, params.gamma31);
    let d41 = Complex64::new(0.0, params.gamma41);
    let d = params.omega_c() * params.omega_c() - d31 * d41;
    if d.norm() == 0.0 {
        return Err(Error::Pole { omega: 0.0 });
    }
    let s = (d + d41 * (d41 + d31)) / (d * d);
    Ok(s.re)
}

/// Fixes |g_p|^2 N so that the group velocity at zero detunings, zero field
/// and no gate equals `reference_vg * c` with the current Omega_c and rates.
///
/// The result is stored per unit density, so later density changes rescale it.
pub fn calibrate_coupling(params: &PhysicalParams, reference_vg: f64) -> Result<PhysicalParams> {
    if !(reference_vg.is_finite() && reference_vg > 0.0 && reference_vg < 1.0) {
        return Err(Error::param(
            "vg-ref",
            format!("reference group velocity must be in (0, 1) c, got {reference_vg}"),
        ));
    }
    let slope = bare_slope_factor(params)?;
    if !(slope > 0.0) {
        return Err(Error::param(
            "omega-c",
            "no slow light at the calibration point; cannot calibrate",
        ));
    }
    // c K_1 = 1 + (|g|^2 N / 2) * slope = 1 / vg
    let g2n = 2.0 * (1.0 / reference_vg - 1.0) / slope;
    let per_density = g2n / params.density();
    params.modify(|p| p.coupling = Coupling::PerDensity(per_density))
}

/// The 85Rb parameter set, calibrated to a group velocity of 6.46e-7 c at
/// Na = 3e12 cm^-3, with L = 100 um and the gate at L/2.
pub fn default_rb85_params() -> PhysicalParams {
    let raw = PhysicalParams::new(ParamInputs::rb85()).expect("85Rb defaults are valid");
    calibrate_coupling(&raw, RB85_GROUP_VELOCITY).expect("85Rb defaults calibrate")
}

/// Keys accepted in `key = value` parameter configs, with their kinds.
pub const PARAM_KEYS: &[(&str, Kind)] = &[
    ("gamma12", Kind::AngularFrequency),
    ("gamma21", Kind::AngularFrequency),
    ("gamma3", Kind::AngularFrequency),
    ("gamma4", Kind::AngularFrequency),
    ("gamma13", Kind::AngularFrequency),
    ("gamma23", Kind::AngularFrequency),
    ("dephasing31", Kind::AngularFrequency),
    ("dephasing32", Kind::AngularFrequency),
    ("dephasing41", Kind::AngularFrequency),
    ("dephasing42", Kind::AngularFrequency),
    ("delta3", Kind::AngularFrequency),
    ("delta4", Kind::AngularFrequency),
    ("omega-c", Kind::AngularFrequency),
    ("B", Kind::MagneticField),
    ("C6", Kind::DispersionCoefficient),
    ("Na", Kind::Density),
    ("L", Kind::Length),
    ("zg", Kind::Length),
    ("od", Kind::Dimensionless),
    ("coupling", Kind::Dimensionless),
    ("vg-ref", Kind::Dimensionless),
];

pub fn param_key_kind(key: &str) -> Option<Kind> {
    PARAM_KEYS.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}

/// Applies `key -> quantity string` overrides on top of `base`.
///
/// Unknown keys are rejected. Setting `gamma3` alone splits it equally into
/// the two branching rates; setting the branching rates alone redefines
/// `gamma3` as their sum. `vg-ref` recalibrates the coupling after all other
/// keys are applied.
pub fn apply_overrides(base: &PhysicalParams, settings: &BTreeMap<String, String>) -> Result<PhysicalParams> {
    let mut inputs = base.inputs().clone();
    let mut vg_ref = None;
    let mut parsed = BTreeMap::new();
    for (key, raw) in settings {
        let kind = param_key_kind(key)
            .ok_or_else(|| Error::Config(format!("unknown parameter key `{key}`")))?;
        parsed.insert(key.as_str(), parse_quantity(raw, kind)?);
    }
    for (&key, &v) in &parsed {
        match key {
            "gamma12" => inputs.decay_12 = v,
            "gamma21" => inputs.decay_21 = v,
            "gamma4" => inputs.decay_4 = v,
            "gamma3" | "gamma13" | "gamma23" => {}
            "dephasing31" => inputs.dephasing.d31 = v,
            "dephasing32" => inputs.dephasing.d32 = v,
            "dephasing41" => inputs.dephasing.d41 = v,
            "dephasing42" => inputs.dephasing.d42 = v,
            "delta3" => inputs.delta3 = v,
            "delta4" => inputs.delta4 = v,
            "omega-c" => inputs.omega_c = v,
            "B" => inputs.b_field = v,
            "C6" => inputs.c6 = v,
            "Na" => inputs.density = v,
            "L" => inputs.length = v,
            "zg" => inputs.gate_position = Some(v),
            "od" => inputs.coupling = Coupling::OpticalDepth(v),
            "coupling" => inputs.coupling = Coupling::Total(v),
            "vg-ref" => vg_ref = Some(v),
            _ => unreachable!("key registry and match are out of sync: {key}"),
        }
    }
    match (parsed.get("gamma3"), parsed.get("gamma13"), parsed.get("gamma23")) {
        (None, None, None) => {}
        (Some(&g3), None, None) => {
            inputs.decay_3 = g3;
            inputs.decay_13 = g3 / 2.0;
            inputs.decay_23 = g3 / 2.0;
        }
        (g3, g13, g23) => {
            let g13 = g13.copied().unwrap_or(inputs.decay_13);
            let g23 = g23.copied().unwrap_or(inputs.decay_23);
            inputs.decay_13 = g13;
            inputs.decay_23 = g23;
            inputs.decay_3 = g3.copied().unwrap_or(g13 + g23);
        }
    }
    let params = PhysicalParams::new(inputs)?;
    match vg_ref {
        Some(vg) => calibrate_coupling(&params, vg),
        None => Ok(params),
    }
}

/// Parses flat `key = value` text. `#` starts a comment; blank lines are skipped.
/// Duplicate keys are an error.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().to_string();
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
    }
    Ok(out)
}

/// Loads a parameter config file on top of the calibrated 85Rb defaults.
pub fn load_params(path: impl AsRef<Path>) -> Result<PhysicalParams> {
    let text = std::fs::read_to_string(path)?;
    let settings = parse_config_text(&text)?;
    apply_overrides(&default_rb85_params(), &settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rb85_values() {
        let p = default_rb85_params();
        assert_eq!(p.inputs().decay_3, 2.0 * PI * 6.06e6);
        assert_eq!(p.c6(), -2.0 * PI * 625.6e9);
        // gamma31 = (Gamma3 + Gamma21) / 2 = 2pi x 3.0308 MHz
        assert!((p.gamma31() / TWO_PI_MHZ - 3.0308).abs() < 1e-12);
        assert_eq!(p.gate_position(), 50.0);
        assert_eq!(p.delta4(), 0.0);
        assert_eq!(p.b_field(), 0.0);
    }

    #[test]
    fn rate_identity_is_recomputed_after_modification() {
        let p = default_rb85_params()
            .modify(|i| {
                i.decay_4 = 2.0 * PI * 1e5;
                i.dephasing.d41 = 1e4;
            })
            .unwrap();
        let expected = (p.inputs().decay_4 + p.inputs().decay_21) / 2.0 + 1e4;
        assert_eq!(p.gamma41(), expected);
    }

    #[test]
    fn zeeman_anchor() {
        assert_eq!(zeeman_detunings(0.0), (-0.0, 0.0));
        let (d1, d2) = zeeman_detunings(1.5);
        assert!((d2 / TWO_PI_MHZ - 0.6998).abs() < 1e-12);
        assert_eq!(d1, -d2);
        let (m1, m2) = zeeman_detunings(-1.5);
        assert_eq!((m1, m2), (-d1, -d2));
    }

    #[test]
    fn optical_depth_round_trip() {
        let p = default_rb85_params().with_optical_depth(17.25).unwrap();
        assert_eq!(p.optical_depth(), 17.25);
        let q = p.modify(|i| i.coupling = Coupling::Total(p.coupling_g2n())).unwrap();
        assert!((q.optical_depth() - 17.25).abs() <= 4.0 * f64::EPSILON * 17.25);
        let l = p.length_for_optical_depth(17.25);
        assert!((l - p.length()).abs() < 1e-12 * l);
    }

    #[test]
    fn calibration_rejects_non_positive_reference() {
        let p = default_rb85_params();
        assert!(calibrate_coupling(&p, 0.0).is_err());
        assert!(calibrate_coupling(&p, -1e-7).is_err());
        assert!(calibrate_coupling(&p, 1.5).is_err());
    }

    #[test]
    fn coupling_tracks_density_after_calibration() {
        let p = default_rb85_params();
        let q = p.modify(|i| i.density *= 2.0).unwrap();
        assert!((q.coupling_g2n() / p.coupling_g2n() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn validation_errors() {
        let p = default_rb85_params();
        assert!(p.modify(|i| i.length = 0.0).is_err());
        assert!(p.modify(|i| i.gate_position = Some(100.0)).is_err());
        assert!(p.modify(|i| i.gate_position = Some(0.0)).is_err());
        assert!(p.modify(|i| i.decay_13 = 1.0).is_err());
        assert!(p.modify(|i| i.decay_4 = -1.0).is_err());
        assert!(p.modify(|i| i.density = 0.0).is_err());
    }

    #[test]
    fn config_text_and_overrides() {
        let text = "# fig 8\nB = 1.5 G\nL = 50um\ndelta3 = 2pi*100 MHz\n\nNa = 3e12 cm^-3\n";
        let settings = parse_config_text(text).unwrap();
        let p = apply_overrides(&default_rb85_params(), &settings).unwrap();
        assert_eq!(p.length(), 50.0);
        assert_eq!(p.gate_position(), 25.0);
        assert_eq!(p.b_field(), 1.5);
        assert!((p.delta3() - 100.0 * TWO_PI_MHZ).abs() < 1e-6);

        let bad = parse_config_text("speed = 3").unwrap();
        assert!(matches!(apply_overrides(&p, &bad), Err(Error::Config(_))));
        assert!(parse_config_text("B = 1\nB = 2").is_err());
        assert!(parse_config_text("just words").is_err());
    }

    #[test]
    fn gamma3_override_splits_branching() {
        let mut s = BTreeMap::new();
        s.insert("gamma3".to_string(), "6 MHz".to_string());
        let p = apply_overrides(&default_rb85_params(), &s).unwrap();
        assert_eq!(p.inputs().decay_13, p.inputs().decay_3 / 2.0);
    }
}
