use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use rydberg_qubit::medium::{bare_dispersion, delta_d_at_separation, dispersion, dispersion_with_delta_d};
use rydberg_qubit::params::SPEED_OF_LIGHT;
use rydberg_qubit::potential::{blockade_radius, default_z_grid, potential_full, potential_simplified};
use rydberg_qubit::quadrature::QuadratureOptions;
use rydberg_qubit::stochastic::{ensemble_transfer, DelocalizationMode, DelocalizationSpec};
use rydberg_qubit::transfer::{sweep, transfer, transfer_with, Gate, ScanVar};
use rydberg_qubit::units::{parse_quantity, Kind};
use rydberg_qubit::wavepacket::{overlap, propagate, WavepacketSpec};
use rydberg_qubit::{default_rb85_params, Branch, PhysicalParams};

const MHZ: f64 = 2.0 * PI * 1e6;

fn params_strategy() -> impl Strategy<Value = PhysicalParams> {
    (-100.0..100.0_f64, -10.0..10.0_f64, 1.0..100.0_f64, any::<bool>()).prop_map(|(d3, b, od, repulsive)| {
        default_rb85_params()
            .modify(|i| {
                i.delta3 = d3 * MHZ;
                i.b_field = b;
                if repulsive {
                    i.c6 = i.c6.abs();
                }
            })
            .unwrap()
            .with_optical_depth(od)
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn field_reversal_swaps_branches(p in params_strategy()) {
        let a = transfer(&p, true).unwrap();
        let b = transfer(&p.with_b_field(-p.b_field()).unwrap(), true).unwrap();
        prop_assert_eq!(a.eta_plus, b.eta_minus);
        prop_assert_eq!(a.phi_plus, b.phi_minus);
        prop_assert_eq!(a.vg_plus, b.vg_minus);
    }

    #[test]
    fn medium_is_passive(p in params_strategy(), z in 0.0..100.0_f64, f in -20.0..20.0_f64) {
        prop_assume!(z != p.gate_position());
        for branch in Branch::BOTH {
            let k = dispersion(z, f * MHZ, branch, &p).unwrap().k;
            prop_assert!(k.im >= 0.0, "Im K = {} at z = {z}", k.im);
        }
        let r = transfer(&p, true).unwrap();
        prop_assert!(r.eta_plus >= 0.0 && r.eta_minus >= 0.0);
    }

    #[test]
    fn potential_is_minus_c_times_k(p in params_strategy()) {
        let grid: Vec<f64> = default_z_grid(&p).into_iter().step_by(37).collect();
        for branch in Branch::BOTH {
            let v = potential_full(&grid, branch, &p).unwrap();
            for (i, &z) in grid.iter().enumerate() {
                let want = -SPEED_OF_LIGHT * dispersion(z, 0.0, branch, &p).unwrap().k;
                let got = Complex64::new(v.re_v[i], v.im_v[i]);
                prop_assert!((got - want).norm() <= 1e-12 * want.norm());
            }
        }
    }

    #[test]
    fn transfer_is_linear_in_optical_depth(p in params_strategy(), gate in any::<bool>()) {
        let od = p.optical_depth();
        let a = transfer(&p, gate).unwrap();
        let b = transfer(&p.with_optical_depth(2.0 * od).unwrap(), gate).unwrap();
        for branch in Branch::BOTH {
            prop_assert!((b.eta(branch) - 2.0 * a.eta(branch)).abs() <= 1e-9 * b.eta(branch).abs().max(1e-12));
            prop_assert!((b.phi(branch) - 2.0 * a.phi(branch)).abs() <= 1e-9 * b.phi(branch).abs().max(1e-12));
        }
    }

    #[test]
    fn cyclic_units_get_two_pi_once(x in 0.001..1000.0_f64) {
        let plain = parse_quantity(&format!("{x}MHz"), Kind::AngularFrequency).unwrap();
        let marked = parse_quantity(&format!("2pi*{x}MHz"), Kind::AngularFrequency).unwrap();
        prop_assert_eq!(plain, marked);
        prop_assert!((plain - 2.0 * PI * x * 1e6).abs() <= 1e-12 * plain);
    }

    #[test]
    fn gate_atom_far_away_does_nothing(p in params_strategy()) {
        let far = 1e6;
        for branch in Branch::BOTH {
            let bare = bare_dispersion(0.0, branch, &p).unwrap().k;
            let k = dispersion_with_delta_d(0.0, delta_d_at_separation(far, p.c6()), branch, &p).unwrap().k;
            prop_assert!((k - bare).norm() <= 1e-12 * bare.norm());
        }
    }
}

#[test]
fn zero_field_branches_are_degenerate() {
    let p = default_rb85_params().with_delta3(37.0 * MHZ).unwrap();
    let r = transfer(&p, true).unwrap();
    assert_eq!(r.eta_plus, r.eta_minus);
    assert_eq!(r.phi_plus, r.phi_minus);
    let grid = default_z_grid(&p);
    let plus = potential_full(&grid, Branch::Plus, &p).unwrap();
    let minus = potential_full(&grid, Branch::Minus, &p).unwrap();
    assert_eq!(plus.re_v, minus.re_v);
    assert_eq!(plus.im_v, minus.im_v);
}

#[test]
fn branch_splitting_follows_core_limit() {
    // Inside the blockade V± → cP/d3±, so the Zeeman shift splits the
    // branches by about 2|Δ1|/|d31| of the peak. (Off resonance the sharp
    // Autler-Townes feature moves with the shift, so a pointwise bound is
    // meaningless there.)
    for delta3 in [0.0, 2.0] {
        let p = default_rb85_params().with_b_field(1.5).unwrap().with_delta3(delta3 * MHZ).unwrap();
        let grid = default_z_grid(&p);
        let plus = potential_full(&grid, Branch::Plus, &p).unwrap();
        let minus = potential_full(&grid, Branch::Minus, &p).unwrap();
        let mut diff = 0.0_f64;
        let mut peak = 0.0_f64;
        for i in 0..grid.len() {
            let a = Complex64::new(plus.re_v[i], plus.im_v[i]);
            let b = Complex64::new(minus.re_v[i], minus.im_v[i]);
            diff = diff.max((a - b).norm());
            peak = peak.max(a.norm());
        }
        let (delta1, _) = rydberg_qubit::params::zeeman_detunings(1.5);
        let estimate = 2.0 * delta1.abs() / Complex64::new(p.delta3(), p.gamma31()).norm();
        let split = diff / peak;
        assert!(split > 0.5 * estimate && split < 1.5 * estimate, "Δ3 = {delta3} MHz: {split} vs {estimate}");
    }
}

#[test]
fn simplified_form_tracks_full_form_inside_blockade() {
    let rb = blockade_radius(&default_rb85_params()).unwrap();
    // (Δ3 in MHz, bound on max relative deviation for |z - zg| <= r_b)
    for (delta3, bound) in [(0.0, 0.04), (100.0, 0.01)] {
        let p = default_rb85_params().with_b_field(1.5).unwrap().with_delta3(delta3 * MHZ).unwrap();
        let grid: Vec<f64> =
            default_z_grid(&p).into_iter().filter(|z| (z - p.gate_position()).abs() <= rb).collect();
        let full = potential_full(&grid, Branch::Plus, &p).unwrap();
        let simple = potential_simplified(&grid, Branch::Plus, &p).unwrap();
        let worst = (0..grid.len())
            .map(|i| {
                let a = Complex64::new(full.re_v[i], full.im_v[i]);
                let b = Complex64::new(simple.re_v[i], simple.im_v[i]);
                (a - b).norm() / a.norm()
            })
            .fold(0.0, f64::max);
        assert!(worst < bound, "Δ3 = {delta3} MHz: deviation {worst}");
    }
}

#[test]
fn gate_induced_potential_decays_as_sixth_power() {
    let p = default_rb85_params().with_delta3(20.0 * MHZ).unwrap();
    let bare = -SPEED_OF_LIGHT * bare_dispersion(0.0, Branch::Plus, &p).unwrap().k;
    let rb = blockade_radius(&p).unwrap();
    let zg = p.gate_position();
    let grid: Vec<f64> = (0..40).map(|i| zg + 4.0 * rb * (10.0_f64).powf(i as f64 / 39.0 * 0.3)).collect();
    let v = potential_full(&grid, Branch::Plus, &p).unwrap();
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .enumerate()
        .map(|(i, z)| ((z - zg).ln(), (Complex64::new(v.re_v[i], v.im_v[i]) - bare).norm().ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / pts.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 6.0).abs() < 0.1, "fitted exponent {slope}");
}

#[test]
fn parallel_sweep_matches_pointwise_transfer() {
    let p = default_rb85_params().with_b_field(1.5).unwrap();
    let values = [3.0, 17.0, 41.0, 80.0];
    let opts = QuadratureOptions::default();
    let points = sweep(&p, ScanVar::OpticalDepth, &values, Gate::Fixed, &opts).unwrap();
    for (pt, &od) in points.iter().zip(&values) {
        assert_eq!(pt.value, od);
        assert_eq!(pt.result, transfer_with(&p.with_optical_depth(od).unwrap(), Gate::Fixed, &opts).unwrap());
    }
}

#[test]
fn ensemble_is_reproducible_and_seed_sensitive() {
    let p = default_rb85_params().with_length(80.0).unwrap().with_b_field(1.4).unwrap();
    let spec = DelocalizationSpec {
        sigma: 5.0,
        xi_range: (-10.0, 10.0),
        n_samples: 40,
        seed: 7,
        mode: DelocalizationMode::PositionOnly,
    };
    let a = ensemble_transfer(&spec, &p).unwrap();
    assert_eq!(a, ensemble_transfer(&spec, &p).unwrap());
    let other = ensemble_transfer(&DelocalizationSpec { seed: 8, ..spec }, &p).unwrap();
    assert_ne!(a.samples, other.samples);
}

#[test]
fn wavepacket_norm_never_grows_along_the_medium() {
    let p = default_rb85_params().with_b_field(1.5).unwrap().with_delta3(100.0 * MHZ).unwrap();
    let t0 = 1e-6;
    let mut spec = WavepacketSpec::new(t0, 0.5, p.length()).unwrap().with_window(2048, 64.0 * t0).unwrap();
    spec.z_grid = rydberg_qubit::units::linspace(0.0, p.length(), 21);
    let field = propagate(&spec, &p, true).unwrap();
    assert!((field.norms[0] - field.norm_in).abs() < 1e-12);
    assert!(field.norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn long_pulses_converge_to_the_narrow_band_result() {
    let p = default_rb85_params().with_b_field(1.5).unwrap().with_delta3(100.0 * MHZ).unwrap();
    let t0 = 1e-5;
    let mut spec = WavepacketSpec::new(t0, 0.5, p.length()).unwrap().with_window(4096, 128.0 * t0).unwrap();
    spec.z_grid = vec![0.0, p.length()];
    let on = propagate(&spec, &p, true).unwrap();
    let off = propagate(&spec, &p, false).unwrap();
    let (with_gate, without) = (transfer(&p, true).unwrap(), transfer(&p, false).unwrap());
    for branch in Branch::BOTH {
        let (a, b) = (&off.branch(branch)[1], &on.branch(branch)[1]);
        let ratio = overlap(a, b, on.dt()) / overlap(a, a, on.dt());
        let phase = with_gate.phi(branch) - without.phi(branch);
        let eta = with_gate.eta(branch) - without.eta(branch);
        assert!((ratio.arg() - phase).abs() <= 0.02 * phase.abs(), "{branch}: {} vs {phase}", ratio.arg());
        assert!((-ratio.norm().ln() - eta).abs() <= 0.02 * eta.abs(), "{branch}: {} vs {eta}", -ratio.norm().ln());
        // fidelity with the narrow-band prediction e^{iφ-η} × gate-off pulse
        let predicted: Vec<Complex64> = a.iter().map(|x| x * Complex64::from_polar((-eta).exp(), phase)).collect();
        let fidelity = overlap(&predicted, b, on.dt()).norm()
            / (overlap(&predicted, &predicted, on.dt()).norm() * overlap(b, b, on.dt()).norm()).sqrt();
        assert!(fidelity > 0.999, "{branch}: fidelity {fidelity}");
    }
}
