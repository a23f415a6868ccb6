//! Polarization switch: resonant control, the gate blocks σ+ much more than σ-.

use rydberg_qubit::quadrature::QuadratureOptions;
use rydberg_qubit::transfer::{output_state, sweep, transfer, Gate, QubitState, ScanVar};
use rydberg_qubit::units::linspace;
use rydberg_qubit::default_rb85_params;
use num_complex::Complex64;

fn main() -> rydberg_qubit::Result<()> {
    let p = default_rb85_params().with_b_field(1.5)?;
    let points = sweep(&p, ScanVar::OpticalDepth, &linspace(0.0, 40.0, 9), Gate::Fixed, &QuadratureOptions::default())?;
    println!("{:>6} {:>10} {:>10}", "OD", "eta+", "eta-");
    for pt in &points {
        println!("{:>6.1} {:>10.4} {:>10.4}", pt.value, pt.result.eta_plus, pt.result.eta_minus);
    }

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let input = QubitState::new(Complex64::new(h, 0.0), Complex64::new(h, 0.0))?;
    let result = transfer(&p.with_optical_depth(20.0)?, true)?;
    let out = output_state(input, &result);
    println!("OD 20, gate on: |c+|² = {:.4}, |c-|² = {:.4}", out.c_plus.norm_sqr(), out.c_minus.norm_sqr());
    Ok(())
}
