//! Rydberg defect potential around the gate atom and its regime.

use std::f64::consts::PI;

use rydberg_qubit::potential::{blockade_radius, classify_regime, default_z_grid, potential_full};
use rydberg_qubit::{default_rb85_params, Branch};

fn main() -> rydberg_qubit::Result<()> {
    let base = default_rb85_params();
    let rb = blockade_radius(&base)?;
    println!("blockade radius {rb:.3} um");

    for delta3_mhz in [0.0, 100.0, -100.0] {
        let p = base.with_delta3(2.0 * PI * delta3_mhz * 1e6)?;
        let v = potential_full(&default_z_grid(&p), Branch::Plus, &p)?;
        let report = classify_regime(&v)?;
        println!(
            "delta3 = {delta3_mhz:>6} MHz: max|ImV|/max|ReV| = {:.3}, {:?}",
            report.ratio, report.regime
        );
        // a few samples near the gate, in units of 2π MHz
        for (i, z) in v.z_grid.iter().enumerate() {
            let x = (z - p.gate_position()) / rb;
            if x.abs() < 2.0 && i % 20 == 0 {
                println!("  z/rb {x:>6.2}  ReV {:>9.4}  ImV {:>9.4}", v.re_v[i] / (2e6 * PI), v.im_v[i] / (2e6 * PI));
            }
        }
    }
    Ok(())
}
