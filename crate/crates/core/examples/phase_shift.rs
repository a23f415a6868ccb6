//! Dispersive regime: the gate imprints a π phase on σ+ at a moderate OD.

use std::f64::consts::PI;

use rydberg_qubit::transfer::{find_pi_phase, transfer, ScanVar};
use rydberg_qubit::{default_rb85_params, Branch};

fn main() -> rydberg_qubit::Result<()> {
    let p = default_rb85_params().with_b_field(1.5)?.with_delta3(2.0 * PI * 100e6)?;
    for branch in Branch::BOTH {
        let od = find_pi_phase(&p, branch, ScanVar::OpticalDepth, (0.0, 200.0))?;
        let r = transfer(&p.with_optical_depth(od)?, true)?;
        println!(
            "{branch}: |phi| = pi at OD {od:.2}  (eta+ {:.3}, eta- {:.3})",
            r.eta_plus, r.eta_minus
        );
    }
    Ok(())
}
