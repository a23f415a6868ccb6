//! Field dependence of the gate-induced phase in a short medium.

use rydberg_qubit::transfer::{find_pi_phase, transfer, ScanVar};
use rydberg_qubit::units::linspace;
use rydberg_qubit::{default_rb85_params, Branch};

fn main() -> rydberg_qubit::Result<()> {
    let p = default_rb85_params().with_length(50.0)?;
    println!("OD at L = 50 um: {:.3}", p.optical_depth());
    for b in linspace(-10.0, 10.0, 11) {
        let r = transfer(&p.with_b_field(b)?, true)?;
        println!("B {b:>6.1} G  phi+ {:>8.4}  phi- {:>8.4}", r.phi_plus, r.phi_minus);
    }
    let plus = find_pi_phase(&p, Branch::Plus, ScanVar::MagneticField, (0.0, 10.0))?;
    let minus = find_pi_phase(&p, Branch::Minus, ScanVar::MagneticField, (-10.0, 0.0))?;
    println!("|phi+| = pi at B = {plus:.3} G, |phi-| = pi at B = {minus:.3} G");
    Ok(())
}
