//! Gate-free dispersion K±(ω) with and without the control field.

use rydberg_qubit::medium::{bare_dispersion, group_velocity};
use rydberg_qubit::units::linspace;
use rydberg_qubit::{default_rb85_params, Branch};

fn main() -> rydberg_qubit::Result<()> {
    let eit = default_rb85_params().modify(|i| i.density = 3e10)?;
    let two_level = eit.modify(|i| i.omega_c = 0.0)?;
    let two_pi = 2.0 * std::f64::consts::PI;

    println!("{:>10} {:>14} {:>14}", "f (MHz)", "ImK EIT", "ImK Ωc=0");
    for f in linspace(-20e6, 20e6, 21) {
        let a = bare_dispersion(two_pi * f, Branch::Plus, &eit)?.k;
        let b = bare_dispersion(two_pi * f, Branch::Plus, &two_level)?.k;
        println!("{:>10.1} {:>14.6e} {:>14.6e}", f / 1e6, a.im, b.im);
    }
    let vg = group_velocity(Branch::Plus, &default_rb85_params())?;
    println!("group velocity at the calibrated density: {vg:.4e} c");
    Ok(())
}
