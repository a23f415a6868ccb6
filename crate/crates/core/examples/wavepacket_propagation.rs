//! Spectral propagation of a Gaussian qubit pulse, with and without the gate.

use std::f64::consts::PI;

use rydberg_qubit::transfer::transfer;
use rydberg_qubit::wavepacket::{overlap, propagate, WavepacketSpec};
use rydberg_qubit::{default_rb85_params, Branch};

fn main() -> rydberg_qubit::Result<()> {
    let p = default_rb85_params().with_b_field(1.5)?.with_delta3(2.0 * PI * 100e6)?;
    let t0 = 1e-5;
    let spec = WavepacketSpec::new(t0, 0.5, p.length())?.with_window(4096, 128.0 * t0)?;

    let on = propagate(&spec, &p, true)?;
    let off = propagate(&spec, &p, false)?;
    println!("norm in {:.6}, out gate off {:.6}, out gate on {:.6}", off.norm_in, off.norm_out, on.norm_out);

    // the narrow-band limit of the gate-induced change
    let (with_gate, without) = (transfer(&p, true)?, transfer(&p, false)?);
    let last = on.z_grid.len() - 1;
    for branch in Branch::BOTH {
        let a = &off.branch(branch)[last];
        let b = &on.branch(branch)[last];
        let ratio = overlap(a, b, on.dt()) / overlap(a, a, on.dt());
        println!(
            "{branch}: gate-induced phase {:.4}, attenuation {:.4}; narrow-band {:.4}, {:.4}",
            ratio.arg(),
            -ratio.norm().ln(),
            with_gate.phi(branch) - without.phi(branch),
            with_gate.eta(branch) - without.eta(branch)
        );
    }
    Ok(())
}
