//! Monte Carlo average over the gate atom's position spread.

use rydberg_qubit::stochastic::{ensemble_transfer, DelocalizationMode, DelocalizationSpec};
use rydberg_qubit::default_rb85_params;

fn main() -> rydberg_qubit::Result<()> {
    let p = default_rb85_params().with_length(80.0)?.with_b_field(1.4)?;
    let spec = DelocalizationSpec {
        sigma: 5.0,
        xi_range: (-10.0, 10.0),
        n_samples: 200,
        seed: 2024,
        mode: DelocalizationMode::WeightedDelta,
    };
    let stats = ensemble_transfer(&spec, &p)?;
    println!("fixed gate:   eta+ {:.4}  phi+ {:.4}", stats.reference.eta_plus, stats.reference.phi_plus);
    println!(
        "delocalized:  eta+ {:.4} ± {:.4}  phi+ {:.4} ± {:.4}  ({} excluded)",
        stats.mean.eta_plus, stats.std.eta_plus, stats.mean.phi_plus, stats.std.phi_plus, stats.excluded
    );
    Ok(())
}
