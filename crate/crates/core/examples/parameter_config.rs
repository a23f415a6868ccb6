//! Loading a parameter file and applying unit-aware overrides.

use std::collections::BTreeMap;

use rydberg_qubit::params::{apply_overrides, load_params};
use rydberg_qubit::units::{parse_quantity, Kind};

fn main() -> rydberg_qubit::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig4_5_phase.conf");
    let p = load_params(path)?;
    println!("delta3 = {:.6e} rad/s, B = {} G, OD = {:.3}", p.delta3(), p.b_field(), p.optical_depth());

    // `6.06 MHz` and `2pi*6.06 MHz` are the same angular frequency
    let a = parse_quantity("6.06MHz", Kind::AngularFrequency)?;
    let b = parse_quantity("2pi*6.06MHz", Kind::AngularFrequency)?;
    assert_eq!(a, b);

    let overrides = BTreeMap::from([("gamma3".to_string(), "2pi*6.06MHz".to_string()), ("od".to_string(), "30".to_string())]);
    let q = apply_overrides(&p, &overrides)?;
    println!("gamma31 = {:.6e} rad/s, OD = {:.3}", q.gamma31(), q.optical_depth());
    Ok(())
}
