//! Zero-field lines of the built-in target species and the drive powers that
//! bring each into dressed resonance.
//!
//! ```text
//! cargo run --example hyperfine_lines
//! ```

use zfesr::nv::resonance_powers;
use zfesr::spin::{zero_field_table, HyperfineTensor, TargetSpinSystem};

fn main() -> zfesr::Result<()> {
    let systems = [
        ("P1, 15N", TargetSpinSystem::p1_n15()),
        ("P1, 14N", TargetSpinSystem::p1_n14()),
        ("nitroxide, 15N", TargetSpinSystem::nitroxide_n15()),
        (
            "P1, 15N, rhombic",
            TargetSpinSystem::p1_n15().with_hyperfine(HyperfineTensor::diagonal(110.0, 118.0, 159.9)),
        ),
    ];
    for (name, sys) in systems {
        let table = zero_field_table(&sys)?;
        println!("{name} ({} levels)", sys.dim());
        for r in resonance_powers(&table) {
            println!(
                "  line {:8.3} MHz  -> drive {:8.3} MHz  ({} transitions)",
                r.transition_frequency,
                r.omega,
                r.rows.len()
            );
        }
    }
    Ok(())
}
