//! Orientation dependence of a nitroxide spectrum. At zero field the lines
//! stay put as the radical tumbles; in a 300 G DEER sweep they move.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zfesr::spectra::{deer_lines, zf_lines, EnsembleMember, ZfOptions};
use zfesr::spin::{EulerAngles, TargetSpinSystem};

fn main() -> zfesr::Result<()> {
    let sys = TargetSpinSystem::nitroxide_n15();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("{:>28} | {:>28}", "ZF drive powers (MHz)", "DEER lines at 300 G (MHz)");
    for _ in 0..6 {
        let orientation = EulerAngles::random(&mut rng);
        let member = EnsembleMember {
            orientation,
            position: Vector3::new(1.5, 2.0, 5.0),
        };
        let zf: Vec<String> = zf_lines(&sys, &[member], 10.0, 10.0, &ZfOptions::default())?
            .iter()
            .map(|l| format!("{:.1}", l.resonance_power))
            .collect();
        let deer: Vec<String> = deer_lines(&sys, orientation, 300.0)?
            .iter()
            .map(|(f, _)| format!("{f:.1}"))
            .collect();
        println!("{:>28} | {:>28}", zf.join(" "), deer.join(" "));
    }
    Ok(())
}
