//! Synthetic zero-field spectra: a single P1 at a fixed position, then a
//! random shell ensemble, both with the T1rho baseline and shot noise.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zfesr::dynamics::RelaxationChannels;
use zfesr::nv::NvCenter;
use zfesr::spectra::{
    add_shot_noise, zf_lines, zf_spectrum, EnsembleSpec, OrientationRule, Placement, Spectrum, ZfOptions,
};
use zfesr::spin::{EulerAngles, TargetSpinSystem};

fn main() -> zfesr::Result<()> {
    let sys = TargetSpinSystem::p1_n15();
    let nv = NvCenter::default();
    let channels = RelaxationChannels::from_nv(&nv, Some(10.0));
    let axis = Spectrum::grid(20.0, 320.0, 0.5)?;
    let opts = ZfOptions::default();

    let single = EnsembleSpec::single(EulerAngles::default(), Vector3::new(1.5, 2.0, 5.0)).members(0)?;
    for l in zf_lines(&sys, &single, 10.0, 10.0, &opts)? {
        println!("line {:7.2} MHz  eta^2 {:.3}  strength {:.2e}", l.resonance_power, l.eta_sq, l.strength);
    }
    let spec = zf_spectrum(&sys, &single, &channels, 10.0, &axis, &opts)?;
    println!("single target, minima at {:?} MHz", spec.local_minima());

    let shell = EnsembleSpec {
        count: 50,
        orientation: OrientationRule::Uniform,
        placement: Placement::Shell { radius: 6.0 },
    };
    let spec = zf_spectrum(&sys, &shell.members(3)?, &channels, 10.0, &axis, &opts)?;
    let noisy = add_shot_noise(&spec, 100_000, &mut ChaCha8Rng::seed_from_u64(3))?;
    print!("{}", noisy.to_csv_string()?.lines().take(8).collect::<Vec<_>>().join("\n"));
    println!("\n... {} points", noisy.len());
    Ok(())
}
