//! Noisy spectrum -> calibrated baseline -> three-Gaussian fit -> hyperfine
//! tensor. Also inverts three measured P1 centers directly.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zfesr::dynamics::RelaxationChannels;
use zfesr::nv::NvCenter;
use zfesr::spectra::{
    add_shot_noise, calibrate_baseline, extract_hyperfine, fit_gaussian_peaks, zf_spectrum, CenterObservation,
    EnsembleMember, HyperfineModel, InversionOptions, LockingBaseline, Spectrum, ZfOptions,
};
use zfesr::spin::{EulerAngles, HyperfineTensor, TargetSpinSystem};

fn main() -> zfesr::Result<()> {
    let sys = TargetSpinSystem::p1_n15().with_hyperfine(HyperfineTensor::axial(110.7, 155.0));
    let nv = NvCenter::default();
    let member = EnsembleMember {
        orientation: EulerAngles::default(),
        position: Vector3::new(1.5, 2.0, 5.0),
    };
    let axis = Spectrum::grid(20.0, 320.0, 0.5)?;
    let opts = ZfOptions {
        contrast: Some(0.03),
        ..ZfOptions::default()
    };
    let clean = zf_spectrum(&sys, &[member], &RelaxationChannels::from_nv(&nv, Some(10.0)), 10.0, &axis, &opts)?;
    let noisy = add_shot_noise(&clean, 100_000, &mut ChaCha8Rng::seed_from_u64(11))?;
    let cal = calibrate_baseline(
        &noisy,
        Some(&LockingBaseline {
            t1rho: nv.t1_rho.clone(),
            tau: 10.0,
        }),
    )?;

    let fit = fit_gaussian_peaks(&cal, 3, None)?;
    for (p, e) in fit.peaks.iter().zip(fit.statistical_errors.clone().unwrap_or_default()) {
        println!("peak {:8.3} ± {:.3} MHz  fwhm {:.2}  depth {:.4}", p.center, e[0], p.fwhm, p.depth);
    }
    for w in &fit.warnings {
        println!("warning: {w}");
    }
    let errors = fit.statistical_errors.clone().unwrap_or_default();
    let obs: Vec<CenterObservation> = fit
        .peaks
        .iter()
        .zip(errors.iter().map(|e| Some(e[0])).chain(std::iter::repeat(None)))
        .map(|(p, e)| CenterObservation::new(p.center, e))
        .collect();
    let est = extract_hyperfine(&obs, HyperfineModel::Axial, &InversionOptions::default())?;
    println!(
        "fitted:    A_perp {:.2} ± {:.2}, A_zz {:.2} ± {:.2} MHz (true 110.7, 155.0)",
        est.values[0], est.errors[0], est.values[1], est.errors[1]
    );

    let measured: Vec<CenterObservation> =
        [44.0, 221.7, 270.8].iter().map(|&c| CenterObservation::new(c, None)).collect();
    let est = extract_hyperfine(&measured, HyperfineModel::Axial, &InversionOptions::default())?;
    println!(
        "measured:  A_perp {:.2} ± {:.2}, A_zz {:.2} ± {:.2} MHz, residuals {:.2?}",
        est.values[0], est.errors[0], est.values[1], est.errors[1], est.residuals
    );
    Ok(())
}
