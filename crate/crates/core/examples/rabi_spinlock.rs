//! Calibration traces: a Rabi nutation to read off the drive power, then a
//! spin-lock decay to read off T1rho.

use zfesr::dynamics::{fit_decay, fit_rabi, rabi_trace, spin_lock_trace, RelaxationChannels};
use zfesr::nv::T1rhoModel;

fn main() -> zfesr::Result<()> {
    let t: Vec<f64> = (0..200).map(|k| k as f64 * 5e-5).collect();
    let pl = rabi_trace(396.0, &t, None)?;
    let rabi = fit_rabi(&t, &pl, None)?;
    println!("Rabi: {:.3} ± {:.1e} MHz, rms {:.1e}", rabi.frequency, rabi.frequency_err, rabi.rms);

    let channels = RelaxationChannels {
        nv_t1rho: T1rhoModel::Constant(70.0),
        nv_t2_star: None,
        target_gamma: None,
    };
    let taus: Vec<f64> = (0..=40).map(|k| k as f64 * 5.0).collect();
    let pl = spin_lock_trace(396.0, 100.0, &taus, &channels)?;
    for (tau, p) in taus.iter().zip(&pl).step_by(8) {
        println!("  tau {tau:6.1} us  PL {p:.4}");
    }
    let decay = fit_decay(&taus, &pl, None)?;
    println!("T1rho: {:.2} ± {:.1e} us", decay.time_constant, decay.time_constant_err);
    Ok(())
}
