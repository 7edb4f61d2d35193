//! Exact NV–P1 simulation in the joint Hilbert space. Sweeps the lock power
//! across each predicted resonance and prints the leaked population.
//!
//! Slow: each point is a full Liouvillian propagation (about 2 s total).

use nalgebra::Vector3;
use zfesr::dynamics::{DipolarCoupling, FlipFlopSimulator, RelaxationChannels};
use zfesr::nv::{resonance_powers, NvCenter, T1rhoModel};
use zfesr::spin::{zero_field_table, TargetSpinSystem};

fn main() -> zfesr::Result<()> {
    let nv = NvCenter::default();
    let sys = TargetSpinSystem::p1_n15();
    let channels = RelaxationChannels {
        nv_t1rho: T1rhoModel::None,
        nv_t2_star: Some(0.1),
        target_gamma: Some(10.0),
    };
    let coupling = DipolarCoupling::new(Vector3::new(0.3, 0.4, 1.0).normalize() * 5.0);
    let sim = FlipFlopSimulator::new(&nv, &sys, &coupling, Vector3::z(), &channels)?;
    for r in resonance_powers(&zero_field_table(&sys)?) {
        let omegas: Vec<f64> = (-4..=4).map(|k| r.omega + 2.0 * k as f64).collect();
        let p = sim.sweep(&omegas, 10.0)?;
        println!("resonance at {:.2} MHz", r.omega);
        for (w, p) in omegas.iter().zip(p) {
            println!("  {w:8.2}  {:<40} {p:.2e}", "#".repeat((p * 300.0).min(40.0) as usize));
        }
    }
    Ok(())
}
