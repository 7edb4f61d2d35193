//! Dressed NV states under a resonant x drive, and the power window in which
//! a zero-field sweep is meaningful.

use zfesr::nv::{
    dressed_basis, drive_power_warnings, linewidth_budget, rotating_frame_hamiltonian, DriveField, DrivePhase,
    NvCenter,
};

fn main() -> zfesr::Result<()> {
    let omega = 228.0;
    let basis = dressed_basis(omega)?;
    let h = rotating_frame_hamiltonian(&DriveField::resonant(omega, DrivePhase::X));
    for (label, (v, e)) in ["|-⟩", "|0⟩", "|+⟩"].iter().zip(basis.states().into_iter().zip(basis.energies)) {
        let residual: f64 = (0..3)
            .map(|i| ((0..3).map(|j| h[(i, j)] * v[j]).sum::<num_complex::Complex64>() - v[i] * e).norm())
            .fold(0.0, f64::max);
        println!("{label}  E = {e:+8.2} MHz  |Hv - Ev| = {residual:.1e}");
    }

    let nv = NvCenter::default();
    let budget = linewidth_budget(&nv, 0.1, 0.5);
    println!(
        "dephasing width {:.2} MHz, Zeeman splitting at 0.5 G {:.2} MHz",
        budget.dephasing, budget.zeeman_splitting
    );
    for w in [2.0, 100.0, 2000.0] {
        let warnings = drive_power_warnings(w, &budget);
        if warnings.is_empty() {
            println!("{w} MHz: ok");
        }
        for warning in warnings {
            println!("{w} MHz: {warning}");
        }
    }
    Ok(())
}
