//! How much of a dip comes from spins beyond r0, and the orientation-averaged
//! coupling factor for each P1 line.

use nalgebra::Vector3;
use zfesr::budget::{
    budget_table, eta_sq_fixed, eta_sq_monte_carlo, DetectionAreaParams, OrientationAverage, PeakLabel,
};
use zfesr::spin::EulerAngles;

fn main() -> zfesr::Result<()> {
    let p = DetectionAreaParams::default();
    for r0 in [10.0, 15.0, 25.0] {
        print!("{}", budget_table(r0, 0.03, &p, PeakLabel::nominal())?.to_text());
        println!();
    }

    let up = Vector3::z();
    for peak in PeakLabel::ALL {
        let fixed = eta_sq_fixed(peak, &up, EulerAngles::default())?;
        let uniform = eta_sq_monte_carlo(peak, 200_000, 1, OrientationAverage::Uniform)?;
        let diamond = eta_sq_monte_carlo(peak, 200_000, 1, OrientationAverage::Diamond)?;
        println!(
            "{:>6}: on-axis {fixed:.3}, sphere {:.4} ± {:.4}, (100) layer {:.4} ± {:.4}",
            peak.as_str(),
            uniform.mean,
            uniform.std_error,
            diamond.mean,
            diamond.std_error
        );
    }
    Ok(())
}
