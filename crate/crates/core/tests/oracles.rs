//! Independent checks of derived quantities against hand-computed values.

use nalgebra::Vector3;

use zfesr::budget::{eta_sq_fixed, PeakLabel};
use zfesr::dynamics::{DipolarCoupling, FlipFlopSimulator, RelaxationChannels};
use zfesr::nv::{NvCenter, T1rhoModel};
use zfesr::spectra::{
    axial_resonances, extract_hyperfine, zf_lines, CenterObservation, EnsembleMember, HyperfineModel,
    InversionOptions, ZfOptions,
};
use zfesr::spin::{EulerAngles, TargetSpinSystem};

// Axial P1 eigenstates at zero field: the middle line links |T0⟩ and |S⟩,
// where ⟨S|Sz|T0⟩ = 1/2 and Sx, Sy vanish; the side lines have no Sz element.
#[test]
fn eta_sq_on_axis_and_in_plane() {
    let up = Vector3::z();
    let side = Vector3::x();
    let e = EulerAngles::default();
    // r̂ = ẑ: b̂ = ẑ − 3ẑ = −2ẑ, so η² = 4·|−2·½|² = 4 on the middle line
    assert!((eta_sq_fixed(PeakLabel::Middle, &up, e).unwrap() - 4.0).abs() < 1e-12);
    assert!(eta_sq_fixed(PeakLabel::Left, &up, e).unwrap().abs() < 1e-12);
    // r̂ = x̂: b̂ = ẑ, η² = 4·|½|² = 1
    assert!((eta_sq_fixed(PeakLabel::Middle, &side, e).unwrap() - 1.0).abs() < 1e-12);
    assert!(eta_sq_fixed(PeakLabel::Right, &side, e).unwrap().abs() < 1e-12);
}

#[test]
fn weak_coupling_exact_is_half_the_fast_strength() {
    let nv = NvCenter::default();
    let sys = TargetSpinSystem::p1_n15();
    let channels = RelaxationChannels {
        nv_t1rho: T1rhoModel::None,
        nv_t2_star: None,
        target_gamma: Some(10.0),
    };
    let position = Vector3::new(0.3, 0.4, 1.0).normalize() * 10.0;
    let member = EnsembleMember {
        orientation: EulerAngles::default(),
        position,
    };
    let lines = zf_lines(&sys, &[member], 10.0, 10.0, &ZfOptions::default()).unwrap();
    let sim = FlipFlopSimulator::new(&nv, &sys, &DipolarCoupling::new(position), Vector3::z(), &channels).unwrap();
    for l in lines {
        let p = sim.transfer(l.resonance_power, 10.0).unwrap();
        let ratio = p / l.strength;
        assert!(l.strength < 0.05);
        assert!((ratio - 0.5).abs() < 0.03, "line {:.1}: ratio {ratio}", l.resonance_power);
    }
}

#[test]
fn axial_inversion_closed_form() {
    // ω_L = Azz − A⊥, ω_M = 2A⊥, ω_R = Azz + A⊥, solved by unweighted normal equations
    let w = [44.0, 221.7, 270.8];
    // design rows in (A⊥, Azz): (−1, 1), (2, 0), (1, 1)
    let (s11, s12, s22) = (1.0 + 4.0 + 1.0, -1.0 + 0.0 + 1.0, 1.0 + 0.0 + 1.0);
    let (b1, b2) = (-w[0] + 2.0 * w[1] + w[2], w[0] + w[2]);
    let det = s11 * s22 - s12 * s12;
    let a_perp = (s22 * b1 - s12 * b2) / det;
    let a_zz = (s11 * b2 - s12 * b1) / det;
    let obs: Vec<CenterObservation> = w.iter().map(|&c| CenterObservation::new(c, None)).collect();
    let est = extract_hyperfine(&obs, HyperfineModel::Axial, &InversionOptions::default()).unwrap();
    assert!((est.values[0] - a_perp).abs() < 1e-9);
    assert!((est.values[1] - a_zz).abs() < 1e-9);
    let back = axial_resonances(a_perp, a_zz);
    assert!((back[1] - 2.0 * a_perp).abs() < 1e-12);
}
