use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;

use zfesr::budget::{outer_signal, outer_signal_quadrature, DetectionAreaParams};
use zfesr::dynamics::{
    flip_flop_transfer, DensityMatrix, DipolarCoupling, PulseSequence, RelaxationChannels, Segment, SequenceEngine,
};
use zfesr::nv::{dressed_basis, resonance_powers, rotating_frame_hamiltonian, DriveField, DrivePhase, NvCenter, T1rhoModel};
use zfesr::spectra::{
    calibrate_baseline, peaks_spectrum, zf_spectrum, EnsembleMember, LockingBaseline, PeakModel, Spectrum, ZfOptions,
};
use zfesr::spin::{diagonalize, hyperfine_hamiltonian, zero_field_table, EulerAngles, HyperfineTensor, TargetSpinSystem};

fn euler() -> impl Strategy<Value = EulerAngles> {
    (0.0..std::f64::consts::TAU, 0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU)
        .prop_map(|(a, b, g)| EulerAngles::new(a, b, g))
}

fn phase() -> impl Strategy<Value = DrivePhase> {
    prop_oneof![Just(DrivePhase::X), Just(DrivePhase::Y), Just(DrivePhase::MinusY), (-3.0..3.0f64).prop_map(DrivePhase::Radians)]
}

fn lossy() -> RelaxationChannels {
    RelaxationChannels {
        nv_t1rho: T1rhoModel::Constant(70.0),
        nv_t2_star: Some(0.1),
        target_gamma: Some(10.0),
    }
}

fn target_only() -> RelaxationChannels {
    RelaxationChannels {
        nv_t1rho: T1rhoModel::None,
        nv_t2_star: None,
        target_gamma: Some(10.0),
    }
}

/// Local minima deeper than 1% of the deepest dip.
fn dips(spec: &Spectrum) -> Vec<f64> {
    let deepest = spec.values.iter().map(|v| 1.0 - v).fold(0.0, f64::max);
    spec.local_minima()
        .into_iter()
        .filter(|&m| {
            let k = spec.axis.iter().position(|&x| x == m).unwrap();
            1.0 - spec.values[k] > 0.01 * deepest
        })
        .collect()
}

fn frequencies(sys: &TargetSpinSystem) -> Vec<f64> {
    zero_field_table(sys).unwrap().observable_frequencies()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_keeps_trace_and_positivity(
        pulses in prop::collection::vec((1.0..400.0f64, phase(), -20.0..20.0f64, 0.0..2.0f64), 1..5)
    ) {
        let engine = SequenceEngine::nv_only(&lossy()).unwrap();
        let mut rho = engine.polarized_state();
        for (w, ph, det, t) in pulses {
            let drive = DriveField { rabi_frequency: w, phase: ph, detuning: det };
            rho = engine.apply(&rho, &Segment::MwPulse { drive, duration: t }).unwrap();
            prop_assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-9);
            prop_assert!(rho.min_eigenvalue() > -1e-9);
            let pl = engine.readout(&rho);
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&pl));
        }
    }

    #[test]
    fn rotated_tensor_keeps_spectrum(a in 10.0..200.0f64, b in 10.0..200.0f64, c in 10.0..200.0f64, e in euler()) {
        let plain = TargetSpinSystem::p1_n15().with_hyperfine(HyperfineTensor::diagonal(a, b, c));
        let turned = plain.clone().with_hyperfine(plain.hyperfine.oriented(e));
        let ea = diagonalize(&hyperfine_hamiltonian(&plain, true).unwrap()).unwrap().energies;
        let eb = diagonalize(&hyperfine_hamiltonian(&turned, true).unwrap()).unwrap().energies;
        for (x, y) in ea.iter().zip(&eb) {
            prop_assert!((x - y).abs() < 1e-9, "{ea:?} vs {eb:?}");
        }
        let (fa, fb) = (frequencies(&plain), frequencies(&turned));
        prop_assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn zf_spectrum_ignores_tensor_orientation_on_axis(e in euler()) {
        // with the target on the NV axis, the spectrum may change depth but not line positions
        let sys = TargetSpinSystem::p1_n15();
        let axis = Spectrum::grid(20.0, 320.0, 0.5).unwrap();
        let member = EnsembleMember { orientation: e, position: Vector3::new(0.0, 0.0, 6.0) };
        let spec = zf_spectrum(&sys, &[member], &target_only(), 10.0, &axis, &ZfOptions::default()).unwrap();
        for m in dips(&spec) {
            prop_assert!([45.9, 228.0, 273.9].iter().any(|r| (r - m).abs() <= 0.5), "minimum at {m}");
        }
    }

    #[test]
    fn calibration_is_idempotent(t1 in 20.0..200.0f64, tau in 1.0..20.0f64, c in 50.0..280.0f64) {
        let axis = Spectrum::grid(20.0, 320.0, 1.0).unwrap();
        let mut raw = peaks_spectrum(&axis, &[PeakModel::new(c, 8.0, 0.03).unwrap()]).unwrap();
        let baseline = LockingBaseline { t1rho: T1rhoModel::Constant(t1), tau };
        for v in raw.values.iter_mut() {
            *v *= (-tau / t1).exp();
        }
        let once = calibrate_baseline(&raw, Some(&baseline)).unwrap();
        let twice = calibrate_baseline(&once, Some(&baseline)).unwrap();
        prop_assert_eq!(&once, &twice);
        let self_once = calibrate_baseline(&raw, None).unwrap();
        prop_assert_eq!(calibrate_baseline(&self_once, None).unwrap(), self_once);
    }

    #[test]
    fn dips_sit_at_twice_the_splitting(a_perp in 60.0..150.0f64, ratio in 1.3..1.9f64) {
        let a_zz = a_perp * ratio;
        let sys = TargetSpinSystem::p1_n15().with_hyperfine(HyperfineTensor::axial(a_perp, a_zz));
        let expect = [a_zz - a_perp, 2.0 * a_perp, a_zz + a_perp];
        let axis = Spectrum::grid(10.0, 700.0, 0.25).unwrap();
        let member = EnsembleMember { orientation: EulerAngles::default(), position: Vector3::new(1.5, 2.0, 5.0) };
        let spec = zf_spectrum(&sys, &[member], &target_only(), 10.0, &axis, &ZfOptions::default()).unwrap();
        let minima = dips(&spec);
        for w in expect {
            prop_assert!(minima.iter().any(|m| (m - w).abs() <= 0.5), "{w} not in {minima:?}");
        }
    }

    #[test]
    fn budget_falls_with_radius(r0 in 5.0..100.0f64, grow in 1.01..2.0f64, eta in 0.1..2.0f64) {
        let p = DetectionAreaParams::default().with_eta_sq(eta);
        let a = outer_signal(r0, &p).unwrap();
        let q = outer_signal_quadrature(r0, &p).unwrap();
        prop_assert!(((a - q) / a).abs() < 1e-8);
        prop_assert!(outer_signal(r0 * grow, &p).unwrap() < a);
        let ratio = a / outer_signal(2.0 * r0, &p).unwrap();
        prop_assert!((ratio - 16.0).abs() < 1e-9);
    }

    #[test]
    fn dressed_states_are_eigenvectors(omega in 0.01..1000.0f64) {
        let b = dressed_basis(omega).unwrap();
        let h = rotating_frame_hamiltonian(&DriveField::resonant(omega, DrivePhase::X));
        for (v, e) in b.states().into_iter().zip(b.energies) {
            for i in 0..3 {
                let hv: Complex64 = (0..3).map(|j| h[(i, j)] * v[j]).sum();
                prop_assert!((hv - v[i] * e).norm() < 1e-9 * omega.max(1.0));
            }
        }
    }

    #[test]
    fn resonance_powers_scale_with_tensor(k in 0.1..5.0f64, e in euler()) {
        let sys = TargetSpinSystem::p1_n15().with_hyperfine(HyperfineTensor::diagonal(90.0, 120.0, 160.0).oriented(e));
        let scaled = sys.clone().with_hyperfine(sys.hyperfine.scaled(k));
        let a: Vec<f64> = resonance_powers(&zero_field_table(&sys).unwrap()).iter().map(|r| r.omega).collect();
        let b: Vec<f64> = resonance_powers(&zero_field_table(&scaled).unwrap()).iter().map(|r| r.omega).collect();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((k * x - y).abs() < 1e-6 * y.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn short_lock_leakage_falls_as_r_to_the_sixth(r in 5.0..15.0f64) {
        let nv = NvCenter::default();
        let sys = TargetSpinSystem::p1_n15();
        let dir = Vector3::new(0.3, 0.4, 1.0).normalize();
        let p = |dist: f64| {
            flip_flop_transfer(&nv, &sys, &DipolarCoupling::new(dir * dist), 228.0, 0.3, &RelaxationChannels::none()).unwrap()
        };
        let ratio = p(5.0) / p(r) / (r / 5.0).powi(6);
        prop_assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }
}

#[test]
fn polarized_state_is_physical() {
    let rho = DensityMatrix::basis(3, 1);
    rho.check_physical(1e-12).unwrap();
    let engine = SequenceEngine::nv_only(&RelaxationChannels::none()).unwrap();
    let out = engine.run(&PulseSequence::spin_lock(396.0, 100.0, 5.0)).unwrap();
    assert!((out.pl - 1.0).abs() < 1e-9);
}
