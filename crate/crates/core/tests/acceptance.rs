//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
//! criterion fails.

use std::time::{Duration, Instant};

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zfesr::budget::{
    budget_table, eta_sq_monte_carlo, expected_spin_count, outer_signal,
    DetectionAreaParams, OrientationAverage, PeakLabel,
};
use zfesr::dynamics::{
    fit_decay, fit_rabi, rabi_trace, run_sequence, spin_lock_trace, DipolarCoupling, FlipFlopSimulator,
    PulseSequence, RelaxationChannels,
};
use zfesr::nv::{
    dressed_basis, linewidth_budget, resonance_powers, rotating_frame_hamiltonian, DriveField, DrivePhase,
    NvCenter, T1rhoModel,
};
use zfesr::spectra::{
    add_shot_noise, calibrate_baseline, deer_spectrum, extract_hyperfine, fit_gaussian_peaks, zf_spectrum,
    CenterObservation, DeerOptions, EnsembleMember, HyperfineModel, InversionOptions, LockingBaseline, Spectrum,
    ZfOptions,
};
use zfesr::spin::{zero_field_table, EulerAngles, HyperfineTensor, TargetSpinSystem};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let (a_perp, a_zz) = (114.0, 159.9);
    let table = zero_field_table(&TargetSpinSystem::p1_n15()).unwrap();
    let freqs = table.observable_frequencies();
    let closed = [(a_zz - a_perp) / 2.0, a_perp, (a_zz + a_perp) / 2.0];
    let omegas: Vec<f64> = resonance_powers(&table).iter().map(|r| r.omega).collect();
    let f_err = freqs.iter().zip(closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let w_err = omegas.iter().zip(closed).map(|(a, b)| (a - 2.0 * b).abs()).fold(0.0, f64::max);
    let pass = freqs.len() == 3 && f_err < 1e-9 && w_err < 1e-9;
    outcome(
        pass,
        format!("lines {freqs:.4?} MHz, powers {omegas:.4?} MHz, max error {:.1e} MHz", f_err.max(w_err)),
    )
}

fn criterion_2() -> Outcome {
    let obs: Vec<CenterObservation> = [44.0, 221.7, 270.8].iter().map(|&c| CenterObservation::new(c, None)).collect();
    let est = extract_hyperfine(&obs, HyperfineModel::Axial, &InversionOptions::default()).unwrap();
    let (ap, az) = (est.a_perp().unwrap(), est.a_zz());
    let pass = (ap - 110.7).abs() <= 0.2 && (az - 155.0).abs() <= 0.5;
    outcome(
        pass,
        format!(
            "A_perp = {ap:.3} ± {:.2} (want 110.7 ± 0.2), A_zz = {az:.3} ± {:.2} (want 155.0 ± 0.5) MHz",
            est.errors[0], est.errors[1]
        ),
    )
}

fn criterion_3() -> Outcome {
    let p = DetectionAreaParams::default();
    let table = budget_table(15.0, 0.03, &p, PeakLabel::nominal()).unwrap();
    let pct: Vec<f64> = table.rows.iter().map(|r| 100.0 * r.outer_signal).collect();
    let want = [0.29, 0.17, 0.29];
    let value_ok = pct.iter().zip(want).all(|(a, b)| (a - b).abs() <= 0.005);
    let quad_ok = table
        .rows
        .iter()
        .all(|r| ((r.outer_signal - r.outer_signal_quadrature) / r.outer_signal).abs() < 1e-6);
    let count = expected_spin_count(p.areal_density, 15.0).unwrap();
    let count_ok = (count - 3.9).abs() < 0.05;
    outcome(
        value_ok && quad_ok && count_ok,
        format!(
            "outer {:.4}/{:.4}/{:.4} % (want 0.29/0.17/0.29 ± 0.005), quadrature agrees: {quad_ok}, count {count:.3}",
            pct[0], pct[1], pct[2]
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let omega = rng.random_range(0.1..1000.0);
        let b = dressed_basis(omega).unwrap();
        let h = rotating_frame_hamiltonian(&DriveField::resonant(omega, DrivePhase::X));
        for (v, e) in b.states().iter().zip(b.energies) {
            for i in 0..3 {
                let hv: Complex64 = (0..3).map(|j| h[(i, j)] * v[j]).sum();
                worst = worst.max((hv - v[i] * e).norm());
            }
        }
    }
    let nv = NvCenter::default();
    let mut pl_err: f64 = 0.0;
    for (p0, lock, tau) in [(396.0, 100.0, 10.0), (250.0, 45.9, 70.0), (50.0, 300.0, 1.0)] {
        let pl = run_sequence(&PulseSequence::spin_lock(p0, lock, tau), &nv, &RelaxationChannels::none()).unwrap();
        pl_err = pl_err.max((pl - 1.0).abs());
    }
    outcome(
        worst < 1e-12 && pl_err < 1e-9,
        format!("max eigen residual {worst:.1e}, locked PL error {pl_err:.1e}"),
    )
}

fn criterion_5() -> Outcome {
    let nv = NvCenter::default();
    let channels = RelaxationChannels {
        nv_t1rho: T1rhoModel::Constant(70.0),
        nv_t2_star: Some(0.1),
        target_gamma: Some(10.0),
    };
    let sys = TargetSpinSystem::p1_n15();
    let coupling = DipolarCoupling::new(Vector3::new(0.3, 0.4, 1.0).normalize() * 5.0);
    let sim = FlipFlopSimulator::new(&nv, &sys, &coupling, Vector3::z(), &channels).unwrap();
    let linewidth = linewidth_budget(&nv, 1.0 / 10.0, 0.0).dephasing;
    let table = zero_field_table(&sys).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for r in resonance_powers(&table) {
        let omegas: Vec<f64> = (-16..=16).map(|k| r.omega + 0.5 * k as f64).collect();
        let p = sim.sweep(&omegas, 10.0).unwrap();
        let k = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
        let mut peak = omegas[k];
        if k > 0 && k + 1 < p.len() {
            let denom = p[k - 1] - 2.0 * p[k] + p[k + 1];
            if denom < 0.0 {
                peak += 0.25 * (p[k - 1] - p[k + 1]) / denom;
            }
        }
        let off = (peak - r.omega).abs();
        pass &= off <= linewidth;
        parts.push(format!("{:.2}→{peak:.2}", r.omega));
    }
    outcome(pass, format!("expected→found {} MHz, linewidth {linewidth:.2} MHz", parts.join(", ")))
}

fn criterion_6() -> Outcome {
    let (a_perp, a_zz) = (110.7, 155.0);
    let sys = TargetSpinSystem::p1_n15().with_hyperfine(HyperfineTensor::axial(a_perp, a_zz));
    let nv = NvCenter::default();
    let channels = RelaxationChannels::from_nv(&nv, Some(10.0));
    let members = [EnsembleMember {
        orientation: EulerAngles::default(),
        position: Vector3::new(1.5, 2.0, 5.0),
    }];
    let axis = Spectrum::grid(20.0, 320.0, 0.5).unwrap();
    let opts = ZfOptions {
        fwhm: 8.0,
        contrast: Some(0.03),
        ..ZfOptions::default()
    };
    let clean = zf_spectrum(&sys, &members, &channels, 10.0, &axis, &opts).unwrap();
    let baseline = LockingBaseline {
        t1rho: nv.t1_rho.clone(),
        tau: 10.0,
    };
    let trials = 100;
    let mut ok = 0;
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noisy = add_shot_noise(&clean, 100_000, &mut rng).unwrap();
        let cal = calibrate_baseline(&noisy, Some(&baseline)).unwrap();
        let Ok(fit) = fit_gaussian_peaks(&cal, 3, None) else { continue };
        let obs: Vec<CenterObservation> = fit
            .peaks
            .iter()
            .zip(fit.statistical_errors.clone().unwrap_or_default().iter().map(|e| e[0]).chain(std::iter::repeat(0.0)))
            .map(|(p, e)| CenterObservation::new(p.center, (e > 0.0).then_some(e)))
            .collect();
        let Ok(est) = extract_hyperfine(&obs, HyperfineModel::Axial, &InversionOptions::default()) else {
            continue;
        };
        let (dp, dz) = ((est.values[0] - a_perp).abs(), (est.values[1] - a_zz).abs());
        worst = (worst.0.max(dp), worst.1.max(dz));
        if dp <= 3.5 && dz <= 7.1 {
            ok += 1;
        }
    }
    outcome(
        ok * 100 >= 95 * trials,
        format!(
            "{ok}/{trials} trials within ±3.5/±7.1 MHz, worst deviations {:.3}/{:.3} MHz",
            worst.0, worst.1
        ),
    )
}

fn minima_below(spec: &Spectrum, fraction: f64) -> Vec<f64> {
    let depth = |k: usize| 1.0 - spec.values[k];
    let max_depth = (0..spec.len()).map(depth).fold(0.0, f64::max);
    (1..spec.len() - 1)
        .filter(|&k| spec.values[k] < spec.values[k - 1] && spec.values[k] <= spec.values[k + 1])
        .filter(|&k| depth(k) > fraction * max_depth)
        .map(|k| spec.axis[k])
        .collect()
}

fn criterion_7() -> Outcome {
    let sys = TargetSpinSystem::nitroxide_n15();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let position = Vector3::new(1.5, 2.0, 5.0);
    let zf_axis = Spectrum::grid(20.0, 200.0, 0.5).unwrap();
    let deer_axis = Spectrum::grid(700.0, 1000.0, 0.5).unwrap();
    let step = 0.5;
    let reference: Vec<f64> = resonance_powers(&zero_field_table(&sys).unwrap()).iter().map(|r| r.omega).collect();
    let channels = RelaxationChannels {
        nv_t1rho: T1rhoModel::None,
        nv_t2_star: None,
        target_gamma: Some(10.0),
    };
    let zf_opts = ZfOptions::default();
    let deer_opts = DeerOptions::default();
    let mut zf_ok = true;
    let mut lowest_deer = Vec::new();
    for _ in 0..20 {
        let member = EnsembleMember {
            orientation: EulerAngles::random(&mut rng),
            position,
        };
        let zf = zf_spectrum(&sys, &[member], &channels, 10.0, &zf_axis, &zf_opts).unwrap();
        for m in minima_below(&zf, 0.05) {
            zf_ok &= reference.iter().any(|r| (r - m).abs() <= step);
        }
        let deer = deer_spectrum(&sys, &[member], 300.0, &deer_axis, &deer_opts).unwrap();
        if let Some(first) = minima_below(&deer, 0.05).first() {
            lowest_deer.push(*first);
        }
    }
    let lo = lowest_deer.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lowest_deer.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    outcome(
        zf_ok && spread > deer_opts.fwhm,
        format!(
            "ZF minima on {reference:.1?} MHz within one step: {zf_ok}; lowest DEER line spans {spread:.1} MHz (linewidth {})",
            deer_opts.fwhm
        ),
    )
}

fn criterion_8() -> Outcome {
    let left = eta_sq_monte_carlo(PeakLabel::Left, 1_000_000, 8, OrientationAverage::Uniform).unwrap();
    let middle = eta_sq_monte_carlo(PeakLabel::Middle, 1_000_000, 8, OrientationAverage::Uniform).unwrap();
    let converged = ((left.mean - 1.25) / 1.25).abs() < 0.01 && ((middle.mean - 0.75) / 0.75).abs() < 0.01;
    let p = DetectionAreaParams::default();
    let fallback = [1.25, 0.75]
        .iter()
        .zip([0.29, 0.17])
        .all(|(&eta, want)| (100.0 * outer_signal(15.0, &p.with_eta_sq(eta)).unwrap() - want).abs() <= 0.005);
    let detail = format!(
        "Monte-Carlo <eta^2> left {:.4} ± {:.4}, middle {:.4} ± {:.4} (want 1.25/0.75 within 1%); {}",
        left.mean,
        left.std_error,
        middle.mean,
        middle.std_error,
        if converged {
            "converged".to_string()
        } else {
            format!("discrepancy reported, budget with nominal constants passes: {fallback}")
        }
    );
    outcome(converged || fallback, detail)
}

fn criterion_9() -> Outcome {
    let t: Vec<f64> = (0..200).map(|k| k as f64 * 5e-5).collect();
    let y = rabi_trace(396.0, &t, None).unwrap();
    let rabi = fit_rabi(&t, &y, None).unwrap();
    let rabi_err = ((rabi.frequency - 396.0) / 396.0).abs();
    let channels = RelaxationChannels {
        nv_t1rho: T1rhoModel::Constant(70.0),
        nv_t2_star: None,
        target_gamma: None,
    };
    let taus: Vec<f64> = (0..=40).map(|k| k as f64 * 5.0).collect();
    let pl = spin_lock_trace(396.0, 100.0, &taus, &channels).unwrap();
    let decay_err = taus
        .iter()
        .zip(&pl)
        .map(|(tau, p)| (p - (-tau / 70.0).exp()).abs())
        .fold(0.0, f64::max);
    let decay = fit_decay(&taus, &pl, None).unwrap();
    outcome(
        rabi_err < 1e-3 && decay_err < 1e-6,
        format!(
            "Rabi fit {:.4} MHz (rel. error {rabi_err:.1e}); spin-lock max |PL − exp(−τ/70)| {decay_err:.1e}, fitted T1rho {:.4} us",
            rabi.frequency, decay.time_constant
        ),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome, Duration); 9] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(1)),
        (3, criterion_3, Duration::from_secs(1)),
        (4, criterion_4, Duration::from_secs(5)),
        (5, criterion_5, Duration::from_secs(300)),
        (6, criterion_6, Duration::from_secs(600)),
        (7, criterion_7, Duration::from_secs(60)),
        (8, criterion_8, Duration::from_secs(60)),
        (9, criterion_9, Duration::from_secs(10)),
    ];
    let mut failed = Vec::new();
    for (n, f, budget) in criteria {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = o.pass && in_time;
        println!(
            "criterion {n}: {} | {} | {:.3} s (limit {} s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
