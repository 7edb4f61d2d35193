use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::sequence::{PulseSequence, RelaxationChannels, SequenceEngine};
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, numeric_jacobian, LmOptions};

/// Distribution of drive strengths across an NV ensemble, as (weight, scale)
/// pairs applied to the nominal Rabi frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiModulation {
    pub components: Vec<(f64, f64)>,
}

impl RabiModulation {
    pub fn new(components: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("modulation needs at least one component"));
        }
        if components.iter().any(|&(w, s)| !(w >= 0.0) || !(s >= 0.0)) {
            return Err(Error::invalid("modulation weights and scales must be non-negative"));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if !(total > 0.0) {
            return Err(Error::invalid("modulation weights sum to zero"));
        }
        Ok(Self {
            components: components.into_iter().map(|(w, s)| (w / total, s)).collect(),
        })
    }

    /// Equal populations of the four ⟨111⟩ NV axes under a linearly polarized
    /// B₁ along `b1`. Scales are B₁⊥ relative to the first axis.
    pub fn tetrahedral(b1: Vector3<f64>) -> Result<Self> {
        let axes = [
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::new(1.0, -1.0, -1.0),
            Vector3::new(-1.0, 1.0, -1.0),
            Vector3::new(-1.0, -1.0, 1.0),
        ];
        let b = b1.normalize();
        let perp: Vec<f64> = axes.iter().map(|a| b.cross(&a.normalize()).norm()).collect();
        if !(perp[0] > 1e-12) {
            return Err(Error::invalid("B1 parallel to the reference NV axis"));
        }
        Self::new(perp.iter().map(|p| (1.0, p / perp[0])).collect())
    }
}

/// Normalized PL after an x-phase drive of each duration. Durations of zero
/// read out the polarized state.
pub fn rabi_trace(
    omega: f64,
    durations: &[f64],
    modulation: Option<&RabiModulation>,
) -> Result<Vec<f64>> {
    if !(omega > 0.0) {
        return Err(Error::invalid(format!("Rabi frequency must be positive, got {omega}")));
    }
    let engine = SequenceEngine::nv_only(&RelaxationChannels::none())?;
    let single = RabiModulation {
        components: vec![(1.0, 1.0)],
    };
    let m = modulation.unwrap_or(&single);
    durations
        .iter()
        .map(|&t| {
            let mut pl = 0.0;
            for &(w, s) in &m.components {
                pl += w * engine.run(&PulseSequence::rabi(omega * s, t))?.pl;
            }
            Ok(pl)
        })
        .collect()
}

/// PL after the full spin-lock sequence for each lock duration.
pub fn spin_lock_trace(
    pulse_power: f64,
    lock_power: f64,
    taus: &[f64],
    channels: &RelaxationChannels,
) -> Result<Vec<f64>> {
    if !(pulse_power > 0.0) || !(lock_power > 0.0) {
        return Err(Error::invalid("spin-lock powers must be positive"));
    }
    let engine = SequenceEngine::nv_only(channels)?;
    taus.iter()
        .map(|&tau| Ok(engine.run(&PulseSequence::spin_lock(pulse_power, lock_power, tau))?.pl))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RabiFit {
    /// MHz.
    pub frequency: f64,
    pub frequency_err: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// Envelope decay rate, μs⁻¹.
    pub damping: f64,
    pub rms: f64,
}

fn check_trace(t: &[f64], y: &[f64], min: usize) -> Result<()> {
    if t.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            found: y.len(),
        });
    }
    if t.len() < min {
        return Err(Error::invalid(format!("need at least {min} points, got {}", t.len())));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("trace contains non-finite values"));
    }
    Ok(())
}

fn weights(sem: Option<&[f64]>, n: usize) -> Vec<f64> {
    match sem {
        Some(s) if s.len() == n && s.iter().all(|&e| e > 0.0) => s.iter().map(|e| 1.0 / e).collect(),
        _ => vec![1.0; n],
    }
}

/// Fit y = a + b·e^{−kt}·cos(2πft + φ). The frequency is seeded from the
/// largest periodogram peak between 1/T and the sampling Nyquist limit.
pub fn fit_rabi(t: &[f64], y: &[f64], sem: Option<&[f64]>) -> Result<RabiFit> {
    check_trace(t, y, 6)?;
    let n = t.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let (t0, t1) = t.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = t1 - t0;
    if !(span > 0.0) {
        return Err(Error::invalid("trace spans zero time"));
    }
    let mut sorted = t.to_vec();
    sorted.sort_by(f64::total_cmp);
    let dt = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::MAX, f64::min);
    let f_max = 0.5 / dt;
    let df = 0.1 / span;
    let mut best = (0.0, 0.0, 0.0);
    let mut f = 1.0 / span;
    while f <= f_max {
        let (mut re, mut im) = (0.0, 0.0);
        for (&ti, &yi) in t.iter().zip(y) {
            let arg = TAU * f * ti;
            re += (yi - mean) * arg.cos();
            im -= (yi - mean) * arg.sin();
        }
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, f, im.atan2(re));
        }
        f += df;
    }
    if best.1 == 0.0 {
        return Err(Error::invalid("no oscillation found in trace"));
    }
    let amp0 = 2.0 * best.0.sqrt() / n;
    let w = weights(sem, t.len());
    let model = |p: &[f64], ti: f64| p[0] + p[1] * (-p[4] * ti).exp() * (TAU * p[2] * ti + p[3]).cos();
    let resid = |p: &[f64]| -> Vec<f64> {
        t.iter()
            .zip(y)
            .zip(&w)
            .map(|((&ti, &yi), &wi)| wi * (model(p, ti) - yi))
            .collect()
    };
    let m = t.len();
    let fit = levenberg_marquardt(
        resid,
        |p: &[f64]| numeric_jacobian(&resid, p, m),
        |p: &mut [f64]| {
            p[4] = p[4].max(0.0);
        },
        &[mean, amp0, best.1, best.2, 0.0],
        &LmOptions::default(),
    )?;
    let p = &fit.params;
    let (mut amp, mut phase) = (p[1], p[3]);
    if amp < 0.0 {
        amp = -amp;
        phase += PI;
    }
    let errs = fit.standard_errors().unwrap_or_else(|| vec![0.0; 5]);
    let rms = (t.iter().zip(y).map(|(&ti, &yi)| (model(p, ti) - yi).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RabiFit {
        frequency: p[2].abs(),
        frequency_err: errs[2],
        offset: p[0],
        amplitude: amp,
        phase: phase.rem_euclid(TAU),
        damping: p[4],
        rms,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Decay time, μs.
    pub time_constant: f64,
    pub time_constant_err: f64,
    pub amplitude: f64,
    pub rms: f64,
}

/// Fit y = A·exp(−τ/T), seeded by a log-linear regression.
pub fn fit_decay(tau: &[f64], y: &[f64], sem: Option<&[f64]>) -> Result<DecayFit> {
    check_trace(tau, y, 3)?;
    let pts: Vec<(f64, f64)> = tau
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::invalid("decay trace has fewer than two positive points"));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    if !(slope < 0.0) {
        return Err(Error::invalid("trace does not decay"));
    }
    let a0 = (my - slope * mx).exp();
    let w = weights(sem, tau.len());
    let resid = |p: &[f64]| -> Vec<f64> {
        tau.iter()
            .zip(y)
            .zip(&w)
            .map(|((&t, &v), &wi)| wi * (p[0] * (-t / p[1]).exp() - v))
            .collect()
    };
    let m = tau.len();
    let fit = levenberg_marquardt(
        resid,
        |p: &[f64]| numeric_jacobian(&resid, p, m),
        |p: &mut [f64]| p[1] = p[1].max(1e-12),
        &[a0, -1.0 / slope],
        &LmOptions::default(),
    )?;
    let errs = fit.standard_errors().unwrap_or_else(|| vec![0.0; 2]);
    let p = &fit.params;
    let rms = (tau
        .iter()
        .zip(y)
        .map(|(&t, &v)| (p[0] * (-t / p[1]).exp() - v).powi(2))
        .sum::<f64>()
        / m as f64)
        .sqrt();
    Ok(DecayFit {
        time_constant: p[1],
        time_constant_err: errs[1],
        amplitude: p[0],
        rms,
    })
}
