use nalgebra::{DMatrix, DVector};

use super::spectrum::{BaselineState, Spectrum};
use crate::error::{Error, Result};
use crate::nv::T1rhoModel;

/// Modeled locking baseline: survival exp(−τ/T₁ρ(Ω)) at lock time τ.
#[derive(Debug, Clone, PartialEq)]
pub struct LockingBaseline {
    pub t1rho: T1rhoModel,
    pub tau: f64,
}

/// Divide out the Ω-dependent baseline so off-resonance points sit at 1.
/// Without a model the baseline is a robust quadratic through the
/// off-peak points. A spectrum already marked calibrated is returned as is.
pub fn calibrate_baseline(raw: &Spectrum, model: Option<&LockingBaseline>) -> Result<Spectrum> {
    raw.validate()?;
    if raw.baseline == BaselineState::Calibrated {
        return Ok(raw.clone());
    }
    let base: Vec<f64> = match model {
        Some(m) => {
            m.t1rho.validate()?;
            raw.axis.iter().map(|&w| m.t1rho.survival(w, m.tau)).collect()
        }
        None => self_baseline(raw)?,
    };
    if base.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::Baseline("baseline vanishes on the axis".into()));
    }
    Ok(Spectrum {
        axis: raw.axis.clone(),
        values: raw.values.iter().zip(&base).map(|(v, b)| v / b).collect(),
        sem: raw
            .sem
            .as_ref()
            .map(|s| s.iter().zip(&base).map(|(e, b)| e / b).collect()),
        baseline: BaselineState::Calibrated,
    })
}

const MIN_OFF_PEAK: usize = 10;

fn self_baseline(raw: &Spectrum) -> Result<Vec<f64>> {
    let n = raw.len();
    if n < MIN_OFF_PEAK {
        return Err(Error::Baseline(format!(
            "no baseline model and only {n} points to self-calibrate"
        )));
    }
    let (lo, hi) = (raw.axis[0], raw.axis[n - 1]);
    let x: Vec<f64> = raw.axis.iter().map(|a| 2.0 * (a - lo) / (hi - lo) - 1.0).collect();
    let mut keep = vec![true; n];
    let mut coef = DVector::zeros(3);
    for _ in 0..50 {
        let idx: Vec<usize> = (0..n).filter(|&k| keep[k]).collect();
        if idx.len() < MIN_OFF_PEAK.max(n / 5) {
            return Err(Error::Baseline(format!(
                "only {} off-peak points left for self-calibration",
                idx.len()
            )));
        }
        let a = DMatrix::from_fn(idx.len(), 3, |r, c| x[idx[r]].powi(c as i32));
        let b = DVector::from_iterator(idx.len(), idx.iter().map(|&k| raw.values[k]));
        coef = a
            .clone()
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| Error::Baseline(e.to_string()))?;
        let fit = |k: usize| coef[0] + coef[1] * x[k] + coef[2] * x[k] * x[k];
        let mut resid: Vec<f64> = idx.iter().map(|&k| raw.values[k] - fit(k)).collect();
        resid.sort_by(f64::total_cmp);
        let med = resid[resid.len() / 2];
        let mut dev: Vec<f64> = resid.iter().map(|r| (r - med).abs()).collect();
        dev.sort_by(f64::total_cmp);
        let scale = (1.4826 * dev[dev.len() / 2]).max(1e-12 * fit(0).abs().max(1e-300));
        let next: Vec<bool> = (0..n).map(|k| raw.values[k] - fit(k) > -2.5 * scale).collect();
        if next == keep {
            break;
        }
        keep = next;
    }
    Ok(x.iter().map(|&t| coef[0] + coef[1] * t + coef[2] * t * t).collect())
}
