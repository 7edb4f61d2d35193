use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use serde::Serialize;

use super::invert::HyperfineEstimate;
use super::spectrum::{gaussian, PeakModel, Spectrum};
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LmOptions};

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    /// Ascending by center.
    pub peaks: Vec<PeakModel>,
    /// Half the fitted FWHM of each peak.
    pub center_errors: Vec<f64>,
    /// 1σ least-squares errors of (center, fwhm, depth), when estimable.
    pub statistical_errors: Option<Vec<[f64; 3]>>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Overlapping or collapsed peaks, empty for a clean fit.
    pub warnings: Vec<String>,
    pub hyperfine: Option<HyperfineEstimate>,
}

impl FitResult {
    pub fn degenerate(&self) -> bool {
        !self.warnings.is_empty()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.center).collect()
    }
}

fn moving_average(v: &[f64], half: usize) -> Vec<f64> {
    (0..v.len())
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Default starting peaks: the `n` deepest local minima of the smoothed
/// deficit, topped up with the deepest remaining points when the spectrum has
/// fewer minima than requested.
pub fn initial_peaks(spec: &Spectrum, n: usize) -> Vec<PeakModel> {
    let m = spec.len();
    let step = (spec.axis[m - 1] - spec.axis[0]) / (m - 1).max(1) as f64;
    let deficit: Vec<f64> = moving_average(&spec.values, 2).iter().map(|v| 1.0 - v).collect();
    let width_at = |k: usize| -> f64 {
        let half = deficit[k] / 2.0;
        let mut l = k;
        while l > 0 && deficit[l] > half {
            l -= 1;
        }
        let mut r = k;
        while r + 1 < m && deficit[r] > half {
            r += 1;
        }
        (spec.axis[r] - spec.axis[l]).max(2.0 * step)
    };
    let mut minima: Vec<usize> = (1..m.saturating_sub(1))
        .filter(|&k| deficit[k] > deficit[k - 1] && deficit[k] >= deficit[k + 1] && deficit[k] > 0.0)
        .collect();
    minima.sort_by(|&a, &b| deficit[b].total_cmp(&deficit[a]).then(a.cmp(&b)));
    // Noise splits one dip into several minima; keep only the deepest of each.
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    for k in minima {
        if chosen.len() == n {
            break;
        }
        if chosen.iter().all(|&c| (spec.axis[c] - spec.axis[k]).abs() >= width_at(c)) {
            chosen.push(k);
        }
    }
    if chosen.len() < n {
        let mut rest: Vec<usize> = (0..m).collect();
        rest.sort_by(|&a, &b| deficit[b].total_cmp(&deficit[a]).then(a.cmp(&b)));
        for k in rest {
            if chosen.len() == n {
                break;
            }
            if chosen.iter().all(|&c| (spec.axis[c] - spec.axis[k]).abs() >= width_at(c) / 2.0) {
                chosen.push(k);
            }
        }
        let mut k = 0;
        while chosen.len() < n {
            chosen.push(k % m);
            k += 1;
        }
    }
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|k| PeakModel {
            center: spec.axis[k],
            fwhm: width_at(k),
            depth: deficit[k].clamp(1e-4, 0.9),
        })
        .collect()
}

/// Least-squares fit of 1 − Σ Gaussian dips to a calibrated spectrum,
/// weighted by the sem column when present.
pub fn fit_gaussian_peaks(spec: &Spectrum, n_peaks: usize, init: Option<&[PeakModel]>) -> Result<FitResult> {
    spec.validate()?;
    if n_peaks == 0 {
        return Err(Error::invalid("n_peaks must be at least 1"));
    }
    let m = spec.len();
    if m < 3 * n_peaks + 1 {
        return Err(Error::invalid(format!("{m} points cannot constrain {n_peaks} peaks")));
    }
    let start = match init {
        Some(p) if p.len() == n_peaks => p.to_vec(),
        Some(p) => {
            return Err(Error::invalid(format!(
                "{} initial peaks given for {n_peaks} requested",
                p.len()
            )))
        }
        None => initial_peaks(spec, n_peaks),
    };
    let (lo, hi) = (spec.axis[0], spec.axis[m - 1]);
    let step = (hi - lo) / (m - 1) as f64;
    let weights: Vec<f64> = match &spec.sem {
        Some(s) if s.iter().all(|&e| e > 0.0) => s.iter().map(|e| 1.0 / e).collect(),
        _ => vec![1.0; m],
    };
    let p0: Vec<f64> = start.iter().flat_map(|p| [p.center, p.fwhm, p.depth]).collect();
    let x = &spec.axis;
    let y = &spec.values;
    let resid = |p: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let model = 1.0 - p.chunks(3).map(|q| q[2] * gaussian(x[i], q[0], q[1])).sum::<f64>();
                weights[i] * (model - y[i])
            })
            .collect()
    };
    let jac = |p: &[f64]| -> DMatrix<f64> {
        let mut j = DMatrix::zeros(m, p.len());
        for i in 0..m {
            for (k, q) in p.chunks(3).enumerate() {
                let (c, w, d) = (q[0], q[1], q[2]);
                let g = gaussian(x[i], c, w);
                let u = x[i] - c;
                let a = 8.0 * LN_2 / (w * w);
                j[(i, 3 * k)] = -weights[i] * d * g * a * u;
                j[(i, 3 * k + 1)] = -weights[i] * d * g * a * u * u / w;
                j[(i, 3 * k + 2)] = -weights[i] * g;
            }
        }
        j
    };
    let (w_min, w_max) = (step / 2.0, hi - lo);
    let project = |p: &mut [f64]| {
        for q in p.chunks_mut(3) {
            q[0] = q[0].clamp(lo, hi);
            q[1] = q[1].clamp(w_min, w_max);
            q[2] = q[2].clamp(0.0, 0.999);
        }
    };
    let opts = LmOptions {
        max_iterations: 2000,
        ..LmOptions::default()
    };
    let fit = levenberg_marquardt(resid, jac, project, &p0, &opts)?;
    let stat = fit.standard_errors();
    let mut order: Vec<usize> = (0..n_peaks).collect();
    order.sort_by(|&a, &b| fit.params[3 * a].total_cmp(&fit.params[3 * b]));
    let peaks: Vec<PeakModel> = order
        .iter()
        .map(|&k| PeakModel {
            center: fit.params[3 * k],
            fwhm: fit.params[3 * k + 1],
            depth: fit.params[3 * k + 2],
        })
        .collect();
    let statistical_errors =
        stat.map(|s| order.iter().map(|&k| [s[3 * k], s[3 * k + 1], s[3 * k + 2]]).collect::<Vec<_>>());

    let mut warnings = Vec::new();
    let max_depth = peaks.iter().map(|p| p.depth).fold(0.0, f64::max);
    for (k, p) in peaks.iter().enumerate() {
        if p.depth < 0.05 * max_depth {
            warnings.push(format!("peak {k} at {:.3} MHz collapsed to depth {:.2e}", p.center, p.depth));
        }
        if p.fwhm <= w_min * 1.0001 || p.fwhm >= w_max * 0.9999 {
            warnings.push(format!("peak {k} width {:.3} MHz pinned at a bound", p.fwhm));
        }
        if let Some(errs) = &statistical_errors {
            if !(errs[k][0] < p.fwhm) {
                warnings.push(format!("peak {k} center is unconstrained"));
            }
        }
    }
    for k in 1..peaks.len() {
        let (a, b) = (&peaks[k - 1], &peaks[k]);
        if b.center - a.center < 0.5 * a.fwhm.max(b.fwhm) {
            warnings.push(format!(
                "peaks {} and {k} overlap at {:.3} and {:.3} MHz",
                k - 1,
                a.center,
                b.center
            ));
        }
    }
    let residual_norm = (0..m)
        .map(|i| {
            let model = 1.0 - peaks.iter().map(|p| p.profile(x[i])).sum::<f64>();
            (model - y[i]).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    Ok(FitResult {
        center_errors: peaks.iter().map(|p| p.fwhm / 2.0).collect(),
        peaks,
        statistical_errors,
        residual_norm,
        iterations: fit.iterations,
        warnings,
        hyperfine: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::spectrum::peaks_spectrum;

    #[test]
    fn split_dip_seeds_one_peak() {
        let axis = Spectrum::grid(20.0, 320.0, 0.5).unwrap();
        let peaks = [
            PeakModel::new(44.0, 8.0, 0.02).unwrap(),
            PeakModel::new(221.0, 8.0, 0.04).unwrap(),
            PeakModel::new(265.0, 8.0, 0.022).unwrap(),
        ];
        let mut spec = peaks_spectrum(&axis, &peaks).unwrap();
        // a notch at the bottom of the deepest dip leaves two local minima there
        for (&x, v) in spec.axis.iter().zip(spec.values.iter_mut()) {
            *v += 0.02 * gaussian(x, 221.0, 2.0);
        }
        let init: Vec<f64> = initial_peaks(&spec, 3).iter().map(|p| p.center).collect();
        assert!((init[0] - 44.0).abs() < 2.0, "{init:?}");
        assert!((init[1] - 221.0).abs() < 4.0, "{init:?}");
        assert!((init[2] - 265.0).abs() < 2.0, "{init:?}");
    }

    #[test]
    fn single_gaussian_self_fit() {
        let axis = Spectrum::grid(2.0, 100.0, 0.5).unwrap();
        let truth = PeakModel::new(47.3, 8.0, 0.03).unwrap();
        let s = peaks_spectrum(&axis, &[truth]).unwrap();
        let fit = fit_gaussian_peaks(&s, 1, None).unwrap();
        let p = fit.peaks[0];
        assert!(((p.center - truth.center) / truth.center).abs() < 1e-6);
        assert!(((p.fwhm - truth.fwhm) / truth.fwhm).abs() < 1e-6);
        assert!(((p.depth - truth.depth) / truth.depth).abs() < 1e-6);
        assert!(!fit.degenerate());
        assert!((fit.center_errors[0] - 4.0).abs() < 1e-5);
    }

    #[test]
    fn three_peaks_recovered() {
        let axis = Spectrum::grid(2.0, 400.0, 1.0).unwrap();
        let truth = [
            PeakModel::new(44.0, 7.2, 0.03).unwrap(),
            PeakModel::new(221.7, 6.8, 0.02).unwrap(),
            PeakModel::new(270.8, 9.6, 0.03).unwrap(),
        ];
        let fit = fit_gaussian_peaks(&peaks_spectrum(&axis, &truth).unwrap(), 3, None).unwrap();
        for (p, t) in fit.peaks.iter().zip(&truth) {
            assert!((p.center - t.center).abs() < 1e-6);
        }
    }

    #[test]
    fn too_many_peaks_flagged() {
        let axis = Spectrum::grid(2.0, 400.0, 1.0).unwrap();
        let truth = [
            PeakModel::new(80.0, 8.0, 0.03).unwrap(),
            PeakModel::new(250.0, 8.0, 0.03).unwrap(),
        ];
        let s = peaks_spectrum(&axis, &truth).unwrap();
        let fit = fit_gaussian_peaks(&s, 3, None).unwrap();
        assert!(fit.degenerate(), "{:?}", fit.peaks);
    }
}
