use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperfineModel {
    /// (A⊥, Azz) from lines at Azz − A⊥, 2A⊥, Azz + A⊥.
    Axial,
    /// (Axx, Ayy, Azz) from the six lines |A_aa ± A_bb|.
    Full,
}

/// Which axial line a center belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakClass {
    Left,
    Middle,
    Right,
}

impl PeakClass {
    fn row(self) -> [f64; 2] {
        match self {
            Self::Left => [-1.0, 1.0],
            Self::Middle => [2.0, 0.0],
            Self::Right => [1.0, 1.0],
        }
    }

    pub const ALL: [PeakClass; 3] = [Self::Left, Self::Middle, Self::Right];
}

/// A resonance position in drive-power units, MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterObservation {
    pub center: f64,
    /// 1σ; unweighted when absent.
    pub error: Option<f64>,
    pub class: Option<PeakClass>,
}

impl CenterObservation {
    pub fn new(center: f64, error: Option<f64>) -> Self {
        Self { center, error, class: None }
    }

    pub fn labeled(center: f64, error: Option<f64>, class: PeakClass) -> Self {
        Self { center, error, class: Some(class) }
    }
}

/// Expected order of the axial lines along the power axis. Swapping the left
/// and middle assignment reproduces the same three positions (right = left +
/// middle always), so positions alone cannot tell the two orders apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineOrder {
    /// left < middle < right, i.e. A⊥ ≤ Azz ≤ 3A⊥ (P1 centers).
    #[default]
    Ascending,
    /// middle < left < right, i.e. Azz > 3A⊥ (nitroxides).
    MiddleFirst,
}

impl LineOrder {
    fn rank(self, c: PeakClass) -> u8 {
        match (self, c) {
            (Self::Ascending, PeakClass::Left) | (Self::MiddleFirst, PeakClass::Middle) => 0,
            (Self::Ascending, PeakClass::Middle) | (Self::MiddleFirst, PeakClass::Left) => 1,
            (_, PeakClass::Right) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionOptions {
    /// Largest tolerated rms misfit of the centers, MHz.
    pub threshold: f64,
    /// Applied to unlabeled centers only.
    pub order: LineOrder,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            threshold: 10.0,
            order: LineOrder::Ascending,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperfineEstimate {
    pub model: HyperfineModel,
    /// (A⊥, Azz) or (Axx, Ayy, Azz), MHz.
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Observed minus predicted, per input center.
    pub residuals: Vec<f64>,
    pub residual_rms: f64,
    /// Line index each center was matched to.
    pub assignment: Vec<String>,
}

impl HyperfineEstimate {
    pub fn a_perp(&self) -> Option<f64> {
        (self.model == HyperfineModel::Axial).then(|| self.values[0])
    }

    pub fn a_zz(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Resonance powers 2Δω predicted by an axial tensor: [left, middle, right].
pub fn axial_resonances(a_perp: f64, a_zz: f64) -> [f64; 3] {
    [a_zz - a_perp, 2.0 * a_perp, a_zz + a_perp]
}

const FULL_ROWS: [([f64; 3], &str); 6] = [
    ([1.0, 1.0, 0.0], "xx+yy"),
    ([1.0, 0.0, 1.0], "xx+zz"),
    ([0.0, 1.0, 1.0], "yy+zz"),
    ([1.0, -1.0, 0.0], "xx-yy"),
    ([1.0, 0.0, -1.0], "xx-zz"),
    ([0.0, 1.0, -1.0], "yy-zz"),
];

/// Resonance powers |A_aa ± A_bb| of a diagonal tensor, in `FULL_ROWS` order.
pub fn full_resonances(a: [f64; 3]) -> [f64; 6] {
    FULL_ROWS.map(|(r, _)| (r[0] * a[0] + r[1] * a[1] + r[2] * a[2]).abs())
}

struct Solution {
    params: DVector<f64>,
    cov: DMatrix<f64>,
    residuals: Vec<f64>,
    chi2: f64,
}

fn weighted_lsq(rows: &[Vec<f64>], y: &[f64], sigma: &[Option<f64>]) -> Option<Solution> {
    let m = rows.len();
    let n = rows[0].len();
    let x = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let weighted = sigma.iter().all(|s| matches!(s, Some(e) if *e > 0.0));
    let w: Vec<f64> = if weighted {
        sigma.iter().map(|s| 1.0 / s.unwrap().powi(2)).collect()
    } else {
        vec![1.0; m]
    };
    let xtw = DMatrix::from_fn(n, m, |j, i| x[(i, j)] * w[i]);
    let normal = &xtw * &x;
    let inv = normal.try_inverse()?;
    let params = &inv * (&xtw * DVector::from_column_slice(y));
    let pred = &x * &params;
    let residuals: Vec<f64> = (0..m).map(|i| y[i] - pred[i]).collect();
    let chi2 = residuals.iter().zip(&w).map(|(r, wi)| r * r * wi).sum::<f64>();
    let cov = if weighted {
        inv
    } else if m > n {
        inv * (chi2 / (m - n) as f64)
    } else {
        DMatrix::zeros(n, n)
    };
    Some(Solution {
        params,
        cov,
        residuals,
        chi2,
    })
}

fn finish(model: HyperfineModel, s: Solution, assignment: Vec<String>, opts: &InversionOptions) -> Result<HyperfineEstimate> {
    let n = s.params.len();
    let rms = (s.residuals.iter().map(|r| r * r).sum::<f64>() / s.residuals.len() as f64).sqrt();
    if rms > opts.threshold {
        return Err(Error::InconsistentPeaks {
            rms,
            threshold: opts.threshold,
        });
    }
    Ok(HyperfineEstimate {
        model,
        values: s.params.iter().copied().collect(),
        errors: (0..n).map(|k| s.cov[(k, k)].max(0.0).sqrt()).collect(),
        covariance: (0..n).map(|i| (0..n).map(|j| s.cov[(i, j)]).collect()).collect(),
        residuals: s.residuals,
        residual_rms: rms,
        assignment,
    })
}

/// Least-squares hyperfine principal values from resonance centers.
///
/// Axial: unlabeled centers are matched to lines by trying every assignment
/// consistent with `opts.order` and keeping the smallest weighted misfit with
/// A⊥, Azz > 0. Two centers
/// must be labeled, since any two lines fit exactly.
///
/// Full: starts from the three largest centers read as the sum lines and
/// alternates nearest-line matching with a linear solve.
pub fn extract_hyperfine(
    obs: &[CenterObservation],
    model: HyperfineModel,
    opts: &InversionOptions,
) -> Result<HyperfineEstimate> {
    if obs.iter().any(|o| !o.center.is_finite()) {
        return Err(Error::invalid("non-finite peak center"));
    }
    let y: Vec<f64> = obs.iter().map(|o| o.center).collect();
    let sig: Vec<Option<f64>> = obs.iter().map(|o| o.error).collect();
    match model {
        HyperfineModel::Axial => {
            if obs.len() < 2 {
                return Err(Error::invalid("axial inversion needs at least two centers"));
            }
            if obs.len() > 10 {
                return Err(Error::invalid("axial inversion takes at most ten centers"));
            }
            let free: Vec<usize> = (0..obs.len()).filter(|&k| obs[k].class.is_none()).collect();
            if obs.len() == 2 && !free.is_empty() {
                return Err(Error::invalid(
                    "two-center inversion needs both centers labeled left/middle/right",
                ));
            }
            let mut best: Option<(Solution, Vec<PeakClass>)> = None;
            let combos = 3usize.pow(free.len() as u32);
            for code in 0..combos {
                let mut classes: Vec<PeakClass> = obs.iter().map(|o| o.class.unwrap_or(PeakClass::Left)).collect();
                let mut c = code;
                for &k in &free {
                    classes[k] = PeakClass::ALL[c % 3];
                    c /= 3;
                }
                let distinct = PeakClass::ALL.iter().filter(|p| classes.contains(p)).count();
                if distinct < 2 {
                    continue;
                }
                let ordered = free.iter().all(|&i| {
                    free.iter().all(|&j| {
                        !(obs[i].center < obs[j].center)
                            || opts.order.rank(classes[i]) <= opts.order.rank(classes[j])
                    })
                });
                if !ordered {
                    continue;
                }
                let rows: Vec<Vec<f64>> = classes.iter().map(|c| c.row().to_vec()).collect();
                let Some(s) = weighted_lsq(&rows, &y, &sig) else { continue };
                if !(s.params[0] > 0.0 && s.params[1] > 0.0) {
                    continue;
                }
                if best.as_ref().is_none_or(|(b, _)| s.chi2 < b.chi2 - 1e-12 * b.chi2.max(1e-300)) {
                    best = Some((s, classes));
                }
            }
            let (s, classes) = best.ok_or(Error::InconsistentPeaks {
                rms: f64::INFINITY,
                threshold: opts.threshold,
            })?;
            let names = classes
                .iter()
                .map(|c| match c {
                    PeakClass::Left => "left",
                    PeakClass::Middle => "middle",
                    PeakClass::Right => "right",
                })
                .map(String::from)
                .collect();
            finish(model, s, names, opts)
        }
        HyperfineModel::Full => {
            if obs.len() < 3 {
                return Err(Error::invalid("full inversion needs at least three centers"));
            }
            let mut sorted = y.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let (s1, s2, s3) = (sorted[2], sorted[1], sorted[0]);
            // s1 = xx+yy, s2 = xx+zz, s3 = yy+zz
            let mut a = [(s1 + s2 - s3) / 2.0, (s1 - s2 + s3) / 2.0, (-s1 + s2 + s3) / 2.0];
            let mut last: Option<Vec<usize>> = None;
            for _ in 0..100 {
                let pred = full_resonances(a);
                let assign: Vec<usize> = y
                    .iter()
                    .map(|&c| {
                        (0..6)
                            .min_by(|&i, &j| (pred[i] - c).abs().total_cmp(&(pred[j] - c).abs()))
                            .unwrap()
                    })
                    .collect();
                let rows: Vec<Vec<f64>> = assign
                    .iter()
                    .map(|&k| {
                        let (r, _) = FULL_ROWS[k];
                        let sign = if r[0] * a[0] + r[1] * a[1] + r[2] * a[2] < 0.0 { -1.0 } else { 1.0 };
                        r.iter().map(|v| v * sign).collect()
                    })
                    .collect();
                let s = weighted_lsq(&rows, &y, &sig).ok_or_else(|| {
                    Error::invalid("centers do not determine all three principal values")
                })?;
                a = [s.params[0], s.params[1], s.params[2]];
                if last.as_ref() == Some(&assign) {
                    let names = assign.iter().map(|&k| FULL_ROWS[k].1.to_string()).collect();
                    return finish(model, s, names, opts);
                }
                last = Some(assign);
            }
            Err(Error::NonConvergence { iterations: 100 })
        }
    }
}
