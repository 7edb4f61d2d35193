//! Signal budget of a thin layer of target spins around the NV: per-spin
//! strength, the contribution from outside a detection radius, and the
//! orientation average of the squared coupling coefficient.
//!
//! Units: C₀ = 2π·52 rad·MHz·nm³ (the ordinary 52 MHz·nm³ times 2π), Γ is an
//! ordinary rate in μs⁻¹ and τ is in μs. With σ = 5.5e-3 nm⁻², Γ = 10 μs⁻¹,
//! τ = 10 μs and r₀ = 15 nm the outer signal is
//! π·5.5e-3·(2π·52)²·(5/4)·10 / (16·10·15⁴) = 2.847e-3.

use std::f64::consts::{PI, TAU};

use nalgebra::{Rotation3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{angular_factor, DIPOLAR_CONSTANT};
use crate::error::{Error, Result};
use crate::spectra::random_direction;
use crate::spin::{zero_field_table, EulerAngles, TargetSpinSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionAreaParams {
    /// nm⁻².
    pub areal_density: f64,
    /// Ordinary-frequency dipolar constant, MHz·nm³.
    pub coupling_constant: f64,
    pub eta_sq: f64,
    /// μs⁻¹.
    pub gamma: f64,
    /// μs.
    pub tau: f64,
}

impl Default for DetectionAreaParams {
    fn default() -> Self {
        Self {
            areal_density: 5.5e-3,
            coupling_constant: DIPOLAR_CONSTANT,
            eta_sq: 1.25,
            gamma: 10.0,
            tau: 10.0,
        }
    }
}

impl DetectionAreaParams {
    pub fn with_eta_sq(mut self, eta_sq: f64) -> Self {
        self.eta_sq = eta_sq;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("areal_density", self.areal_density),
            ("coupling_constant", self.coupling_constant),
            ("eta_sq", self.eta_sq),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.tau >= 0.0) {
            return Err(Error::invalid(format!("tau must be non-negative, got {}", self.tau)));
        }
        Ok(())
    }

    fn k(&self) -> f64 {
        let c0 = TAU * self.coupling_constant;
        c0 * c0 * self.eta_sq * self.tau / (8.0 * self.gamma)
    }
}

/// C₀²⟨η²⟩τ/(8Γr⁶).
pub fn per_spin_signal(r: f64, p: &DetectionAreaParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("distance must be positive, got {r}")));
    }
    Ok(p.k() / r.powi(6))
}

/// πσC₀²⟨η²⟩τ/(16Γr₀⁴): every spin beyond r₀ in the layer.
pub fn outer_signal(r0: f64, p: &DetectionAreaParams) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::invalid(format!("r0 must be positive, got {r0}")));
    }
    Ok(PI * p.areal_density * p.k() / (2.0 * r0.powi(4)))
}

/// The same annulus integral ∫ s(r)σ2πr dr done numerically after the
/// substitution u = r₀/r, which maps [r₀, ∞) onto (0, 1].
pub fn outer_signal_quadrature(r0: f64, p: &DetectionAreaParams) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::invalid(format!("r0 must be positive, got {r0}")));
    }
    let f = |u: f64| -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let r = r0 / u;
        p.k() / r.powi(6) * p.areal_density * TAU * r * r0 / (u * u)
    };
    Ok(adaptive_simpson(&f, 0.0, 1.0, 1e-15, 40))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol * whole.abs().max(1e-300), depth)
}

/// Mean number of spins within r₀: πr₀²σ.
pub fn expected_spin_count(sigma: f64, r0: f64) -> Result<f64> {
    if !(sigma >= 0.0) || !(r0 >= 0.0) {
        return Err(Error::invalid("areal density and radius must be non-negative"));
    }
    Ok(PI * r0 * r0 * sigma)
}

/// Share of an observed contrast attributable to spins inside r₀.
pub fn dominance_fraction(contrast: f64, outer: f64) -> Result<f64> {
    if !(contrast > 0.0) || !(outer >= 0.0) {
        return Err(Error::invalid("contrast must be positive and the outer signal non-negative"));
    }
    if outer > contrast {
        return Err(Error::invalid(format!(
            "contrast {contrast} is below the outer signal {outer}"
        )));
    }
    Ok(1.0 - outer / contrast)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakLabel {
    Left,
    Middle,
    Right,
}

impl PeakLabel {
    pub const ALL: [PeakLabel; 3] = [Self::Left, Self::Middle, Self::Right];

    /// Nominal orientation averages used by the budget.
    pub fn eta_sq(self) -> f64 {
        match self {
            Self::Left | Self::Right => 1.25,
            Self::Middle => 0.75,
        }
    }

    pub fn nominal() -> [f64; 3] {
        Self::ALL.map(Self::eta_sq)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Left => "left",
            Self::Middle => "middle",
            Self::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetRow {
    pub peak: PeakLabel,
    pub eta_sq: f64,
    pub outer_signal: f64,
    pub outer_signal_quadrature: f64,
    pub dominance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetTable {
    pub r0: f64,
    pub contrast: f64,
    pub expected_count: f64,
    pub rows: Vec<BudgetRow>,
}

/// Per-peak outer signal and dominance. `eta_sq` holds ⟨η²⟩ for the left,
/// middle and right peaks.
pub fn budget_table(r0: f64, contrast: f64, p: &DetectionAreaParams, eta_sq: [f64; 3]) -> Result<BudgetTable> {
    p.validate()?;
    let rows = PeakLabel::ALL
        .iter()
        .zip(eta_sq)
        .map(|(&peak, eta)| {
            let q = p.with_eta_sq(eta);
            q.validate()?;
            let outer = outer_signal(r0, &q)?;
            Ok(BudgetRow {
                peak,
                eta_sq: q.eta_sq,
                outer_signal: outer,
                outer_signal_quadrature: outer_signal_quadrature(r0, &q)?,
                dominance: dominance_fraction(contrast, outer)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BudgetTable {
        r0,
        contrast,
        expected_count: expected_spin_count(p.areal_density, r0)?,
        rows,
    })
}

impl BudgetTable {
    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "r0 = {} nm, contrast = {:.2}%, expected spins inside = {:.3}\n",
            self.r0,
            100.0 * self.contrast,
            self.expected_count
        );
        s.push_str(&format!(
            "{:<8} {:>7} {:>12} {:>12} {:>11}\n",
            "peak", "eta_sq", "outer_%", "quad_%", "dominance_%"
        ));
        for r in &self.rows {
            s.push_str(&format!(
                "{:<8} {:>7.4} {:>12.6} {:>12.6} {:>11.3}\n",
                r.peak.as_str(),
                r.eta_sq,
                100.0 * r.outer_signal,
                100.0 * r.outer_signal_quadrature,
                100.0 * r.dominance
            ));
        }
        s
    }
}

/// How target tensor orientations are drawn relative to the NV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationAverage {
    /// Haar-random.
    #[default]
    Uniform,
    /// The four ⟨111⟩ lattice axes, NV along one of them.
    Diamond,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Principal-frame matrix elements of each ¹⁵N P1 line (left, middle, right).
fn p1_line_elements() -> Result<Vec<Vec<[num_complex::Complex64; 3]>>> {
    let table = zero_field_table(&TargetSpinSystem::p1_n15())?;
    let lines = table.lines();
    if lines.len() != 3 {
        return Err(Error::invalid("expected three zero-field P1 lines"));
    }
    Ok(lines
        .iter()
        .map(|l| l.rows.iter().map(|&k| table.rows[k].elements).collect())
        .collect())
}

fn line_eta_sq(elements: &[[num_complex::Complex64; 3]], b: &Vector3<f64>) -> f64 {
    4.0 * elements
        .iter()
        .map(|m| (m[0] * b.x + m[1] * b.y + m[2] * b.z).norm_sqr())
        .sum::<f64>()
}

/// η² of one P1 line for a fixed separation direction and tensor
/// orientation, NV along z: 4·Σ|⟨j|b̂·S|i⟩|² with b̂ = ẑ − 3(r̂·ẑ)r̂.
pub fn eta_sq_fixed(peak: PeakLabel, direction: &Vector3<f64>, orientation: EulerAngles) -> Result<f64> {
    if !(direction.norm() > 0.0) {
        return Err(Error::invalid("direction must be non-zero"));
    }
    let elements = p1_line_elements()?;
    let b = orientation.rotation().transpose() * angular_factor(direction, &Vector3::z());
    Ok(line_eta_sq(&elements[peak as usize], &b))
}

const BLOCK: u64 = 1 << 15;

/// Monte-Carlo orientation average of η² for one ¹⁵N P1 line. Samples are
/// drawn in fixed blocks, each from its own stream of the seeded generator,
/// and the block sums are reduced in block order, so the estimate does not
/// depend on the thread count.
pub fn eta_sq_monte_carlo(
    peak: PeakLabel,
    samples: u64,
    seed: u64,
    average: OrientationAverage,
) -> Result<EtaEstimate> {
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let elements = &p1_line_elements()?[peak as usize];
    let lattice: Vec<Rotation3<f64>> = {
        let tilt = (-1.0f64 / 3.0).acos();
        let mut v = vec![Rotation3::identity()];
        for k in 0..3 {
            let phi = k as f64 * TAU / 3.0;
            v.push(Rotation3::from_matrix_unchecked(EulerAngles::new(phi, tilt, 0.0).rotation()));
        }
        v
    };
    let blocks = samples.div_ceil(BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(blk);
            let n = BLOCK.min(samples - blk * BLOCK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let dir = random_direction(&mut rng);
                let rot = match average {
                    OrientationAverage::Uniform => EulerAngles::random(&mut rng).rotation(),
                    OrientationAverage::Diamond => {
                        let k = rand::Rng::random_range(&mut rng, 0..4);
                        *lattice[k].matrix()
                    }
                };
                let b = rot.transpose() * angular_factor(&dir, &Vector3::z());
                let e = line_eta_sq(elements, &b);
                s += e;
                s2 += e * e;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let n = samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    Ok(EtaEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_outer_signal() {
        let p = DetectionAreaParams::default();
        let outer = outer_signal(15.0, &p).unwrap();
        let by_hand = PI * 5.5e-3 * (TAU * 52.0).powi(2) * 1.25 * 10.0 / (16.0 * 10.0 * 15f64.powi(4));
        assert!((outer - by_hand).abs() < 1e-15);
        assert!((outer * 100.0 - 0.2847).abs() < 1e-4);
        let mid = outer_signal(15.0, &p.with_eta_sq(0.75)).unwrap();
        assert!((mid * 100.0 - 0.1708).abs() < 1e-4);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let p = DetectionAreaParams::default();
        for r0 in [5.0, 15.0, 37.0, 100.0] {
            let a = outer_signal(r0, &p).unwrap();
            let q = outer_signal_quadrature(r0, &p).unwrap();
            assert!(((a - q) / a).abs() < 1e-10, "{r0}: {a} vs {q}");
        }
    }

    #[test]
    fn scaling_laws() {
        let p = DetectionAreaParams::default();
        let s1 = per_spin_signal(4.0, &p).unwrap();
        assert!((s1 / per_spin_signal(8.0, &p).unwrap() - 64.0).abs() < 1e-9);
        assert!((outer_signal(10.0, &p).unwrap() / outer_signal(20.0, &p).unwrap() - 16.0).abs() < 1e-9);
        let zero_tau = DetectionAreaParams { tau: 0.0, ..p };
        assert_eq!(per_spin_signal(4.0, &zero_tau).unwrap(), 0.0);
    }

    #[test]
    fn counts_and_dominance() {
        assert!((expected_spin_count(5.5e-3, 15.0).unwrap() - 3.888).abs() < 1e-3);
        assert_eq!(expected_spin_count(5.5e-3, 0.0).unwrap(), 0.0);
        assert!((dominance_fraction(0.03, 0.0029).unwrap() - 0.90333).abs() < 1e-4);
        assert_eq!(dominance_fraction(0.03, 0.0).unwrap(), 1.0);
        assert_eq!(dominance_fraction(0.03, 0.03).unwrap(), 0.0);
        assert!(dominance_fraction(0.01, 0.03).is_err());
    }

    #[test]
    fn on_axis_middle_line_eta() {
        let e = eta_sq_fixed(PeakLabel::Middle, &Vector3::z(), EulerAngles::new(0.0, 0.0, 0.0)).unwrap();
        assert!((e - 4.0).abs() < 1e-12);
        let theta: f64 = 0.4;
        let dir = Vector3::new(theta.sin(), 0.0, theta.cos());
        let bz = 1.0 - 3.0 * theta.cos().powi(2);
        let e = eta_sq_fixed(PeakLabel::Middle, &dir, EulerAngles::new(0.0, 0.0, 0.0)).unwrap();
        assert!((e - bz * bz).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let a = eta_sq_monte_carlo(PeakLabel::Left, 100_000, 5, OrientationAverage::Uniform).unwrap();
        let b = eta_sq_monte_carlo(PeakLabel::Left, 100_000, 5, OrientationAverage::Uniform).unwrap();
        assert_eq!(a, b);
        assert!((a.mean - 4.0 / 3.0).abs() < 5.0 * a.std_error);
    }
}
