use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::ensemble::EnsembleMember;
use super::spectrum::{gaussian, PeakModel, Spectrum};
use crate::dynamics::{angular_factor, DipolarCoupling, FlipFlopSimulator, RelaxationChannels, DIPOLAR_CONSTANT};
use crate::error::{Error, Result};
use crate::nv::NvCenter;
use crate::spin::{diagonalize, transition_table, zero_field_table, EulerAngles, TargetSpinSystem};

/// Bohr magneton over h, MHz/G.
pub const BOHR_MHZ_PER_GAUSS: f64 = 1.399_624_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMode {
    /// Per-line rate strengths on Gaussian lineshapes.
    #[default]
    Fast,
    /// Joint-space spin-lock simulation at every axis point.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZfOptions {
    pub mode: SynthesisMode,
    /// Lineshape FWHM in drive-power units, MHz.
    pub fwhm: f64,
    /// If set, rescale so the deepest fractional dip equals this.
    pub contrast: Option<f64>,
    /// Extra dips multiplied in after synthesis.
    pub nuisance: Vec<PeakModel>,
    pub nv_axis: Vector3<f64>,
    /// Ordinary-frequency dipolar constant, MHz·nm³.
    pub coupling_constant: f64,
    /// π/2 pulse power for exact mode; lock power when unset.
    pub pulse_power: Option<f64>,
}

impl Default for ZfOptions {
    fn default() -> Self {
        Self {
            mode: SynthesisMode::Fast,
            fwhm: 8.0,
            contrast: None,
            nuisance: Vec::new(),
            nv_axis: Vector3::z(),
            coupling_constant: DIPOLAR_CONSTANT,
            pulse_power: None,
        }
    }
}

/// One resonance of one ensemble member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZfLine {
    pub member: usize,
    /// Target transition frequency Δω, MHz.
    pub transition_frequency: f64,
    /// Drive power at resonance, 2Δω.
    pub resonance_power: f64,
    pub eta_sq: f64,
    /// C₀²η²τ/(8Γr⁶) with C₀ angular.
    pub strength: f64,
}

fn member_system(sys: &TargetSpinSystem, m: &EnsembleMember) -> TargetSpinSystem {
    sys.clone().with_hyperfine(sys.hyperfine.oriented(m.orientation))
}

/// Zero-field resonances of every member with per-line η² and strengths.
/// η² = 4·Σ|⟨j|b̂·S|i⟩|² over the rows of a line, b̂ = n − 3(r̂·n)r̂.
pub fn zf_lines(
    sys: &TargetSpinSystem,
    members: &[EnsembleMember],
    target_gamma: f64,
    tau: f64,
    opts: &ZfOptions,
) -> Result<Vec<ZfLine>> {
    if !(target_gamma > 0.0) {
        return Err(Error::invalid("line strengths need a positive target Γ"));
    }
    let c0 = TAU * opts.coupling_constant;
    let mut out = Vec::new();
    for (k, m) in members.iter().enumerate() {
        let r = m.position.norm();
        if !(r > 0.0) {
            return Err(Error::invalid("ensemble member sits on the NV"));
        }
        let table = zero_field_table(&member_system(sys, m))?;
        let b = angular_factor(&m.position, &opts.nv_axis);
        let b = [b.x, b.y, b.z];
        for line in table.lines() {
            let eta_sq = 4.0 * table.line_coupling_weight(&line, &b);
            out.push(ZfLine {
                member: k,
                transition_frequency: line.frequency,
                resonance_power: 2.0 * line.frequency,
                eta_sq,
                strength: c0 * c0 * eta_sq * tau / (8.0 * target_gamma * r.powi(6)),
            });
        }
    }
    Ok(out)
}

/// Power-swept zero-field spectrum: locking baseline exp(−τ/T₁ρ(Ω)) times the
/// target-induced leakage of every member.
pub fn zf_spectrum(
    sys: &TargetSpinSystem,
    members: &[EnsembleMember],
    channels: &RelaxationChannels,
    tau: f64,
    axis: &[f64],
    opts: &ZfOptions,
) -> Result<Spectrum> {
    if axis.is_empty() {
        return Err(Error::invalid("spectrum axis is empty"));
    }
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("lock duration must be positive, got {tau}")));
    }
    if !(opts.fwhm > 0.0) {
        return Err(Error::invalid("lineshape fwhm must be positive"));
    }
    channels.validate()?;
    let baseline: Vec<f64> = axis.iter().map(|&w| channels.nv_t1rho.survival(w, tau)).collect();
    let mut values = match opts.mode {
        SynthesisMode::Fast => {
            let gamma = channels
                .target_gamma
                .ok_or_else(|| Error::invalid("fast synthesis needs target_gamma"))?;
            let lines = zf_lines(sys, members, gamma, tau, opts)?;
            let mut exponent: Vec<f64> = axis
                .iter()
                .map(|&w| {
                    lines
                        .iter()
                        .map(|l| l.strength * gaussian(w, l.resonance_power, opts.fwhm))
                        .sum()
                })
                .collect();
            if let Some(c) = opts.contrast {
                if !(c > 0.0 && c < 1.0) {
                    return Err(Error::invalid("contrast must lie in (0, 1)"));
                }
                let peak = exponent.iter().cloned().fold(0.0, f64::max);
                if peak > 0.0 {
                    let k = -(1.0 - c).ln() / peak;
                    exponent.iter_mut().for_each(|e| *e *= k);
                }
            }
            baseline.iter().zip(&exponent).map(|(b, e)| b * (-e).exp()).collect::<Vec<f64>>()
        }
        SynthesisMode::Exact => {
            if opts.contrast.is_some() {
                return Err(Error::invalid("contrast rescaling applies to fast synthesis only"));
            }
            let mut pl = baseline.clone();
            for m in members {
                let coupling = DipolarCoupling::new(m.position).with_constant(opts.coupling_constant);
                let mut sim = FlipFlopSimulator::new(
                    &NvCenter::default(),
                    &member_system(sys, m),
                    &coupling,
                    opts.nv_axis,
                    channels,
                )?;
                if let Some(p0) = opts.pulse_power {
                    sim = sim.with_pulse_power(p0);
                }
                let p = sim.sweep(axis, tau)?;
                for ((v, b), pk) in pl.iter_mut().zip(&baseline).zip(p) {
                    *v *= (1.0 - pk) / b;
                }
            }
            pl
        }
    };
    for (v, &w) in values.iter_mut().zip(axis) {
        for n in &opts.nuisance {
            *v *= 1.0 - n.profile(w);
        }
    }
    Spectrum::new(axis.to_vec(), values, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeerOptions {
    /// Probe lineshape FWHM, MHz.
    pub fwhm: f64,
    /// Deepest fractional dip of the synthesized spectrum.
    pub contrast: f64,
    pub nv_axis: Vector3<f64>,
}

impl Default for DeerOptions {
    fn default() -> Self {
        Self {
            fwhm: 8.0,
            contrast: 0.03,
            nv_axis: Vector3::z(),
        }
    }
}

/// Lines weaker than this fraction of the strongest are treated as forbidden.
pub const ALLOWED_FRACTION: f64 = 1e-2;

/// (frequency, electron transverse weight) of every allowed target transition
/// in a field of `field_gauss` along the NV axis, tensor in `orientation`.
pub fn deer_lines(sys: &TargetSpinSystem, orientation: EulerAngles, field_gauss: f64) -> Result<Vec<(f64, f64)>> {
    let s = sys.clone().with_hyperfine(sys.hyperfine.oriented(orientation));
    let h = s.hamiltonian_in_field(Vector3::new(0.0, 0.0, field_gauss))?;
    let table = transition_table(&diagonalize(&h)?, &s.electron_operators());
    let lines = table.lines();
    let weights: Vec<f64> = lines.iter().map(|l| table.line_transverse_weight(l)).collect();
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    Ok(lines
        .iter()
        .zip(weights)
        .filter(|(_, w)| *w > ALLOWED_FRACTION * wmax)
        .map(|(l, w)| (l.frequency, w))
        .collect())
}

/// Frequency-swept DEER spectrum. Each member contributes its allowed lines
/// weighted by the secular zz coupling b_z²/r⁶; the sum is scaled to the
/// requested contrast.
pub fn deer_spectrum(
    sys: &TargetSpinSystem,
    members: &[EnsembleMember],
    field_gauss: f64,
    axis: &[f64],
    opts: &DeerOptions,
) -> Result<Spectrum> {
    if !(field_gauss > 0.0) {
        return Err(Error::invalid("DEER needs a positive field"));
    }
    if axis.is_empty() {
        return Err(Error::invalid("spectrum axis is empty"));
    }
    let mut dip = vec![0.0; axis.len()];
    for m in members {
        let bz = angular_factor(&m.position, &opts.nv_axis).z;
        let amp = bz * bz / m.position.norm().powi(6);
        for (f, w) in deer_lines(sys, m.orientation, field_gauss)? {
            for (d, &x) in dip.iter_mut().zip(axis) {
                *d += amp * w * gaussian(x, f, opts.fwhm);
            }
        }
    }
    let peak = dip.iter().cloned().fold(0.0, f64::max);
    let k = if peak > 0.0 { opts.contrast / peak } else { 0.0 };
    Spectrum::new(axis.to_vec(), dip.iter().map(|d| 1.0 - k * d).collect(), None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShoulderShape {
    #[default]
    HalfGaussian,
    HalfLorentzian,
}

/// Dense surface bath of free-radical-like spins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundModel {
    /// nm⁻².
    pub areal_density: f64,
    pub g_factor: f64,
    /// MHz.
    pub correlation_linewidth: f64,
    /// Distance from the NV to the bath plane, nm.
    pub depth: f64,
    pub eta_sq: f64,
    pub shoulder: ShoulderShape,
}

impl Default for BackgroundModel {
    fn default() -> Self {
        Self {
            areal_density: 0.01,
            g_factor: 2.0023,
            correlation_linewidth: 40.0,
            depth: 8.0,
            eta_sq: 1.0,
            shoulder: ShoulderShape::HalfGaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundMode {
    Deer,
    Zf,
}

impl BackgroundModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("areal_density", self.areal_density),
            ("g_factor", self.g_factor),
            ("correlation_linewidth", self.correlation_linewidth),
            ("depth", self.depth),
            ("eta_sq", self.eta_sq),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("background {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Line center g·μ_B·B/h, MHz.
    pub fn center(&self, field_gauss: f64) -> f64 {
        self.g_factor * BOHR_MHZ_PER_GAUSS * field_gauss
    }

    /// Plane-integrated strength πσC₀²η²τ/(16Γd⁴) with Γ = π·linewidth.
    pub fn amplitude(&self, tau: f64) -> f64 {
        let c0 = TAU * DIPOLAR_CONSTANT;
        let gamma = PI * self.correlation_linewidth;
        PI * self.areal_density * c0 * c0 * self.eta_sq * tau / (16.0 * gamma * self.depth.powi(4))
    }
}

/// Multiplicative PL factor exp(−a·shape(x)) of the bath on `axis`. DEER gives
/// a broad line at the free-radical Larmor frequency; zero field collapses it
/// into a monotone shoulder starting at zero drive power.
pub fn background_lines(
    model: &BackgroundModel,
    mode: BackgroundMode,
    field_gauss: f64,
    tau: f64,
    axis: &[f64],
) -> Result<Spectrum> {
    model.validate()?;
    let a = model.amplitude(tau);
    let w = model.correlation_linewidth;
    let shape = |x: f64| match mode {
        BackgroundMode::Deer => gaussian(x, model.center(field_gauss), w),
        BackgroundMode::Zf if x < 0.0 => 0.0,
        BackgroundMode::Zf => match model.shoulder {
            ShoulderShape::HalfGaussian => gaussian(x, 0.0, w),
            ShoulderShape::HalfLorentzian => 1.0 / (1.0 + (2.0 * x / w).powi(2)),
        },
    };
    Spectrum::new(axis.to_vec(), axis.iter().map(|&x| (-a * shape(x)).exp()).collect(), None)
}
