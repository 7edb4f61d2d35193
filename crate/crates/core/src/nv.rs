//! NV-center drive Hamiltonians in the rotating frame, the dressed-state
//! basis, the power-matching resonance condition and linewidth estimates.
//!
//! The rotating frame is obtained with exp(i f S_z² t) and terms oscillating
//! near 2D are dropped. For phases x, y and −y the drive reduces to
//! (Ω/2)S_x, (Ω/2)S_yy and −(Ω/2)S_yy, where S_yy differs from S_y by the
//! sign of its ⟨0|·|−1⟩ block.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, I};
use crate::spin::{spin_operators_for, SpinOperators, TransitionTable};

pub const NV_ZERO_FIELD_SPLITTING: f64 = 2870.0;
pub const NV_GAMMA: f64 = -2.803;
/// Drive powers above this exceed what shaped high-power pulses can reach.
pub const MAX_RABI_MHZ: f64 = 1000.0;

/// Spin-locking relaxation time, optionally tabulated against drive power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum T1rhoModel {
    /// No locking relaxation.
    None,
    Constant(f64),
    /// (Ω in MHz, T₁ρ in μs) points, linearly interpolated and clamped at the ends.
    Table(Vec<(f64, f64)>),
}

impl T1rhoModel {
    pub fn at(&self, omega: f64) -> f64 {
        match self {
            T1rhoModel::None => f64::INFINITY,
            T1rhoModel::Constant(t) => *t,
            T1rhoModel::Table(points) => interpolate(points, omega),
        }
    }

    pub fn rate(&self, omega: f64) -> f64 {
        1.0 / self.at(omega)
    }

    /// Locked-state survival exp(−τ/T₁ρ(Ω)).
    pub fn survival(&self, omega: f64, tau: f64) -> f64 {
        (-tau * self.rate(omega)).exp()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            T1rhoModel::None => Ok(()),
            T1rhoModel::Constant(t) if *t > 0.0 => Ok(()),
            T1rhoModel::Constant(t) => Err(Error::invalid(format!("T1rho must be positive, got {t}"))),
            T1rhoModel::Table(points) => {
                if points.is_empty() {
                    return Err(Error::invalid("T1rho table is empty"));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::invalid("T1rho table powers must be strictly increasing"));
                }
                if points.iter().any(|p| p.1 <= 0.0) {
                    return Err(Error::invalid("T1rho table times must be positive"));
                }
                Ok(())
            }
        }
    }
}

fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let k = points.partition_point(|p| p.0 <= x);
    let (x0, y0) = points[k - 1];
    let (x1, y1) = points[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NvCenter {
    /// D in MHz.
    pub zero_field_splitting: f64,
    /// MHz per gauss, signed.
    pub gyromagnetic_ratio: f64,
    /// μs.
    pub t2_star: f64,
    pub t1_rho: T1rhoModel,
}

impl Default for NvCenter {
    fn default() -> Self {
        Self {
            zero_field_splitting: NV_ZERO_FIELD_SPLITTING,
            gyromagnetic_ratio: NV_GAMMA,
            t2_star: 0.1,
            t1_rho: T1rhoModel::Constant(70.0),
        }
    }
}

impl NvCenter {
    pub fn validate(&self) -> Result<()> {
        if self.zero_field_splitting <= 0.0 {
            return Err(Error::invalid("zero-field splitting must be positive"));
        }
        if self.t2_star <= 0.0 {
            return Err(Error::invalid("T2* must be positive"));
        }
        self.t1_rho.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivePhase {
    X,
    Y,
    MinusY,
    Radians(f64),
}

impl DrivePhase {
    pub fn radians(self) -> f64 {
        match self {
            DrivePhase::X => 0.0,
            DrivePhase::Y => FRAC_PI_2,
            DrivePhase::MinusY => -FRAC_PI_2,
            DrivePhase::Radians(r) => r,
        }
    }
}

impl std::str::FromStr for DrivePhase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "+x" => Ok(DrivePhase::X),
            "y" | "+y" => Ok(DrivePhase::Y),
            "-y" | "minus_y" => Ok(DrivePhase::MinusY),
            other => other
                .parse::<f64>()
                .map(DrivePhase::Radians)
                .map_err(|_| Error::invalid(format!("unknown drive phase `{other}`"))),
        }
    }
}

/// Microwave drive: Rabi power Ω (MHz), phase, and detuning D − f (MHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveField {
    pub rabi_frequency: f64,
    pub phase: DrivePhase,
    #[serde(default)]
    pub detuning: f64,
}

impl DriveField {
    pub fn resonant(rabi_frequency: f64, phase: DrivePhase) -> Self {
        Self {
            rabi_frequency,
            phase,
            detuning: 0.0,
        }
    }

    pub fn with_carrier(rabi_frequency: f64, phase: DrivePhase, carrier: f64, nv: &NvCenter) -> Self {
        Self {
            rabi_frequency,
            phase,
            detuning: nv.zero_field_splitting - carrier,
        }
    }
}

/// Spin-1 operators of the NV electron.
pub fn nv_spin_operators() -> SpinOperators {
    spin_operators_for(1.0)
}

/// The rotating-frame y-quadrature operator of the zero-field drive.
pub fn syy() -> CMatrix {
    let r = FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    CMatrix::from_row_slice(
        3,
        3,
        &[z, -I * r, z, I * r, z, I * r, z, -I * r, z],
    )
}

/// (Ω/2√2)·[[0, e^{−iφ}, 0], [e^{iφ}, 0, e^{iφ}], [0, e^{−iφ}, 0]] + δ S_z².
pub fn rotating_frame_hamiltonian(drive: &DriveField) -> CMatrix {
    let phi = drive.phase.radians();
    let k = drive.rabi_frequency / (2.0 * std::f64::consts::SQRT_2);
    let em = Complex64::from_polar(k, -phi);
    let ep = Complex64::from_polar(k, phi);
    let z = Complex64::new(0.0, 0.0);
    let mut h = CMatrix::from_row_slice(3, 3, &[z, em, z, ep, z, ep, z, em, z]);
    if drive.detuning != 0.0 {
        h[(0, 0)] += c(drive.detuning);
        h[(2, 2)] += c(drive.detuning);
    }
    h
}

/// Eigenstates of (Ω/2)S_x in the {|1⟩, |0⟩, |−1⟩} basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DressedBasis {
    pub omega: f64,
    pub minus: [Complex64; 3],
    pub zero: [Complex64; 3],
    pub plus: [Complex64; 3],
    pub energies: [f64; 3],
}

impl DressedBasis {
    pub fn states(&self) -> [&[Complex64; 3]; 3] {
        [&self.minus, &self.zero, &self.plus]
    }
}

pub fn dressed_basis(omega: f64) -> Result<DressedBasis> {
    if !(omega > 0.0) {
        return Err(Error::invalid(format!(
            "dressed basis undefined for drive power {omega} MHz"
        )));
    }
    let h = FRAC_1_SQRT_2;
    Ok(DressedBasis {
        omega,
        minus: [c(0.5), c(-h), c(0.5)],
        zero: [c(-h), c(0.0), c(h)],
        plus: [c(0.5), c(h), c(0.5)],
        energies: [-omega / 2.0, 0.0, omega / 2.0],
    })
}

/// A drive power matching twice an observable target splitting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonancePower {
    pub omega: f64,
    pub transition_frequency: f64,
    /// Indices into the transition table rows.
    pub rows: Vec<usize>,
}

/// Ω = 2Δω for every distinct observable line.
pub fn resonance_powers(table: &TransitionTable) -> Vec<ResonancePower> {
    table
        .lines()
        .into_iter()
        .map(|line| ResonancePower {
            omega: 2.0 * line.frequency,
            transition_frequency: line.frequency,
            rows: line.rows,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinewidthBudget {
    /// 1/(πT₂*) in MHz.
    pub dephasing: f64,
    /// 2|γ|B in MHz, reported separately from the dephasing width.
    pub zeeman_splitting: f64,
}

pub fn linewidth_budget(nv: &NvCenter, target_t2_star: f64, residual_field_gauss: f64) -> LinewidthBudget {
    LinewidthBudget {
        dephasing: 1.0 / (std::f64::consts::PI * target_t2_star),
        zeeman_splitting: 2.0 * nv.gyromagnetic_ratio.abs() * residual_field_gauss.abs(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DriveWarning {
    AboveMaximum { omega: f64 },
    BelowLinewidth { omega: f64, linewidth: f64 },
}

impl std::fmt::Display for DriveWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DriveWarning::AboveMaximum { omega } => write!(
                f,
                "drive power {omega} MHz exceeds the {MAX_RABI_MHZ} MHz bound set by the zero-field splitting"
            ),
            DriveWarning::BelowLinewidth { omega, linewidth } => write!(
                f,
                "drive power {omega} MHz is below the dephasing linewidth {linewidth:.2} MHz"
            ),
        }
    }
}

pub fn drive_power_warnings(omega: f64, budget: &LinewidthBudget) -> Vec<DriveWarning> {
    let mut out = Vec::new();
    if omega > MAX_RABI_MHZ {
        out.push(DriveWarning::AboveMaximum { omega });
    }
    if omega < budget.dephasing {
        out.push(DriveWarning::BelowLinewidth {
            omega,
            linewidth: budget.dephasing,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, unitary};
    use crate::spin::{diagonalize, zero_field_table, HyperfineTensor, TargetSpinSystem};

    fn apply(m: &CMatrix, v: &[Complex64; 3]) -> [Complex64; 3] {
        let mut out = [c(0.0); 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| m[(i, j)] * v[j]).sum();
        }
        out
    }

    #[test]
    fn phase_x_is_half_sx() {
        let h = rotating_frame_hamiltonian(&DriveField::resonant(10.0, DrivePhase::X));
        let sx = nv_spin_operators().x * c(5.0);
        assert!(max_abs(&(h - sx)) < 1e-14);
    }

    #[test]
    fn phase_y_and_minus_y_use_syy() {
        let hy = rotating_frame_hamiltonian(&DriveField::resonant(10.0, DrivePhase::Y));
        let hmy = rotating_frame_hamiltonian(&DriveField::resonant(10.0, DrivePhase::MinusY));
        assert!(max_abs(&(hy - syy() * c(5.0))) < 1e-14);
        assert!(max_abs(&(hmy + syy() * c(5.0))) < 1e-14);
    }

    #[test]
    fn zero_power_gives_zero_matrix() {
        let h = rotating_frame_hamiltonian(&DriveField::resonant(0.0, DrivePhase::Y));
        assert_eq!(max_abs(&h), 0.0);
    }

    #[test]
    fn eigenvalues_at_148_mhz() {
        let h = rotating_frame_hamiltonian(&DriveField::resonant(148.0, DrivePhase::X));
        let e = diagonalize(&h).unwrap().energies;
        for (a, b) in e.iter().zip([-74.0, 0.0, 74.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn y_then_minus_y_composes_to_identity() {
        let hy = rotating_frame_hamiltonian(&DriveField::resonant(37.0, DrivePhase::Y));
        let hmy = rotating_frame_hamiltonian(&DriveField::resonant(37.0, DrivePhase::MinusY));
        let t = 0.0123;
        let u = unitary(&hmy, t) * unitary(&hy, t);
        assert!(max_abs(&(u - CMatrix::identity(3, 3))) < 1e-10);
    }

    #[test]
    fn detuning_adds_sz_squared() {
        let nv = NvCenter::default();
        let d = DriveField::with_carrier(0.0, DrivePhase::X, 2860.0, &nv);
        let h = rotating_frame_hamiltonian(&d);
        assert_eq!(h[(0, 0)], c(10.0));
        assert_eq!(h[(1, 1)], c(0.0));
        assert_eq!(h[(2, 2)], c(10.0));
    }

    #[test]
    fn dressed_states_are_eigenvectors() {
        for omega in [0.5, 45.9, 148.0, 396.0] {
            let b = dressed_basis(omega).unwrap();
            let h = rotating_frame_hamiltonian(&DriveField::resonant(omega, DrivePhase::X));
            for (state, e) in b.states().into_iter().zip(b.energies) {
                let hv = apply(&h, state);
                let res: f64 = hv.iter().zip(state).map(|(a, s)| (a - s * e).norm()).fold(0.0, f64::max);
                assert!(res < 1e-12);
            }
        }
    }

    #[test]
    fn dressed_zero_pattern_and_overlaps() {
        let b = dressed_basis(3.0).unwrap();
        let h = FRAC_1_SQRT_2;
        assert_eq!(b.zero, [c(-h), c(0.0), c(h)]);
        assert!((b.minus[1].norm_sqr() - 0.5).abs() < 1e-15);
        let states = b.states();
        for i in 0..3 {
            for j in 0..3 {
                let ov: Complex64 = states[i].iter().zip(states[j]).map(|(a, b)| a.conj() * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ov - c(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dressed_basis_requires_power() {
        assert!(dressed_basis(0.0).is_err());
    }

    #[test]
    fn resonance_powers_for_literature_p1() {
        let t = zero_field_table(&TargetSpinSystem::p1_n15()).unwrap();
        let omegas: Vec<f64> = resonance_powers(&t).iter().map(|r| r.omega).collect();
        for (a, b) in omegas.iter().zip([45.9, 228.0, 273.9]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn resonance_powers_for_fitted_p1() {
        let sys = TargetSpinSystem::p1_n15().with_hyperfine(HyperfineTensor::axial(110.7, 155.0));
        let omegas: Vec<f64> = resonance_powers(&zero_field_table(&sys).unwrap())
            .iter()
            .map(|r| r.omega)
            .collect();
        for (a, b) in omegas.iter().zip([44.3, 221.4, 265.7]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_table_gives_no_powers() {
        let t = TransitionTable { rows: vec![] };
        assert!(resonance_powers(&t).is_empty());
    }

    #[test]
    fn linewidth_numbers() {
        let nv = NvCenter::default();
        let b = linewidth_budget(&nv, 0.1, 0.41);
        assert!((b.dephasing - 3.1831).abs() < 1e-4);
        assert!((b.zeeman_splitting - 2.2985).abs() < 1e-4);
        assert!(linewidth_budget(&nv, f64::INFINITY, 0.0).dephasing == 0.0);
    }

    #[test]
    fn warnings() {
        let b = linewidth_budget(&NvCenter::default(), 0.1, 0.0);
        assert!(drive_power_warnings(148.0, &b).is_empty());
        assert_eq!(drive_power_warnings(1200.0, &b).len(), 1);
        assert!(matches!(drive_power_warnings(1.0, &b)[0], DriveWarning::BelowLinewidth { .. }));
    }

    #[test]
    fn t1rho_table_interpolates() {
        let m = T1rhoModel::Table(vec![(0.0, 50.0), (100.0, 70.0), (400.0, 40.0)]);
        assert_eq!(m.at(-5.0), 50.0);
        assert_eq!(m.at(50.0), 60.0);
        assert_eq!(m.at(250.0), 55.0);
        assert_eq!(m.at(900.0), 40.0);
        assert!(m.validate().is_ok());
        assert!(T1rhoModel::Table(vec![(1.0, 2.0), (1.0, 3.0)]).validate().is_err());
    }
}
