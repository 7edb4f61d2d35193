use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::dipolar::{dipolar_hamiltonian, DipolarCoupling};
use super::propagate::{propagate, Dissipator};
use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::nv::{dressed_basis, rotating_frame_hamiltonian, DriveField, DrivePhase, NvCenter, T1rhoModel};
use crate::spin::{diagonalize, TargetSpinSystem, MAX_DIM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationChannels {
    /// Locking relaxation of the NV dressed state.
    pub nv_t1rho: T1rhoModel,
    /// NV dephasing during free evolution, μs.
    pub nv_t2_star: Option<f64>,
    /// Target coherence decay rate Γ, μs⁻¹ (ordinary rate).
    pub target_gamma: Option<f64>,
}

impl RelaxationChannels {
    pub fn none() -> Self {
        Self {
            nv_t1rho: T1rhoModel::None,
            nv_t2_star: None,
            target_gamma: None,
        }
    }

    pub fn from_nv(nv: &NvCenter, target_gamma: Option<f64>) -> Self {
        Self {
            nv_t1rho: nv.t1_rho.clone(),
            nv_t2_star: Some(nv.t2_star),
            target_gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.nv_t1rho.validate()?;
        for (name, v) in [("nv_t2_star", self.nv_t2_star), ("target_gamma", self.target_gamma)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::invalid(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// Laser reset: NV to |0⟩⟨0|, target maximally mixed.
    PolarizeNv,
    MwPulse { drive: DriveField, duration: f64 },
    Wait { duration: f64 },
    /// Normalized PL = population of |0⟩.
    Readout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    segments: Vec<Segment>,
}

impl PulseSequence {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        match (segments.first(), segments.last()) {
            (Some(Segment::PolarizeNv), Some(Segment::Readout)) => {}
            _ => {
                return Err(Error::MalformedSequence(
                    "a sequence must start with polarize_nv and end with readout".into(),
                ))
            }
        }
        for s in &segments {
            let d = match s {
                Segment::MwPulse { drive, duration } => {
                    if !(drive.rabi_frequency >= 0.0) {
                        return Err(Error::MalformedSequence(format!(
                            "negative drive power {}",
                            drive.rabi_frequency
                        )));
                    }
                    *duration
                }
                Segment::Wait { duration } => *duration,
                _ => 0.0,
            };
            if !(d >= 0.0) || !d.is_finite() {
                return Err(Error::MalformedSequence(format!("invalid duration {d}")));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Polarize, x-phase drive for `duration`, read out.
    pub fn rabi(omega: f64, duration: f64) -> Self {
        Self {
            segments: vec![
                Segment::PolarizeNv,
                Segment::MwPulse {
                    drive: DriveField::resonant(omega, DrivePhase::X),
                    duration,
                },
                Segment::Readout,
            ],
        }
    }

    /// y π/2 at `pulse_power`, x lock at `lock_power` for `tau`, −y π/2, read out.
    pub fn spin_lock(pulse_power: f64, lock_power: f64, tau: f64) -> Self {
        let t_half = half_pi_duration(pulse_power);
        Self {
            segments: vec![
                Segment::PolarizeNv,
                Segment::MwPulse {
                    drive: DriveField::resonant(pulse_power, DrivePhase::Y),
                    duration: t_half,
                },
                Segment::MwPulse {
                    drive: DriveField::resonant(lock_power, DrivePhase::X),
                    duration: tau,
                },
                Segment::MwPulse {
                    drive: DriveField::resonant(pulse_power, DrivePhase::MinusY),
                    duration: t_half,
                },
                Segment::Readout,
            ],
        }
    }
}

/// t_{π/2} = 1/(4Ω₀) μs for Ω₀ in MHz.
pub fn half_pi_duration(pulse_power: f64) -> f64 {
    0.25 / pulse_power
}

/// A single target electron–nuclear system dipolar-coupled to the NV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCoupling {
    pub system: TargetSpinSystem,
    pub coupling: DipolarCoupling,
    pub nv_axis: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct SequenceOutcome {
    pub pl: f64,
    pub state: DensityMatrix,
}

/// Propagates pulse sequences on the NV (⊗ target) space with
/// piecewise-constant Hamiltonians.
#[derive(Debug, Clone)]
pub struct SequenceEngine {
    channels: RelaxationChannels,
    target_dim: usize,
    h_static: CMatrix,
    target_dephasing: Dissipator,
    nv_dephasing: Dissipator,
    zero_projector: CMatrix,
}

impl SequenceEngine {
    pub fn nv_only(channels: &RelaxationChannels) -> Result<Self> {
        Self::build(channels, None)
    }

    pub fn with_target(channels: &RelaxationChannels, target: &TargetCoupling) -> Result<Self> {
        Self::build(channels, Some(target))
    }

    fn build(channels: &RelaxationChannels, target: Option<&TargetCoupling>) -> Result<Self> {
        channels.validate()?;
        let target_dim = target.map_or(1, |t| t.system.dim());
        let dim = 3 * target_dim;
        if dim > MAX_DIM {
            return Err(Error::DimensionOverflow { dim, limit: MAX_DIM });
        }
        let id_nv = CMatrix::identity(3, 3);
        let id_t = CMatrix::identity(target_dim, target_dim);
        let mut h_static = CMatrix::zeros(dim, dim);
        let mut target_dephasing = Dissipator::none();
        if let Some(t) = target {
            let h_t = crate::spin::hyperfine_hamiltonian(&t.system, true)?;
            h_static += id_nv.kronecker(&h_t);
            h_static += dipolar_hamiltonian(&t.coupling, &t.nv_axis, &t.system)?;
            if let Some(gamma) = channels.target_gamma {
                let eig = diagonalize(&h_t)?;
                let projectors = eig
                    .cluster_projectors()
                    .into_iter()
                    .map(|p| id_nv.kronecker(&p))
                    .collect();
                target_dephasing = Dissipator::dephasing(projectors, gamma);
            }
        }
        let mut nv_dephasing = Dissipator::none();
        if let Some(t2) = channels.nv_t2_star {
            let projectors = (0..3)
                .map(|k| {
                    let mut p = CMatrix::zeros(3, 3);
                    p[(k, k)] = c(1.0);
                    p.kronecker(&id_t)
                })
                .collect();
            nv_dephasing = Dissipator::dephasing(projectors, 1.0 / t2);
        }
        let mut p0 = CMatrix::zeros(3, 3);
        p0[(1, 1)] = c(1.0);
        Ok(Self {
            channels: channels.clone(),
            target_dim,
            h_static,
            target_dephasing,
            nv_dephasing,
            zero_projector: p0.kronecker(&id_t),
        })
    }

    pub fn dim(&self) -> usize {
        3 * self.target_dim
    }

    /// NV in |0⟩, target maximally mixed.
    pub fn polarized_state(&self) -> DensityMatrix {
        DensityMatrix::basis(3, 1).tensor(&DensityMatrix::maximally_mixed(self.target_dim))
    }

    /// Population of the NV |0⟩ level.
    pub fn readout(&self, rho: &DensityMatrix) -> f64 {
        rho.expectation(&self.zero_projector)
    }

    pub fn apply(&self, rho: &DensityMatrix, segment: &Segment) -> Result<DensityMatrix> {
        let id_t = CMatrix::identity(self.target_dim, self.target_dim);
        match segment {
            Segment::PolarizeNv => Ok(self.polarized_state()),
            Segment::Readout => Ok(rho.clone()),
            Segment::MwPulse { drive, duration } => {
                if *duration == 0.0 {
                    return Ok(rho.clone());
                }
                let h = rotating_frame_hamiltonian(drive).kronecker(&id_t) + &self.h_static;
                let mut d = self.target_dephasing.clone();
                if matches!(drive.phase, DrivePhase::X) && drive.rabi_frequency > 0.0 {
                    let rate = self.channels.nv_t1rho.rate(drive.rabi_frequency);
                    if rate > 0.0 {
                        let b = dressed_basis(drive.rabi_frequency)?;
                        d.extend(Dissipator::decay_out_of(
                            &b.minus,
                            &[&b.zero[..], &b.plus[..]],
                            rate,
                            self.target_dim,
                        ));
                    }
                }
                propagate(rho, &h, *duration, &d)
            }
            Segment::Wait { duration } => {
                if *duration == 0.0 {
                    return Ok(rho.clone());
                }
                let mut d = self.target_dephasing.clone();
                d.extend(self.nv_dephasing.clone());
                propagate(rho, &self.h_static, *duration, &d)
            }
        }
    }

    pub fn run(&self, seq: &PulseSequence) -> Result<SequenceOutcome> {
        let mut rho = self.polarized_state();
        let mut pl = f64::NAN;
        for s in seq.segments() {
            rho = self.apply(&rho, s)?;
            if matches!(s, Segment::Readout) {
                pl = self.readout(&rho);
            }
        }
        Ok(SequenceOutcome { pl, state: rho })
    }
}

/// Normalized PL of an NV-only sequence.
pub fn run_sequence(seq: &PulseSequence, _nv: &NvCenter, channels: &RelaxationChannels) -> Result<f64> {
    Ok(SequenceEngine::nv_only(channels)?.run(seq)?.pl)
}

/// Apply the closing −y π/2 pulse to an NV state and read out.
pub fn unlock_and_read(rho: &DensityMatrix, pulse_power: f64) -> Result<f64> {
    let engine = SequenceEngine::nv_only(&RelaxationChannels::none())?;
    let seg = Segment::MwPulse {
        drive: DriveField::resonant(pulse_power, DrivePhase::MinusY),
        duration: half_pi_duration(pulse_power),
    };
    Ok(engine.readout(&engine.apply(rho, &seg)?))
}
