use nalgebra::Vector3;
use rayon::prelude::*;

use super::dipolar::DipolarCoupling;
use super::sequence::{PulseSequence, RelaxationChannels, SequenceEngine, TargetCoupling};
use crate::error::Result;
use crate::nv::NvCenter;
use crate::spin::TargetSpinSystem;

/// Joint NV–target spin-lock simulation, reusable across drive powers.
#[derive(Debug, Clone)]
pub struct FlipFlopSimulator {
    engine: SequenceEngine,
    pulse_power: Option<f64>,
}

impl FlipFlopSimulator {
    pub fn new(
        nv: &NvCenter,
        sys: &TargetSpinSystem,
        coupling: &DipolarCoupling,
        nv_axis: Vector3<f64>,
        channels: &RelaxationChannels,
    ) -> Result<Self> {
        nv.validate()?;
        let target = TargetCoupling {
            system: sys.clone(),
            coupling: *coupling,
            nv_axis,
        };
        Ok(Self {
            engine: SequenceEngine::with_target(channels, &target)?,
            pulse_power: None,
        })
    }

    /// Rabi frequency of the two π/2 pulses; by default they use the lock power.
    pub fn with_pulse_power(mut self, pulse_power: f64) -> Self {
        self.pulse_power = Some(pulse_power);
        self
    }

    /// Population P that left the locked state after a lock of `tau` μs at Ω.
    pub fn transfer(&self, omega: f64, tau: f64) -> Result<f64> {
        let seq = PulseSequence::spin_lock(self.pulse_power.unwrap_or(omega), omega, tau);
        Ok(1.0 - self.engine.run(&seq)?.pl)
    }

    /// `transfer` over many powers, evaluated in parallel. Output order follows input.
    pub fn sweep(&self, omegas: &[f64], tau: f64) -> Result<Vec<f64>> {
        omegas.par_iter().map(|&w| self.transfer(w, tau)).collect()
    }
}

/// Locked-state leakage P for a single target with the NV axis along z.
pub fn flip_flop_transfer(
    nv: &NvCenter,
    sys: &TargetSpinSystem,
    coupling: &DipolarCoupling,
    omega: f64,
    tau: f64,
    channels: &RelaxationChannels,
) -> Result<f64> {
    FlipFlopSimulator::new(nv, sys, coupling, Vector3::z(), channels)?.transfer(omega, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nv::T1rhoModel;

    fn channels() -> RelaxationChannels {
        RelaxationChannels {
            nv_t1rho: T1rhoModel::Constant(70.0),
            nv_t2_star: Some(0.1),
            target_gamma: Some(10.0),
        }
    }

    fn on_axis(r: f64) -> DipolarCoupling {
        DipolarCoupling::new(Vector3::new(0.3, 0.4, 1.0).normalize() * r)
    }

    #[test]
    fn decoupled_limit_is_t1rho_only() {
        let nv = NvCenter::default();
        let c = on_axis(5.0).with_constant(0.0);
        let p = flip_flop_transfer(&nv, &TargetSpinSystem::p1_n15(), &c, 45.9, 10.0, &channels()).unwrap();
        assert!((p - (1.0 - (-10.0f64 / 70.0).exp())).abs() < 1e-9);
    }

    #[test]
    fn far_detuned_matches_decoupled() {
        let nv = NvCenter::default();
        let p = flip_flop_transfer(&nv, &TargetSpinSystem::p1_n15(), &on_axis(5.0), 600.0, 10.0, &channels()).unwrap();
        assert!((p - (1.0 - (-10.0f64 / 70.0).exp())).abs() < 1e-3, "{p}");
    }

    #[test]
    fn peak_at_twice_lowest_transition() {
        let nv = NvCenter::default();
        let sim = FlipFlopSimulator::new(&nv, &TargetSpinSystem::p1_n15(), &on_axis(5.0), Vector3::z(), &channels()).unwrap();
        let omegas: Vec<f64> = (0..=30).map(|k| 30.0 + k as f64).collect();
        let p = sim.sweep(&omegas, 10.0).unwrap();
        let (k, _) = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((omegas[k] - 45.9).abs() <= 3.2, "peak at {}", omegas[k]);
    }
}
