//! Density-matrix propagation, pulse sequences and the joint NV–target
//! spin-lock simulation.

mod density;
mod dipolar;
mod flipflop;
mod propagate;
mod rabi;
mod sequence;

pub use density::DensityMatrix;
pub use dipolar::{angular_factor, coupling_vector, dipolar_hamiltonian, DipolarCoupling, DIPOLAR_CONSTANT};
pub use flipflop::{flip_flop_transfer, FlipFlopSimulator};
pub use propagate::{propagate, Dissipator};
pub use rabi::{fit_decay, fit_rabi, rabi_trace, spin_lock_trace, DecayFit, RabiFit, RabiModulation};
pub use sequence::{
    half_pi_duration, run_sequence, unlock_and_read, PulseSequence, RelaxationChannels, Segment,
    SequenceEngine, SequenceOutcome, TargetCoupling,
};
