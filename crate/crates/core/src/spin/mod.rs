//! Spin operator algebra, hyperfine Hamiltonians, exact diagonalization and
//! zero-field transition tables.

mod eigen;
mod operators;
mod species;
mod system;
mod tensor;
mod transitions;

pub use eigen::{analytic_half_half_eigensystem, diagonalize, EigenSystem, DEGENERACY_TOL};
pub use operators::{spin_operators, SpinOperators};
pub(crate) use operators::spin_operators_for;
pub use species::{SpinSpecies, ELECTRON_GAMMA, N14_GAMMA, N15_GAMMA};
pub use system::{hyperfine_hamiltonian, TargetSpinSystem, MAX_DIM};
pub use tensor::{rotate_tensor, EulerAngles, HyperfineTensor};
pub use transitions::{
    transition_table, zero_field_table, SpectralLine, TransitionRow, TransitionTable,
    FORBIDDEN_TOL,
};
