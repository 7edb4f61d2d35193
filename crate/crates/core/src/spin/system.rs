use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::operators::{spin_operators, SpinOperators};
use super::species::SpinSpecies;
use super::tensor::HyperfineTensor;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

/// Largest joint Hilbert dimension any simulation will build.
pub const MAX_DIM: usize = 64;

/// Electron spin hyperfine-coupled to one nucleus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpinSystem {
    pub electron: SpinSpecies,
    pub nucleus: SpinSpecies,
    pub hyperfine: HyperfineTensor,
    /// Nuclear quadrupole coupling P (MHz) entering as P·(I_z'² − I(I+1)/3)
    /// along the hyperfine principal axis. Zero for I = 1/2.
    #[serde(default)]
    pub quadrupole: f64,
}

impl TargetSpinSystem {
    pub fn new(electron: SpinSpecies, nucleus: SpinSpecies, hyperfine: HyperfineTensor) -> Self {
        Self {
            electron,
            nucleus,
            hyperfine,
            quadrupole: 0.0,
        }
    }

    /// ¹⁵N P1 center with literature hyperfine values A⊥ = 114, A∥ = 159.9 MHz.
    pub fn p1_n15() -> Self {
        Self::new(
            SpinSpecies::electron(),
            SpinSpecies::nitrogen15(),
            HyperfineTensor::axial(114.0, 159.9),
        )
    }

    /// ¹⁴N P1 center, A⊥ = 81.3, A∥ = 114.0 MHz, quadrupole left at zero.
    pub fn p1_n14() -> Self {
        Self::new(
            SpinSpecies::electron(),
            SpinSpecies::nitrogen14(),
            HyperfineTensor::axial(81.3, 114.0),
        )
    }

    /// ¹⁵N nitroxide radical with A = diag(23.2, 23.2, 144.4) MHz.
    pub fn nitroxide_n15() -> Self {
        Self::new(
            SpinSpecies::electron(),
            SpinSpecies::nitrogen15(),
            HyperfineTensor::axial(23.2, 144.4),
        )
    }

    pub fn with_hyperfine(mut self, hyperfine: HyperfineTensor) -> Self {
        self.hyperfine = hyperfine;
        self
    }

    pub fn dim(&self) -> usize {
        self.electron.dim() * self.nucleus.dim()
    }

    fn checked_dim(&self) -> Result<usize> {
        let dim = self.dim();
        if dim > MAX_DIM {
            return Err(Error::DimensionOverflow {
                dim,
                limit: MAX_DIM,
            });
        }
        Ok(dim)
    }

    /// Electron operators S ⊗ 1 on the joint space.
    pub fn electron_operators(&self) -> SpinOperators {
        spin_operators(&self.electron).embed(1, self.nucleus.dim())
    }

    /// Nuclear operators 1 ⊗ I on the joint space.
    pub fn nuclear_operators(&self) -> SpinOperators {
        spin_operators(&self.nucleus).embed(self.electron.dim(), 1)
    }

    /// Zero-field Hamiltonian plus electron and nuclear Zeeman terms
    /// −γ B·S − γₙ B·I for a static field in gauss.
    pub fn hamiltonian_in_field(&self, field_gauss: Vector3<f64>) -> Result<CMatrix> {
        let mut h = hyperfine_hamiltonian(self, true)?;
        let b = [field_gauss.x, field_gauss.y, field_gauss.z];
        let s = self.electron_operators();
        let i = self.nuclear_operators();
        h -= s.project(&b) * c(self.electron.gyromagnetic_ratio);
        h -= i.project(&b) * c(self.nucleus.gyromagnetic_ratio);
        Ok(h)
    }
}

/// H = Σ_ab A_ab S_a ⊗ I_b (+ quadrupole), in MHz. With `lab_frame` the
/// tensor is rotated by its orientation, otherwise the principal frame is used.
pub fn hyperfine_hamiltonian(sys: &TargetSpinSystem, lab_frame: bool) -> Result<CMatrix> {
    let dim = sys.checked_dim()?;
    let a = if lab_frame {
        sys.hyperfine.lab_matrix()
    } else {
        sys.hyperfine.principal_matrix()
    };
    let s = spin_operators(&sys.electron);
    let i = spin_operators(&sys.nucleus);
    let mut h = CMatrix::zeros(dim, dim);
    for (ai, sa) in s.components().into_iter().enumerate() {
        for (bi, ib) in i.components().into_iter().enumerate() {
            let coeff = a[(ai, bi)];
            if coeff != 0.0 {
                h += sa.kronecker(ib) * c(coeff);
            }
        }
    }
    if sys.quadrupole != 0.0 && sys.nucleus.dim() > 2 {
        let axis = if lab_frame {
            sys.hyperfine.orientation.principal_axis()
        } else {
            Vector3::z()
        };
        let iz = i.project(&[axis.x, axis.y, axis.z]);
        let n = sys.nucleus.dim();
        let ii = sys.nucleus.spin() * (sys.nucleus.spin() + 1.0);
        let q = (&iz * &iz - CMatrix::identity(n, n) * c(ii / 3.0)) * c(sys.quadrupole);
        h += CMatrix::identity(sys.electron.dim(), sys.electron.dim()).kronecker(&q);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_deviation, max_abs, trace};
    use crate::spin::diagonalize;

    fn energies(h: &CMatrix) -> Vec<f64> {
        diagonalize(h).unwrap().energies
    }

    #[test]
    fn zero_coupling_gives_zero_matrix() {
        let sys = TargetSpinSystem::p1_n15().with_hyperfine(HyperfineTensor::diagonal(0.0, 0.0, 0.0));
        let h = hyperfine_hamiltonian(&sys, true).unwrap();
        assert_eq!(max_abs(&h), 0.0);
    }

    #[test]
    fn p1_n15_spectrum() {
        let h = hyperfine_hamiltonian(&TargetSpinSystem::p1_n15(), true).unwrap();
        assert!(hermiticity_deviation(&h) < 1e-12);
        assert!(trace(&h).norm() < 1e-9);
        let e = energies(&h);
        let want = [-96.975, 17.025, 39.975, 39.975];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn isotropic_coupling_is_singlet_triplet() {
        let a = 7.3;
        let sys = TargetSpinSystem::p1_n15().with_hyperfine(HyperfineTensor::diagonal(a, a, a));
        let e = energies(&hyperfine_hamiltonian(&sys, false).unwrap());
        assert!((e[0] + 0.75 * a).abs() < 1e-12);
        for x in &e[1..] {
            assert!((x - 0.25 * a).abs() < 1e-12);
        }
    }

    #[test]
    fn n14_with_quadrupole_stays_traceless() {
        let mut sys = TargetSpinSystem::p1_n14();
        sys.quadrupole = -3.97;
        let h = hyperfine_hamiltonian(&sys, true).unwrap();
        assert_eq!(h.nrows(), 6);
        assert!(trace(&h).norm() < 1e-9);
    }
}
