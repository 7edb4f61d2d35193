use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, hermiticity_deviation, outer, trace, CMatrix};

/// Hermitian, unit-trace density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub const TRACE_TOL: f64 = 1e-10;

    pub fn new(matrix: CMatrix) -> Result<Self> {
        crate::linalg::ensure_square(&matrix)?;
        let dev = hermiticity_deviation(&matrix);
        if dev > 1e-10 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = trace(&matrix);
        if (tr - c(1.0)).norm() > Self::TRACE_TOL {
            return Err(Error::invalid(format!("density matrix trace {tr} is not 1")));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_raw(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn pure(state: &[Complex64]) -> Result<Self> {
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let v: Vec<Complex64> = state.iter().map(|z| z / norm).collect();
        Self::new(outer(&v, &v))
    }

    /// |k⟩⟨k| in a `dim`-dimensional space.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = c(1.0);
        Self { matrix: m }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim) * c(1.0 / dim as f64),
        }
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Self {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        trace(&self.matrix)
    }

    /// Tr(Pρ) for a projector or observable P.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        trace(&(op * &self.matrix)).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * c(0.5);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Hermitian, unit trace, and positive semidefinite within tolerance.
    pub fn check_physical(&self, tol: f64) -> Result<()> {
        let dev = hermiticity_deviation(&self.matrix);
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev });
        }
        if (self.trace() - c(1.0)).norm() > tol {
            return Err(Error::invalid(format!("trace drifted to {}", self.trace())));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(Error::invalid(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }
}
