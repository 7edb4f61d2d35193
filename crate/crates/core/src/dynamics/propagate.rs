use crate::error::{Error, Result};
use crate::linalg::{c, liouvillian, outer, unitary, CMatrix, HermitianBasis};

use super::DensityMatrix;

/// Lindblad jump operators with rates in μs⁻¹.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dissipator {
    pub jumps: Vec<(CMatrix, f64)>,
}

impl Dissipator {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.iter().all(|(_, r)| *r == 0.0)
    }

    pub fn push(&mut self, op: CMatrix, rate: f64) {
        if rate > 0.0 && rate.is_finite() {
            self.jumps.push((op, rate));
        }
    }

    pub fn extend(&mut self, other: Dissipator) {
        self.jumps.extend(other.jumps);
    }

    /// Projector dephasing: every coherence between distinct projector
    /// blocks decays as exp(−rate·t), populations untouched.
    pub fn dephasing(projectors: Vec<CMatrix>, rate: f64) -> Self {
        let mut d = Self::none();
        for p in projectors {
            d.push(p, rate);
        }
        d
    }

    /// One-way decay out of `from` into each of `to`, with total rate `rate`
    /// split evenly, each operator embedded as `left ⊗ |to⟩⟨from| ⊗ right`.
    pub fn decay_out_of(
        from: &[num_complex::Complex64],
        to: &[&[num_complex::Complex64]],
        rate: f64,
        right: usize,
    ) -> Self {
        let mut d = Self::none();
        let id = CMatrix::identity(right, right);
        for target in to {
            d.push(outer(target, from).kronecker(&id), rate / to.len() as f64);
        }
        d
    }
}

/// Evolve ρ for `t` μs under H (MHz) and the given dissipator. Without jump
/// operators this is exact unitary conjugation; otherwise the Liouvillian is
/// exponentiated directly.
pub fn propagate(
    rho: &DensityMatrix,
    h: &CMatrix,
    t: f64,
    dissipator: &Dissipator,
) -> Result<DensityMatrix> {
    let n = rho.dim();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h.nrows(),
        });
    }
    if let Some((op, _)) = dissipator.jumps.iter().find(|(op, _)| op.nrows() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: op.nrows(),
        });
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("propagation time must be positive, got {t}")));
    }
    let out = if dissipator.is_empty() {
        let u = unitary(h, t);
        &u * rho.matrix() * u.adjoint()
    } else {
        let basis = HermitianBasis::new(n);
        let gen = basis.real_superoperator(&liouvillian(h, &dissipator.jumps)) * t;
        basis.operator(&(gen.exp() * basis.coordinates(rho.matrix())))
    };
    // remove rounding asymmetry
    Ok(DensityMatrix::from_raw((&out + out.adjoint()) * c(0.5)))
}
