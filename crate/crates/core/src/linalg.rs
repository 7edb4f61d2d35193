//! Small dense complex linear algebra used throughout the simulator.
//!
//! Hilbert spaces here never exceed 64 dimensions, so everything is dense
//! `DMatrix<Complex64>`. Frequencies are ordinary (MHz) and times are in
//! microseconds; the factor 2π enters only in [`unitary`] and
//! [`liouvillian`].

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for f in factors {
        out = out.kronecker(*f);
    }
    out
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_deviation(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Outer product |a⟩⟨b|.
pub fn outer(a: &[Complex64], b: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

/// exp(−i 2π H t) for Hermitian `h` in MHz and `t` in μs, built from the
/// spectral decomposition so the result is unitary to machine precision.
pub fn unitary(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        eig.eigenvalues
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -TAU * e * t)),
    ));
    v * phases * v.adjoint()
}

/// Column-stacking vectorization: vec(ρ)[i + n j] = ρ[i, j].
pub fn vectorize(rho: &CMatrix) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &nalgebra::DVector<Complex64>, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// Lindblad generator acting on column-stacked density matrices:
/// dρ/dt = −i2π[H, ρ] + Σ γ (L ρ L† − ½{L†L, ρ}), rates in μs⁻¹.
pub fn liouvillian(h: &CMatrix, jumps: &[(CMatrix, f64)]) -> CMatrix {
    let n = h.nrows();
    let id = identity(n);
    // vec(AρB) = (Bᵀ ⊗ A) vec(ρ)
    let mut l = (kron(&id, h) - kron(&h.transpose(), &id)) * (-I * TAU);
    for (op, rate) in jumps {
        if *rate == 0.0 {
            continue;
        }
        let ldl = op.adjoint() * op;
        let term = kron(&op.conjugate(), op)
            - kron(&id, &ldl) * c(0.5)
            - kron(&ldl.transpose(), &id) * c(0.5);
        l += term * c(*rate);
    }
    l
}

/// Orthonormal Hermitian operator basis {E_m} with Tr(E_m E_n) = δ_mn.
/// Hermiticity-preserving superoperators are real in this basis.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    n: usize,
    // (row, col, entry) triples of each E_m
    elements: Vec<Vec<(usize, usize, Complex64)>>,
}

impl HermitianBasis {
    pub fn new(n: usize) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut elements = Vec::with_capacity(n * n);
        for k in 0..n {
            elements.push(vec![(k, k, c(1.0))]);
        }
        for j in 0..n {
            for k in j + 1..n {
                elements.push(vec![(j, k, c(r)), (k, j, c(r))]);
                elements.push(vec![(j, k, Complex64::new(0.0, -r)), (k, j, Complex64::new(0.0, r))]);
            }
        }
        Self { n, elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// r_m = Tr(E_m ρ).
    pub fn coordinates(&self, rho: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.elements
                .iter()
                .map(|e| e.iter().map(|&(a, b, v)| (v * rho[(b, a)]).re).sum::<f64>()),
        )
    }

    pub fn operator(&self, r: &DVector<f64>) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for (e, &x) in self.elements.iter().zip(r.iter()) {
            for &(a, b, v) in e {
                m[(a, b)] += v * x;
            }
        }
        m
    }

    /// Real matrix of a column-stacked superoperator.
    pub fn real_superoperator(&self, l: &CMatrix) -> DMatrix<f64> {
        let n = self.n;
        let dim = self.len();
        let mut out = DMatrix::zeros(dim, dim);
        let mut col = vec![Complex64::new(0.0, 0.0); n * n];
        for (j, ej) in self.elements.iter().enumerate() {
            col.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            for &(a, b, v) in ej {
                let src = a + b * n;
                for (q, x) in col.iter_mut().enumerate() {
                    *x += l[(q, src)] * v;
                }
            }
            for (i, ei) in self.elements.iter().enumerate() {
                out[(i, j)] = ei.iter().map(|&(a, b, v)| (v * col[b + a * n]).re).sum();
            }
        }
        out
    }
}
