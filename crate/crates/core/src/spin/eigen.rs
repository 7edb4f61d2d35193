use serde::Serialize;

use super::system::TargetSpinSystem;
use crate::error::{Error, Result};
use crate::linalg::{c, hermiticity_deviation, max_abs, CMatrix};

/// Levels closer than this (MHz) form a degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Ascending energies (MHz) with eigenvectors as columns of `states`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    #[serde(skip)]
    pub states: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, k: usize) -> Vec<num_complex::Complex64> {
        self.states.column(k).iter().copied().collect()
    }

    /// Index groups of levels within `DEGENERACY_TOL` of their neighbours.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (k, e) in self.energies.iter().enumerate() {
            match out.last_mut() {
                Some(group) if (e - self.energies[*group.last().unwrap()]).abs() < DEGENERACY_TOL => {
                    group.push(k)
                }
                _ => out.push(vec![k]),
            }
        }
        out
    }

    /// Cluster index of every level.
    pub fn cluster_of(&self) -> Vec<usize> {
        let mut map = vec![0; self.dim()];
        for (ci, group) in self.clusters().iter().enumerate() {
            for &k in group {
                map[k] = ci;
            }
        }
        map
    }

    /// Projectors onto each degenerate cluster.
    pub fn cluster_projectors(&self) -> Vec<CMatrix> {
        self.clusters()
            .iter()
            .map(|group| {
                let n = self.dim();
                let mut p = CMatrix::zeros(n, n);
                for &k in group {
                    let v = self.states.column(k);
                    p += v * v.adjoint();
                }
                p
            })
            .collect()
    }
}

/// Hermitian eigensolver with ascending energies and a fixed phase
/// convention: the largest-magnitude component of each eigenvector is real
/// and positive (first index wins ties).
pub fn diagonalize(h: &CMatrix) -> Result<EigenSystem> {
    let n = crate::linalg::ensure_square(h)?;
    let scale = max_abs(h).max(1.0);
    let deviation = hermiticity_deviation(h);
    if deviation > 1e-10 * scale {
        return Err(Error::NotHermitian { deviation });
    }
    let herm = (h + h.adjoint()) * c(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut states = CMatrix::zeros(n, n);
    let mut energies = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        energies.push(eig.eigenvalues[k]);
        let v = eig.eigenvectors.column(k);
        let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = v
            .iter()
            .position(|z| z.norm() >= max - 1e-12)
            .unwrap_or(0);
        let phase = v[pivot].conj() / v[pivot].norm();
        for r in 0..n {
            states[(r, col)] = v[r] * phase;
        }
    }
    Ok(EigenSystem { energies, states })
}

/// Closed-form eigensystem for S = I = 1/2 in the principal axis frame:
/// singlet and the three Bell-like triplet combinations, basis
/// |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩ (electron left).
pub fn analytic_half_half_eigensystem(sys: &TargetSpinSystem) -> Result<EigenSystem> {
    if sys.electron.dim() != 2 || sys.nucleus.dim() != 2 {
        return Err(Error::invalid(
            "closed-form eigensystem requires S = 1/2 and I = 1/2",
        ));
    }
    let [axx, ayy, azz] = sys.hyperfine.principal_values;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let levels = [
        (0.25 * (-axx - ayy - azz), [0.0, r, -r, 0.0]),
        (0.25 * (axx + ayy - azz), [0.0, r, r, 0.0]),
        (0.25 * (-axx + ayy + azz), [r, 0.0, 0.0, -r]),
        (0.25 * (axx - ayy + azz), [r, 0.0, 0.0, r]),
    ];
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| levels[a].0.total_cmp(&levels[b].0));
    let mut states = CMatrix::zeros(4, 4);
    let mut energies = Vec::with_capacity(4);
    for (col, &k) in order.iter().enumerate() {
        energies.push(levels[k].0);
        for row in 0..4 {
            states[(row, col)] = c(levels[k].1[row]);
        }
    }
    Ok(EigenSystem { energies, states })
}
