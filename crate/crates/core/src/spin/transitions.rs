use num_complex::Complex64;
use serde::Serialize;

use super::eigen::{EigenSystem, DEGENERACY_TOL};
use super::operators::SpinOperators;

/// Rows whose largest dipole weight falls below this are forbidden.
pub const FORBIDDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionRow {
    pub i: usize,
    pub j: usize,
    /// E_j − E_i in MHz; zero for pairs inside one degenerate cluster.
    pub frequency: f64,
    pub weight_x: f64,
    pub weight_y: f64,
    pub weight_z: f64,
    pub forbidden: bool,
    pub intra_cluster: bool,
    /// ⟨φ_j|S_a|φ_i⟩ for a = x, y, z.
    #[serde(skip)]
    pub elements: [Complex64; 3],
}

impl TransitionRow {
    pub fn observable(&self) -> bool {
        !self.forbidden && !self.intra_cluster
    }

    /// |⟨φ_j|b·S|φ_i⟩|² for a real coupling direction b.
    pub fn coupling_weight(&self, b: &[f64; 3]) -> f64 {
        self.elements
            .iter()
            .zip(b)
            .map(|(m, bb)| m * *bb)
            .sum::<Complex64>()
            .norm_sqr()
    }

    pub fn transverse_weight(&self) -> f64 {
        self.weight_x + self.weight_y
    }
}

/// A distinct observable frequency with the rows that contribute to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralLine {
    pub frequency: f64,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionTable {
    pub rows: Vec<TransitionRow>,
}

impl TransitionTable {
    pub fn observable(&self) -> impl Iterator<Item = &TransitionRow> {
        self.rows.iter().filter(|r| r.observable())
    }

    /// Observable rows grouped into distinct frequencies, ascending.
    pub fn lines(&self) -> Vec<SpectralLine> {
        let mut idx: Vec<usize> = (0..self.rows.len())
            .filter(|&k| self.rows[k].observable())
            .collect();
        idx.sort_by(|&a, &b| self.rows[a].frequency.total_cmp(&self.rows[b].frequency));
        let mut lines: Vec<SpectralLine> = Vec::new();
        for k in idx {
            let f = self.rows[k].frequency;
            match lines.last_mut() {
                Some(line) if (f - line.frequency).abs() < DEGENERACY_TOL => line.rows.push(k),
                _ => lines.push(SpectralLine {
                    frequency: f,
                    rows: vec![k],
                }),
            }
        }
        for line in &mut lines {
            line.frequency =
                line.rows.iter().map(|&k| self.rows[k].frequency).sum::<f64>() / line.rows.len() as f64;
        }
        lines
    }

    pub fn observable_frequencies(&self) -> Vec<f64> {
        self.lines().iter().map(|l| l.frequency).collect()
    }

    /// Σ over a line's rows of |⟨j|b·S|i⟩|².
    pub fn line_coupling_weight(&self, line: &SpectralLine, b: &[f64; 3]) -> f64 {
        line.rows.iter().map(|&k| self.rows[k].coupling_weight(b)).sum()
    }

    pub fn line_transverse_weight(&self, line: &SpectralLine) -> f64 {
        line.rows.iter().map(|&k| self.rows[k].transverse_weight()).sum()
    }
}

/// All level pairs i < j with frequencies and electron dipole weights.
pub fn transition_table(eig: &EigenSystem, ops: &SpinOperators) -> TransitionTable {
    let n = eig.dim();
    let cluster = eig.cluster_of();
    let mut rows = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    let v = &eig.states;
    for i in 0..n {
        for j in (i + 1)..n {
            let vi = v.column(i);
            let vj = v.column(j);
            let elements = ops
                .components()
                .map(|op| (vj.adjoint() * op * vi)[(0, 0)]);
            let [wx, wy, wz] = elements.map(|m| m.norm_sqr());
            let intra = cluster[i] == cluster[j];
            rows.push(TransitionRow {
                i,
                j,
                frequency: if intra {
                    0.0
                } else {
                    eig.energies[j] - eig.energies[i]
                },
                weight_x: wx,
                weight_y: wy,
                weight_z: wz,
                forbidden: wx.max(wy).max(wz) < FORBIDDEN_TOL,
                intra_cluster: intra,
                elements,
            });
        }
    }
    TransitionTable { rows }
}

/// Convenience: zero-field transition table of a target system, tensor in
/// the lab frame.
pub fn zero_field_table(
    sys: &super::TargetSpinSystem,
) -> crate::error::Result<TransitionTable> {
    let h = super::hyperfine_hamiltonian(sys, true)?;
    let eig = super::diagonalize(&h)?;
    Ok(transition_table(&eig, &sys.electron_operators()))
}
