use num_complex::Complex64;

use super::species::SpinSpecies;
use crate::linalg::{c, CMatrix, I};

/// Cartesian spin operators in the |m = S⟩ … |m = −S⟩ basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators {
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

impl SpinOperators {
    pub fn components(&self) -> [&CMatrix; 3] {
        [&self.x, &self.y, &self.z]
    }

    /// n·S for a real vector n.
    pub fn project(&self, n: &[f64; 3]) -> CMatrix {
        &self.x * c(n[0]) + &self.y * c(n[1]) + &self.z * c(n[2])
    }

    pub fn dim(&self) -> usize {
        self.z.nrows()
    }

    /// Embed each component as `left ⊗ S ⊗ right`.
    pub fn embed(&self, left: usize, right: usize) -> SpinOperators {
        let l = CMatrix::identity(left, left);
        let r = CMatrix::identity(right, right);
        let f = |m: &CMatrix| l.kronecker(m).kronecker(&r);
        SpinOperators {
            x: f(&self.x),
            y: f(&self.y),
            z: f(&self.z),
        }
    }
}

/// Standard ladder construction: ⟨m+1|S₊|m⟩ = √(S(S+1) − m(m+1)).
pub fn spin_operators(species: &SpinSpecies) -> SpinOperators {
    spin_operators_for(species.spin())
}

pub(crate) fn spin_operators_for(s: f64) -> SpinOperators {
    let dim = (2.0 * s).round() as usize + 1;
    let m = |k: usize| s - k as f64;
    let mut plus = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        // row k-1 has m one larger than column k
        let mk = m(k);
        plus[(k - 1, k)] = c((s * (s + 1.0) - mk * (mk + 1.0)).sqrt());
    }
    let minus = plus.adjoint();
    let x = (&plus + &minus) * c(0.5);
    let y = (&plus - &minus) * (-I * 0.5);
    let z = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            c(m(i))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    SpinOperators { x, y, z }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs};

    #[test]
    fn spin_half_is_pauli_over_two() {
        let ops = spin_operators(&SpinSpecies::electron());
        assert_eq!(ops.z[(0, 0)], c(0.5));
        assert_eq!(ops.z[(1, 1)], c(-0.5));
        assert_eq!(ops.x[(0, 1)], c(0.5));
        assert_eq!(ops.y[(0, 1)], Complex64::new(0.0, -0.5));
    }

    #[test]
    fn spin_one_matrices() {
        let ops = spin_operators(&SpinSpecies::new(1.0, 0.0).unwrap());
        let diag: Vec<f64> = (0..3).map(|k| ops.z[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((ops.x[(0, 1)].re - r).abs() < 1e-15);
        assert!((ops.x[(1, 2)].re - r).abs() < 1e-15);
        let comm = commutator(&ops.x, &ops.y);
        assert!(max_abs(&(comm - &ops.z * I)) < 1e-12);
    }

    #[test]
    fn commutation_and_casimir_for_all_supported_spins() {
        for s in [0.5, 1.0, 1.5] {
            let ops = spin_operators_for(s);
            let n = ops.dim();
            for (a, b, cc) in [
                (&ops.x, &ops.y, &ops.z),
                (&ops.y, &ops.z, &ops.x),
                (&ops.z, &ops.x, &ops.y),
            ] {
                assert!(max_abs(&(commutator(a, b) - cc * I)) < 1e-12);
            }
            let s2 = &ops.x * &ops.x + &ops.y * &ops.y + &ops.z * &ops.z;
            let expected = CMatrix::identity(n, n) * c(s * (s + 1.0));
            assert!(max_abs(&(s2 - expected)) < 1e-12, "S = {s}");
        }
    }

    #[test]
    fn unsupported_spins_rejected() {
        assert!(SpinSpecies::new(2.0, 0.0).is_err());
        assert!(SpinSpecies::new(0.0, 0.0).is_err());
        assert!(SpinSpecies::new(0.7, 0.0).is_err());
    }
}
