use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// z-y-z Euler angles in radians: R = Rz(α)·Ry(β)·Rz(γ).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn from_degrees(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self::new(alpha.to_radians(), beta.to_radians(), gamma.to_radians())
    }

    /// Orientation whose principal z axis makes angle `theta` with the lab z axis.
    pub fn tilt(theta: f64) -> Self {
        Self::new(0.0, theta, 0.0)
    }

    /// Haar-uniform random orientation.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let alpha = rng.random::<f64>() * TAU;
        let gamma = rng.random::<f64>() * TAU;
        let cos_beta: f64 = 2.0 * rng.random::<f64>() - 1.0;
        Self::new(alpha, cos_beta.clamp(-1.0, 1.0).acos(), gamma)
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        rz(self.alpha) * ry(self.beta) * rz(self.gamma)
    }

    /// Principal z axis expressed in the lab frame.
    pub fn principal_axis(&self) -> Vector3<f64> {
        self.rotation().column(2).into_owned()
    }
}

fn rz(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn ry(b: f64) -> Matrix3<f64> {
    let (s, c) = b.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Hyperfine tensor given by its principal values (MHz) and the orientation
/// of its principal axis frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperfineTensor {
    pub principal_values: [f64; 3],
    pub orientation: EulerAngles,
}

impl HyperfineTensor {
    pub fn diagonal(axx: f64, ayy: f64, azz: f64) -> Self {
        Self {
            principal_values: [axx, ayy, azz],
            orientation: EulerAngles::default(),
        }
    }

    pub fn axial(a_perp: f64, a_zz: f64) -> Self {
        Self::diagonal(a_perp, a_perp, a_zz)
    }

    pub fn oriented(mut self, orientation: EulerAngles) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.principal_values.iter_mut().for_each(|a| *a *= k);
        self
    }

    /// Tensor in the lab frame.
    pub fn lab_matrix(&self) -> Matrix3<f64> {
        rotate_tensor(self.principal_values, self.orientation)
    }

    pub fn principal_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.principal_values))
    }

    pub fn is_axial(&self, tol: f64) -> bool {
        (self.principal_values[0] - self.principal_values[1]).abs() <= tol
    }
}

/// R·diag(A)·Rᵀ.
pub fn rotate_tensor(principal_values: [f64; 3], euler: EulerAngles) -> Matrix3<f64> {
    let r = euler.rotation();
    let d = Matrix3::from_diagonal(&Vector3::from(principal_values));
    let m = r * d * r.transpose();
    // symmetrize away rounding
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_rotation_keeps_diagonal() {
        let m = rotate_tensor([1.0, 2.0, 3.0], EulerAngles::default());
        assert_eq!(m, Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 3.0)));
    }

    #[test]
    fn axial_tensor_invariant_under_z_rotation() {
        let base = rotate_tensor([114.0, 114.0, 159.9], EulerAngles::default());
        for a in [0.3, 1.1, 2.9] {
            let m = rotate_tensor([114.0, 114.0, 159.9], EulerAngles::new(a, 0.0, -0.4 * a));
            assert!((m - base).abs().max() < 1e-12);
        }
    }

    #[test]
    fn rotated_eigenvalues_equal_principal_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pv = [23.2, -41.0, 144.4];
        for _ in 0..200 {
            let m = rotate_tensor(pv, EulerAngles::random(&mut rng));
            assert!((m - m.transpose()).abs().max() < 1e-12);
            let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut want = pv.to_vec();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in ev.iter().zip(&want) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tilt_moves_principal_axis() {
        let e = EulerAngles::tilt(std::f64::consts::FRAC_PI_2);
        let axis = e.principal_axis();
        assert!((axis - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }
}
