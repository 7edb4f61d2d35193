use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::nv::nv_spin_operators;
use crate::spin::TargetSpinSystem;

/// Electron–electron dipolar constant μ₀ħγₑ²/4π as an ordinary frequency,
/// MHz·nm³. Multiply by 2π for the angular constant.
pub const DIPOLAR_CONSTANT: f64 = 52.0;

/// Point-dipole coupling between the NV and one target electron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipolarCoupling {
    /// Target position relative to the NV, nm.
    pub separation: Vector3<f64>,
    /// Ordinary-frequency constant in MHz·nm³.
    pub constant: f64,
}

impl DipolarCoupling {
    pub fn new(separation: Vector3<f64>) -> Self {
        Self {
            separation,
            constant: DIPOLAR_CONSTANT,
        }
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn distance(&self) -> f64 {
        self.separation.norm()
    }

    /// C₀ with its 2π, rad·MHz·nm³.
    pub fn angular_constant(&self) -> f64 {
        TAU * self.constant
    }

    /// C₀/(2π r³) in MHz.
    pub fn strength(&self) -> Result<f64> {
        let r = self.distance();
        if !(r > 0.0) {
            return Err(Error::invalid("dipolar coupling needs a non-zero separation"));
        }
        Ok(self.constant / r.powi(3))
    }
}

/// Geometric factor n − 3(r̂·n)r̂ of the NV-secular coupling, for NV axis n.
pub fn angular_factor(direction: &Vector3<f64>, nv_axis: &Vector3<f64>) -> Vector3<f64> {
    let r = direction.normalize();
    let n = nv_axis.normalize();
    n - r * (3.0 * r.dot(&n))
}

/// J·(n − 3(r̂·n)r̂) in MHz: the field the NV's S_z exerts on the target S.
pub fn coupling_vector(c: &DipolarCoupling, nv_axis: &Vector3<f64>) -> Result<[f64; 3]> {
    let j = c.strength()?;
    let b = angular_factor(&c.separation, nv_axis) * j;
    Ok([b.x, b.y, b.z])
}

/// NV-secular dipolar Hamiltonian S_z^NV ⊗ (b·S) ⊗ 1_nucleus on the joint
/// NV ⊗ electron ⊗ nucleus space. Terms carrying S_x^NV or S_y^NV oscillate
/// at D in the rotating frame and are dropped; every target component is kept.
pub fn dipolar_hamiltonian(
    c: &DipolarCoupling,
    nv_axis: &Vector3<f64>,
    sys: &TargetSpinSystem,
) -> Result<CMatrix> {
    let b = coupling_vector(c, nv_axis)?;
    let sz = nv_spin_operators().z;
    Ok(sz.kronecker(&sys.electron_operators().project(&b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c as cx;
    use crate::linalg::max_abs;

    #[test]
    fn on_axis_is_pure_zz() {
        let r = 5.0;
        let c = DipolarCoupling::new(Vector3::new(0.0, 0.0, r));
        let b = coupling_vector(&c, &Vector3::z()).unwrap();
        assert!(b[0].abs() < 1e-15 && b[1].abs() < 1e-15);
        assert!((b[2] + 2.0 * 52.0 / r.powi(3)).abs() < 1e-12);
        let sys = TargetSpinSystem::p1_n15();
        let h = dipolar_hamiltonian(&c, &Vector3::z(), &sys).unwrap();
        let want = nv_spin_operators()
            .z
            .kronecker(&sys.electron_operators().z)
            * cx(-2.0 * 52.0 / r.powi(3));
        assert!(max_abs(&(h - want)) < 1e-12);
    }

    #[test]
    fn inverse_cube_law() {
        let sys = TargetSpinSystem::p1_n15();
        let d = Vector3::new(1.0, 2.0, 2.0);
        let h1 = dipolar_hamiltonian(&DipolarCoupling::new(d * 3.0), &Vector3::z(), &sys).unwrap();
        let h2 = dipolar_hamiltonian(&DipolarCoupling::new(d * 6.0), &Vector3::z(), &sys).unwrap();
        assert!(max_abs(&(h1 - h2 * cx(8.0))) < 1e-12);
    }

    #[test]
    fn azimuth_leaves_zz_unchanged() {
        let theta: f64 = 0.7;
        let zz = |phi: f64| {
            let dir = Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            coupling_vector(&DipolarCoupling::new(dir * 7.0), &Vector3::z()).unwrap()[2]
        };
        let expected = 52.0 / 343.0 * (1.0 - 3.0 * theta.cos().powi(2));
        for phi in [0.0, 0.4, 1.9, 3.3, 5.0] {
            assert!((zz(phi) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_separation_rejected() {
        let c = DipolarCoupling::new(Vector3::zeros());
        assert!(dipolar_hamiltonian(&c, &Vector3::z(), &TargetSpinSystem::p1_n15()).is_err());
    }
}
