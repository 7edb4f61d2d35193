use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::EulerAngles;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum OrientationRule {
    /// Cycled over the members.
    Fixed { angles: Vec<EulerAngles> },
    /// Haar-random tensor orientation per member.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Placement {
    /// Explicit NV→target vectors in nm, cycled over the members.
    Fixed { positions: Vec<Vector3<f64>> },
    /// Fixed distance, uniformly random direction.
    Shell { radius: f64 },
    /// Uniform over an annulus of lateral radius r_min..r_max in a thin layer
    /// `depth` nm above the NV.
    Annulus { r_min: f64, r_max: f64, depth: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub count: usize,
    pub orientation: OrientationRule,
    pub placement: Placement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub orientation: EulerAngles,
    /// NV→target vector, nm.
    pub position: Vector3<f64>,
}

impl EnsembleSpec {
    /// One target at `position` with the given tensor orientation.
    pub fn single(orientation: EulerAngles, position: Vector3<f64>) -> Self {
        Self {
            count: 1,
            orientation: OrientationRule::Fixed {
                angles: vec![orientation],
            },
            placement: Placement::Fixed {
                positions: vec![position],
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("ensemble count must be at least 1"));
        }
        if let OrientationRule::Fixed { angles } = &self.orientation {
            if angles.is_empty() {
                return Err(Error::invalid("fixed orientation list is empty"));
            }
        }
        match &self.placement {
            Placement::Fixed { positions } => {
                if positions.is_empty() {
                    return Err(Error::invalid("fixed position list is empty"));
                }
                if positions.iter().any(|p| !(p.norm() > 0.0)) {
                    return Err(Error::invalid("target positions must be away from the NV"));
                }
            }
            Placement::Shell { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::invalid("shell radius must be positive"));
                }
            }
            Placement::Annulus { r_min, r_max, depth } => {
                if !(*r_min >= 0.0 && r_max > r_min && *depth >= 0.0) || (*r_min == 0.0 && *depth == 0.0) {
                    return Err(Error::invalid("annulus needs 0 ≤ r_min < r_max and a non-zero distance"));
                }
            }
        }
        Ok(())
    }

    /// Draw the members. The same seed always yields the same ensemble.
    pub fn members(&self, seed: u64) -> Result<Vec<EnsembleMember>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(self.count);
        for k in 0..self.count {
            let orientation = match &self.orientation {
                OrientationRule::Fixed { angles } => angles[k % angles.len()],
                OrientationRule::Uniform => EulerAngles::random(&mut rng),
            };
            let position = match &self.placement {
                Placement::Fixed { positions } => positions[k % positions.len()],
                Placement::Shell { radius } => random_direction(&mut rng) * *radius,
                Placement::Annulus { r_min, r_max, depth } => {
                    let u: f64 = rng.random();
                    let rho = (r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt();
                    let phi = TAU * rng.random::<f64>();
                    Vector3::new(rho * phi.cos(), rho * phi.sin(), *depth)
                }
            };
            out.push(EnsembleMember { orientation, position });
        }
        Ok(out)
    }
}

/// Uniform point on the unit sphere.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = TAU * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(s * phi.cos(), s * phi.sin(), z)
}
