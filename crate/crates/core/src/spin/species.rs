use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gyromagnetic ratio of a free electron (g = 2.0023) as an ordinary
/// frequency per gauss.
pub const ELECTRON_GAMMA: f64 = -2.8025;
pub const N15_GAMMA: f64 = -4.316e-4;
pub const N14_GAMMA: f64 = 3.077e-4;

/// A spin with quantum number S ∈ {1/2, 1, 3/2} and a signed gyromagnetic
/// ratio in MHz/G.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSpecies {
    two_s: u8,
    pub gyromagnetic_ratio: f64,
}

impl SpinSpecies {
    pub fn new(spin: f64, gyromagnetic_ratio: f64) -> Result<Self> {
        let two_s = (2.0 * spin).round();
        if (2.0 * spin - two_s).abs() > 1e-9 || !(1.0..=3.0).contains(&two_s) {
            return Err(Error::UnsupportedSpin(spin));
        }
        Ok(Self {
            two_s: two_s as u8,
            gyromagnetic_ratio,
        })
    }

    pub fn electron() -> Self {
        Self {
            two_s: 1,
            gyromagnetic_ratio: ELECTRON_GAMMA,
        }
    }

    pub fn nitrogen15() -> Self {
        Self {
            two_s: 1,
            gyromagnetic_ratio: N15_GAMMA,
        }
    }

    pub fn nitrogen14() -> Self {
        Self {
            two_s: 2,
            gyromagnetic_ratio: N14_GAMMA,
        }
    }

    pub fn spin(&self) -> f64 {
        self.two_s as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_s as usize + 1
    }
}
