//! Walk parameters: coin angles, lattice and boundary convention.

use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::field::CoinField;
use crate::state::Lattice;

/// Maps an angle into the canonical range.
///
/// Values already inside `[-pi, pi]` are returned unchanged, so `-pi` stays
/// representable; everything else is reduced into `(-pi, pi]`. Note that
/// `R(theta + 2 pi) = -R(theta)`.
pub fn canonical_angle(theta: f64) -> f64 {
    if (-PI..=PI).contains(&theta) {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut t = theta - two_pi * ((theta + PI) / two_pi).floor();
    // t in [-pi, pi); move the open end to -pi.
    if t <= -PI {
        t += two_pi;
    }
    t
}

fn checked_angle(name: &str, theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(invalid!("{name} must be finite, got {theta}"));
    }
    Ok(canonical_angle(theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    #[default]
    Periodic,
}

/// Coin angles (radians) plus lattice. `theta02` replaces `theta2` at x = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    theta1: f64,
    theta2: f64,
    theta02: f64,
    lattice: Lattice,
    boundary: Boundary,
}

impl WalkParams {
    pub fn new(theta1: f64, theta2: f64, theta02: f64, lattice_size: usize) -> Result<Self> {
        Ok(WalkParams {
            theta1: checked_angle("theta1", theta1)?,
            theta2: checked_angle("theta2", theta2)?,
            theta02: checked_angle("theta02", theta02)?,
            lattice: Lattice::new(lattice_size)?,
            boundary: Boundary::Periodic,
        })
    }

    /// Angles given in units of pi (`0.9` means `0.9 pi`).
    pub fn from_pi_units(theta1: f64, theta2: f64, theta02: f64, lattice_size: usize) -> Result<Self> {
        Self::new(theta1 * PI, theta2 * PI, theta02 * PI, lattice_size)
    }

    /// Translationally invariant walk: the defect angle equals the bulk `theta2`.
    pub fn defect_free(theta1: f64, theta2: f64, lattice_size: usize) -> Result<Self> {
        Self::new(theta1, theta2, theta2, lattice_size)
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn theta02(&self) -> f64 {
        self.theta02
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn with_theta1(&self, theta1: f64) -> Result<Self> {
        Ok(WalkParams { theta1: checked_angle("theta1", theta1)?, ..*self })
    }

    pub fn with_theta02(&self, theta02: f64) -> Result<Self> {
        Ok(WalkParams { theta02: checked_angle("theta02", theta02)?, ..*self })
    }

    pub fn with_lattice_size(&self, lattice_size: usize) -> Result<Self> {
        Ok(WalkParams { lattice: Lattice::new(lattice_size)?, ..*self })
    }

    pub fn has_defect(&self) -> bool {
        self.theta02 != self.theta2
    }

    /// The disorder-free coin layout described by these parameters.
    pub fn coin_field(&self) -> CoinField {
        CoinField::uniform(self.lattice, self.theta1, self.theta2, self.theta02)
    }
}
