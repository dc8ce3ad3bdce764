//! Per-site coin angles for both coin layers.

use alloc::vec;
use alloc::vec::Vec;

use crate::coin::half_angle;
use crate::error::{invalid, Result};
use crate::state::Lattice;

/// Coin angles of both layers, one entry per site in lattice order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinField {
    lattice: Lattice,
    layer1: Vec<f64>,
    layer2: Vec<f64>,
}

impl CoinField {
    /// Constant `theta1` and `theta2` everywhere except `theta02` on layer 2 at x = 0.
    pub fn uniform(lattice: Lattice, theta1: f64, theta2: f64, theta02: f64) -> Self {
        let n = lattice.size();
        let mut layer2 = vec![theta2; n];
        layer2[lattice.origin_offset()] = theta02;
        CoinField { lattice, layer1: vec![theta1; n], layer2 }
    }

    pub fn from_layers(lattice: Lattice, layer1: Vec<f64>, layer2: Vec<f64>) -> Result<Self> {
        let n = lattice.size();
        if layer1.len() != n || layer2.len() != n {
            return Err(invalid!("coin layers must have {n} entries, got {} and {}", layer1.len(), layer2.len()));
        }
        if let Some(bad) = layer1.iter().chain(&layer2).find(|t| !t.is_finite()) {
            return Err(invalid!("coin angles must be finite, got {bad}"));
        }
        Ok(CoinField { lattice, layer1, layer2 })
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn layer1(&self) -> &[f64] {
        &self.layer1
    }

    pub fn layer2(&self) -> &[f64] {
        &self.layer2
    }

    /// Layer-2 angle at x = 0.
    pub fn defect_angle(&self) -> f64 {
        self.layer2[self.lattice.origin_offset()]
    }

    pub(crate) fn layer2_mut(&mut self) -> &mut [f64] {
        &mut self.layer2
    }

    pub(crate) fn prepare(&self) -> PreparedField {
        PreparedField {
            layer1: self.layer1.iter().map(|&t| half_angle(t)).collect(),
            layer2: self.layer2.iter().map(|&t| half_angle(t)).collect(),
        }
    }
}

/// Half-angle cosines and sines of a [`CoinField`], cached for the step kernel.
#[derive(Debug, Clone)]
pub(crate) struct PreparedField {
    pub layer1: Vec<(f64, f64)>,
    pub layer2: Vec<(f64, f64)>,
}

/// The coins seen at every step of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum CoinSchedule {
    /// One field reused at every step.
    Static(CoinField),
    /// `fields[t]` is applied on step `t + 1`.
    PerStep(Vec<CoinField>),
}

impl CoinSchedule {
    pub fn lattice(&self) -> Option<Lattice> {
        match self {
            CoinSchedule::Static(f) => Some(f.lattice()),
            CoinSchedule::PerStep(fields) => fields.first().map(CoinField::lattice),
        }
    }

    /// Number of steps the schedule can drive, `None` meaning unbounded.
    pub fn max_steps(&self) -> Option<usize> {
        match self {
            CoinSchedule::Static(_) => None,
            CoinSchedule::PerStep(fields) => Some(fields.len()),
        }
    }

    /// Field applied on the step taking `t` to `t + 1`.
    pub fn field(&self, t: usize) -> Result<&CoinField> {
        match self {
            CoinSchedule::Static(f) => Ok(f),
            CoinSchedule::PerStep(fields) => fields
                .get(t)
                .ok_or_else(|| invalid!("coin schedule covers {} steps, step {} requested", fields.len(), t + 1)),
        }
    }

    /// Copy with the layer-2 angle at x = 0 replaced in every field.
    pub fn with_defect_angle(&self, theta02: f64) -> CoinSchedule {
        let set = |f: &CoinField| {
            let mut f = f.clone();
            let o = f.lattice.origin_offset();
            f.layer2_mut()[o] = theta02;
            f
        };
        match self {
            CoinSchedule::Static(f) => CoinSchedule::Static(set(f)),
            CoinSchedule::PerStep(fields) => CoinSchedule::PerStep(fields.iter().map(set).collect()),
        }
    }

    pub(crate) fn check(&self, lattice: Lattice, steps: usize) -> Result<()> {
        if let Some(max) = self.max_steps() {
            if max < steps {
                return Err(invalid!("coin schedule covers {max} steps, {steps} requested"));
            }
        }
        let mismatch = match self {
            CoinSchedule::Static(f) => f.lattice() != lattice,
            CoinSchedule::PerStep(fields) => fields.iter().any(|f| f.lattice() != lattice),
        };
        if mismatch {
            return Err(invalid!("coin schedule lattice does not match the state lattice"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_layout() {
        let l = Lattice::new(5).unwrap();
        let f = CoinField::uniform(l, 0.1, 0.2, 0.3);
        assert_eq!(f.layer1(), &[0.1; 5]);
        assert_eq!(f.layer2(), &[0.2, 0.2, 0.3, 0.2, 0.2]);
        assert_eq!(f.defect_angle(), 0.3);
    }

    #[test]
    fn layer_validation() {
        let l = Lattice::new(3).unwrap();
        assert!(CoinField::from_layers(l, vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(CoinField::from_layers(l, vec![0.0; 3], vec![0.0, f64::NAN, 0.0]).is_err());
        let s = CoinSchedule::PerStep(vec![CoinField::uniform(l, 0.0, 0.0, 0.0)]);
        assert!(s.field(0).is_ok());
        assert!(s.field(1).is_err());
        assert!(s.check(l, 2).is_err());
        assert!(s.check(Lattice::new(5).unwrap(), 1).is_err());
    }
}
