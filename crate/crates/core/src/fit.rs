//! Least-squares lines and power-law fits in log-log space.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(invalid!("regression inputs differ in length: {} vs {}", xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(invalid!("regression needs at least 2 points, got {}", xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(invalid!("regression abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(LineFit { slope, intercept, r_squared })
}

/// `y = prefactor * x^exponent` fitted on `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl PowerLaw {
    pub fn eval(&self, x: f64) -> f64 {
        self.prefactor * x.powf(self.exponent)
    }
}

/// Power-law fit over strictly positive samples; non-positive or non-finite pairs are dropped.
pub fn power_law(xs: &[f64], ys: &[f64], min_points: usize) -> Result<PowerLaw> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    if lx.len() < min_points {
        return Err(invalid!("power-law fit needs at least {min_points} usable points, got {}", lx.len()));
    }
    let line = linear_regression(&lx, &ly)?;
    Ok(PowerLaw { exponent: line.slope, prefactor: line.intercept.exp(), r_squared: line.r_squared, points: lx.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = linear_regression(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_regression(&[1.0], &[2.0]).is_err());
        assert!(linear_regression(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(power_law(&[1.0, 2.0, 3.0], &[0.0, 0.0, 1.0], 2).is_err());
    }
}
