//! Momentum-space picture of the defect-free walk: Bloch components, quasi-energy
//! bands and the winding number of `n(k)` about the fixed axis `A`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::par;

/// Points with `sin E(k)` below this are treated as band touchings.
pub const GAP_TOLERANCE: f64 = 1e-6;
/// Default quadrature size for the winding integral.
pub const DEFAULT_NK: usize = 2048;

/// Sample points in the Brillouin zone `[-pi, pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    points: Vec<f64>,
}

impl MomentumGrid {
    /// `k_j = -pi + 2 pi j / n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(invalid!("momentum grid needs at least 8 points, got {n}"));
        }
        let step = 2.0 * PI / n as f64;
        Ok(MomentumGrid { points: (0..n).map(|j| -PI + step * j as f64).collect() })
    }

    /// The momenta `2 pi m / N` allowed on a periodic ring of `N` sites, folded into `[-pi, pi)`.
    pub fn ring(sites: usize) -> Self {
        let step = 2.0 * PI / sites as f64;
        let points = (0..sites)
            .map(|m| {
                let k = step * m as f64;
                if k >= PI {
                    k - 2.0 * PI
                } else {
                    k
                }
            })
            .collect();
        MomentumGrid { points }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `U(k) = d0 + i (dx sx + dy sy + dz sz)` at a single momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint {
    pub k: f64,
    pub d0: f64,
    pub d: [f64; 3],
}

impl BlochPoint {
    pub fn new(theta1: f64, theta2: f64, k: f64) -> Self {
        let (s1, c1) = (0.5 * theta1).sin_cos();
        let (s2, c2) = (0.5 * theta2).sin_cos();
        let (sk, ck) = k.sin_cos();
        BlochPoint { k, d0: c2 * c1 * ck - s2 * s1, d: [c2 * s1 * sk, c2 * s1 * ck + s2 * c1, -c2 * c1 * sk] }
    }

    /// `sin E(k) = |d|`, accurate near band touchings.
    pub fn sin_energy(&self) -> f64 {
        norm3(&self.d)
    }

    /// `E(k)` on the branch `[0, pi]`.
    pub fn quasi_energy(&self) -> f64 {
        self.sin_energy().atan2(self.d0)
    }

    /// `n(k) = d / sin E`, `None` at a band touching.
    pub fn unit_vector(&self) -> Option<[f64; 3]> {
        let s = self.sin_energy();
        (s > GAP_TOLERANCE).then(|| [self.d[0] / s, self.d[1] / s, self.d[2] / s])
    }
}

/// `A = (cos(theta1/2), 0, sin(theta1/2))`, perpendicular to every `n(k)`.
pub fn winding_axis(theta1: f64) -> [f64; 3] {
    let (s1, c1) = (0.5 * theta1).sin_cos();
    [c1, 0.0, s1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlochDecomposition {
    pub k: Vec<f64>,
    pub d0: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz: Vec<f64>,
    /// `E(k)` in `[0, pi]`; the two bands are `+E` and `-E`.
    pub quasi_energy: Vec<f64>,
    pub unit_vector: Vec<Option<[f64; 3]>>,
    pub axis: [f64; 3],
}

pub fn bloch_components(theta1: f64, theta2: f64, grid: &MomentumGrid) -> BlochDecomposition {
    let n = grid.len();
    let mut out = BlochDecomposition {
        k: Vec::with_capacity(n),
        d0: Vec::with_capacity(n),
        dx: Vec::with_capacity(n),
        dy: Vec::with_capacity(n),
        dz: Vec::with_capacity(n),
        quasi_energy: Vec::with_capacity(n),
        unit_vector: Vec::with_capacity(n),
        axis: winding_axis(theta1),
    };
    for &k in grid.points() {
        let b = BlochPoint::new(theta1, theta2, k);
        out.k.push(k);
        out.d0.push(b.d0);
        out.dx.push(b.d[0]);
        out.dy.push(b.d[1]);
        out.dz.push(b.d[2]);
        out.quasi_energy.push(b.quasi_energy());
        out.unit_vector.push(b.unit_vector());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GapStatus {
    Gapped,
    Gapless,
}

impl GapStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            GapStatus::Gapped => "gapped",
            GapStatus::Gapless => "gapless",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub theta1: f64,
    pub theta2: f64,
    /// Rounded winding number; `None` when gapless.
    pub winding: Option<i32>,
    /// The quadrature value before rounding; `None` when gapless.
    pub raw_winding: Option<f64>,
    /// Smallest `sin E(k)` over the grid.
    pub min_gap: f64,
    pub status: GapStatus,
}

impl PhasePoint {
    /// `|raw - round(raw)|`.
    pub fn residual(&self) -> Option<f64> {
        self.raw_winding.map(|r| (r - r.round()).abs())
    }
}

/// How `dn/dk` is obtained inside the winding integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindingDerivative {
    /// Closed-form derivative of `d(k) / |d(k)|`.
    Analytic,
    /// Centered differences on the periodic grid. Second-order accurate only.
    CenteredDifference,
}

/// `-(1/2 pi) \oint A . (n x dn/dk) dk` by the periodic trapezoid rule, together
/// with the minimum gap on the grid. Returns `None` for the integral when gapless.
pub fn winding_integral(
    theta1: f64,
    theta2: f64,
    n_k: usize,
    derivative: WindingDerivative,
) -> Result<(Option<f64>, f64)> {
    let grid = MomentumGrid::uniform(n_k)?;
    let axis = winding_axis(theta1);
    let (s1, c1) = (0.5 * theta1).sin_cos();
    let c2 = (0.5 * theta2).cos();
    let points: Vec<BlochPoint> = grid.points().iter().map(|&k| BlochPoint::new(theta1, theta2, k)).collect();
    let min_gap = points.iter().map(BlochPoint::sin_energy).fold(f64::INFINITY, f64::min);
    if min_gap < GAP_TOLERANCE {
        return Ok((None, min_gap));
    }
    let unit: Vec<[f64; 3]> = points.iter().map(|p| p.unit_vector().expect("gapped")).collect();
    let h = 2.0 * PI / n_k as f64;
    let mut sum = 0.0;
    for (j, p) in points.iter().enumerate() {
        let n = unit[j];
        let dn = match derivative {
            WindingDerivative::Analytic => {
                let (sk, ck) = p.k.sin_cos();
                let dd = [c2 * s1 * ck, -c2 * s1 * sk, -c2 * c1 * ck];
                let r = p.sin_energy();
                let proj = dot3(&p.d, &dd) / (r * r * r);
                [dd[0] / r - p.d[0] * proj, dd[1] / r - p.d[1] * proj, dd[2] / r - p.d[2] * proj]
            }
            WindingDerivative::CenteredDifference => {
                let next = unit[(j + 1) % n_k];
                let prev = unit[(j + n_k - 1) % n_k];
                [(next[0] - prev[0]) / (2.0 * h), (next[1] - prev[1]) / (2.0 * h), (next[2] - prev[2]) / (2.0 * h)]
            }
        };
        sum += dot3(&axis, &cross3(&n, &dn));
    }
    Ok((Some(-sum * h / (2.0 * PI)), min_gap))
}

/// Winding number at `(theta1, theta2)`; gapless points come back flagged, not as errors.
pub fn winding_number(theta1: f64, theta2: f64, n_k: usize) -> Result<PhasePoint> {
    if n_k < 64 {
        return Err(invalid!("winding quadrature needs n_k >= 64, got {n_k}"));
    }
    let (raw, min_gap) = winding_integral(theta1, theta2, n_k, WindingDerivative::Analytic)?;
    Ok(match raw {
        Some(r) => PhasePoint {
            theta1,
            theta2,
            winding: Some(r.round() as i32),
            raw_winding: Some(r),
            min_gap,
            status: GapStatus::Gapped,
        },
        None => PhasePoint { theta1, theta2, winding: None, raw_winding: None, min_gap, status: GapStatus::Gapless },
    })
}

/// Winding numbers on a `theta1 x theta2` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    /// Row-major: `points[i1 * theta2.len() + i2]`.
    pub points: Vec<PhasePoint>,
}

impl PhaseDiagram {
    pub fn get(&self, i1: usize, i2: usize) -> &PhasePoint {
        &self.points[i1 * self.theta2.len() + i2]
    }
}

pub fn phase_diagram(theta1_grid: &[f64], theta2_grid: &[f64], n_k: usize) -> Result<PhaseDiagram> {
    if theta1_grid.is_empty() || theta2_grid.is_empty() {
        return Err(invalid!("phase diagram grids must be non-empty"));
    }
    let n2 = theta2_grid.len();
    let points =
        par::map_indexed(theta1_grid.len() * n2, |i| winding_number(theta1_grid[i / n2], theta2_grid[i % n2], n_k))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
    Ok(PhaseDiagram { theta1: theta1_grid.to_vec(), theta2: theta2_grid.to_vec(), points })
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_coins_at_zero_momentum() {
        let b = BlochPoint::new(0.0, 0.0, 0.0);
        assert_eq!((b.d0, b.d), (1.0, [0.0, 0.0, 0.0]));
    }

    #[test]
    fn grid_validation() {
        assert!(MomentumGrid::uniform(7).is_err());
        let g = MomentumGrid::uniform(8).unwrap();
        assert_eq!(g.points()[0], -PI);
        assert!(winding_number(1.0, 1.0, 32).is_err());
        assert!(phase_diagram(&[], &[1.0], 64).is_err());
    }

    #[test]
    fn decomposition_invariants() {
        let g = MomentumGrid::uniform(256).unwrap();
        for &(t1, t2) in &[(0.9 * PI, 0.75 * PI), (0.05 * PI, 0.75 * PI), (-2.1, 0.4), (2.9, -3.0)] {
            let b = bloch_components(t1, t2, &g);
            for j in 0..g.len() {
                let s = b.d0[j].powi(2) + b.dx[j].powi(2) + b.dy[j].powi(2) + b.dz[j].powi(2);
                assert!((s - 1.0).abs() < 1e-12);
                assert!((b.quasi_energy[j].cos() - b.d0[j]).abs() < 1e-12);
                assert!((0.0..=PI).contains(&b.quasi_energy[j]));
                if let Some(n) = b.unit_vector[j] {
                    assert!((norm3(&n) - 1.0).abs() < 1e-10);
                    assert!(dot3(&b.axis, &n).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn reference_markers() {
        let nontrivial = winding_number(0.9 * PI, 0.75 * PI, DEFAULT_NK).unwrap();
        assert_eq!(nontrivial.winding, Some(1));
        assert!(nontrivial.residual().unwrap() < 1e-6);
        let trivial = winding_number(0.05 * PI, 0.75 * PI, DEFAULT_NK).unwrap();
        assert_eq!(trivial.winding, Some(0));
        let critical = winding_number(0.75 * PI, 0.75 * PI, DEFAULT_NK).unwrap();
        assert_eq!(critical.status, GapStatus::Gapless);
        assert_eq!(critical.winding, None);
    }

    #[test]
    fn centered_difference_converges_to_analytic() {
        let (exact, _) = winding_integral(0.8 * PI, 0.75 * PI, 1024, WindingDerivative::Analytic).unwrap();
        let (fd1, _) = winding_integral(0.8 * PI, 0.75 * PI, 1024, WindingDerivative::CenteredDifference).unwrap();
        let (fd2, _) = winding_integral(0.8 * PI, 0.75 * PI, 2048, WindingDerivative::CenteredDifference).unwrap();
        let (e1, e2) = ((fd1.unwrap() - exact.unwrap()).abs(), (fd2.unwrap() - exact.unwrap()).abs());
        // second order: halving h cuts the error by about 4
        assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "{e1} {e2}");
    }

    #[test]
    fn neighbourhood_of_nontrivial_marker() {
        let t1: Vec<f64> = (-1..=1).map(|i| (0.9 + 0.01 * i as f64) * PI).collect();
        let t2: Vec<f64> = (-1..=1).map(|i| (0.75 + 0.01 * i as f64) * PI).collect();
        let d = phase_diagram(&t1, &t2, DEFAULT_NK).unwrap();
        assert!(d.points.iter().all(|p| p.winding == Some(1)));
    }

    proptest::proptest! {
        #[test]
        fn unitarity_identity(t1 in -PI..PI, t2 in -PI..PI, k in -PI..PI) {
            let b = BlochPoint::new(t1, t2, k);
            proptest::prop_assert!((b.d0 * b.d0 + dot3(&b.d, &b.d) - 1.0).abs() < 1e-12);
        }
    }
}
