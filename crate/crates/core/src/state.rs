//! Lattice geometry and walker states over the (position, coin) basis.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};

/// Internal coin state. `Up` is shifted right by `T_up`, `Down` left by `T_down`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coin {
    Up,
    Down,
}

impl Coin {
    #[inline]
    pub fn offset(self) -> usize {
        match self {
            Coin::Up => 0,
            Coin::Down => 1,
        }
    }
}

/// A periodic ring of `N` sites (odd, `N >= 3`), labelled by physical positions
/// `-(N-1)/2 ..= (N-1)/2`. The defect sits at position 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lattice {
    size: usize,
}

impl Lattice {
    pub fn new(size: usize) -> Result<Self> {
        if size < 3 || size.is_multiple_of(2) {
            return Err(invalid!("lattice size must be odd and >= 3, got {size}"));
        }
        Ok(Lattice { size })
    }

    /// Smallest odd lattice on which a walk of `max_steps` never wraps: `2 t_max + 3`.
    pub fn wrap_free(max_steps: usize) -> Self {
        Lattice { size: 2 * max_steps + 3 }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    /// Lattice index of physical position 0.
    #[inline]
    pub fn origin_offset(&self) -> usize {
        (self.size - 1) / 2
    }

    pub fn min_position(&self) -> i64 {
        -(self.origin_offset() as i64)
    }

    pub fn max_position(&self) -> i64 {
        self.origin_offset() as i64
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.min_position() && x <= self.max_position()
    }

    pub fn index_of(&self, x: i64) -> Result<usize> {
        if !self.contains(x) {
            return Err(invalid!("position {x} outside lattice [{}, {}]", self.min_position(), self.max_position()));
        }
        Ok((x + self.origin_offset() as i64) as usize)
    }

    #[inline]
    pub fn position_of(&self, index: usize) -> i64 {
        index as i64 - self.origin_offset() as i64
    }

    /// Index into the coin-major amplitude array.
    pub fn amplitude_index(&self, x: i64, coin: Coin) -> Result<usize> {
        Ok(2 * self.index_of(x)? + coin.offset())
    }

    /// Physical positions in lattice order.
    pub fn positions(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.size).map(|i| self.position_of(i))
    }
}

/// Tolerance on `| ||psi|| - 1 |` for a state to count as physical.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Pure state of the walker. Amplitudes are stored coin-major per site:
/// `[(x_min, up), (x_min, down), (x_min + 1, up), ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState {
    amplitudes: Vec<Complex64>,
    lattice: Lattice,
}

impl WalkerState {
    /// The basis state `|x, c>`.
    pub fn localized(lattice: Lattice, x: i64, coin: Coin) -> Result<Self> {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * lattice.size()];
        amplitudes[lattice.amplitude_index(x, coin)?] = Complex64::new(1.0, 0.0);
        Ok(WalkerState { amplitudes, lattice })
    }

    /// `|-1, down>`, the initial state of every sensing run.
    pub fn default_initial(lattice: Lattice) -> Self {
        Self::localized(lattice, -1, Coin::Down).expect("x = -1 exists on every lattice")
    }

    /// Wraps already-normalized amplitudes; fails if the norm is off by more than 1e-12.
    pub fn from_amplitudes(lattice: Lattice, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 2 * lattice.size() {
            return Err(invalid!("expected {} amplitudes, got {}", 2 * lattice.size(), amplitudes.len()));
        }
        let norm = norm(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(invalid!("state norm {norm} differs from 1"));
        }
        Ok(WalkerState { amplitudes, lattice })
    }

    /// Rescales arbitrary (nonzero) amplitudes to unit norm.
    pub fn normalized(lattice: Lattice, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 2 * lattice.size() {
            return Err(invalid!("expected {} amplitudes, got {}", 2 * lattice.size(), amplitudes.len()));
        }
        let n = norm(&amplitudes);
        if !(n.is_finite() && n > 0.0) {
            return Err(invalid!("cannot normalize a state of norm {n}"));
        }
        for a in &mut amplitudes {
            *a /= n;
        }
        Ok(WalkerState { amplitudes, lattice })
    }

    /// Unchecked constructor for amplitudes produced by unitary evolution.
    pub(crate) fn from_evolved(lattice: Lattice, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 2 * lattice.size());
        WalkerState { amplitudes, lattice }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, x: i64, coin: Coin) -> Result<Complex64> {
        Ok(self.amplitudes[self.lattice.amplitude_index(x, coin)?])
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Occupation probability of every site, in lattice order.
    pub fn site_probabilities(&self) -> Vec<f64> {
        site_probabilities(&self.amplitudes)
    }
}

/// `|<x, up|psi>|^2 + |<x, down|psi>|^2`.
pub fn position_probability(state: &WalkerState, x: i64) -> Result<f64> {
    let i = state.lattice.index_of(x)?;
    Ok(state.amplitudes[2 * i].norm_sqr() + state.amplitudes[2 * i + 1].norm_sqr())
}

pub(crate) fn norm(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn site_probabilities(amplitudes: &[Complex64]) -> Vec<f64> {
    amplitudes.chunks_exact(2).map(|pair| pair[0].norm_sqr() + pair[1].norm_sqr()).collect()
}
