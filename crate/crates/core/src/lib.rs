//! Split-step discrete-time quantum walks with a single coin defect, used as a
//! sensor for the defect angle.
//!
//! The crate is `no_std` (it needs `alloc`). The `parallel` feature, on by
//! default, pulls in `std` and spreads independent sweeps over rayon.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod bayes;
pub mod coin;
pub mod disorder;
pub mod error;
pub mod field;
pub mod fit;
pub mod hermitian;
pub mod metrology;
mod par;
pub mod params;
pub mod rng;
pub mod spectral;
pub mod state;
pub mod topology;
pub mod walk;

pub use coin::{coin_matrix, coin_matrix_derivative, CoinMatrix, Mat2};
pub use error::{Error, Result};
pub use field::{CoinField, CoinSchedule};
pub use params::{canonical_angle, Boundary, WalkParams};
pub use state::{position_probability, Coin, Lattice, WalkerState};
pub use walk::{apply_step, apply_step_with_derivative, evolve, evolve_schedule, DerivativePair};

pub use num_complex::Complex64;
