//! Full spectrum of the one-step operator with a defect, and the defect-bound
//! eigenstates it hosts.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fit::linear_regression;
use crate::hermitian::{hermitian_eigen, CMatrix};
use crate::params::WalkParams;
use crate::state::{site_probabilities, Lattice};
use crate::walk::step_in_place;

/// Largest lattice (in sites) accepted by the dense solver; the matrix is `2N x 2N`.
pub const DEFAULT_SITE_CAP: usize = 512;
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Eigenvalues of the Hermitian auxiliary operator closer than this are resolved together.
const CLUSTER_GAP: f64 = 1e-9;
/// Probability below which a profile counts as numerically zero in the decay fit.
const PROFILE_FLOOR: f64 = 1e-12;

/// `(primary, refinement)` weights `a` in `(U + U^dagger)/2 + a (U - U^dagger)/(2i)`.
/// The first pair is plain cosine-then-sine resolution; the others break accidental
/// degeneracies of the cosine operator.
const AUXILIARY_WEIGHTS: [(f64, f64); 3] = [(0.0, 1.0), (0.293_157_2, -1.387_402_9), (-0.561_829_3, 0.724_619_1)];

/// Dense matrix of `U` in the coin-major basis.
pub fn step_matrix(params: &WalkParams) -> CMatrix {
    let dim = 2 * params.lattice().size();
    let field = params.coin_field().prepare();
    let mut m = CMatrix::zeros(dim);
    let mut col = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..dim {
        col.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        col[j] = Complex64::new(1.0, 0.0);
        step_in_place(&mut col, &field);
        for (i, v) in col.iter().enumerate() {
            if *v != Complex64::new(0.0, 0.0) {
                m.set(i, j, *v);
            }
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub lattice: Lattice,
    /// `lambda_j = <v_j | U | v_j>`, on the unit circle.
    pub eigenvalues: Vec<Complex64>,
    /// `E_j = -arg(lambda_j)` in `(-pi, pi]`, ascending.
    pub quasi_energies: Vec<f64>,
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// `|| U v_j - lambda_j v_j ||`.
    pub residuals: Vec<f64>,
    /// Largest deviation of the Gram matrix from the identity.
    pub orthonormality_defect: f64,
}

impl SpectralDecomposition {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Inverse participation ratio of eigenstate `j` over sites.
    pub fn ipr(&self, j: usize) -> f64 {
        site_probabilities(&self.eigenvectors[j]).iter().map(|p| p * p).sum()
    }
}

pub fn decompose_step_operator(params: &WalkParams) -> Result<SpectralDecomposition> {
    decompose_step_operator_capped(params, DEFAULT_SITE_CAP)
}

pub fn decompose_step_operator_capped(params: &WalkParams, site_cap: usize) -> Result<SpectralDecomposition> {
    let sites = params.lattice().size();
    if sites > site_cap {
        return Err(Error::Capacity(format!("dense spectral solver limited to {site_cap} sites, got {sites}")));
    }
    let u = step_matrix(params);
    let mut best: Option<SpectralDecomposition> = None;
    for &(primary, refine) in &AUXILIARY_WEIGHTS {
        let d = diagonalize_unitary(&u, params.lattice(), primary, refine)?;
        if d.max_residual() < RESIDUAL_TOLERANCE && d.orthonormality_defect < RESIDUAL_TOLERANCE {
            return Ok(d);
        }
        if best.as_ref().is_none_or(|b| d.max_residual() < b.max_residual()) {
            best = Some(d);
        }
    }
    let best = best.expect("at least one attempt");
    Err(Error::Numerical(format!(
        "eigendecomposition residual {:e} (orthonormality {:e}) exceeds {RESIDUAL_TOLERANCE:e}",
        best.max_residual(),
        best.orthonormality_defect
    )))
}

fn auxiliary(u: &CMatrix, a: f64) -> CMatrix {
    // (U + U^dagger)/2 + a (U - U^dagger)/(2i)
    let half = Complex64::new(0.5, 0.0);
    let minus_half_i = Complex64::new(0.0, -0.5);
    CMatrix::from_fn(u.dim(), |r, c| {
        let (x, y) = (u.get(r, c), u.get(c, r).conj());
        half * (x + y) + minus_half_i * a * (x - y)
    })
}

fn diagonalize_unitary(u: &CMatrix, lattice: Lattice, primary: f64, refine: f64) -> Result<SpectralDecomposition> {
    let dim = u.dim();
    let first = hermitian_eigen(&auxiliary(u, primary))?;
    let second = auxiliary(u, refine);
    let mut vectors = first.vectors;

    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && first.values[end] - first.values[end - 1] < CLUSTER_GAP {
            end += 1;
        }
        if end - start > 1 {
            let block: Vec<Vec<Complex64>> = vectors[start..end].to_vec();
            let images: Vec<Vec<Complex64>> = block.iter().map(|v| second.mul_vec(v)).collect();
            let k = end - start;
            let restricted = CMatrix::from_fn(k, |r, c| inner(&block[r], &images[c]));
            let sub = hermitian_eigen(&restricted)?;
            for (slot, w) in sub.vectors.iter().enumerate() {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                for (coef, basis) in w.iter().zip(&block) {
                    for (vi, bi) in v.iter_mut().zip(basis) {
                        *vi += coef * bi;
                    }
                }
                vectors[start + slot] = v;
            }
        }
        start = end;
    }

    let mut entries: Vec<(f64, Complex64, f64, Vec<Complex64>)> = vectors
        .into_iter()
        .map(|v| {
            let uv = u.mul_vec(&v);
            let lambda = inner(&v, &uv);
            let residual = uv.iter().zip(&v).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>().sqrt();
            (quasi_energy(lambda), lambda, residual, v)
        })
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut out = SpectralDecomposition {
        lattice,
        eigenvalues: Vec::with_capacity(dim),
        quasi_energies: Vec::with_capacity(dim),
        eigenvectors: Vec::with_capacity(dim),
        residuals: Vec::with_capacity(dim),
        orthonormality_defect: 0.0,
    };
    for (e, lambda, res, v) in entries {
        out.quasi_energies.push(e);
        out.eigenvalues.push(lambda);
        out.residuals.push(res);
        out.eigenvectors.push(v);
    }
    out.orthonormality_defect = gram_defect(&out.eigenvectors);
    Ok(out)
}

/// `E = -arg(lambda)` folded into `(-pi, pi]`.
pub fn quasi_energy(lambda: Complex64) -> f64 {
    let e = -lambda.arg();
    if e <= -PI {
        e + 2.0 * PI
    } else {
        e
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn gram_defect(vectors: &[Vec<Complex64>]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..vectors.len() {
        for j in i..vectors.len() {
            let g = inner(&vectors[i], &vectors[j]);
            let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}

/// States with `ipr > factor / N` count as localized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationThreshold {
    pub factor: f64,
}

impl Default for LocalizationThreshold {
    fn default() -> Self {
        LocalizationThreshold { factor: 5.0 }
    }
}

impl LocalizationThreshold {
    pub fn ipr_threshold(&self, lattice: Lattice) -> f64 {
        self.factor / lattice.size() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedState {
    /// Index into the parent decomposition.
    pub index: usize,
    pub quasi_energy: f64,
    /// Site occupation probabilities, lattice order.
    pub profile: Vec<f64>,
    /// Physical position of the profile maximum.
    pub peak_position: i64,
    /// Decay length in sites from the fitted exponential flank.
    pub localization_length: f64,
    pub ipr: f64,
}

pub fn find_localized_states(decomp: &SpectralDecomposition, defect_site: i64) -> Result<Vec<LocalizedState>> {
    find_localized_states_with(decomp, defect_site, LocalizationThreshold::default())
}

pub fn find_localized_states_with(
    decomp: &SpectralDecomposition,
    defect_site: i64,
    threshold: LocalizationThreshold,
) -> Result<Vec<LocalizedState>> {
    let lattice = decomp.lattice;
    let origin = lattice.index_of(defect_site)?;
    let cut = threshold.ipr_threshold(lattice);
    let mut states = Vec::new();
    for (j, v) in decomp.eigenvectors.iter().enumerate() {
        let profile = site_probabilities(v);
        let ipr: f64 = profile.iter().map(|p| p * p).sum();
        if ipr <= cut {
            continue;
        }
        let peak = profile.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(origin);
        let localization_length = decay_length(&profile, peak)?;
        states.push(LocalizedState {
            index: j,
            quasi_energy: decomp.quasi_energies[j],
            peak_position: lattice.position_of(peak),
            profile,
            localization_length,
            ipr,
        });
    }
    states.sort_by(|a, b| {
        a.quasi_energy.abs().total_cmp(&b.quasi_energy.abs()).then(a.quasi_energy.total_cmp(&b.quasi_energy))
    });
    Ok(states)
}

/// Fits `log p = c_side - d / xi` on the two flanks of the peak, one intercept per
/// flank and a shared slope. A flank runs outward from the peak (exclusive) until the
/// probability first drops below the floor or the walk reaches halfway round the ring.
fn decay_length(profile: &[f64], peak: usize) -> Result<f64> {
    let n = profile.len();
    let half = (n - 1) / 2;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    let mut used = 0;
    for dir in [1usize, n - 1] {
        let flank: Vec<(f64, f64)> = (1..=half)
            .map(|d| (d as f64, profile[(peak + dir * d) % n]))
            .take_while(|&(_, p)| p >= PROFILE_FLOOR)
            .map(|(d, p)| (d, p.ln()))
            .collect();
        if flank.len() < 2 {
            continue;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = flank.into_iter().unzip();
        let line = linear_regression(&xs, &ys)?;
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let vx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxx += vx;
        sxy += line.slope * vx;
        used += 1;
    }
    if used == 0 {
        // Decays below the floor within one site; report that upper bound.
        return Ok(1.0 / -PROFILE_FLOOR.ln());
    }
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-1.0 / slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_error() {
        let p = WalkParams::new(0.3, 0.2, 0.1, 9).unwrap();
        assert!(matches!(decompose_step_operator_capped(&p, 7), Err(Error::Capacity(_))));
    }

    #[test]
    fn shift_only_spectrum() {
        let n = 9;
        let p = WalkParams::new(0.0, 0.0, 0.0, n).unwrap();
        let d = decompose_step_operator(&p).unwrap();
        assert!(d.max_residual() < 1e-10);
        // Each coin branch is a cyclic shift, so lambda^N = 1.
        for lambda in &d.eigenvalues {
            assert!((lambda.powu(n as u32) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn quasi_energy_branch() {
        assert_eq!(quasi_energy(Complex64::new(-1.0, 0.0)), PI);
        assert!((quasi_energy(Complex64::new(0.0, -1.0)) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn no_defect_means_no_localized_states() {
        let p = WalkParams::defect_free(0.9 * PI, 0.75 * PI, 41).unwrap();
        let d = decompose_step_operator(&p).unwrap();
        assert!(find_localized_states(&d, 0).unwrap().is_empty());
    }
}
