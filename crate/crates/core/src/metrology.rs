//! Fisher information about the defect angle: the binary defect-site measurement,
//! full position measurement, the quantum bound, multi-time averaging, and
//! power-law fits of the growth with step count.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::field::CoinSchedule;
use crate::fit::{power_law, PowerLaw};
use crate::params::WalkParams;
use crate::state::WalkerState;
use crate::walk::PairWalker;

/// Probabilities below this (or above `1 - P_FLOOR`) are treated as exactly 0 (or 1).
pub const P_FLOOR: f64 = 1e-12;
/// Minimum number of samples accepted by [`fit_scaling`].
pub const MIN_FIT_POINTS: usize = 5;
/// Default lower end of the scaling-fit window.
pub const DEFAULT_FIT_START: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FisherKind {
    DefectSite,
    Global,
    Quantum,
    Averaged,
}

impl FisherKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FisherKind::DefectSite => "defect_site_fi",
            FisherKind::Global => "global_fi",
            FisherKind::Quantum => "quantum_fi",
            FisherKind::Averaged => "averaged_fi",
        }
    }
}

/// Fisher information against step count. `times` are integers except for averaged
/// series, whose abscissa is the mean of the sampled steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherSeries {
    pub kind: FisherKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Set where the measurement statistics are degenerate and the value was forced to 0.
    pub flagged: Vec<bool>,
    pub params: WalkParams,
}

impl FisherSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at integer step `t`, if sampled.
    pub fn at(&self, t: usize) -> Option<f64> {
        self.times.iter().position(|&x| x == t as f64).map(|i| self.values[i])
    }
}

/// `FI = (dP/dtheta)^2 / (P (1 - P))` for a binary outcome; `None` when degenerate.
pub fn binary_fisher(p: f64, dp: f64) -> Option<f64> {
    if !(P_FLOOR..=1.0 - P_FLOOR).contains(&p) {
        return None;
    }
    Some(dp * dp / (p * (1.0 - p)))
}

/// Probability at one site and its derivative, `dP = 2 Re sum_c conj(psi) dpsi`.
#[inline]
fn site_probability_and_derivative(psi: &[Complex64], dpsi: &[Complex64], site: usize) -> (f64, f64) {
    let (a, b) = (psi[2 * site], psi[2 * site + 1]);
    let (da, db) = (dpsi[2 * site], dpsi[2 * site + 1]);
    let p = a.norm_sqr() + b.norm_sqr();
    let dp = 2.0 * ((a.conj() * da).re + (b.conj() * db).re);
    (p, dp)
}

fn global_fisher_value(psi: &[Complex64], dpsi: &[Complex64]) -> f64 {
    (0..psi.len() / 2)
        .map(|i| site_probability_and_derivative(psi, dpsi, i))
        .filter(|&(p, _)| p >= P_FLOOR)
        .map(|(p, dp)| dp * dp / p)
        .sum()
}

fn quantum_fisher_value(psi: &[Complex64], dpsi: &[Complex64]) -> f64 {
    let dd: f64 = dpsi.iter().map(|d| d.norm_sqr()).sum();
    let overlap: Complex64 = dpsi.iter().zip(psi).map(|(d, p)| d.conj() * p).sum();
    (4.0 * (dd - overlap.norm_sqr())).max(0.0)
}

/// All three Fisher informations sampled on one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherSet {
    pub defect_site: FisherSeries,
    pub global: FisherSeries,
    pub quantum: FisherSeries,
    /// `P0(t)`, the defect-site occupation.
    pub defect_probability: Vec<f64>,
}

/// Samples `t = 0..=steps` along the trajectory driven by `schedule`. The defect is the
/// layer-2 coin at x = 0; `params` is recorded as metadata.
pub fn fisher_set_schedule(
    schedule: &CoinSchedule,
    params: &WalkParams,
    initial: &WalkerState,
    steps: usize,
) -> Result<FisherSet> {
    if steps < 1 {
        return Err(invalid!("Fisher series need at least one step"));
    }
    let mut walker = PairWalker::new(schedule, initial.clone(), 0, steps)?;
    let site = walker.defect_index();
    let n = steps + 1;
    let mut times = Vec::with_capacity(n);
    let (mut fi, mut fi_flag) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut gfi = Vec::with_capacity(n);
    let mut qfi = Vec::with_capacity(n);
    let mut p0 = Vec::with_capacity(n);
    loop {
        let (psi, dpsi) = (walker.state(), walker.derivative());
        let (p, dp) = site_probability_and_derivative(psi, dpsi, site);
        times.push(walker.time() as f64);
        p0.push(p);
        match binary_fisher(p, dp) {
            Some(v) => {
                fi.push(v);
                fi_flag.push(false);
            }
            None => {
                fi.push(0.0);
                fi_flag.push(true);
            }
        }
        gfi.push(global_fisher_value(psi, dpsi));
        qfi.push(quantum_fisher_value(psi, dpsi));
        if walker.time() == steps {
            break;
        }
        walker.step()?;
    }
    let series = |kind, values, flagged| FisherSeries { kind, times: times.clone(), values, flagged, params: *params };
    Ok(FisherSet {
        defect_site: series(FisherKind::DefectSite, fi, fi_flag),
        global: series(FisherKind::Global, gfi, alloc::vec![false; n]),
        quantum: series(FisherKind::Quantum, qfi, alloc::vec![false; n]),
        defect_probability: p0,
    })
}

pub fn fisher_set(params: &WalkParams, initial: &WalkerState, steps: usize) -> Result<FisherSet> {
    fisher_set_schedule(&CoinSchedule::Static(params.coin_field()), params, initial, steps)
}

/// Defect-site Fisher information `FI(t)`, `t = 0..=steps`.
pub fn fisher_at_defect(params: &WalkParams, initial: &WalkerState, steps: usize) -> Result<FisherSeries> {
    Ok(fisher_set(params, initial, steps)?.defect_site)
}

/// Fisher information of the full position distribution.
pub fn global_fisher(params: &WalkParams, initial: &WalkerState, steps: usize) -> Result<FisherSeries> {
    Ok(fisher_set(params, initial, steps)?.global)
}

/// `QFI = 4 (<dpsi|dpsi> - |<dpsi|psi>|^2)`.
pub fn quantum_fisher(params: &WalkParams, initial: &WalkerState, steps: usize) -> Result<FisherSeries> {
    Ok(fisher_set(params, initial, steps)?.quantum)
}

/// Default multi-time window: five samples five steps apart.
pub const DEFAULT_AVERAGE_WINDOW: usize = 5;
pub const DEFAULT_AVERAGE_SPACING: usize = 5;

/// Mean of `window` samples `spacing` steps apart, placed at their mean time, for every
/// start position that fits inside the series.
pub fn averaged_fisher(series: &FisherSeries, window: usize, spacing: usize) -> Result<FisherSeries> {
    if window < 1 || spacing < 1 {
        return Err(invalid!("averaging window and spacing must be >= 1, got {window} and {spacing}"));
    }
    if series.times.windows(2).any(|w| w[1] - w[0] != 1.0) {
        return Err(invalid!("averaging requires a series sampled at consecutive steps"));
    }
    let span = (window - 1) * spacing;
    if series.len() <= span {
        return Err(invalid!(
            "series of {} samples too short for {window} points spaced {spacing} apart",
            series.len()
        ));
    }
    let count = series.len() - span;
    let mut out = FisherSeries {
        kind: FisherKind::Averaged,
        times: Vec::with_capacity(count),
        values: Vec::with_capacity(count),
        flagged: Vec::with_capacity(count),
        params: series.params,
    };
    for start in 0..count {
        let idx = (0..window).map(|i| start + i * spacing);
        let (mut t, mut v, mut all_flagged) = (0.0, 0.0, true);
        for i in idx {
            t += series.times[i];
            v += series.values[i];
            all_flagged &= series.flagged[i];
        }
        out.times.push(t / window as f64);
        out.values.push(v / window as f64);
        out.flagged.push(all_flagged);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitMode {
    AllPoints,
    PeaksOnly,
}

impl FitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMode::AllPoints => "all_points",
            FitMode::PeaksOnly => "peaks_only",
        }
    }
}

/// `FI ~ prefactor * t^exponent` over `window`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub fit_window: (f64, f64),
    pub mode: FitMode,
    pub points: usize,
}

impl ScalingFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.prefactor * t.powf(self.exponent)
    }
}

/// Indices of strict local maxima over a three-point stencil.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1]).collect()
}

/// Least-squares fit on `(ln t, ln FI)` inside `window` (inclusive), ignoring flagged and
/// non-positive samples.
pub fn fit_scaling(series: &FisherSeries, mode: FitMode, window: (f64, f64)) -> Result<ScalingFit> {
    let candidates: Vec<usize> = match mode {
        FitMode::AllPoints => (0..series.len()).collect(),
        FitMode::PeaksOnly => local_maxima(&series.values),
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = candidates
        .into_iter()
        .filter(|&i| !series.flagged[i] && series.times[i] >= window.0 && series.times[i] <= window.1)
        .map(|i| (series.times[i], series.values[i]))
        .unzip();
    let PowerLaw { exponent, prefactor, r_squared, points } = power_law(&xs, &ys, MIN_FIT_POINTS)?;
    Ok(ScalingFit { exponent, prefactor, r_squared, fit_window: window, mode, points })
}

/// Fit over `[DEFAULT_FIT_START, last sampled time]`.
pub fn fit_scaling_default(series: &FisherSeries, mode: FitMode) -> Result<ScalingFit> {
    let end = series.times.last().copied().unwrap_or(0.0);
    fit_scaling(series, mode, (DEFAULT_FIT_START, end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Lattice;

    fn synthetic(values: Vec<f64>) -> FisherSeries {
        let n = values.len();
        FisherSeries {
            kind: FisherKind::DefectSite,
            times: (1..=n).map(|t| t as f64).collect(),
            flagged: alloc::vec![false; n],
            values,
            params: WalkParams::new(0.0, 0.0, 0.0, 3).unwrap(),
        }
    }

    #[test]
    fn binary_fisher_arithmetic() {
        assert_eq!(binary_fisher(0.5, 1.0), Some(4.0));
        assert_eq!(binary_fisher(0.0, 0.0), None);
        assert_eq!(binary_fisher(1.0, 0.0), None);
    }

    #[test]
    fn exact_power_laws() {
        let s = synthetic((1..=60).map(|t| 3.0 * (t as f64).powi(2)).collect());
        let f = fit_scaling(&s, FitMode::AllPoints, (10.0, 60.0)).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-10);
        assert!((f.prefactor - 3.0).abs() < 1e-9);
        let s = synthetic((1..=60).map(|t| 5.0 * t as f64).collect());
        let f = fit_scaling(&s, FitMode::AllPoints, (10.0, 60.0)).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-10);
    }

    #[test]
    fn too_few_points() {
        let s = synthetic((1..=8).map(|t| t as f64).collect());
        assert!(fit_scaling(&s, FitMode::AllPoints, (5.0, 8.0)).is_err());
        assert!(fit_scaling(&s, FitMode::PeaksOnly, (1.0, 8.0)).is_err());
    }

    #[test]
    fn peaks_of_an_oscillation() {
        // Peaks at multiples of 4 where the value is exactly t^2.
        let s = synthetic(
            (1..=80)
                .map(|t| {
                    let t = t as f64;
                    t * t * (0.01 + 0.495 * (1.0 + (core::f64::consts::FRAC_PI_2 * t).cos()))
                })
                .collect(),
        );
        let peaks = local_maxima(&s.values);
        assert!(peaks.iter().all(|&i| (i + 1) % 4 == 0));
        let f = fit_scaling(&s, FitMode::PeaksOnly, (10.0, 80.0)).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-10);
    }

    #[test]
    fn averaging_identities() {
        let s = synthetic((1..=40).map(|t| (t as f64).sqrt()).collect());
        assert_eq!(averaged_fisher(&s, 1, 5).unwrap().values, s.values);
        let c = synthetic(alloc::vec![2.5; 40]);
        let a = averaged_fisher(&c, 5, 5).unwrap();
        assert_eq!(a.len(), 40 - 20);
        assert!(a.values.iter().all(|v| (v - 2.5).abs() < 1e-15));
        assert_eq!(a.times[0], 11.0);
        assert!(averaged_fisher(&c, 5, 10).is_err());
        assert!(averaged_fisher(&c, 0, 5).is_err());
    }

    #[test]
    fn pre_arrival_steps_are_flagged() {
        let p = WalkParams::from_pi_units(0.9, 0.75, -0.55, 41).unwrap();
        let s = WalkerState::localized(p.lattice(), -5, crate::state::Coin::Down).unwrap();
        let fi = fisher_at_defect(&p, &s, 10).unwrap();
        assert!(fi.flagged[0] && fi.flagged[1]);
        assert_eq!(fi.values[1], 0.0);
        assert!(fisher_at_defect(&p, &s, 0).is_err());
    }

    #[test]
    fn no_information_before_the_walker_reaches_the_defect() {
        let l = Lattice::new(41).unwrap();
        let p = WalkParams::new(0.4, 0.3, 0.3, l.size()).unwrap();
        let s = WalkerState::localized(l, -18, crate::state::Coin::Down).unwrap();
        let g = global_fisher(&p, &s, 10).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
        // theta02 == theta2 is still a point of the parameter family
        assert!(global_fisher(&p, &s, 30).unwrap().values[30] > 0.0);
    }
}
