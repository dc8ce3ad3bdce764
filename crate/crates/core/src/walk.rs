//! The split-step unitary `U = T_down R2 T_up R1` and its exact derivative
//! with respect to the defect angle.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::coin::coin_matrix_derivative;
use crate::coin::Mat2;
use crate::error::{invalid, Result};
use crate::field::{CoinField, CoinSchedule, PreparedField};
use crate::params::WalkParams;
use crate::state::{Lattice, WalkerState};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
fn coin_layer(amps: &mut [Complex64], layer: &[(f64, f64)]) {
    for (pair, &(c, s)) in amps.chunks_exact_mut(2).zip(layer) {
        let (up, down) = (pair[0], pair[1]);
        pair[0] = up * c - down * s;
        pair[1] = up * s + down * c;
    }
}

/// `T_up`: the up component hops from x to x + 1, periodic.
#[inline]
fn shift_up(amps: &mut [Complex64]) {
    let n = amps.len() / 2;
    let wrapped = amps[2 * (n - 1)];
    for i in (1..n).rev() {
        amps[2 * i] = amps[2 * (i - 1)];
    }
    amps[0] = wrapped;
}

/// `T_down`: the down component hops from x to x - 1, periodic.
#[inline]
fn shift_down(amps: &mut [Complex64]) {
    let n = amps.len() / 2;
    let wrapped = amps[1];
    for i in 0..n - 1 {
        amps[2 * i + 1] = amps[2 * i + 3];
    }
    amps[2 * n - 1] = wrapped;
}

pub(crate) fn step_in_place(amps: &mut [Complex64], field: &PreparedField) {
    coin_layer(amps, &field.layer1);
    shift_up(amps);
    coin_layer(amps, &field.layer2);
    shift_down(amps);
}

/// One step of `(psi, dpsi) -> (U psi, U dpsi + (dU) psi)`, where `dU` differentiates
/// the layer-2 coin at `defect_index` only.
pub(crate) fn step_pair_in_place(
    psi: &mut [Complex64],
    dpsi: &mut [Complex64],
    field: &PreparedField,
    defect_index: usize,
    defect_derivative: &Mat2,
) {
    coin_layer(psi, &field.layer1);
    coin_layer(dpsi, &field.layer1);
    shift_up(psi);
    shift_up(dpsi);
    let (up, down) = (psi[2 * defect_index], psi[2 * defect_index + 1]);
    coin_layer(dpsi, &field.layer2);
    let (dup, ddown) = defect_derivative.apply(up, down);
    dpsi[2 * defect_index] += dup;
    dpsi[2 * defect_index + 1] += ddown;
    coin_layer(psi, &field.layer2);
    shift_down(psi);
    shift_down(dpsi);
}

fn check_field(lattice: Lattice, coins: &CoinField) -> Result<()> {
    if coins.lattice() != lattice {
        return Err(invalid!("coin field has {} sites, state has {}", coins.lattice().size(), lattice.size()));
    }
    Ok(())
}

/// `U |psi>` for the given coins.
pub fn apply_step(state: &WalkerState, coins: &CoinField) -> Result<WalkerState> {
    check_field(state.lattice(), coins)?;
    let mut amps = state.amplitudes().to_vec();
    step_in_place(&mut amps, &coins.prepare());
    Ok(WalkerState::from_evolved(state.lattice(), amps))
}

/// A state together with its derivative with respect to the defect coin angle.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativePair {
    pub state: WalkerState,
    pub derivative: Vec<Complex64>,
}

impl DerivativePair {
    /// `(psi, 0)`: the initial state does not depend on the defect angle.
    pub fn new(state: WalkerState) -> Self {
        let derivative = vec![ZERO; state.amplitudes().len()];
        DerivativePair { state, derivative }
    }

    /// `Re <psi | dpsi>`, zero for a norm-preserving family.
    pub fn tangency(&self) -> f64 {
        self.state.amplitudes().iter().zip(&self.derivative).map(|(a, d)| (a.conj() * d).re).sum()
    }
}

/// `(U psi, U dpsi + (dU) psi)`, differentiating the layer-2 coin at `defect_site`.
pub fn apply_step_with_derivative(
    pair: &DerivativePair,
    coins: &CoinField,
    defect_site: i64,
) -> Result<DerivativePair> {
    let lattice = pair.state.lattice();
    check_field(lattice, coins)?;
    if pair.derivative.len() != pair.state.amplitudes().len() {
        return Err(invalid!("derivative length does not match the state"));
    }
    let defect_index = lattice.index_of(defect_site)?;
    let d_coin = coin_matrix_derivative(coins.layer2()[defect_index])?;
    let mut psi = pair.state.amplitudes().to_vec();
    let mut dpsi = pair.derivative.clone();
    step_pair_in_place(&mut psi, &mut dpsi, &coins.prepare(), defect_index, &d_coin);
    Ok(DerivativePair { state: WalkerState::from_evolved(lattice, psi), derivative: dpsi })
}

/// States after `0..=steps` applications of `U`.
pub fn evolve(params: &WalkParams, initial: &WalkerState, steps: usize) -> Result<Vec<WalkerState>> {
    evolve_schedule(&CoinSchedule::Static(params.coin_field()), initial, steps)
}

/// Like [`evolve`] with explicit (possibly step-dependent) coins.
pub fn evolve_schedule(schedule: &CoinSchedule, initial: &WalkerState, steps: usize) -> Result<Vec<WalkerState>> {
    let mut walker = Walker::new(schedule, initial.clone(), steps)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.clone());
    for _ in 0..steps {
        walker.step()?;
        out.push(WalkerState::from_evolved(initial.lattice(), walker.amplitudes().to_vec()));
    }
    Ok(out)
}

/// Streaming state evolution that reuses the coin cache for static schedules.
pub struct Walker<'a> {
    schedule: &'a CoinSchedule,
    cached: Option<PreparedField>,
    amps: Vec<Complex64>,
    time: usize,
}

impl<'a> Walker<'a> {
    /// `planned_steps` is validated against the schedule length up front.
    pub fn new(schedule: &'a CoinSchedule, initial: WalkerState, planned_steps: usize) -> Result<Self> {
        schedule.check(initial.lattice(), planned_steps)?;
        let cached = match schedule {
            CoinSchedule::Static(f) => Some(f.prepare()),
            CoinSchedule::PerStep(_) => None,
        };
        Ok(Walker { schedule, cached, amps: initial.into_amplitudes(), time: 0 })
    }

    pub fn step(&mut self) -> Result<()> {
        match &self.cached {
            Some(p) => step_in_place(&mut self.amps, p),
            None => step_in_place(&mut self.amps, &self.schedule.field(self.time)?.prepare()),
        }
        self.time += 1;
        Ok(())
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }
}

/// Streaming joint evolution of `(psi, d psi / d theta02)`.
pub struct PairWalker<'a> {
    schedule: &'a CoinSchedule,
    cached: Option<(PreparedField, Mat2)>,
    defect_index: usize,
    psi: Vec<Complex64>,
    dpsi: Vec<Complex64>,
    time: usize,
}

impl<'a> PairWalker<'a> {
    pub fn new(
        schedule: &'a CoinSchedule,
        initial: WalkerState,
        defect_site: i64,
        planned_steps: usize,
    ) -> Result<Self> {
        let lattice = initial.lattice();
        schedule.check(lattice, planned_steps)?;
        let defect_index = lattice.index_of(defect_site)?;
        let cached = match schedule {
            CoinSchedule::Static(f) => Some((f.prepare(), coin_matrix_derivative(f.layer2()[defect_index])?)),
            CoinSchedule::PerStep(_) => None,
        };
        let psi = initial.into_amplitudes();
        let dpsi = vec![ZERO; psi.len()];
        Ok(PairWalker { schedule, cached, defect_index, psi, dpsi, time: 0 })
    }

    pub fn step(&mut self) -> Result<()> {
        match &self.cached {
            Some((p, d)) => step_pair_in_place(&mut self.psi, &mut self.dpsi, p, self.defect_index, d),
            None => {
                let field = self.schedule.field(self.time)?;
                let d = coin_matrix_derivative(field.layer2()[self.defect_index])?;
                step_pair_in_place(&mut self.psi, &mut self.dpsi, &field.prepare(), self.defect_index, &d);
            }
        }
        self.time += 1;
        Ok(())
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn state(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn derivative(&self) -> &[Complex64] {
        &self.dpsi
    }

    pub fn defect_index(&self) -> usize {
        self.defect_index
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{position_probability, Coin};

    fn identity_params(n: usize) -> WalkParams {
        WalkParams::new(0.0, 0.0, 0.0, n).unwrap()
    }

    #[test]
    fn identity_coins_shift_basis_states() {
        let p = identity_params(7);
        let l = p.lattice();
        let down = WalkerState::localized(l, -1, Coin::Down).unwrap();
        let out = apply_step(&down, &p.coin_field()).unwrap();
        assert_eq!(out, WalkerState::localized(l, -2, Coin::Down).unwrap());
        let up = WalkerState::localized(l, 0, Coin::Up).unwrap();
        let out = apply_step(&up, &p.coin_field()).unwrap();
        assert_eq!(out, WalkerState::localized(l, 1, Coin::Up).unwrap());
    }

    #[test]
    fn periodic_wrap() {
        let p = identity_params(5);
        let l = p.lattice();
        let up = WalkerState::localized(l, 2, Coin::Up).unwrap();
        assert_eq!(apply_step(&up, &p.coin_field()).unwrap(), WalkerState::localized(l, -2, Coin::Up).unwrap());
        let down = WalkerState::localized(l, -2, Coin::Down).unwrap();
        assert_eq!(apply_step(&down, &p.coin_field()).unwrap(), WalkerState::localized(l, 2, Coin::Down).unwrap());
    }

    #[test]
    fn mismatched_field_rejected() {
        let s = WalkerState::default_initial(Lattice::new(5).unwrap());
        let f = identity_params(7).coin_field();
        assert!(apply_step(&s, &f).is_err());
        let pair = DerivativePair::new(s);
        let f5 = identity_params(5).coin_field();
        assert!(apply_step_with_derivative(&pair, &f5, 3).is_err());
    }

    #[test]
    fn first_derivative_is_du_psi() {
        let p = WalkParams::new(1.1, -0.7, 2.3, 9).unwrap();
        let l = p.lattice();
        let psi0 = WalkerState::localized(l, 0, Coin::Up).unwrap();
        let out = apply_step_with_derivative(&DerivativePair::new(psi0.clone()), &p.coin_field(), 0).unwrap();
        // (dU) psi0 assembled by hand: R1, T_up, dR(theta02) on the defect site only, T_down.
        let mut amps = psi0.amplitudes().to_vec();
        coin_layer(&mut amps, &vec![crate::coin::half_angle(1.1); 9]);
        shift_up(&mut amps);
        let d = coin_matrix_derivative(2.3).unwrap();
        let mut du = vec![ZERO; 18];
        let o = l.origin_offset();
        let (a, b) = d.apply(amps[2 * o], amps[2 * o + 1]);
        du[2 * o] = a;
        du[2 * o + 1] = b;
        shift_down(&mut du);
        for (x, y) in out.derivative.iter().zip(&du) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn derivative_vanishes_outside_light_cone() {
        let p = WalkParams::new(0.9, 0.75, -0.55, 21).unwrap();
        let l = p.lattice();
        let pair = DerivativePair::new(WalkerState::localized(l, -5, Coin::Down).unwrap());
        let out = apply_step_with_derivative(&pair, &p.coin_field(), 0).unwrap();
        assert!(out.derivative.iter().all(|d| *d == ZERO));
    }

    #[test]
    fn evolve_zero_steps() {
        let p = WalkParams::new(0.4, 0.2, 0.1, 5).unwrap();
        let s = WalkerState::default_initial(p.lattice());
        let series = evolve(&p, &s, 0).unwrap();
        assert_eq!(series, vec![s]);
    }

    #[test]
    fn defect_equal_to_bulk_is_bit_identical() {
        let bulk = WalkParams::new(2.0, 1.3, 1.3, 41).unwrap();
        let s = WalkerState::default_initial(bulk.lattice());
        let a = evolve(&bulk, &s, 30).unwrap();
        let field = CoinField::from_layers(bulk.lattice(), vec![2.0; 41], vec![1.3; 41]).unwrap();
        let b = evolve_schedule(&CoinSchedule::Static(field), &s, 30).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tangency_and_norm_over_many_steps() {
        let p = WalkParams::new(0.9 * core::f64::consts::PI, 0.75 * core::f64::consts::PI, -1.7, 121).unwrap();
        let mut pair = DerivativePair::new(WalkerState::default_initial(p.lattice()));
        let f = p.coin_field();
        for _ in 0..60 {
            pair = apply_step_with_derivative(&pair, &f, 0).unwrap();
            assert!((pair.state.norm() - 1.0).abs() < 1e-12);
            assert!(pair.tangency().abs() < 1e-10);
        }
        let total: f64 = p.lattice().positions().map(|x| position_probability(&pair.state, x).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
