use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use qwsense_core::metrology::{averaged_fisher, fisher_at_defect, fisher_set, fit_scaling_default, FitMode, P_FLOOR};
use qwsense_core::{evolve, position_probability, WalkParams, WalkerState};

fn reference_walk(theta1: f64) -> WalkParams {
    WalkParams::from_pi_units(theta1, 0.75, -0.55, 203).unwrap()
}

fn defect_probabilities(p: &WalkParams, steps: usize) -> Vec<f64> {
    let s = WalkerState::default_initial(p.lattice());
    evolve(p, &s, steps).unwrap().iter().map(|w| position_probability(w, 0).unwrap()).collect()
}

#[test]
fn fisher_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let (steps, h) = (50, 1e-6);
    for _ in 0..6 {
        let p = WalkParams::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI), rng.random_range(-PI..PI), 103)
            .unwrap();
        let fi = fisher_at_defect(&p, &WalkerState::default_initial(p.lattice()), steps).unwrap();
        let plus = defect_probabilities(&p.with_theta02(p.theta02() + h).unwrap(), steps);
        let minus = defect_probabilities(&p.with_theta02(p.theta02() - h).unwrap(), steps);
        let center = defect_probabilities(&p, steps);
        let peak = fi.values.iter().copied().fold(0.0, f64::max);
        for t in 1..=steps {
            let p0 = center[t];
            // skip degenerate points and near-stationary ones where the relative
            // error of a difference quotient is meaningless
            if fi.flagged[t] || p0 < 1e-6 || fi.values[t] < 1e-6 * peak {
                continue;
            }
            let dp = (plus[t] - minus[t]) / (2.0 * h);
            let fd = dp * dp / (p0 * (1.0 - p0));
            assert!((fi.values[t] - fd).abs() <= 1e-5 * fi.values[t], "t={t}: {} vs {fd}", fi.values[t]);
        }
    }
}

#[test]
fn hierarchy_holds_on_both_parameter_sets() {
    for theta1 in [0.9, 0.05] {
        let p = reference_walk(theta1);
        let set = fisher_set(&p, &WalkerState::default_initial(p.lattice()), 100).unwrap();
        for t in 0..=100 {
            let (f, g, q) = (set.defect_site.values[t], set.global.values[t], set.quantum.values[t]);
            assert!(f >= 0.0 && g >= 0.0 && q >= 0.0);
            assert!(f <= g * (1.0 + 1e-12) + 1e-12, "t={t}: FI {f} > GFI {g}");
            assert!(g <= q + 1e-9, "t={t}: GFI {g} > QFI {q}");
        }
        assert_eq!(set.quantum.values[0], 0.0);
    }
}

#[test]
fn defect_probability_is_stationary_at_minus_pi() {
    let p = WalkParams::new(0.9 * PI, 0.75 * PI, -PI, 103).unwrap();
    let fi = fisher_at_defect(&p, &WalkerState::default_initial(p.lattice()), 50).unwrap();
    assert!(fi.values.iter().all(|&v| v < 1e-20));
}

#[test]
fn quantum_fisher_is_smaller_in_the_trivial_phase() {
    let q = |theta1| {
        let p = reference_walk(theta1);
        fisher_set(&p, &WalkerState::default_initial(p.lattice()), 100).unwrap().quantum
    };
    let (nt, tr) = (q(0.9), q(0.05));
    for t in 20..=100 {
        assert!(tr.values[t] < nt.values[t], "t={t}");
    }
}

#[test]
fn nontrivial_dominates_at_sixty_steps() {
    let f = |theta1| {
        let p = reference_walk(theta1);
        fisher_at_defect(&p, &WalkerState::default_initial(p.lattice()), 60).unwrap().values[60]
    };
    assert!(f(0.9) > f(0.05));
}

#[test]
fn heisenberg_scaling_across_defect_angles() {
    // fitted on the oscillation peaks
    for theta02 in [-0.05, -0.1, -0.2, -0.3, -0.4, -0.5, -0.55, -0.6, -0.7, -0.8] {
        let p = WalkParams::from_pi_units(0.9, 0.75, theta02, 203).unwrap();
        let fi = fisher_at_defect(&p, &WalkerState::default_initial(p.lattice()), 100).unwrap();
        let b = fit_scaling_default(&fi, FitMode::PeaksOnly).unwrap().exponent;
        assert!((1.8..=2.2).contains(&b), "theta02={theta02}pi: b={b}");
    }
}

#[test]
#[ignore = "known: FI is nearly smooth close to theta02 = -pi; all-points b is 1.70 at -0.99 pi and fewer than 5 peaks exist"]
fn heisenberg_scaling_close_to_minus_pi() {
    for theta02 in [-0.9, -0.99] {
        let p = WalkParams::from_pi_units(0.9, 0.75, theta02, 203).unwrap();
        let fi = fisher_at_defect(&p, &WalkerState::default_initial(p.lattice()), 100).unwrap();
        let b = fit_scaling_default(&fi, FitMode::AllPoints).unwrap().exponent;
        assert!((1.8..=2.2).contains(&b), "theta02={theta02}pi: b={b}");
    }
}

#[test]
fn averaging_suppresses_drops() {
    let p = reference_walk(0.9);
    let fi = fisher_at_defect(&p, &WalkerState::default_initial(p.lattice()), 100).unwrap();
    let avg = averaged_fisher(&fi, 5, 5).unwrap();
    let (lo, hi) = (avg.times[0], *avg.times.last().unwrap());
    let min_ratio = |times: &[f64], values: &[f64]| {
        times
            .iter()
            .zip(values)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(t, v)| v / (t * t))
            .fold(f64::INFINITY, f64::min)
    };
    assert!(min_ratio(&avg.times, &avg.values) > min_ratio(&fi.times, &fi.values));
}

#[test]
fn floor_flags_are_consistent() {
    let p = reference_walk(0.9);
    let s = WalkerState::default_initial(p.lattice());
    let fi = fisher_at_defect(&p, &s, 40).unwrap();
    let probs = defect_probabilities(&p, 40);
    for t in 0..=40 {
        assert_eq!(fi.flagged[t], probs[t] < P_FLOOR || probs[t] > 1.0 - P_FLOOR);
    }
}
