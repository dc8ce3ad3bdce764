use core::f64::consts::PI;

use qwsense_core::spectral::{decompose_step_operator, find_localized_states, step_matrix};
use qwsense_core::topology::{BlochPoint, MomentumGrid};
use qwsense_core::WalkParams;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Bands `+-E(k_m)` at the ring momenta `k_m = 2 pi m / N`, folded into `(-pi, pi]`.
fn dispersion_oracle(theta1: f64, theta2: f64, sites: usize) -> Vec<f64> {
    let grid = MomentumGrid::ring(sites);
    let mut out = Vec::new();
    for &k in grid.points() {
        let e = BlochPoint::new(theta1, theta2, k).quasi_energy();
        out.push(e);
        out.push(if e == 0.0 { 0.0 } else { -e });
    }
    sorted(out)
}

fn folded_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[test]
fn defect_free_spectrum_matches_dispersion() {
    for &(t1, t2) in &[(0.9 * PI, 0.75 * PI), (0.05 * PI, 0.75 * PI), (1.3, -0.4)] {
        // the ring must be odd, so 63 and 65 stand in for 64
        for sites in [9usize, 17, 63, 65] {
            let p = WalkParams::defect_free(t1, t2, sites).unwrap();
            let d = decompose_step_operator(&p).unwrap();
            let got = sorted(d.quasi_energies.clone());
            let want = dispersion_oracle(t1, t2, sites);
            for (g, w) in got.iter().zip(&want) {
                assert!(folded_distance(*g, *w) < 1e-8, "N={sites}: {g} vs {w}");
            }
            assert!(d.max_residual() < 1e-10);
            assert!(d.eigenvalues.iter().all(|l| (l.norm() - 1.0).abs() < 1e-10));
            assert!(d.orthonormality_defect < 1e-10);
        }
    }
}

#[test]
fn step_matrix_is_unitary() {
    let p = WalkParams::from_pi_units(0.9, 0.75, -0.55, 11).unwrap();
    let u = step_matrix(&p);
    let uu = u.adjoint().matmul(&u);
    for r in 0..u.dim() {
        for c in 0..u.dim() {
            let target = if r == c { 1.0 } else { 0.0 };
            assert!((uu.get(r, c).re - target).abs() < 1e-14 && uu.get(r, c).im.abs() < 1e-14);
        }
    }
}

#[test]
fn reference_defect_hosts_a_symmetric_pair() {
    let p = WalkParams::from_pi_units(0.9, 0.75, -0.55, 101).unwrap();
    let d = decompose_step_operator(&p).unwrap();
    let states = find_localized_states(&d, 0).unwrap();
    assert_eq!(states.len(), 2);
    assert!((states[0].quasi_energy + states[1].quasi_energy).abs() < 1e-8);
    for s in &states {
        // The pair lives on the defect bond: U ends with T_down, which moves the
        // defect site's down amplitude to x = -1.
        assert!(s.peak_position == 0 || s.peak_position == -1);
        assert!(s.profile[49] + s.profile[50] > 0.99);
        assert!((s.profile.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(s.localization_length > 0.0);
        assert!(s.ipr >= 1.0 / 101.0);
    }
    println!(
        "E = {:?}, xi = {:?}",
        states.iter().map(|s| s.quasi_energy).collect::<Vec<_>>(),
        states.iter().map(|s| s.localization_length).collect::<Vec<_>>()
    );
}

#[test]
fn localization_tightens_with_defect_strength() {
    let mut previous = f64::INFINITY;
    for theta02 in [-0.3, -0.55, -0.7, -0.85, -1.0] {
        let p = WalkParams::from_pi_units(0.9, 0.75, theta02, 101).unwrap();
        let d = decompose_step_operator(&p).unwrap();
        let states = find_localized_states(&d, 0).unwrap();
        assert_eq!(states.len(), 2, "theta02 = {theta02} pi");
        assert!((states[0].quasi_energy + states[1].quasi_energy).abs() < 1e-8);
        let xi = states.iter().map(|s| s.localization_length).fold(0.0, f64::max);
        println!("theta02 = {theta02} pi: E = {:.6}, xi = {xi:.6}", states[0].quasi_energy);
        assert!(xi <= previous, "theta02 = {theta02}: {xi} > {previous}");
        previous = xi;
    }
}
