//! Acceptance checks for the walk-sensing pipeline. Each check runs at full size and
//! reports a pass/fail verdict with the numbers behind it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use qwsense::{run, ExperimentConfig, RunOptions};
use qwsense_core::bayes::{
    defect_probability_curve, draw_successes, estimation_curve, msre, prior_grid, EstimationConfig, LikelihoodTable,
};
use qwsense_core::disorder::{ensemble_fisher, DisorderKind, DisorderSpec};
use qwsense_core::metrology::{
    averaged_fisher, fisher_at_defect, fisher_set, fit_scaling_default, FisherSeries, FitMode,
};
use qwsense_core::rng::{stream_rng, DOMAIN_REPETITION};
use qwsense_core::spectral::{decompose_step_operator, find_localized_states};
use qwsense_core::topology::{winding_number, GapStatus, DEFAULT_NK};
use qwsense_core::walk::PairWalker;
use qwsense_core::{evolve, CoinSchedule, WalkParams, WalkerState};

pub type Check = Result<String, String>;

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub check: fn() -> Check,
}

pub const CRITERIA: [Criterion; 12] = [
    Criterion { id: 1, name: "quadratic FI growth, nontrivial phase", check: heisenberg_scaling },
    Criterion { id: 2, name: "trivial-phase suppression", check: trivial_suppression },
    Criterion { id: 3, name: "phase diagram pins", check: phase_pins },
    Criterion { id: 4, name: "winding +1 / -1 FI symmetry", check: winding_symmetry },
    Criterion { id: 5, name: "localized pair at the defect", check: localized_pair },
    Criterion { id: 6, name: "FI <= GFI <= QFI", check: fisher_hierarchy },
    Criterion { id: 7, name: "derivative vs finite differences", check: derivative_oracle },
    Criterion { id: 8, name: "Bayesian convergence", check: bayesian_convergence },
    Criterion { id: 9, name: "Cramer-Rao consistency", check: cramer_rao },
    Criterion { id: 10, name: "disorder robustness", check: disorder_robustness },
    Criterion { id: 11, name: "multi-time averaging", check: multi_time_averaging },
    Criterion { id: 12, name: "deterministic reruns", check: determinism },
];

const STEPS: usize = 100;
const PRIOR: (f64, f64) = (-0.556 * PI, -0.544 * PI);

fn walk(theta1: f64) -> (WalkParams, WalkerState) {
    let p = WalkParams::from_pi_units(theta1, 0.75, -0.55, 2 * STEPS + 3).expect("valid parameters");
    let s = WalkerState::default_initial(p.lattice());
    (p, s)
}

fn fi(theta1: f64) -> Result<FisherSeries, String> {
    let (p, s) = walk(theta1);
    fisher_at_defect(&p, &s, STEPS).map_err(|e| e.to_string())
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

macro_rules! tri {
    ($e:expr) => {
        $e.map_err(|e| e.to_string())?
    };
}

fn heisenberg_scaling() -> Check {
    let s = fi(0.9)?;
    let all = tri!(fit_scaling_default(&s, FitMode::AllPoints));
    let peaks = tri!(fit_scaling_default(&s, FitMode::PeaksOnly));
    verdict(
        (1.8..=2.2).contains(&all.exponent),
        format!("b = {:.4} (peaks only {:.4}), required [1.8, 2.2]", all.exponent, peaks.exponent),
    )
}

fn trivial_suppression() -> Check {
    let (n, t) = (fi(0.9)?, fi(0.05)?);
    let (fn60, ft60) = (n.values[60], t.values[60]);
    let all = tri!(fit_scaling_default(&t, FitMode::AllPoints));
    let peaks = tri!(fit_scaling_default(&t, FitMode::PeaksOnly));
    // both fits are lines in log-log, so comparing the window ends covers the window
    let (lo, hi) = all.fit_window;
    let below = all.eval(lo) < peaks.eval(lo) && all.eval(hi) < peaks.eval(hi);
    verdict(
        ft60 < fn60 && below,
        format!(
            "FI(60) trivial {ft60:.1} vs nontrivial {fn60:.1}; full fit {:.3} t^{:.3} vs peaks {:.3} t^{:.3} on [{lo}, {hi}]",
            all.prefactor, all.exponent, peaks.prefactor, peaks.exponent
        ),
    )
}

fn phase_pins() -> Check {
    let a = tri!(winding_number(0.9 * PI, 0.75 * PI, DEFAULT_NK));
    let b = tri!(winding_number(0.05 * PI, 0.75 * PI, DEFAULT_NK));
    let c = tri!(winding_number(0.75 * PI, 0.75 * PI, DEFAULT_NK));
    let (ra, rb) = (a.residual().unwrap_or(f64::INFINITY), b.residual().unwrap_or(f64::INFINITY));
    verdict(
        a.winding == Some(1) && b.winding == Some(0) && c.status == GapStatus::Gapless && ra < 1e-6 && rb < 1e-6,
        format!(
            "nu(0.9, 0.75) = {:?} (residual {ra:.1e}), nu(0.05, 0.75) = {:?} (residual {rb:.1e}), (0.75, 0.75) {}",
            a.winding,
            b.winding,
            c.status.as_str()
        ),
    )
}

fn winding_symmetry() -> Check {
    let plus = 0.9;
    let nu = tri!(winding_number(plus * PI, 0.75 * PI, DEFAULT_NK)).winding;
    // locate the -1 region on the theta2 = 0.75 pi cut and take its point nearest the reflection
    let mut best: Option<f64> = None;
    for i in 1..200 {
        let t1 = -1.0 + 0.005 * i as f64;
        if tri!(winding_number(t1 * PI, 0.75 * PI, DEFAULT_NK)).winding == Some(-1)
            && best.is_none_or(|b| (t1 + plus).abs() < (b + plus).abs())
        {
            best = Some(t1);
        }
    }
    let Some(minus) = best else { return Err("no winding -1 point on the cut".into()) };
    let (a, b) = (fi(plus)?, fi(minus)?);
    let diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    verdict(
        nu == Some(1) && diff < 1e-8,
        format!("nu = {nu:?} at {plus} pi, mirror located at {minus:.3} pi; max |FI difference| = {diff:.2e}"),
    )
}

fn localized_pair() -> Check {
    let xi = |theta02: f64| -> Result<(usize, f64, f64), String> {
        let p = tri!(WalkParams::from_pi_units(0.9, 0.75, theta02, 101));
        let d = tri!(decompose_step_operator(&p));
        let s = tri!(find_localized_states(&d, 0));
        let sum = if s.len() == 2 { (s[0].quasi_energy + s[1].quasi_energy).abs() } else { f64::INFINITY };
        Ok((s.len(), sum, s.iter().map(|s| s.localization_length).fold(0.0, f64::max)))
    };
    let (n, asym, x55) = xi(-0.55)?;
    let (_, _, x100) = xi(-1.0)?;
    verdict(
        n == 2 && asym < 1e-8 && x100 < x55,
        format!("{n} localized states, |E+ + E-| = {asym:.1e}; xi(-0.55 pi) = {x55:.4}, xi(-pi) = {x100:.4}"),
    )
}

fn fisher_hierarchy() -> Check {
    let mut worst = f64::NEG_INFINITY;
    for theta1 in [0.9, 0.05] {
        let (p, s) = walk(theta1);
        let set = tri!(fisher_set(&p, &s, STEPS));
        for t in 0..=STEPS {
            let (f, g, q) = (set.defect_site.values[t], set.global.values[t], set.quantum.values[t]);
            worst = worst.max(f - g).max(g - q);
        }
    }
    verdict(worst <= 1e-9, format!("largest excess max(FI - GFI, GFI - QFI) = {worst:.2e}, allowed 1e-9"))
}

fn derivative_oracle() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let (steps, h) = (50, 1e-5);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..10 {
        let p = tri!(WalkParams::new(
            rng.random_range(-PI..PI),
            rng.random_range(-PI..PI),
            rng.random_range(-PI..PI),
            2 * steps + 3
        ));
        let initial = WalkerState::default_initial(p.lattice());
        let plus = tri!(evolve(&tri!(p.with_theta02(p.theta02() + h)), &initial, steps));
        let minus = tri!(evolve(&tri!(p.with_theta02(p.theta02() - h)), &initial, steps));
        let schedule = CoinSchedule::Static(p.coin_field());
        let mut walker = tri!(PairWalker::new(&schedule, initial, 0, steps));
        for t in 1..=steps {
            tri!(walker.step());
            let an = walker.derivative();
            let scale = an.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if scale < 1e-8 {
                continue; // degenerate: the walker has not reached the defect
            }
            let err = an
                .iter()
                .zip(plus[t].amplitudes().iter().zip(minus[t].amplitudes()))
                .map(|(a, (p, m))| (a - (p - m) / (2.0 * h)).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(err / scale);
            checked += 1;
        }
    }
    verdict(worst < 1e-6, format!("worst relative error {worst:.2e} over {checked} steps, allowed 1e-6"))
}

fn bayesian_convergence() -> Check {
    let (p, _) = walk(0.9);
    let config = EstimationConfig::new(p, PRIOR, (2..=10).map(|k| 10 * k).collect(), 0);
    let curve = tri!(estimation_curve(&config));
    let sd = |t: usize| curve.records.iter().find(|r| r.t == t).map(|r| r.posterior.std_dev()).unwrap_or(f64::NAN);
    let slope = curve.slope.map(|f| f.slope).unwrap_or(f64::NAN);
    let (s20, s100) = (sd(20), sd(100));
    verdict(
        s100 < s20 && (-2.2..=-1.8).contains(&slope),
        format!(
            "posterior sd {s20:.3e} at t = 20, {s100:.3e} at t = 100; msre slope {slope:+.3}, required [-2.2, -1.8]"
        ),
    )
}

fn cramer_rao() -> Check {
    let (t, trials, reps) = (50, 1000, 100);
    let (p, s) = walk(0.9);
    let schedule = CoinSchedule::Static(p.coin_field());
    let table = tri!(LikelihoodTable::build(&schedule, &s, tri!(prior_grid(PRIOR, 201)), t));
    let p0 = tri!(defect_probability_curve(&schedule, &s, t))[t];
    let fisher = tri!(fisher_at_defect(&p, &s, t)).values[t];
    let truth = p.theta02();
    let mut total = 0.0;
    for r in 0..reps {
        let mut rng = stream_rng(2024, DOMAIN_REPETITION, r);
        let m = draw_successes(p0, trials, &mut rng);
        total += tri!(msre(&tri!(table.posterior(&[(t, trials, m)])), truth));
    }
    let mean = total / reps as f64;
    let bound = 1.0 / (trials as f64 * fisher * truth * truth);
    verdict(
        mean >= 0.85 * bound,
        format!(
            "mean msre {mean:.4e} over {reps} runs, bound {bound:.4e}, ratio {:.3} (required >= 0.85)",
            mean / bound
        ),
    )
}

fn disorder_robustness() -> Check {
    let (n, s) = walk(0.9);
    let (t, _) = walk(0.05);
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [DisorderKind::Static, DisorderKind::Dynamic] {
        let spec = DisorderSpec::new(kind, 2024);
        let en = tri!(ensemble_fisher(&spec, &n, &s, STEPS));
        let et = tri!(ensemble_fisher(&spec, &t, &s, STEPS));
        let mean = en.mean_series(n);
        let b = tri!(fit_scaling_default(&mean, FitMode::AllPoints)).exponent;
        let bp = tri!(fit_scaling_default(&mean, FitMode::PeaksOnly)).exponent;
        let window = (10, STEPS);
        let (rn, rt) = (en.relative_std(window).unwrap_or(f64::NAN), et.relative_std(window).unwrap_or(f64::NAN));
        let pass = (1.8..=2.2).contains(&b) && rt > rn;
        ok &= pass;
        parts.push(format!(
            "{}: b = {b:.3} (peaks only {bp:.3}), rel std trivial {rt:.3} vs nontrivial {rn:.3} [{}]",
            kind.as_str(),
            if pass { "ok" } else { "fail" }
        ));
    }
    verdict(ok, parts.join("; "))
}

fn multi_time_averaging() -> Check {
    let raw = fi(0.9)?;
    let avg = tri!(averaged_fisher(&raw, 5, 5));
    let lo = avg.times.first().copied().unwrap_or(0.0).max(10.0);
    let hi = avg.times.last().copied().unwrap_or(0.0);
    let min_ratio = |s: &FisherSeries| {
        (0..s.len())
            .filter(|&i| s.times[i] >= lo && s.times[i] <= hi)
            .map(|i| s.values[i] / (s.times[i] * s.times[i]))
            .fold(f64::INFINITY, f64::min)
    };
    let (a, r) = (min_ratio(&avg), min_ratio(&raw));
    verdict(a > r, format!("window [{lo}, {hi}]: min averaged FI/t^2 = {a:.4}, min raw FI/t^2 = {r:.4}"))
}

const RERUN_CONFIGS: [&str; 8] = [
    "experiment = \"fi-scaling\"",
    "experiment = \"fi-surface\"\n[walk]\nsteps = 40\n[surface]\nparameter = \"theta02\"\nvalues = { start = -1.0, stop = 0.0, count = 5 }",
    "experiment = \"phase-diagram\"\n[phase]\ntheta1 = { start = -1.0, stop = 1.0, count = 9 }\ntheta2 = { start = -1.0, stop = 1.0, count = 9 }",
    "experiment = \"spectrum\"\n[spectrum]\nlattice_size = 61",
    "experiment = \"bayes\"\nseed = 11",
    "experiment = \"disorder\"\nseed = 11\n[disorder]\nkind = \"dynamic\"",
    "experiment = \"avg-fi\"",
    "experiment = \"gfi-qfi\"",
];

fn determinism() -> Check {
    let mut files = 0;
    for text in RERUN_CONFIGS {
        let config = tri!(ExperimentConfig::from_toml(text));
        let experiment = config.experiment.as_str();
        let mut runs = Vec::new();
        for threads in [1, 4] {
            let dir = tri!(tempfile::tempdir());
            let opts = RunOptions { out: Some(dir.path().to_path_buf()), threads: Some(threads), ..Default::default() };
            let (_, manifest) = tri!(run(config.clone(), &opts));
            for f in &manifest.files {
                let bytes = tri!(std::fs::read(dir.path().join(&f.name)));
                if qwsense::run::sha256_hex(&bytes) != f.sha256 {
                    return Err(format!("{experiment}: {} does not match its manifest hash", f.name));
                }
            }
            runs.push(manifest.files);
        }
        if runs[0] != runs[1] {
            return Err(format!("{experiment}: reruns differ"));
        }
        files += runs[0].len();
    }
    Ok(format!(
        "{} experiments, {files} data files, identical hashes across reruns on 1 and 4 threads",
        RERUN_CONFIGS.len()
    ))
}
