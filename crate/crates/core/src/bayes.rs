//! Bayesian estimation of the defect angle from repeated defect-site detections.
//!
//! A record at step `t` repeats the walk `M` times and counts the `m` runs in which the
//! walker is found at x = 0. The likelihood of a candidate angle is binomial in its
//! defect-site probability `P0(t)`; the prior is uniform on a grid.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Error, Result};
use crate::field::CoinSchedule;
use crate::fit::{linear_regression, LineFit};
use crate::par::map_indexed;
use crate::params::WalkParams;
use crate::rng::{stream_rng, DOMAIN_TRIALS};
use crate::state::WalkerState;
use crate::walk::Walker;

pub const DEFAULT_TRIALS: u64 = 1000;
pub const DEFAULT_GRID_POINTS: usize = 201;
pub const MIN_GRID_POINTS: usize = 11;

/// `P0(t)` for `t = 0..=steps`.
pub fn defect_probability_curve(schedule: &CoinSchedule, initial: &WalkerState, steps: usize) -> Result<Vec<f64>> {
    let site = initial.lattice().index_of(0)?;
    let mut walker = Walker::new(schedule, initial.clone(), steps)?;
    let mut out = Vec::with_capacity(steps + 1);
    loop {
        let a = walker.amplitudes();
        out.push(a[2 * site].norm_sqr() + a[2 * site + 1].norm_sqr());
        if walker.time() == steps {
            return Ok(out);
        }
        walker.step()?;
    }
}

/// One binomial draw; `p` is clamped into `[0, 1]` first.
pub fn draw_successes<R: rand::Rng + ?Sized>(p: f64, trials: u64, rng: &mut R) -> u64 {
    let p = if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) };
    Binomial::new(trials, p).map(|b| b.sample(rng)).unwrap_or(0)
}

/// Counts defect-site detections in `trials` runs of `t` steps, using the trial stream
/// of `seed` for step `t`.
pub fn simulate_trials(params: &WalkParams, initial: &WalkerState, t: usize, trials: u64, seed: u64) -> Result<u64> {
    if trials < 1 {
        return Err(invalid!("at least one trial is required"));
    }
    let curve = defect_probability_curve(&CoinSchedule::Static(params.coin_field()), initial, t)?;
    Ok(draw_successes(curve[t], trials, &mut stream_rng(seed, DOMAIN_TRIALS, t as u64)))
}

/// Uniformly spaced candidates from `lo` to `hi` inclusive.
pub fn prior_grid(prior: (f64, f64), grid_points: usize) -> Result<Vec<f64>> {
    let (lo, hi) = prior;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid!("prior interval must satisfy lo < hi, got [{lo}, {hi}]"));
    }
    if grid_points < MIN_GRID_POINTS {
        return Err(invalid!("prior grid needs at least {MIN_GRID_POINTS} points, got {grid_points}"));
    }
    let step = (hi - lo) / (grid_points - 1) as f64;
    let mut grid: Vec<f64> = (0..grid_points).map(|i| lo + step * i as f64).collect();
    grid[grid_points - 1] = hi;
    Ok(grid)
}

/// `m ln p + (M - m) ln(1 - p)` with `0 ln 0 = 0`; `-inf` where the data are impossible.
pub fn binomial_log_likelihood(p: f64, trials: u64, successes: u64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let (m, f) = (successes as f64, (trials - successes) as f64);
    let term = |count: f64, q: f64| if count == 0.0 { 0.0 } else { count * q.ln() };
    term(m, p) + term(f, 1.0 - p)
}

/// Normalized posterior over a candidate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    candidates: Vec<f64>,
    log_weights: Vec<f64>,
    normalized: bool,
    mean: f64,
    variance: f64,
}

impl PosteriorGrid {
    /// Normalizes unnormalized log weights by log-sum-exp.
    pub fn from_log_weights(candidates: Vec<f64>, mut log_weights: Vec<f64>) -> Result<Self> {
        if candidates.len() != log_weights.len() || candidates.is_empty() {
            return Err(invalid!("posterior needs one log weight per candidate"));
        }
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Numerical("every candidate is excluded by the data".into()));
        }
        // shift first: log likelihoods can be ~1e6 in magnitude
        for l in &mut log_weights {
            *l -= max;
        }
        let log_sum = log_weights.iter().map(|&l| l.exp()).sum::<f64>().ln();
        for l in &mut log_weights {
            *l -= log_sum;
        }
        let weights = log_weights.iter().map(|&l| l.exp());
        let total: f64 = weights.clone().sum();
        let mean = weights.clone().zip(&candidates).map(|(w, c)| w * c).sum::<f64>() / total;
        let variance = weights.zip(&candidates).map(|(w, c)| w * (c - mean) * (c - mean)).sum::<f64>() / total;
        let (lo, hi) = (candidates[0], candidates[candidates.len() - 1]);
        Ok(PosteriorGrid {
            mean: mean.clamp(lo.min(hi), lo.max(hi)),
            variance: variance.max(0.0),
            candidates,
            log_weights,
            normalized: true,
        })
    }

    pub fn uniform(candidates: Vec<f64>) -> Result<Self> {
        let n = candidates.len();
        Self::from_log_weights(candidates, alloc::vec![0.0; n])
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|&l| l.exp()).collect()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Index of the most probable candidate, the lowest one on ties.
    pub fn mode_index(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.log_weights.iter().enumerate() {
            if l > self.log_weights[best] {
                best = i;
            }
        }
        best
    }

    pub fn mode(&self) -> f64 {
        self.candidates[self.mode_index()]
    }
}

/// Mean squared relative error `(sigma^2 + (mean - truth)^2) / truth^2`.
pub fn msre(grid: &PosteriorGrid, true_theta02: f64) -> Result<f64> {
    if !grid.is_normalized() {
        return Err(invalid!("posterior is not normalized"));
    }
    if true_theta02 == 0.0 {
        return Err(Error::DivisionByZero("relative error is undefined for a zero defect angle".into()));
    }
    let bias = grid.mean - true_theta02;
    Ok((grid.variance + bias * bias) / (true_theta02 * true_theta02))
}

/// `P0(t; candidate)` for every candidate and every `t <= max_steps`, computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodTable {
    candidates: Vec<f64>,
    probabilities: Vec<Vec<f64>>,
    max_steps: usize,
}

impl LikelihoodTable {
    /// Candidate walks use `schedule` with only the defect angle replaced.
    pub fn build(
        schedule: &CoinSchedule,
        initial: &WalkerState,
        candidates: Vec<f64>,
        max_steps: usize,
    ) -> Result<Self> {
        let probabilities = map_indexed(candidates.len(), |i| {
            defect_probability_curve(&schedule.with_defect_angle(candidates[i]), initial, max_steps)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(LikelihoodTable { candidates, probabilities, max_steps })
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn probability(&self, candidate: usize, t: usize) -> f64 {
        self.probabilities[candidate][t]
    }

    /// Posterior after independent `(t, M, m)` records.
    pub fn posterior(&self, data: &[(usize, u64, u64)]) -> Result<PosteriorGrid> {
        for &(t, trials, successes) in data {
            if t > self.max_steps {
                return Err(invalid!("likelihoods cover {} steps, record at step {t}", self.max_steps));
            }
            if successes > trials {
                return Err(invalid!("successes {successes} exceed trials {trials}"));
            }
        }
        let log_weights = self
            .probabilities
            .iter()
            .map(|curve| data.iter().map(|&(t, trials, m)| binomial_log_likelihood(curve[t], trials, m)).sum())
            .collect();
        PosteriorGrid::from_log_weights(self.candidates.clone(), log_weights)
    }
}

/// Posterior from the `m` of `M` record at step `t`; candidates run `template` with
/// their own defect angle.
pub fn posterior(
    prior: (f64, f64),
    grid_points: usize,
    t: usize,
    trials: u64,
    successes: u64,
    template: &WalkParams,
    initial: &WalkerState,
) -> Result<PosteriorGrid> {
    let candidates = prior_grid(prior, grid_points)?;
    let table = LikelihoodTable::build(&CoinSchedule::Static(template.coin_field()), initial, candidates, t)?;
    table.posterior(&[(t, trials, successes)])
}

/// How records at successive steps are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataMode {
    /// Each step is a separate experiment with its own posterior.
    Fresh,
    /// The posterior at step `t` uses every record up to and including `t`.
    Cumulative,
}

impl DataMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DataMode::Fresh => "fresh",
            DataMode::Cumulative => "cumulative",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    /// The walk that generates the data; its defect angle is the truth.
    pub params: WalkParams,
    pub initial: WalkerState,
    pub prior: (f64, f64),
    pub grid_points: usize,
    pub trials: u64,
    /// Strictly increasing step counts.
    pub steps: Vec<usize>,
    pub seed: u64,
    pub data: DataMode,
}

impl EstimationConfig {
    pub fn new(params: WalkParams, prior: (f64, f64), steps: Vec<usize>, seed: u64) -> Self {
        EstimationConfig {
            initial: WalkerState::default_initial(params.lattice()),
            params,
            prior,
            grid_points: DEFAULT_GRID_POINTS,
            trials: DEFAULT_TRIALS,
            steps,
            seed,
            data: DataMode::Fresh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        prior_grid(self.prior, self.grid_points)?;
        if self.trials < 1 {
            return Err(invalid!("at least one trial per record is required"));
        }
        if self.steps.is_empty() {
            return Err(invalid!("estimation needs at least one step count"));
        }
        if self.steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid!("estimation step counts must be strictly increasing"));
        }
        if self.initial.lattice() != self.params.lattice() {
            return Err(invalid!("initial state and walk parameters use different lattices"));
        }
        if self.params.theta02() == 0.0 {
            return Err(Error::DivisionByZero("relative error is undefined for a zero defect angle".into()));
        }
        Ok(())
    }

    pub fn max_steps(&self) -> usize {
        self.steps.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationRecord {
    pub t: usize,
    pub trials: u64,
    pub successes: u64,
    pub msre: f64,
    pub posterior: PosteriorGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationCurve {
    pub records: Vec<EstimationRecord>,
    /// Fit of `ln msre` against `ln t` over records with positive `t` and `msre`.
    pub slope: Option<LineFit>,
}

impl EstimationCurve {
    pub fn msre(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.msre).collect()
    }
}

/// Clean-walk estimation curve.
pub fn estimation_curve(config: &EstimationConfig) -> Result<EstimationCurve> {
    estimation_curve_schedule(config, &CoinSchedule::Static(config.params.coin_field()))
}

/// Estimation curve with data generated by `schedule` and a likelihood model that uses
/// the same schedule with each candidate's defect angle.
pub fn estimation_curve_schedule(config: &EstimationConfig, schedule: &CoinSchedule) -> Result<EstimationCurve> {
    config.validate()?;
    let truth = config.params.theta02();
    let t_max = config.max_steps();
    let table =
        LikelihoodTable::build(schedule, &config.initial, prior_grid(config.prior, config.grid_points)?, t_max)?;
    let p_true = defect_probability_curve(&schedule.with_defect_angle(truth), &config.initial, t_max)?;
    let data: Vec<(usize, u64, u64)> = config
        .steps
        .iter()
        .map(|&t| {
            let mut rng = stream_rng(config.seed, DOMAIN_TRIALS, t as u64);
            (t, config.trials, draw_successes(p_true[t], config.trials, &mut rng))
        })
        .collect();
    let mut records = Vec::with_capacity(data.len());
    for (i, &(t, trials, successes)) in data.iter().enumerate() {
        let used = match config.data {
            DataMode::Fresh => &data[i..=i],
            DataMode::Cumulative => &data[..=i],
        };
        let posterior = table.posterior(used)?;
        records.push(EstimationRecord { t, trials, successes, msre: msre(&posterior, truth)?, posterior });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        records.iter().filter(|r| r.t > 0 && r.msre > 0.0).map(|r| ((r.t as f64).ln(), r.msre.ln())).unzip();
    Ok(EstimationCurve { slope: linear_regression(&xs, &ys).ok(), records })
}
