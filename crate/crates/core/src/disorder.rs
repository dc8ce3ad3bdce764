//! Random coin-angle disorder and ensemble averages over realizations.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::bayes::{estimation_curve_schedule, EstimationConfig};
use crate::error::{invalid, Result};
use crate::field::{CoinField, CoinSchedule};
use crate::metrology::{fisher_set_schedule, FisherKind, FisherSeries};
use crate::par::map_indexed;
use crate::params::WalkParams;
use crate::rng::{stream_rng, DOMAIN_DYNAMIC_DISORDER, DOMAIN_STATIC_DISORDER};
use crate::state::WalkerState;

pub const DEFAULT_HALF_WIDTH: f64 = core::f64::consts::PI / 20.0;
pub const DEFAULT_REALIZATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DisorderKind {
    /// Independent angles per site, frozen in time.
    Static,
    /// One fresh pair of angles per step, shared by all sites.
    Dynamic,
}

impl DisorderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DisorderKind::Static => "static",
            DisorderKind::Dynamic => "dynamic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    /// Angles are drawn uniformly from `[theta - w, theta + w]`.
    pub half_width: f64,
    pub n_realizations: usize,
    pub master_seed: u64,
    /// Also perturb the defect angle. Off by default since it is the estimated parameter.
    pub disorder_defect: bool,
}

impl DisorderSpec {
    pub fn new(kind: DisorderKind, master_seed: u64) -> Self {
        DisorderSpec {
            kind,
            half_width: DEFAULT_HALF_WIDTH,
            n_realizations: DEFAULT_REALIZATIONS,
            master_seed,
            disorder_defect: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width >= 0.0) {
            return Err(invalid!("disorder half-width must be finite and >= 0, got {}", self.half_width));
        }
        if self.n_realizations < 1 {
            return Err(invalid!("at least one disorder realization is required"));
        }
        Ok(())
    }
}

#[inline]
fn draw<R: Rng>(rng: &mut R, center: f64, w: f64) -> f64 {
    center + w * (2.0 * rng.random::<f64>() - 1.0)
}

/// Coins for realization `realization`. Static disorder ignores `steps`; dynamic
/// disorder produces one field per step. Static draws go site by site, layer 1 then
/// layer 2; dynamic draws go step by step as layer 1, layer 2, defect. The defect draw
/// is consumed even when the base value is kept, so the other angles do not depend on
/// `disorder_defect`.
pub fn sample_disorder(
    spec: &DisorderSpec,
    base: &WalkParams,
    realization: usize,
    steps: usize,
) -> Result<CoinSchedule> {
    spec.validate()?;
    if realization >= spec.n_realizations {
        return Err(invalid!("realization {realization} out of range for {} realizations", spec.n_realizations));
    }
    let lattice = base.lattice();
    let n = lattice.size();
    let origin = lattice.origin_offset();
    let w = spec.half_width;
    let (t1, t2, t02) = (base.theta1(), base.theta2(), base.theta02());
    let keep_defect = !spec.disorder_defect;
    match spec.kind {
        DisorderKind::Static => {
            let mut rng = stream_rng(spec.master_seed, DOMAIN_STATIC_DISORDER, realization as u64);
            let (mut l1, mut l2) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for i in 0..n {
                l1.push(draw(&mut rng, t1, w));
                let a = draw(&mut rng, if i == origin { t02 } else { t2 }, w);
                l2.push(if i == origin && keep_defect { t02 } else { a });
            }
            Ok(CoinSchedule::Static(CoinField::from_layers(lattice, l1, l2)?))
        }
        DisorderKind::Dynamic => {
            let mut rng = stream_rng(spec.master_seed, DOMAIN_DYNAMIC_DISORDER, realization as u64);
            let mut fields = Vec::with_capacity(steps);
            for _ in 0..steps {
                let a1 = draw(&mut rng, t1, w);
                let a2 = draw(&mut rng, t2, w);
                let d = draw(&mut rng, t02, w);
                fields.push(CoinField::uniform(lattice, a1, a2, if keep_defect { t02 } else { d }));
            }
            Ok(CoinSchedule::PerStep(fields))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    Fi,
    Msre,
}

impl Observable {
    pub fn as_str(self) -> &'static str {
        match self {
            Observable::Fi => "fi",
            Observable::Msre => "msre",
        }
    }
}

/// Per-step mean and population standard deviation over realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub steps: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub realizations: usize,
    pub observable: Observable,
}

impl EnsembleResult {
    fn from_members(steps: Vec<usize>, members: &[Vec<f64>], observable: Observable) -> Self {
        let k = members.len() as f64;
        let (mut mean, mut std) = (Vec::with_capacity(steps.len()), Vec::with_capacity(steps.len()));
        for j in 0..steps.len() {
            // shifted by the first member so identical members average exactly
            let a = members[0][j];
            let m = a + members.iter().map(|s| s[j] - a).sum::<f64>() / k;
            let v = members.iter().map(|s| (s[j] - m) * (s[j] - m)).sum::<f64>() / k;
            mean.push(m);
            std.push(v.sqrt());
        }
        EnsembleResult { steps, mean, std, realizations: members.len(), observable }
    }

    /// Mean of `std / mean` over steps in `[lo, hi]` with nonzero mean.
    pub fn relative_std(&self, window: (usize, usize)) -> Option<f64> {
        let r: Vec<f64> = (0..self.steps.len())
            .filter(|&j| self.steps[j] >= window.0 && self.steps[j] <= window.1 && self.mean[j] > 0.0)
            .map(|j| self.std[j] / self.mean[j])
            .collect();
        (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64)
    }

    /// The mean as a Fisher series, zero entries flagged.
    pub fn mean_series(&self, params: WalkParams) -> FisherSeries {
        FisherSeries {
            kind: FisherKind::DefectSite,
            times: self.steps.iter().map(|&t| t as f64).collect(),
            flagged: self.mean.iter().map(|&m| m == 0.0).collect(),
            values: self.mean.clone(),
            params,
        }
    }
}

/// Disorder-averaged defect-site Fisher information for `t = 0..=steps`.
pub fn ensemble_fisher(
    spec: &DisorderSpec,
    base: &WalkParams,
    initial: &WalkerState,
    steps: usize,
) -> Result<EnsembleResult> {
    spec.validate()?;
    let members = map_indexed(spec.n_realizations, |r| {
        let schedule = sample_disorder(spec, base, r, steps)?;
        Ok(fisher_set_schedule(&schedule, base, initial, steps)?.defect_site.values)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleResult::from_members((0..=steps).collect(), &members, Observable::Fi))
}

/// Disorder-averaged estimation error. Each realization generates data and evaluates
/// likelihoods with its own disordered coins; all realizations share the trial seed of
/// `config`.
pub fn ensemble_msre(spec: &DisorderSpec, config: &EstimationConfig) -> Result<EnsembleResult> {
    spec.validate()?;
    config.validate()?;
    let t_max = config.max_steps();
    let members = map_indexed(spec.n_realizations, |r| {
        let schedule = sample_disorder(spec, &config.params, r, t_max)?;
        Ok(estimation_curve_schedule(config, &schedule)?.msre())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleResult::from_members(config.steps.clone(), &members, Observable::Msre))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::fisher_at_defect;

    fn base() -> WalkParams {
        WalkParams::from_pi_units(0.9, 0.75, -0.55, 41).unwrap()
    }

    #[test]
    fn zero_width_is_the_clean_walk() {
        let p = base();
        let mut spec = DisorderSpec::new(DisorderKind::Static, 5);
        spec.half_width = 0.0;
        assert_eq!(sample_disorder(&spec, &p, 3, 0).unwrap(), CoinSchedule::Static(p.coin_field()));
        spec.kind = DisorderKind::Dynamic;
        match sample_disorder(&spec, &p, 3, 4).unwrap() {
            CoinSchedule::PerStep(f) => assert!(f.iter().all(|f| *f == p.coin_field())),
            _ => panic!("dynamic disorder must be per step"),
        }
        spec.n_realizations = 1;
        let s = WalkerState::default_initial(p.lattice());
        let e = ensemble_fisher(&spec, &p, &s, 15).unwrap();
        assert_eq!(e.mean, fisher_at_defect(&p, &s, 15).unwrap().values);
        assert!(e.std.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn containment_determinism_and_defect_exclusion() {
        let p = base();
        let spec = DisorderSpec::new(DisorderKind::Static, 11);
        let a = sample_disorder(&spec, &p, 2, 0).unwrap();
        assert_eq!(a, sample_disorder(&spec, &p, 2, 0).unwrap());
        assert_ne!(a, sample_disorder(&spec, &p, 3, 0).unwrap());
        let f = a.field(0).unwrap();
        let w = spec.half_width;
        assert_eq!(f.defect_angle().to_bits(), p.theta02().to_bits());
        let o = p.lattice().origin_offset();
        for i in 0..f.lattice().size() {
            let t1 = f.layer1()[i];
            assert!(t1 >= p.theta1() - w && t1 <= p.theta1() + w);
            if i != o {
                let t2 = f.layer2()[i];
                assert!(t2 >= p.theta2() - w && t2 <= p.theta2() + w);
            }
        }
        assert!(sample_disorder(&spec, &p, 10, 0).is_err());
    }

    #[test]
    fn dynamic_fields_are_uniform_in_space() {
        let p = base();
        let spec = DisorderSpec::new(DisorderKind::Dynamic, 1);
        let CoinSchedule::PerStep(fields) = sample_disorder(&spec, &p, 0, 6).unwrap() else {
            panic!("dynamic disorder must be per step");
        };
        assert_eq!(fields.len(), 6);
        for f in &fields {
            assert!(f.layer1().iter().all(|&x| x == f.layer1()[0]));
            assert_eq!(f.defect_angle(), p.theta02());
        }
        assert_ne!(fields[0], fields[1]);
    }

    #[test]
    fn ensembles_are_reproducible() {
        let p = base();
        let s = WalkerState::default_initial(p.lattice());
        let mut spec = DisorderSpec::new(DisorderKind::Static, 9);
        spec.n_realizations = 3;
        let a = ensemble_fisher(&spec, &p, &s, 12).unwrap();
        assert_eq!(a, ensemble_fisher(&spec, &p, &s, 12).unwrap());
        assert!(a.std.iter().all(|&x| x >= 0.0));
        assert_eq!(a.mean.len(), 13);
    }
}
