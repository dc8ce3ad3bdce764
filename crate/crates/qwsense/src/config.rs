//! Experiment configuration files.
//!
//! One TOML document describes one experiment. Every angle is written in units of pi,
//! so `theta1 = 0.9` means 0.9 pi. Sections that an experiment does not use are
//! ignored; omitted sections take their defaults.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qwsense_core::bayes::{DataMode, EstimationConfig};
use qwsense_core::disorder::{DisorderKind, DisorderSpec};
use qwsense_core::metrology::FitMode;
use qwsense_core::spectral::DEFAULT_SITE_CAP;
use qwsense_core::topology::DEFAULT_NK;
use qwsense_core::{Coin, Lattice, WalkParams, WalkerState};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FiScaling,
    FiSurface,
    PhaseDiagram,
    Spectrum,
    Bayes,
    Disorder,
    AvgFi,
    GfiQfi,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::FiScaling => "fi-scaling",
            Experiment::FiSurface => "fi-surface",
            Experiment::PhaseDiagram => "phase-diagram",
            Experiment::Spectrum => "spectrum",
            Experiment::Bayes => "bayes",
            Experiment::Disorder => "disorder",
            Experiment::AvgFi => "avg-fi",
            Experiment::GfiQfi => "gfi-qfi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Svg]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub walk: WalkSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub surface: SurfaceSection,
    #[serde(default)]
    pub phase: PhaseSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub estimation: EstimationSection,
    #[serde(default)]
    pub disorder: DisorderSection,
    #[serde(default)]
    pub average: AverageSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoinLabel {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkSection {
    pub theta1: f64,
    pub theta2: f64,
    pub theta02: f64,
    pub steps: usize,
    /// Odd ring size; defaults to the smallest size on which the walk never wraps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_size: Option<usize>,
    pub initial_position: i64,
    pub initial_coin: CoinLabel,
}

impl Default for WalkSection {
    fn default() -> Self {
        WalkSection {
            theta1: 0.9,
            theta2: 0.75,
            theta02: -0.55,
            steps: 100,
            lattice_size: None,
            initial_position: -1,
            initial_coin: CoinLabel::Down,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModeLabel {
    AllPoints,
    PeaksOnly,
}

impl From<FitModeLabel> for FitMode {
    fn from(m: FitModeLabel) -> Self {
        match m {
            FitModeLabel::AllPoints => FitMode::AllPoints,
            FitModeLabel::PeaksOnly => FitMode::PeaksOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub modes: Vec<FitModeLabel>,
    /// `[t_min, t_max]`; `t_max` defaults to the last step.
    pub t_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection { modes: vec![FitModeLabel::AllPoints, FitModeLabel::PeaksOnly], t_min: 10.0, t_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 }).collect()
    }

    fn check(&self, field: &str, v: &mut Violations) {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            v.push(format!("{field}.start"), "range bounds must be finite");
        }
        if self.count == 0 {
            v.push(format!("{field}.count"), "range needs at least one point");
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Theta1,
    Theta02,
}

impl SweepParameter {
    pub fn column(self) -> &'static str {
        match self {
            SweepParameter::Theta1 => "theta1_over_pi",
            SweepParameter::Theta02 => "theta02_over_pi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceSection {
    pub parameter: SweepParameter,
    pub values: Range,
}

impl Default for SurfaceSection {
    fn default() -> Self {
        SurfaceSection { parameter: SweepParameter::Theta1, values: Range { start: -1.0, stop: 1.0, count: 41 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSection {
    pub theta1: Range,
    pub theta2: Range,
    pub n_k: usize,
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection {
            theta1: Range { start: -1.0, stop: 1.0, count: 41 },
            theta2: Range { start: -1.0, stop: 1.0, count: 41 },
            n_k: DEFAULT_NK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub lattice_size: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection { lattice_size: 101 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataLabel {
    Fresh,
    Cumulative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationSection {
    pub prior: [f64; 2],
    pub grid_points: usize,
    pub trials: u64,
    pub steps: Vec<usize>,
    pub data: DataLabel,
}

impl Default for EstimationSection {
    fn default() -> Self {
        EstimationSection {
            prior: [-0.556, -0.544],
            grid_points: qwsense_core::bayes::DEFAULT_GRID_POINTS,
            trials: qwsense_core::bayes::DEFAULT_TRIALS,
            steps: (2..=10).map(|k| 10 * k).collect(),
            data: DataLabel::Fresh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindLabel {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservableLabel {
    Fi,
    Msre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderSection {
    pub kind: KindLabel,
    /// In units of pi.
    pub half_width: f64,
    pub realizations: usize,
    pub observable: ObservableLabel,
    pub disorder_defect: bool,
}

impl Default for DisorderSection {
    fn default() -> Self {
        DisorderSection {
            kind: KindLabel::Static,
            half_width: 0.05,
            realizations: qwsense_core::disorder::DEFAULT_REALIZATIONS,
            observable: ObservableLabel::Fi,
            disorder_defect: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AverageSection {
    pub window: usize,
    pub spacing: usize,
}

impl Default for AverageSection {
    fn default() -> Self {
        AverageSection {
            window: qwsense_core::metrology::DEFAULT_AVERAGE_WINDOW,
            spacing: qwsense_core::metrology::DEFAULT_AVERAGE_SPACING,
        }
    }
}

/// One violated field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Violations(pub Vec<Violation>);

impl Violations {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation { field: field.into(), message: message.into() });
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Largest step count the experiment evolves to.
    pub fn max_steps(&self) -> usize {
        match self.experiment {
            Experiment::Bayes => self.estimation.steps.last().copied().unwrap_or(0),
            Experiment::Disorder if self.disorder.observable == ObservableLabel::Msre => {
                self.estimation.steps.last().copied().unwrap_or(0)
            }
            _ => self.walk.steps,
        }
    }

    pub fn lattice_size(&self) -> usize {
        match self.experiment {
            Experiment::Spectrum => self.spectrum.lattice_size,
            _ => self.walk.lattice_size.unwrap_or_else(|| Lattice::wrap_free(self.max_steps()).size()),
        }
    }

    pub fn walk_params(&self) -> qwsense_core::Result<WalkParams> {
        let w = &self.walk;
        WalkParams::from_pi_units(w.theta1, w.theta2, w.theta02, self.lattice_size())
    }

    pub fn initial_state(&self, params: &WalkParams) -> qwsense_core::Result<WalkerState> {
        let coin = match self.walk.initial_coin {
            CoinLabel::Up => Coin::Up,
            CoinLabel::Down => Coin::Down,
        };
        WalkerState::localized(params.lattice(), self.walk.initial_position, coin)
    }

    pub fn fit_window(&self, last: f64) -> (f64, f64) {
        (self.fit.t_min, self.fit.t_max.unwrap_or(last))
    }

    pub fn estimation_config(&self, params: WalkParams, initial: WalkerState) -> EstimationConfig {
        let e = &self.estimation;
        EstimationConfig {
            params,
            initial,
            prior: (e.prior[0] * PI, e.prior[1] * PI),
            grid_points: e.grid_points,
            trials: e.trials,
            steps: e.steps.clone(),
            seed: self.seed,
            data: match e.data {
                DataLabel::Fresh => DataMode::Fresh,
                DataLabel::Cumulative => DataMode::Cumulative,
            },
        }
    }

    pub fn disorder_spec(&self) -> DisorderSpec {
        let d = &self.disorder;
        DisorderSpec {
            kind: match d.kind {
                KindLabel::Static => DisorderKind::Static,
                KindLabel::Dynamic => DisorderKind::Dynamic,
            },
            half_width: d.half_width * PI,
            n_realizations: d.realizations,
            master_seed: self.seed,
            disorder_defect: d.disorder_defect,
        }
    }

    /// Every violated field, checked before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut v = Violations::default();
        let w = &self.walk;
        for (name, x) in [("walk.theta1", w.theta1), ("walk.theta2", w.theta2), ("walk.theta02", w.theta02)] {
            if !x.is_finite() {
                v.push(name, "angle must be finite");
            }
        }
        if self.formats.is_empty() {
            v.push("formats", "at least one output format is required");
        }
        let uses_walk_steps =
            !matches!(self.experiment, Experiment::PhaseDiagram | Experiment::Spectrum | Experiment::Bayes)
                && !(self.experiment == Experiment::Disorder && self.disorder.observable == ObservableLabel::Msre);
        if uses_walk_steps && w.steps < 1 {
            v.push("walk.steps", "must be at least 1");
        }
        let size = self.lattice_size();
        let size_field =
            if self.experiment == Experiment::Spectrum { "spectrum.lattice_size" } else { "walk.lattice_size" };
        match Lattice::new(size) {
            Err(_) => v.push(size_field, format!("lattice size must be odd and >= 3, got {size}")),
            Ok(l) => {
                if self.experiment != Experiment::PhaseDiagram && !l.contains(w.initial_position) {
                    v.push("walk.initial_position", format!("position {} is outside the lattice", w.initial_position));
                }
            }
        }
        if uses_walk_steps
            && matches!(
                self.experiment,
                Experiment::FiScaling | Experiment::AvgFi | Experiment::GfiQfi | Experiment::Disorder
            )
        {
            let f = &self.fit;
            if !f.t_min.is_finite() || f.t_max.is_some_and(|t| !t.is_finite() || t < f.t_min) {
                v.push("fit.t_max", "fit window must satisfy t_min <= t_max");
            }
            if f.modes.is_empty() {
                v.push("fit.modes", "at least one fit mode is required");
            }
        }
        match self.experiment {
            Experiment::FiSurface => {
                self.surface.values.check("surface.values", &mut v);
            }
            Experiment::PhaseDiagram => {
                self.phase.theta1.check("phase.theta1", &mut v);
                self.phase.theta2.check("phase.theta2", &mut v);
                if self.phase.n_k < 64 {
                    v.push("phase.n_k", "momentum grid needs at least 64 points");
                }
            }
            Experiment::Spectrum => {
                if size > DEFAULT_SITE_CAP {
                    v.push("spectrum.lattice_size", format!("dense spectra are capped at {DEFAULT_SITE_CAP} sites"));
                }
            }
            Experiment::Bayes => self.check_estimation(&mut v),
            Experiment::Disorder => {
                let d = &self.disorder;
                if !(d.half_width.is_finite() && d.half_width >= 0.0) {
                    v.push("disorder.half_width", "must be finite and >= 0");
                }
                if d.realizations < 1 {
                    v.push("disorder.realizations", "must be at least 1");
                }
                if d.observable == ObservableLabel::Msre {
                    self.check_estimation(&mut v);
                }
            }
            Experiment::AvgFi => {
                let a = &self.average;
                if a.window < 1 {
                    v.push("average.window", "must be at least 1");
                }
                if a.spacing < 1 {
                    v.push("average.spacing", "must be at least 1");
                }
                if a.window >= 1 && a.spacing >= 1 && w.steps < (a.window - 1) * a.spacing {
                    v.push(
                        "average.window",
                        format!("{} points spaced {} apart do not fit in {} steps", a.window, a.spacing, w.steps),
                    );
                }
            }
            Experiment::FiScaling | Experiment::GfiQfi => {}
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(v))
        }
    }

    fn check_estimation(&self, v: &mut Violations) {
        let e = &self.estimation;
        if !(e.prior[0].is_finite() && e.prior[1].is_finite() && e.prior[0] < e.prior[1]) {
            v.push("estimation.prior", "prior must be [lo, hi] with lo < hi");
        }
        if e.grid_points < qwsense_core::bayes::MIN_GRID_POINTS {
            v.push("estimation.grid_points", format!("must be at least {}", qwsense_core::bayes::MIN_GRID_POINTS));
        }
        if e.trials < 1 {
            v.push("estimation.trials", "must be at least 1");
        }
        if e.steps.is_empty() {
            v.push("estimation.steps", "at least one step count is required");
        } else if e.steps.windows(2).any(|s| s[0] >= s[1]) {
            v.push("estimation.steps", "step counts must be strictly increasing");
        }
        if self.walk.theta02 == 0.0 {
            v.push("walk.theta02", "relative error is undefined for a zero defect angle");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_the_reference_point() {
        let c = ExperimentConfig::from_toml("experiment = \"fi-scaling\"").unwrap();
        assert_eq!(c.walk.theta1, 0.9);
        assert_eq!(c.lattice_size(), 203);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn every_violation_is_reported() {
        let c = ExperimentConfig::from_toml(
            "experiment = \"bayes\"\n[walk]\ntheta02 = 0.0\nlattice_size = 10\n[estimation]\nprior = [0.1, -0.1]\ngrid_points = 3\ntrials = 0\nsteps = [5, 5]\n",
        )
        .unwrap();
        let CliError::Validation(v) = c.validate().unwrap_err() else { panic!("expected a validation error") };
        let fields: Vec<&str> = v.0.iter().map(|x| x.field.as_str()).collect();
        for f in [
            "walk.lattice_size",
            "estimation.prior",
            "estimation.grid_points",
            "estimation.trials",
            "estimation.steps",
            "walk.theta02",
        ] {
            assert!(fields.contains(&f), "{f} missing from {fields:?}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml("experiment = \"spectrum\"\nthetas = 1"),
            Err(CliError::Parse(_))
        ));
        assert!(matches!(ExperimentConfig::from_toml("experiment = \"nope\""), Err(CliError::Parse(_))));
    }

    #[test]
    fn ranges_include_both_ends() {
        let r = Range { start: -1.0, stop: 1.0, count: 3 };
        assert_eq!(r.values(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(Range { start: 0.3, stop: 0.9, count: 1 }.values(), vec![0.3]);
    }
}
