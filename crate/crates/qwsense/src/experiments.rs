//! One function per experiment family. Each returns the complete set of files it
//! would write; nothing touches the filesystem here.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use qwsense_core::bayes::estimation_curve;
use qwsense_core::disorder::{ensemble_fisher, ensemble_msre, EnsembleResult};
use qwsense_core::fit::linear_regression;
use qwsense_core::metrology::{averaged_fisher, fisher_at_defect, fisher_set, fit_scaling, FisherSeries, FitMode};
use qwsense_core::spectral::{decompose_step_operator, find_localized_states, LocalizationThreshold};
use qwsense_core::topology::phase_diagram;

use crate::config::{Experiment, ExperimentConfig, Format, ObservableLabel, SweepParameter};
use crate::error::Result;
use crate::format::{self, float, time, write_csv, write_json, Schema};
use crate::plot::{render_plot, PlotKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
    /// Versioned column set for CSV files.
    pub schema: Option<String>,
}

/// Collects the files of one run, honouring the requested formats.
struct Outputs<'a> {
    formats: &'a [Format],
    files: Vec<Artifact>,
}

impl Outputs<'_> {
    fn csv(&mut self, name: &str, schema: &Schema, rows: &[Vec<String>]) -> Vec<u8> {
        let bytes = write_csv(schema, rows);
        if self.formats.contains(&Format::Csv) {
            self.files.push(Artifact { name: name.into(), bytes: bytes.clone(), schema: Some(schema.id()) });
        }
        bytes
    }

    fn json(&mut self, name: &str, value: &Value) {
        if self.formats.contains(&Format::Json) {
            self.files.push(Artifact { name: name.into(), bytes: write_json(value), schema: None });
        }
    }

    /// Plots are rendered from the CSV bytes, exactly as `plot` would from disk.
    fn svg(&mut self, name: &str, source: &str, csv: &[u8], kind: PlotKind) -> Result<()> {
        if self.formats.contains(&Format::Svg) {
            let svg = render_plot(Path::new(source), csv, kind)?;
            self.files.push(Artifact { name: name.into(), bytes: svg.into_bytes(), schema: None });
        }
        Ok(())
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let mut out = Outputs { formats: &config.formats, files: Vec::new() };
    match config.experiment {
        Experiment::FiScaling => fi_scaling(config, &mut out)?,
        Experiment::FiSurface => fi_surface(config, &mut out)?,
        Experiment::PhaseDiagram => phase(config, &mut out)?,
        Experiment::Spectrum => spectrum(config, &mut out)?,
        Experiment::Bayes => bayes(config, &mut out)?,
        Experiment::Disorder => disorder(config, &mut out)?,
        Experiment::AvgFi => avg_fi(config, &mut out)?,
        Experiment::GfiQfi => gfi_qfi(config, &mut out)?,
    }
    out.files.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out.files)
}

fn series_rows(s: &FisherSeries) -> Vec<Vec<String>> {
    (0..s.len()).map(|i| vec![time(s.times[i]), float(s.values[i]), s.flagged[i].to_string()]).collect()
}

/// One fit record per requested mode; a fit that cannot be made is reported, not fatal.
fn fits(config: &ExperimentConfig, s: &FisherSeries) -> Value {
    let last = s.times.last().copied().unwrap_or(0.0);
    let window = config.fit_window(last);
    let records: Vec<Value> = config
        .fit
        .modes
        .iter()
        .map(|&m| {
            let mode = FitMode::from(m);
            match fit_scaling(s, mode, window) {
                Ok(f) => json!({
                    "mode": mode.as_str(),
                    "exponent": f.exponent,
                    "prefactor": f.prefactor,
                    "r_squared": f.r_squared,
                    "points": f.points,
                }),
                Err(e) => json!({ "mode": mode.as_str(), "error": e.to_string() }),
            }
        })
        .collect();
    json!({ "series": s.kind.as_str(), "window": [window.0, window.1], "fits": records })
}

fn walk_echo(config: &ExperimentConfig) -> Value {
    let w = &config.walk;
    json!({
        "theta1_over_pi": w.theta1,
        "theta2_over_pi": w.theta2,
        "theta02_over_pi": w.theta02,
        "lattice_size": config.lattice_size(),
    })
}

fn fi_scaling(config: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let params = config.walk_params()?;
    let initial = config.initial_state(&params)?;
    let fi = fisher_at_defect(&params, &initial, config.walk.steps)?;
    let csv = out.csv("fi.csv", &format::FI_SERIES, &series_rows(&fi));
    out.json("fit.json", &json!({ "walk": walk_echo(config), "fit": fits(config, &fi) }));
    out.svg("fi.svg", "fi.csv", &csv, PlotKind::Scaling)
}

fn gfi_qfi(config: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let params = config.walk_params()?;
    let initial = config.initial_state(&params)?;
    let set = fisher_set(&params, &initial, config.walk.steps)?;
    let mut records = Vec::new();
    for (stem, s) in [("fi", &set.defect_site), ("gfi", &set.global), ("qfi", &set.quantum)] {
        let csv = out.csv(&format!("{stem}.csv"), &format::FI_SERIES, &series_rows(s));
        out.svg(&format!("{stem}.svg"), &format!("{stem}.csv"), &csv, PlotKind::Scaling)?;
        records.push(fits(config, s));
    }
    // worst violation of FI <= GFI <= QFI over the run
    let slack = (0..set.defect_site.len())
        .map(|i| {
            let (f, g, q) = (set.defect_site.values[i], set.global.values[i], set.quantum.values[i]);
            (f - g).max(g - q)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    out.json("fit.json", &json!({ "walk": walk_echo(config), "fits": records, "max_hierarchy_excess": slack }));
    Ok(())
}

/// `min FI / t^2` over the points of `s` inside `window` with `t > 0`.
fn min_normalized(s: &FisherSeries, window: (f64, f64)) -> Option<f64> {
    (0..s.len())
        .filter(|&i| s.times[i] > 0.0 && s.times[i] >= window.0 && s.times[i] <= window.1)
        .map(|i| s.values[i] / (s.times[i] * s.times[i]))
        .reduce(f64::min)
}

fn avg_fi(config: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let params = config.walk_params()?;
    let initial = config.initial_state(&params)?;
    let raw = fisher_at_defect(&params, &initial, config.walk.steps)?;
    let avg = averaged_fisher(&raw, config.average.window, config.average.spacing)?;
    let raw_csv = out.csv("fi.csv", &format::FI_SERIES, &series_rows(&raw));
    let avg_csv = out.csv("avg_fi.csv", &format::FI_SERIES, &series_rows(&avg));
    out.svg("fi.svg", "fi.csv", &raw_csv, PlotKind::Scaling)?;
    out.svg("avg_fi.svg", "avg_fi.csv", &avg_csv, PlotKind::Scaling)?;
    let (lo, hi) = config.fit_window(raw.times.last().copied().unwrap_or(0.0));
    // the admissible window: times the averaged series covers, intersected with the fit window
    let admissible = (
        avg.times.first().copied().unwrap_or(f64::INFINITY).max(lo),
        avg.times.last().copied().unwrap_or(f64::NEG_INFINITY).min(hi),
    );
    out.json(
        "fit.json",
        &json!({
            "walk": walk_echo(config),
            "window": config.average.window,
            "spacing": config.average.spacing,
            "raw": fits(config, &raw),
            "averaged": fits(config, &avg),
            "admissible_window": [admissible.0, admissible.1],
            "min_raw_over_t2": min_normalized(&raw, admissible),
            "min_averaged_over_t2": min_normalized(&avg, admissible),
        }),
    );
    Ok(())
}

fn fi_surface(config: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let params = config.walk_params()?;
    let initial = config.initial_state(&params)?;
    let values = config.surface.values.values();
    let parameter = config.surface.parameter;
    let series = values
        .par_iter()
        .map(|&v| {
            let p = match parameter {
                SweepParameter::Theta1 => params.with_theta1(v * PI)?,
                SweepParameter::Theta02 => params.with_theta02(v * PI)?,
            };
            fisher_at_defect(&p, &initial, config.walk.steps)
        })
        .collect::<qwsense_core::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (v, s) in values.iter().zip(&series) {
        for i in 0..s.len() {
            rows.push(vec![float(*v), time(s.times[i]), float(s.values[i]), s.flagged[i].to_string()]);
        }
    }
    let schema = match parameter {
        SweepParameter::Theta1 => &format::SURFACE_THETA1,
        SweepParameter::Theta02 => &format::SURFACE_THETA02,
    };
    debug_assert_eq!(schema.columns[0], parameter.column());
    let csv = out.csv("surface.csv", schema, &rows);
    out.svg("surface.svg", "surface.csv", &csv, PlotKind::Heatmap)
}

fn phase(config: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let g1 = config.phase.theta1.values();
    let g2 = config.phase.theta2.values();
    let r1: Vec<f64> = g1.iter().map(|x| x * PI).collect();
    let r2: Vec<f64> = g2.iter().map(|x| x * PI).collect();
    let diagram = phase_diagram(&r1, &r2, config.phase.n_k)?;
    let mut rows = Vec::with_capacity(g1.len() * g2.len());
    for (i, a) in g1.iter().enumerate() {
        for (j, b) in g2.iter().enumerate() {
            let p = diagram.get(i, j);
            rows.push(vec![
                float(*a),
                float(*b),
                p.winding.map(|w| w.to_string()).unwrap_or_default(),
                float(p.min_gap),
                p.status.as_str().to_owned(),
            ]);
        }
    }
    let csv = out.csv("phase.csv", &format::PHASE_DIAGRAM, &rows);
    out.svg("phase.svg", "phase.csv", &csv, PlotKind::Heatmap)
}

fn spectrum(config: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let params = config.walk_params()?;
    let decomp = decompose_step_operator(&params)?;
    let cut = LocalizationThreshold::default().ipr_threshold(params.lattice());
    let rows: Vec<Vec<String>> = (0..decomp.len())
        .map(|j| {
            let ipr = decomp.ipr(j);
            vec![j.to_string(), float(decomp.quasi_energies[j]), float(ipr), (ipr > cut).to_string()]
        })
        .collect();
    out.csv("spectrum.csv", &format::SPECTRUM, &rows);
    let states = find_localized_states(&decomp, 0)?;
    let records: Vec<Value> = states
        .iter()
        .map(|s| {
            json!({
                "index": s.index,
                "quasi_energy": s.quasi_energy,
                "peak_position": s.peak_position,
                "localization_length": s.localization_length,
                "ipr": s.ipr,
                "profile": s.profile,
            })
        })
        .collect();
    out.json(
        "localized.json",
        &json!({
            "walk": walk_echo(config),
            "ipr_threshold": cut,
            "max_residual": decomp.max_residual(),
            "orthonormality_defect": decomp.orthonormality_defect,
            "states": records,
        }),
    );
    Ok(())
}

fn bayes(config: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let params = config.walk_params()?;
    let initial = config.initial_state(&params)?;
    let est = config.estimation_config(params, initial);
    let curve = estimation_curve(&est)?;
    let rows: Vec<Vec<String>> = curve
        .records
        .iter()
        .map(|r| vec![r.t.to_string(), r.trials.to_string(), r.successes.to_string(), float(r.msre)])
        .collect();
    let mut post = Vec::new();
    for r in &curve.records {
        for (c, w) in r.posterior.candidates().iter().zip(r.posterior.weights()) {
            post.push(vec![r.t.to_string(), float(c / PI), float(w)]);
        }
    }
    let est_csv = out.csv("estimation.csv", &format::ESTIMATION, &rows);
    let post_csv = out.csv("posterior.csv", &format::POSTERIOR, &post);
    out.svg("estimation.svg", "estimation.csv", &est_csv, PlotKind::Scaling)?;
    out.svg("posterior.svg", "posterior.csv", &post_csv, PlotKind::Posterior)?;
    let summary: Vec<Value> = curve
        .records
        .iter()
        .map(
            |r| json!({ "t": r.t, "mean_over_pi": r.posterior.mean() / PI, "std_over_pi": r.posterior.std_dev() / PI }),
        )
        .collect();
    out.json(
        "fit.json",
        &json!({
            "walk": walk_echo(config),
            "data": est.data.as_str(),
            "msre_slope": curve.slope.map(|f| json!({ "slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared })),
            "posterior": summary,
        }),
    );
    Ok(())
}

fn ensemble_rows(e: &EnsembleResult) -> Vec<Vec<String>> {
    (0..e.steps.len())
        .map(|j| vec![e.steps[j].to_string(), float(e.mean[j]), float(e.std[j]), e.realizations.to_string()])
        .collect()
}

fn disorder(config: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let params = config.walk_params()?;
    let initial = config.initial_state(&params)?;
    let spec = config.disorder_spec();
    let head = json!({
        "kind": spec.kind.as_str(),
        "half_width_over_pi": config.disorder.half_width,
        "realizations": spec.n_realizations,
        "disorder_defect": spec.disorder_defect,
    });
    let (e, record) = match config.disorder.observable {
        ObservableLabel::Fi => {
            let e = ensemble_fisher(&spec, &params, &initial, config.walk.steps)?;
            let (lo, hi) = config.fit_window(config.walk.steps as f64);
            let rel = e.relative_std((lo.max(0.0).ceil() as usize, hi.floor() as usize));
            let fit = fits(config, &e.mean_series(params));
            (e, json!({ "disorder": head, "fit": fit, "relative_std": rel }))
        }
        ObservableLabel::Msre => {
            let est = config.estimation_config(params, initial);
            let e = ensemble_msre(&spec, &est)?;
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                e.steps.iter().zip(&e.mean).filter(|(_, &m)| m > 0.0).map(|(&t, &m)| ((t as f64).ln(), m.ln())).unzip();
            let slope = linear_regression(&xs, &ys)
                .ok()
                .map(|f| json!({ "slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared }));
            (e, json!({ "disorder": head, "data": est.data.as_str(), "msre_slope": slope }))
        }
    };
    let csv = out.csv("ensemble.csv", &format::ENSEMBLE, &ensemble_rows(&e));
    out.json("fit.json", &json!({ "walk": walk_echo(config), "ensemble": record }));
    out.svg("ensemble.svg", "ensemble.csv", &csv, PlotKind::Band)
}
