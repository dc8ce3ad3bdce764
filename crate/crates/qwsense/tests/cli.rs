use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use qwsense::plot::{render_plot, PlotKind};
use qwsense::run::{sha256_hex, MANIFEST_NAME, OUT_DIR_ENV};
use qwsense::{run, CliError, ExperimentConfig, RunOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qwsense"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_into(text: &str, out: &Path, opts: RunOptions) -> qwsense::RunManifest {
    let config = ExperimentConfig::from_toml(text).unwrap();
    run(config, &RunOptions { out: Some(out.to_path_buf()), ..opts }).unwrap().1
}

fn hashes(m: &qwsense::RunManifest) -> Vec<(String, String)> {
    m.files.iter().map(|f| (f.name.clone(), f.sha256.clone())).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const PHASE_3X3: &str = r#"
experiment = "phase-diagram"
[phase]
theta1 = { start = 0.05, stop = 0.9, count = 3 }
theta2 = { start = 0.25, stop = 0.75, count = 3 }
"#;

#[test]
fn phase_diagram_grid_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    run_into(PHASE_3X3, dir.path(), RunOptions::default());
    let text = fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta1_over_pi,theta2_over_pi,winding,min_gap,status"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.contains(&"0.9,0.75,1,0.23344536385590545,gapped"));
}

#[test]
fn fisher_scaling_run_reports_quadratic_growth() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_into("experiment = \"fi-scaling\"", dir.path(), RunOptions::default());
    assert_eq!(m.config.lattice_size(), 203);
    let fit: Value = serde_json::from_slice(&fs::read(dir.path().join("fit.json")).unwrap()).unwrap();
    for f in fit["fit"]["fits"].as_array().unwrap() {
        let b = f["exponent"].as_f64().unwrap();
        assert!((1.8..=2.2).contains(&b), "{}: b = {b}", f["mode"]);
    }
    let csv = fs::read_to_string(dir.path().join("fi.csv")).unwrap();
    assert!(csv.starts_with("t,value,flagged\n0,0.0,true\n"));
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn identical_configs_give_identical_hashes() {
    for text in [
        "experiment = \"fi-scaling\"\n[walk]\nsteps = 40",
        "experiment = \"bayes\"\nseed = 7\n[estimation]\nsteps = [20, 30]\ngrid_points = 41",
        "experiment = \"disorder\"\nseed = 5\n[walk]\nsteps = 30\n[disorder]\nkind = \"dynamic\"\nrealizations = 4",
        PHASE_3X3,
    ] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = run_into(text, a.path(), RunOptions { threads: Some(1), ..Default::default() });
        let mb = run_into(text, b.path(), RunOptions { threads: Some(4), ..Default::default() });
        assert_eq!(hashes(&ma), hashes(&mb), "{text}");
        for f in &ma.files {
            let bytes = fs::read(a.path().join(&f.name)).unwrap();
            assert_eq!(sha256_hex(&bytes), f.sha256);
            assert_eq!(bytes.len() as u64, f.bytes);
        }
    }
}

#[test]
fn seed_override_changes_sampled_data_only() {
    let text = "experiment = \"bayes\"\nseed = 7\n[estimation]\nsteps = [20, 30]\ngrid_points = 41";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_into(text, a.path(), RunOptions::default());
    let mb = run_into(text, b.path(), RunOptions { seed: Some(8), ..Default::default() });
    assert_eq!(mb.seed, 8);
    assert_ne!(hashes(&ma), hashes(&mb));
}

#[test]
fn manifest_is_complete_and_staging_is_cleaned_up() {
    let dir = tempfile::tempdir().unwrap();
    run_into("experiment = \"gfi-qfi\"\n[walk]\nsteps = 30", dir.path(), RunOptions::default());
    let manifest: Value = serde_json::from_slice(&fs::read(dir.path().join(MANIFEST_NAME)).unwrap()).unwrap();
    let listed: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    let mut on_disk: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    on_disk.sort();
    let mut expected: Vec<String> = listed.iter().map(|s| s.to_string()).chain([MANIFEST_NAME.to_string()]).collect();
    expected.sort();
    assert_eq!(on_disk, expected);
    assert_eq!(manifest["generator"], qwsense_core::rng::GENERATOR);
    for f in manifest["files"].as_array().unwrap() {
        let name = f["name"].as_str().unwrap();
        assert_eq!(f["schema"].is_string(), name.ends_with(".csv"), "{name}");
    }
}

#[test]
fn svgs_rerender_identically_from_their_csv() {
    let dir = tempfile::tempdir().unwrap();
    run_into("experiment = \"avg-fi\"\n[walk]\nsteps = 60", dir.path(), RunOptions::default());
    run_into(PHASE_3X3, dir.path(), RunOptions::default());
    for (csv, svg, kind) in [
        ("fi.csv", "fi.svg", "scaling"),
        ("avg_fi.csv", "avg_fi.svg", "scaling"),
        ("phase.csv", "phase.svg", "heatmap"),
    ] {
        let out = dir.path().join(format!("re-{svg}"));
        let o = bin()
            .args(["plot", "--data"])
            .arg(dir.path().join(csv))
            .args(["--kind", kind, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(fs::read(&out).unwrap(), fs::read(dir.path().join(svg)).unwrap(), "{svg}");
    }
}

#[test]
fn validation_lists_every_violated_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "experiment = \"avg-fi\"\nformats = []\n[walk]\nsteps = 0\nlattice_size = 8\n[fit]\nmodes = []\n[average]\nwindow = 0\nspacing = 0\n",
    );
    let o = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for field in ["formats", "walk.steps", "walk.lattice_size", "fit.modes", "average.window", "average.spacing"] {
        assert!(err.contains(&format!("{field}:")), "{field} missing from:\n{err}");
    }
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("o").exists(), "nothing is written for an invalid config");

    let good = write_config(dir.path(), "good.toml", "experiment = \"spectrum\"");
    let o = bin().args(["validate", "--config"]).arg(&good).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn unreadable_config_is_an_io_failure() {
    let o = bin().args(["run", "--config", "/nonexistent/qwsense.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    use qwsense_core::Error;
    assert_eq!(CliError::Core(Error::Numerical("x".into())).exit_code(), 3);
    assert_eq!(CliError::Core(Error::Capacity("x".into())).exit_code(), 3);
    assert_eq!(CliError::Core(Error::DivisionByZero("x".into())).exit_code(), 3);
    assert_eq!(CliError::Parse("x".into()).exit_code(), 2);
}

#[test]
fn empty_data_renders_with_a_no_data_note() {
    for (kind, header) in [
        (PlotKind::Scaling, "t,value,flagged\n"),
        (PlotKind::Heatmap, "theta1_over_pi,theta2_over_pi,winding,min_gap,status\n"),
        (PlotKind::Band, "t,mean,std,n_realizations\n"),
        (PlotKind::Posterior, "t,theta02_over_pi,weight\n"),
    ] {
        let svg = render_plot(Path::new("empty.csv"), header.as_bytes(), kind).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(">no data</text>"), "{kind:?}");
        assert!(svg.contains("<line"), "axes have ticks");
    }
}

#[test]
fn missing_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("ens.csv");
    fs::write(&data, "t,mean,n_realizations\n1,2.0,3\n").unwrap();
    let err = render_plot(&data, &fs::read(&data).unwrap(), PlotKind::Band).unwrap_err();
    assert!(matches!(&err, CliError::MissingColumn { column, .. } if column == "std"), "{err}");
    let o = bin()
        .args(["plot", "--data"])
        .arg(&data)
        .args(["--kind", "band", "--out"])
        .arg(dir.path().join("x.svg"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`std`"));
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let from_config = dir.path().join("from-config");
    let cfg = write_config(
        dir.path(),
        "p.toml",
        &format!("experiment = \"phase-diagram\"\noutput_dir = {:?}\n[phase]\ntheta1 = {{ start = 0.9, stop = 0.9, count = 1 }}\ntheta2 = {{ start = 0.75, stop = 0.75, count = 1 }}\n", from_config.to_str().unwrap()),
    );
    let from_env = dir.path().join("from-env");
    let from_flag = dir.path().join("from-flag");

    let o = bin().args(["run", "--config"]).arg(&cfg).env_remove(OUT_DIR_ENV).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(from_config.join("phase.csv").exists());

    let o = bin().args(["run", "--config"]).arg(&cfg).env(OUT_DIR_ENV, &from_env).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(from_env.join("phase.csv").exists());

    let o = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&from_flag)
        .env(OUT_DIR_ENV, &from_env)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(from_flag.join(MANIFEST_NAME).exists());
    assert_eq!(fs::read(from_env.join("phase.csv")).unwrap(), fs::read(from_flag.join("phase.csv")).unwrap());
}

#[test]
fn formats_select_the_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_into(
        "experiment = \"fi-scaling\"\nformats = [\"json\"]\n[walk]\nsteps = 30",
        dir.path(),
        RunOptions::default(),
    );
    let names: Vec<&str> = m.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["fit.json"]);
}

#[test]
fn spectrum_reports_the_localized_pair() {
    let dir = tempfile::tempdir().unwrap();
    run_into("experiment = \"spectrum\"", dir.path(), RunOptions::default());
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("index,quasi_energy,ipr,is_localized"));
    assert_eq!(csv.lines().count(), 1 + 202);
    let loc: Value = serde_json::from_slice(&fs::read(dir.path().join("localized.json")).unwrap()).unwrap();
    let states = loc["states"].as_array().unwrap();
    assert_eq!(states.len(), 2);
    let e: Vec<f64> = states.iter().map(|s| s["quasi_energy"].as_f64().unwrap()).collect();
    assert!((e[0] + e[1]).abs() < 1e-8);
}

#[test]
fn bundled_presets_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let c = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            c.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 8);
}
