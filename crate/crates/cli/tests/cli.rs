use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn heralded(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heralded"))
        .args(args)
        .env("HERALDED_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no `{key}` in {out}"))
        .parse()
        .unwrap()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn purity_curve_writes_series_and_manifest() {
    let dir = TempDir::new().unwrap();
    let o = heralded(
        &[
            "purity-curve",
            "--models",
            "rect,gaussian",
            "--s-min",
            "0.01",
            "--s-max",
            "10",
            "--points",
            "60",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for model in ["rect", "gaussian"] {
        let (header, rows) = csv_rows(&dir.path().join(format!("purity_{model}.csv")));
        assert_eq!(header, "s,gamma");
        assert_eq!(rows.len(), 60);
        assert!(rows.windows(2).all(|w| w[1][1] <= w[0][1] + 1e-12));
        let last = rows.last().unwrap();
        assert!((last[0] - 10.0).abs() < 1e-9);
        let target = if model == "rect" { 0.09 } else { 0.07 };
        assert!((last[1] - target).abs() < 0.01, "{model}: {}", last[1]);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "heralded");
    assert_eq!(manifest["config"]["command"], "purity-curve");
    assert_eq!(manifest["frequency_grids"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn inverted_range_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = heralded(&["purity-curve", "--s-min", "10", "--s-max", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[usage]:"), "{err}");
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn ideal_heralding_prints_unit_purity() {
    let dir = TempDir::new().unwrap();
    let o = heralded(&["purity", "--model", "rect", "--s", "0"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1.000000");
}

#[test]
fn purity_methods_agree() {
    let dir = TempDir::new().unwrap();
    let values: Vec<f64> = ["autocorr", "direct", "matrix"]
        .iter()
        .map(|m| {
            let o = heralded(
                &["purity", "--model", "gaussian", "--s", "1", "--method", m],
                dir.path(),
            );
            assert!(o.status.success(), "{}", stderr(&o));
            stdout(&o).trim().parse().unwrap()
        })
        .collect();
    assert!(values.iter().all(|v| (v - 0.52383).abs() < 1e-5), "{values:?}");
    assert!(values.iter().all(|v| v == &values[0]), "{values:?}");
}

#[test]
fn beyond_validated_range_trips_the_accuracy_guard() {
    let dir = TempDir::new().unwrap();
    let o = heralded(&["purity", "--s", "150"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error[accuracy-guard]:"));
}

#[test]
fn density_reports_trace_and_purity() {
    let dir = TempDir::new().unwrap();
    let o = heralded(
        &["density", "--model", "rect", "--s", "1", "--n-freq", "401"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((value(&out, "purity") - 0.66).abs() <= 0.01);
    assert!((value(&out, "trace") - 1.0).abs() <= 1e-6);
    assert!(value(&out, "min_eigenvalue") >= -1e-8);
    let text = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert_eq!(text.lines().count(), 401);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 802);
}

#[test]
fn pure_state_is_rank_one() {
    let dir = TempDir::new().unwrap();
    let o = heralded(
        &["density", "--model", "gaussian", "--s", "0", "--n-freq", "301"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("rank_one=true"), "{out}");
    assert!(value(&out, "leading_eigenvalue") > 1.0 - 1e-6);
}

#[test]
fn density_json_export_round_trips() {
    let dir = TempDir::new().unwrap();
    let o = heralded(
        &[
            "density",
            "--model",
            "lorentzian",
            "--s",
            "2",
            "--n-freq",
            "201",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let export: heralded_core::DensityMatrixExport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("density.json")).unwrap()).unwrap();
    let rho = heralded_core::HeraldedDensityMatrix::from_export(export).unwrap();
    assert_eq!(rho.dim(), 201);
    assert!((rho.trace() - 1.0).abs() < 1e-9);
}

#[test]
fn malformed_tabulated_input_names_the_line() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "x,re,im\n-1,0.5,0\n0,oops,0\n1,0.5,0\n").unwrap();
    let o = heralded(
        &[
            "density",
            "--model",
            "tabulated",
            "--input",
            input.to_str().unwrap(),
            "--s",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn tabulated_model_matches_builtin() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("gauss.csv");
    let mut table = String::from("# gaussian joint spectrum\nx,re\n");
    for i in 0..=400 {
        let x = -4.0 + 8.0 * i as f64 / 400.0;
        table.push_str(&format!("{x},{}\n", (-2.0 * 2f64.ln() * x * x).exp()));
    }
    fs::write(&input, table).unwrap();
    let o = heralded(
        &[
            "purity",
            "--model",
            "tabulated",
            "--input",
            input.to_str().unwrap(),
            "--s",
            "1",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let gamma: f64 = stdout(&o).trim().parse().unwrap();
    assert!((gamma - 0.523830).abs() < 1e-4, "{gamma}");
}

#[test]
fn photon2_lorentzian_rises_then_cuts_off() {
    let dir = TempDir::new().unwrap();
    let o = heralded(
        &["waveform", "--model", "lorentzian", "--herald", "photon2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("waveform_photon2.csv"));
    assert_eq!(header, "u,re,im,abs2");
    let peak = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
    let peak_u = rows.iter().find(|r| r[3] == peak).unwrap()[0];
    assert!(peak_u.abs() < 0.05, "peak at {peak_u}");
    let rising: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] > -3.0 && r[0] < -0.1)
        .map(|r| r[3])
        .collect();
    assert!(rising.windows(2).all(|w| w[1] > w[0]));
    let after = rows.iter().filter(|r| r[0] >= 0.05).map(|r| r[3]).fold(0.0, f64::max);
    assert!(after < 1e-3 * peak);
}

#[test]
fn chained_dispersion_is_compensated() {
    let dir = TempDir::new().unwrap();
    let o = heralded(
        &[
            "modulate",
            "--model",
            "gaussian",
            "--mod",
            "quad-phase:3",
            "--arm",
            "signal",
            "--mod",
            "quad-phase:-3",
            "--arm",
            "trigger",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(value(&out, "fidelity_to_unmodulated") > 0.999);
    assert!((value(&out, "efficiency") - 1.0).abs() < 1e-10);

    let o = heralded(
        &[
            "modulate",
            "--model",
            "gaussian",
            "--mod",
            "quad-phase:3",
            "--arm",
            "signal",
        ],
        dir.path(),
    );
    assert!(value(&stdout(&o), "fidelity_to_unmodulated") < 0.9);
}

#[test]
fn lossy_mask_reports_efficiency_and_renormalizes() {
    let dir = TempDir::new().unwrap();
    let mask = dir.path().join("mask.csv");
    fs::write(&mask, "nu,value\n-50,0\n-1e-9,0\n0,1\n50,1\n").unwrap();
    let spec = format!("mask:{}", mask.display());
    let plain = heralded(
        &["modulate", "--model", "gaussian", "--mod", &spec, "--arm", "trigger"],
        dir.path(),
    );
    assert!(plain.status.success(), "{}", stderr(&plain));
    let out = stdout(&plain);
    let eta = value(&out, "efficiency");
    assert!((eta - 0.5).abs() < 0.01, "{eta}");
    assert!((value(&out, "norm") - eta).abs() < 1e-6);

    let renorm = heralded(
        &[
            "modulate",
            "--model",
            "gaussian",
            "--mod",
            &spec,
            "--arm",
            "trigger",
            "--renormalize",
        ],
        dir.path(),
    );
    let out = stdout(&renorm);
    assert!((value(&out, "norm") - 1.0).abs() < 1e-12);
    assert!((value(&out, "efficiency") - eta).abs() < 1e-12);
}

#[test]
fn unknown_modulator_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = heralded(&["modulate", "--mod", "prism:2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown modulator"));
}

#[test]
fn frequency_bin_dark_fringe_at_origin() {
    let dir = TempDir::new().unwrap();
    let o = heralded(
        &["waveform", "--model", "freq-bin", "--delta", "5", "--theta", "3.14159"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((value(&out, "beat_period") * 5.0 - 1.0).abs() < 0.02);
    let (_, rows) = csv_rows(&dir.path().join("waveform_photon1.csv"));
    let peak = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
    let origin = rows.iter().find(|r| r[0] == 0.0).unwrap()[3];
    assert!(origin < 1e-6 * peak, "{origin} vs {peak}");
}

#[test]
fn bw_hz_only_changes_headers() {
    let dir = TempDir::new().unwrap();
    let plain = dir.path().join("plain");
    let si = dir.path().join("si");
    heralded(
        &["waveform", "--model", "gaussian", "--out", plain.to_str().unwrap()],
        dir.path(),
    );
    heralded(
        &[
            "waveform",
            "--model",
            "gaussian",
            "--bw-hz",
            "1e9",
            "--out",
            si.to_str().unwrap(),
        ],
        dir.path(),
    );
    let a = fs::read_to_string(plain.join("waveform_photon1.csv")).unwrap();
    let b = fs::read_to_string(si.join("waveform_photon1.csv")).unwrap();
    let (ha, ra) = a.split_once('\n').unwrap();
    let (hb, rb) = b.split_once('\n').unwrap();
    assert_eq!(ra, rb);
    assert_ne!(ha, hb);
    assert!(hb.starts_with("u[x1.00000000e-9s]"), "{hb}");
}

#[test]
fn replay_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let o = heralded(
        &[
            "modes",
            "--model",
            "rect",
            "--s",
            "1",
            "--n-freq",
            "301",
            "-k",
            "4",
            "--out",
            first.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((value(&out, "effective_modes") - 1.0 / 0.656).abs() < 0.02);
    let manifest = first.join("manifest.json");
    let o = heralded(
        &[
            "replay",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["modes.csv", "modes_eigenvalues.csv"] {
        assert_eq!(
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap()
        );
    }
}

#[test]
fn missing_manifest_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let o = heralded(&["replay", "--manifest", "/nonexistent/manifest.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[io]:"), "{}", stderr(&o));
}
