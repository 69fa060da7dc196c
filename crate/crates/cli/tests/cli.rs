//! End-to-end tests of the `waveheat` binary: exit codes, artifact
//! schemas, and byte-level determinism under a fixed seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_waveheat")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("waveheat-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_config(dir: &Path, name: &str, contents: &str) -> Output {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    Command::new(bin())
        .arg(&path)
        .env_remove("WAVEHEAT_OUT")
        .output()
        .unwrap()
}

#[test]
fn zero_initial_data_runs_clean_and_traces_zero() {
    let dir = tmp_dir("zero");
    let out = run_config(
        &dir,
        "run.cfg",
        &format!(
            "subcommand = simulate\nout_dir = {}\ninitial = zero\nn1 = 8\nn2 = 8\nt_end = 0.1\ndt = 1e-2\n",
            dir.join("out").display()
        ),
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.join("out/simulate-run.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn malformed_config_exits_2_and_names_field() {
    let dir = tmp_dir("badcfg");
    let out = run_config(
        &dir,
        "bad.cfg",
        "subcommand = simulate\ngamma = 1.5\nlength = 1.0\n",
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gamma"), "stderr missing field name: {err}");
}

#[test]
fn unknown_key_exits_2() {
    let dir = tmp_dir("unknown");
    let out = run_config(&dir, "bad.cfg", "subcommand = simulate\nwibble = 3\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wibble"));
}

#[test]
fn spectrum_on_heat_block_matches_analytic_eigenvalues() {
    let dir = tmp_dir("spectrum");
    let out = run_config(
        &dir,
        "spectrum.cfg",
        &format!(
            "subcommand = spectrum\nblock = heat\nn1 = 64\nn2 = 8\nout_dir = {}\n",
            dir.join("out").display()
        ),
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.join("out/spectrum-run.csv")).unwrap();
    let gamma = 0.5f64;
    for (k, line) in csv.lines().skip(1).take(5).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let re: f64 = cols[0].parse().unwrap();
        let want = -(((k + 1) as f64) * std::f64::consts::PI / gamma).powi(2);
        assert!(
            (re - want).abs() <= 0.01 * want.abs(),
            "row {k}: {re} vs analytic {want}"
        );
    }
}

#[test]
fn fixed_seed_is_byte_deterministic() {
    for (sub, extra) in [
        ("probe", "bumps = 3\nmu_count = 3\nnx = 32\nnn = 16\n"),
        (
            "simulate",
            "initial = random\nn1 = 12\nn2 = 12\nt_end = 0.05\ndt = 1e-2\n",
        ),
        ("classify", "samples = 150\n"),
        ("resolvent", "n1 = 12\nn2 = 12\ncount = 5\n"),
    ] {
        let dir = tmp_dir(&format!("det-{sub}"));
        let out_dir = dir.join("out");
        let cfg = format!(
            "subcommand = {sub}\nseed = 42\nout_dir = {}\n{extra}",
            out_dir.display()
        );
        let mut artifacts: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
        for run in 0..2 {
            let out = run_config(&dir, &format!("{sub}.cfg"), &cfg);
            assert!(
                out.status.success(),
                "{sub} run {run} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out_dir)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        fs::read(e.path()).unwrap(),
                    )
                })
                .collect();
            files.sort();
            artifacts.push(files);
            fs::remove_dir_all(&out_dir).unwrap();
        }
        let names_a: Vec<&String> = artifacts[0].iter().map(|(n, _)| n).collect();
        let names_b: Vec<&String> = artifacts[1].iter().map(|(n, _)| n).collect();
        assert_eq!(names_a, names_b, "{sub}: artifact sets differ");
        for ((name, a), (_, b)) in artifacts[0].iter().zip(&artifacts[1]) {
            assert_eq!(a, b, "{sub}: artifact {name} not byte-identical");
        }
    }
}

#[test]
fn env_var_overrides_output_dir_and_manifest_echoes_defaults() {
    let dir = tmp_dir("env");
    let env_out = dir.join("env-out");
    let path = dir.join("cls.cfg");
    fs::write(&path, "subcommand = classify\nsamples = 50\n").unwrap();
    let out = Command::new(bin())
        .arg(&path)
        .env("WAVEHEAT_OUT", &env_out)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(env_out.join("classify-run.manifest.json")).unwrap(),
    )
    .unwrap();
    let cfg = manifest.get("config").unwrap();
    // defaults materialized
    assert_eq!(cfg.get("delta").unwrap(), "1.0");
    assert_eq!(cfg.get("zero_band_rel").unwrap(), "0.000001");
    assert_eq!(cfg.get("m").unwrap(), "auto");
    assert_eq!(cfg.get("seed").unwrap(), "0");
    // override recorded
    assert_eq!(
        cfg.get("out_dir").unwrap().as_str().unwrap(),
        env_out.to_string_lossy()
    );
}

#[test]
fn numerical_failure_exits_3_and_names_operation() {
    // dimension above the dense limit makes the eigen path refuse
    let dir = tmp_dir("dense-limit");
    let out = run_config(
        &dir,
        "big.cfg",
        &format!(
            "subcommand = spectrum\nn1 = 1400\nn2 = 1400\nout_dir = {}\n",
            dir.join("out").display()
        ),
    );
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("eigenvalues"), "stderr: {err}");
}

#[test]
fn carleman_check_reports_pass_summary() {
    let dir = tmp_dir("check");
    let out = run_config(
        &dir,
        "chk.cfg",
        &format!(
            "subcommand = carleman-check\nout_dir = {}\ninterface_samples = 64\nchar_grid_x = 4\nchar_grid_xn = 2\nchar_mu_count = 2\n",
            dir.join("out").display()
        ),
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.join("out/carleman-check-run.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["interface_all_pass"], serde_json::Value::Bool(true));
    assert_eq!(
        summary["bracket"]["heat"]["pass"],
        serde_json::Value::Bool(true)
    );
    assert_eq!(
        summary["bracket"]["wave"]["pass"],
        serde_json::Value::Bool(true)
    );
}
