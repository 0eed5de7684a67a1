//! End-to-end tests of the binary: output schema, exit codes, caching
//! semantics, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hamsys")
}

fn work_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hamsys-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env_remove("HAMSYS_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn json_of(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn solve_sym4(dir: &Path, out: &str) {
    let result = run_in(
        dir,
        &[
            "bubble", "solve", "--N", "4", "--p", "3", "--q", "3", "--out", out,
        ],
    );
    assert_eq!(result.status.code(), Some(0), "{result:?}");
}

#[test]
fn hyperbola_emits_ledger_fields() {
    let dir = work_dir("hyp");
    let output = run_in(&dir, &["hyperbola", "--N", "5", "--p", "2.75"]);
    assert_eq!(output.status.code(), Some(0));
    let value = json_of(&output);
    assert_eq!(value["command"], "hyperbola");
    let results = &value["results"];
    assert_eq!(results["q"].as_f64().unwrap(), 2.0);
    assert_eq!(results["gamma"].as_f64().unwrap(), 2.0);
    assert_eq!(results["ledger"]["sigma"].as_f64().unwrap(), 0.5);
    assert_eq!(results["ledger"]["threshold_q"].as_f64().unwrap(), 1.0);
    assert_eq!(results["ledger"]["hypotheses_ok"], true);
    assert!(value["version"].is_string());
    assert!(value["diagnostics"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes_by_error_class() {
    let dir = work_dir("exit");
    // Usage: unknown flag.
    let output = run_in(&dir, &["hyperbola", "--nope", "1"]);
    assert_eq!(output.status.code(), Some(1));
    // Domain: no conjugate exponent.
    let output = run_in(&dir, &["hyperbola", "--N", "4", "--p", "0.5"]);
    assert_eq!(output.status.code(), Some(2));
    // Accuracy: r_max far too small for a trustworthy tail fit.
    let output = run_in(
        &dir,
        &["bubble", "solve", "--N", "5", "--p", "4", "--rmax", "200"],
    );
    assert_eq!(output.status.code(), Some(3), "{output:?}");
    // Refusal: convex domain.
    solve_sym4(&dir, "sym4.json");
    std::fs::write(
        dir.join("convex.json"),
        r#"{"family":"ellipsoid","dimension":4,"params":{"semi_axes":[2.0,1.0,1.0,1.0]}}"#,
    )
    .unwrap();
    let output = run_in(
        &dir,
        &[
            "predict",
            "--surface",
            "convex.json",
            "--bubble",
            "sym4.json",
            "--eps",
            "1e-3",
        ],
    );
    assert_eq!(output.status.code(), Some(4), "{output:?}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = work_dir("det");
    solve_sym4(&dir, "sym4.json");
    for args in [
        vec!["hyperbola", "--N", "4", "--p", "3"],
        vec!["constants", "--bubble", "sym4.json"],
        vec!["bubble", "show", "sym4.json"],
    ] {
        let first = run_in(&dir, &args);
        let second = run_in(&dir, &args);
        assert_eq!(first.status.code(), Some(0));
        assert_eq!(first.stdout, second.stdout, "args {args:?}");
    }
}

#[test]
fn cache_hit_and_tamper_recovery() {
    let dir = work_dir("cache");
    let args = ["bubble", "solve", "--N", "4", "--p", "3", "--q", "3"];
    let first = json_of(&run_in(&dir, &args));
    assert_eq!(first["results"]["from_cache"], false);
    let second = json_of(&run_in(&dir, &args));
    assert_eq!(second["results"]["from_cache"], true);
    assert_eq!(
        first["results"]["beta_star"].as_f64().unwrap(),
        second["results"]["beta_star"].as_f64().unwrap()
    );
    // Tamper with the cached file: the command recomputes with a warning.
    let cache_path = dir.join(first["results"]["cache_path"].as_str().unwrap());
    let text = std::fs::read_to_string(&cache_path).unwrap();
    std::fs::write(&cache_path, text.replacen("8.0", "8.1", 1)).unwrap();
    let third = run_in(&dir, &args);
    assert_eq!(third.status.code(), Some(0));
    let third = json_of(&third);
    assert_eq!(third["results"]["from_cache"], false);
    let notes = third["diagnostics"].as_array().unwrap();
    assert!(
        notes.iter().any(|d| d.as_str().unwrap().contains("cache ignored")),
        "{notes:?}"
    );
}

#[test]
fn constants_schema_matches_documentation() {
    let dir = work_dir("constants");
    solve_sym4(&dir, "sym4.json");
    let output = run_in(&dir, &["constants", "--bubble", "sym4.json"]);
    assert_eq!(output.status.code(), Some(0));
    let results = json_of(&output)["results"].clone();
    for key in [
        "S_pow",
        "C1",
        "C2",
        "C3",
        "C4",
        "C5",
        "C6",
        "c1",
        "c2",
        "c3",
        "c4",
        "identity_residual",
        "lambda_used",
    ] {
        assert!(results.get(key).is_some(), "missing key {key}");
    }
    let oracle = 32.0 * std::f64::consts::PI.powi(2) / 3.0;
    let s_pow = results["S_pow"].as_f64().unwrap();
    assert!((s_pow - oracle).abs() <= 1e-4 * oracle);
}

#[test]
fn corrector_command_reports_field_and_flags() {
    let dir = work_dir("corrector");
    solve_sym4(&dir, "sym4.json");
    std::fs::write(dir.join("probes.json"), "[[0.0,0.0,0.0,1.0]]").unwrap();
    let output = run_in(
        &dir,
        &[
            "corrector",
            "--bubble",
            "sym4.json",
            "--rho",
            "0.5,0.5,0.5",
            "--kind",
            "phi0",
            "--probes",
            "probes.json",
        ],
    );
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let results = json_of(&output)["results"].clone();
    let value = results["values"][0]["value"].as_f64().unwrap();
    assert!((value - 1.3177253).abs() < 1e-5, "axis value {value}");
    assert!(results["neumann_residual"].as_f64().unwrap() <= 1e-3);
    assert_eq!(results["order_flags"]["sigma_log"], true);
}

#[test]
fn geometry_commands_and_seeds() {
    let dir = work_dir("geom");
    std::fs::write(
        dir.join("hole.json"),
        r#"{"family":"ellipsoidal_hole","dimension":4,"params":{"ball_radius":3.0,"semi_axes":[1.5,1.0,1.0,1.0]}}"#,
    )
    .unwrap();
    let output = run_in(
        &dir,
        &[
            "geometry",
            "curvature",
            "--surface",
            "hole.json",
            "--point",
            "1.5,0,0,0",
        ],
    );
    assert_eq!(output.status.code(), Some(0));
    let report = json_of(&output)["results"].clone();
    assert!((report["h"].as_f64().unwrap() + 1.5).abs() < 1e-9);

    std::fs::write(dir.join("seeds.json"), "[[1.4,0.05,0.0,0.0]]").unwrap();
    let output = run_in(
        &dir,
        &[
            "geometry",
            "critical",
            "--surface",
            "hole.json",
            "--seeds",
            "seeds.json",
        ],
    );
    assert_eq!(output.status.code(), Some(0));
    let found = json_of(&output)["results"].clone();
    assert_eq!(found.as_array().unwrap().len(), 1);
    assert!((found[0]["report"]["h"].as_f64().unwrap() + 1.5).abs() < 1e-8);
}

#[test]
fn landscape_csv_shape() {
    let dir = work_dir("landscape");
    solve_sym4(&dir, "sym4.json");
    std::fs::write(
        dir.join("hole.json"),
        r#"{"family":"ellipsoidal_hole","dimension":4,"params":{"ball_radius":3.0,"semi_axes":[1.5,1.0,1.0,1.0]}}"#,
    )
    .unwrap();
    let output = run_in(
        &dir,
        &[
            "landscape",
            "--surface",
            "hole.json",
            "--bubble",
            "sym4.json",
            "--d-range",
            "0.01:1:4",
            "--chart",
            "1.5,0,0,0:0.2:3",
        ],
    );
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,direction,offset,x1,x2,x3,x4,H,theta");
    // 4 d-values x (3 directions x 3 arm points) rows.
    assert_eq!(lines.len(), 1 + 4 * 9);
    // Theta column reproduces -c4 H d - c2 ln d; spot check monotone d grid.
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first.len(), 9);
}

#[test]
fn config_file_is_honored_and_validated() {
    let dir = work_dir("config");
    std::fs::write(dir.join("bad.cfg"), "ode_tol = 1e-3\n").unwrap();
    let output = run_in(
        &dir,
        &["--config", "bad.cfg", "hyperbola", "--N", "4", "--p", "3"],
    );
    assert_eq!(output.status.code(), Some(2));

    std::fs::write(dir.join("good.cfg"), "cache_dir = custom-cache\n").unwrap();
    let output = run_in(
        &dir,
        &[
            "--config",
            "good.cfg",
            "bubble",
            "solve",
            "--N",
            "4",
            "--p",
            "3",
        ],
    );
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    assert!(dir.join("custom-cache").is_dir());
}

#[test]
fn rotated_surface_spec_round_trips() {
    let dir = work_dir("rot");
    let c = 0.3_f64.cos();
    let s = 0.3_f64.sin();
    let spec = serde_json::json!({
        "family": "ellipsoid",
        "dimension": 4,
        "params": {"semi_axes": [2.0, 1.0, 1.0, 1.0]},
        "rotation": [[c, -s, 0.0, 0.0], [s, c, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
        "translation": [0.5, 0.0, 0.0, 0.0]
    });
    std::fs::write(dir.join("rot.json"), spec.to_string()).unwrap();
    let tip = [0.5 + 2.0 * c, 2.0 * s, 0.0, 0.0];
    let point = format!("{},{},{},{}", tip[0], tip[1], tip[2], tip[3]);
    let output = run_in(
        &dir,
        &[
            "geometry",
            "curvature",
            "--surface",
            "rot.json",
            "--point",
            &point,
        ],
    );
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let report = json_of(&output)["results"].clone();
    assert!((report["h"].as_f64().unwrap() - 2.0).abs() < 1e-8);
}

#[test]
fn verify_fails_on_perturbed_profile() {
    // A file with a valid checksum but a physically wrong profile must come
    // out of `verify` with exit 3 and named failing checks.
    let dir = work_dir("verify-fail");
    let sol = hamsys_core::bubble::closed_form_symmetric(4).unwrap();
    let mut cache = hamsys_core::cache::BubbleCache::from_solution(&sol);
    for value in cache.v.iter_mut().chain(cache.dv.iter_mut()) {
        *value *= 1.001;
    }
    std::fs::write(dir.join("warped.json"), cache.to_json().unwrap()).unwrap();
    let output = run_in(&dir, &["verify", "--bubble", "warped.json"]);
    assert_eq!(output.status.code(), Some(3), "{output:?}");
    let report = json_of(&output);
    assert_eq!(report["results"]["overall_pass"], false);
    let failing: Vec<String> = report["results"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    assert!(
        failing.iter().any(|name| name == "mass_cross_check"),
        "failing checks: {failing:?}"
    );
}
