// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mgforge::matchgate::MatchgateJson;
use mgforge::random::{random_matchgate, stream_rng};
use serde_json::Value;

fn mgforge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgforge"))
        .arg("--output-dir")
        .arg(dir)
        .args(args)
        .env_remove("MG_FORGE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn matrix(v: &Value) -> Vec<(f64, f64)> {
    v["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| (z[0].as_f64().unwrap(), z[1].as_f64().unwrap()))
        .collect()
}

#[test]
fn gates_prints_exact_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let hh = matrix(&stdout_json(&mgforge(dir.path(), &["gates", "G_HH"]))["matrix"]);
    let h = FRAC_1_SQRT_2;
    let expected = [
        [h, 0.0, 0.0, h],
        [0.0, h, h, 0.0],
        [0.0, h, -h, 0.0],
        [h, 0.0, 0.0, -h],
    ];
    for (k, (re, im)) in hh.iter().enumerate() {
        assert!((re - expected[k / 4][k % 4]).abs() < 1e-15 && im.abs() < 1e-15);
    }

    let swap = matrix(&stdout_json(&mgforge(dir.path(), &["gates", "SWAP"]))["matrix"]);
    let ones: Vec<usize> = swap.iter().enumerate().filter(|(_, z)| z.0 == 1.0).map(|(k, _)| k).collect();
    assert_eq!(ones, vec![0, 6, 9, 15]);

    let ix = stdout_json(&mgforge(dir.path(), &["gates", "G_IX"]));
    assert_eq!(matrix(&ix["matrix"]), swap);
    assert!(ix["note"].as_str().unwrap().contains("relaxed"));

    assert_eq!(mgforge(dir.path(), &["gates", "NOPE"]).status.code(), Some(2));
}

#[test]
fn decompose_roundtrips_and_rejects_swap() {
    let dir = tempfile::tempdir().unwrap();
    let sym = stdout_json(&mgforge(dir.path(), &["decompose", "--gate", "G_HH", "--symmetric"]));
    assert!((sym["theta"].as_f64().unwrap() - PI).abs() < 1e-9);
    assert!(sym["residual"].as_f64().unwrap() < 1e-9);
    assert!(dir.path().join("circuit.json").exists());

    let mut rng = stream_rng(5, 0);
    let m = random_matchgate::<f64, _>(&mut rng);
    let file = dir.path().join("mg.json");
    fs::write(&file, serde_json::to_string(&MatchgateJson::from_matchgate(&m)).unwrap()).unwrap();
    let general = stdout_json(&mgforge(dir.path(), &["decompose", file.to_str().unwrap()]));
    assert_eq!(general["mode"], "general");
    assert!(general["residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(general["circuit"]["ops"].as_array().unwrap().len(), 4);

    let swap = mgforge(dir.path(), &["decompose", "--gate", "SWAP"]);
    assert_eq!(swap.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&swap.stderr).contains("determinant"));

    let not_symmetric = mgforge(dir.path(), &["decompose", "--gate", "G_ZX", "--symmetric"]);
    assert_eq!(not_symmetric.status.code(), Some(2));
}

#[test]
fn kak_of_cnot() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&mgforge(dir.path(), &["kak", "--gate", "CNOT"]));
    let p = &v["point"];
    assert!((p["c1"].as_f64().unwrap() - FRAC_PI_2).abs() < 1e-9);
    assert!(p["c2"].as_f64().unwrap().abs() < 1e-9);
    assert!(p["c3"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(v["perfect_entangler"], true);
    assert_eq!(v["nearest_named_gate"]["name"], "CZ");
    assert_eq!(mgforge(dir.path(), &["kak"]).status.code(), Some(2));
}

#[test]
fn tomography_roundtrip_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let sim = |d: &Path, env_seed: bool| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_mgforge"));
        c.arg("--output-dir").arg(d);
        if env_seed {
            c.env("MG_FORGE_SEED", "7");
        } else {
            c.env_remove("MG_FORGE_SEED").args(["--seed", "7"]);
        }
        c.args(["tomo", "simulate", "--gate", "G_HH", "--counts", "10000"]);
        stdout_json(&c.output().unwrap())
    };
    let s = sim(dir.path(), false);
    assert_eq!(s["seed"], 7);
    assert_eq!(s["records"], 576);
    let other = tempfile::tempdir().unwrap();
    sim(other.path(), true);
    let a = fs::read(dir.path().join("dataset.jsonl")).unwrap();
    assert_eq!(a, fs::read(other.path().join("dataset.jsonl")).unwrap());
    let manifest: Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["command"], "tomo simulate");

    let data = dir.path().join("dataset.jsonl");
    let r = stdout_json(&mgforge(
        dir.path(),
        &["tomo", "reconstruct", "--data", data.to_str().unwrap(), "--gate", "G_HH"],
    ));
    assert!(r["fidelity"].as_f64().unwrap() >= 0.99, "{r}");
    assert!(dir.path().join("chi_mle.json").exists());

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"n_nominal\": 10, \"seed\": 0}\n").unwrap();
    let out = mgforge(dir.path(), &["tomo", "reconstruct", "--data", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn weylmap_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    stdout_json(&mgforge(dir.path(), &["chi", "--gate", "CZ", "--depolarizing", "0.1"]));
    let chi = dir.path().join("chi.json");
    let run = |d: &Path| {
        stdout_json(&mgforge(
            d,
            &["--seed", "1", "weylmap", "--target", chi.to_str().unwrap(), "--ideal", "CZ", "--points", "30"],
        ))
    };
    let v = run(dir.path());
    let summary = &v["summary"];
    assert!(summary["delta_nl"].as_f64().unwrap() < 1e-6);
    assert!((summary["f_max"].as_f64().unwrap() - (0.9 + 0.1 / 16.0)).abs() < 1e-6);
    assert!(summary.get("volume_fraction_at_0.9").is_some());
    let csv = fs::read_to_string(dir.path().join("map.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "c1,c2,c3,f_nl,weight");
    assert_eq!(csv.lines().count(), summary["grid_size"].as_u64().unwrap() as usize + 1);

    let again = tempfile::tempdir().unwrap();
    run(again.path());
    assert_eq!(csv, fs::read_to_string(again.path().join("map.csv")).unwrap());
    assert_eq!(
        fs::read(dir.path().join("map_summary.json")).unwrap(),
        fs::read(again.path().join("map_summary.json")).unwrap()
    );

    let out = mgforge(dir.path(), &["chi", "--gate", "CZ", "--depolarizing", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_calibrate_then_run() {
    let dir = tempfile::tempdir().unwrap();
    let cal = stdout_json(&mgforge(dir.path(), &["--seed", "3", "experiment", "calibrate"]));
    for r in cal["residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap().abs() <= 0.015);
    }
    let config = dir.path().join("calibrated_config.json");
    let report = stdout_json(&mgforge(
        dir.path(),
        &[
            "--jobs",
            "1",
            "experiment",
            "run",
            "--config",
            config.to_str().unwrap(),
            "--points",
            "30",
            "--counts",
            "5000",
        ],
    ));
    assert_eq!(report["config"]["seed"], 3);
    assert_eq!(report["config"]["n_nominal"], 5000);
    assert!((report["raw_fidelity"]["value"].as_f64().unwrap() - 0.923).abs() < 0.03);
    assert!(report["raw_fidelity"]["std"].as_f64().unwrap() > 0.0);
    for f in ["report.json", "dataset.jsonl", "map.csv", "chi_mle.json", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    let impossible = mgforge(
        dir.path(),
        &["experiment", "calibrate", "--raw-fidelity", "0.2", "--f-max", "0.99", "--purity", "0.99"],
    );
    assert_eq!(impossible.status.code(), Some(1));
}
