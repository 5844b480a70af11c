// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_readout-eta");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn readout-eta")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited by signal")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn eta_values(report: &Value) -> Vec<(String, f64)> {
    report["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let kind = r["weights"]["kind"].as_str().unwrap_or("?").to_string();
            (kind, r["eta"]["eta_e"].as_f64().unwrap())
        })
        .collect()
}

/// Columns `t_ns, w_i, w_q` of a weights file.
fn read_weights(path: &Path) -> Vec<[f64; 3]> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.deserialize::<(f64, f64, f64)>().map(|x| {
        let (t, i, q) = x.unwrap();
        [t, i, q]
    }).collect()
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn usage_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.join("out");
    let out = out.to_str().unwrap();

    assert_eq!(code(&run(&["no-such-command"])), 2);
    assert_eq!(code(&run(&["extract-eta", "--mode", "fast"])), 2);

    let o = run(&["extract-eta", "--config", d.join("missing.toml").to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));

    let cfg = write(d, "unknown.toml", "seed = 1\n[readout]\nkappa = 1.4\n");
    let o = run(&["extract-eta", "--config", &cfg, "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("kappa"), "{}", stderr(&o));

    let o = run(&["calibrate-weights", "--mode", "noiseless", "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));

    let env = write(d, "flat.toml", "sample_period_ns = 1.0\nbuffer_ns = 100.0\n\n[[segment]]\nduration_ns = 500.0\namplitude = 0.0\n");
    let cfg = write(d, "zero.toml", &format!("seed = 1\nmode = \"noiseless\"\n[envelope]\nkind = \"file\"\nfile = \"{env}\"\n"));
    let o = run(&["calibrate-weights", "--config", &cfg, "--out", out]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn chain_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.join("out");
    let out = out.to_str().unwrap();

    let o = run(&["fit-chain", "--csv", d.join("none.csv").to_str().unwrap(), "--freq-ghz", "7.85", "--out", out]);
    assert_eq!(code(&o), 5);

    let bad = write(d, "bad.csv", "gain_db,eta_e,eta_err\n0,0.03,0.001\n2,0.05,0.001\n4,oops,0.001\n");
    let o = run(&["fit-chain", "--csv", &bad, "--freq-ghz", "7.85", "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let empty = write(d, "empty.csv", "gain_db,eta_e,eta_err\n");
    assert_eq!(code(&run(&["fit-chain", "--csv", &empty, "--freq-ghz", "7.85", "--out", out])), 4);

    let o = run(&["fit-chain", "--csv", &empty, "--out", out]);
    assert_eq!(code(&o), 2, "frequency is required");
}

#[test]
fn active_depletion_empties_the_cavity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let o = run(&["calibrate-weights", "--seed", "2", "--mode", "noiseless", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let w = read_weights(&out.join("weights.csv"));
    let peak = w.iter().map(|r| r[1].hypot(r[2])).fold(0.0, f64::max);
    // drive 600 ns, depletion 400 ns, then 100 ns buffer
    let tail = w.iter().filter(|r| r[0] > 1000.5).map(|r| r[1].hypot(r[2])).fold(0.0, f64::max);
    assert!(peak > 0.0 && tail < 1e-6 * peak, "tail {tail} peak {peak}");
    assert_eq!(w.last().unwrap()[0].round(), 1100.0);

    let report = json(&out.join("depletion.json"));
    assert_eq!(report["seed"], 2);
    assert_eq!(report["depletion"]["kind"], "active");
}

#[test]
fn passive_weights_follow_free_ringdown() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", "seed = 4\nmode = \"noiseless\"\n[depletion]\nkind = \"passive\"\nwait_ns = 1000.0\n");
    let out = dir.path().join("p");
    let o = run(&["calibrate-weights", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let w = read_weights(&out.join("weights.csv"));
    assert_eq!(w.last().unwrap()[0].round(), 1700.0);

    // After the drive stops at 600 ns both pointer states decay freely and,
    // at zero detuning, their difference is real:
    // Δα(τ) = e^{-κτ/2} (a cos χτ + b sin χτ).
    let (kappa, chi) = (std::f64::consts::TAU * 1.4e6, std::f64::consts::TAU * -52.5e3);
    let ring: Vec<(f64, f64)> = w.iter().filter(|r| r[0] >= 600.0 - 1e-6).map(|r| ((r[0] - 600.0) * 1e-9, r[1])).collect();
    assert!(w.iter().all(|r| r[2].abs() <= 1e-12 * r[1].abs().max(1.0)));
    let basis = |t: f64| {
        let e = (-0.5 * kappa * t).exp();
        [e * (chi * t).cos(), e * (chi * t).sin()]
    };
    let (mut m, mut v) = ([[0.0; 2]; 2], [0.0; 2]);
    for &(t, y) in &ring {
        let b = basis(t);
        for i in 0..2 {
            v[i] += b[i] * y;
            for j in 0..2 {
                m[i][j] += b[i] * b[j];
            }
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let a = (v[0] * m[1][1] - v[1] * m[0][1]) / det;
    let b = (v[1] * m[0][0] - v[0] * m[1][0]) / det;
    let scale = ring.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    for &(t, y) in &ring {
        let f = basis(t);
        assert!((a * f[0] + b * f[1] - y).abs() < 1e-6 * scale, "t = {t}");
    }
}

#[test]
fn noiseless_extraction_recovers_injected_eta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", "seed = 11\nmode = \"noiseless\"\n[readout]\neta = 0.3\n[weights]\nkind = \"both\"\n");
    let out = dir.path().join("e");
    let o = run(&["extract-eta", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&out.join("report.json"));
    assert_eq!(r["seed"], 11);
    assert_eq!(r["command"], "extract-eta");
    assert_eq!(r["config"]["readout"]["eta"], 0.3);
    let etas = eta_values(&r);
    assert_eq!(etas.len(), 2);
    assert!((etas[0].1 / 0.3 - 1.0).abs() < 1e-6, "{etas:?}");
    assert!(etas[1].1 < etas[0].1, "{etas:?}");
    for f in ["coherence.csv", "snr.csv", "fringes.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn reports_do_not_depend_on_output_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.toml", "seed = 5\noutput_dir = \"ignored\"\n[sweep]\nn_epsilon = 6\nsnr_shots = 2048\n[ramsey]\nshots_per_point = 256\nn_phases = 16\n");
    let a = dir.path().join("a");
    let b = dir.path().join("nested/b");
    for out in [&a, &b] {
        let o = run(&["extract-eta", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["report.json", "snr.csv", "coherence.csv", "fringes.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // the embedded config reproduces the run
    let embedded = json(&a.join("report.json"))["config"].clone();
    let toml_text = toml::to_string(&embedded).unwrap();
    let cfg2 = write(dir.path(), "again.toml", &toml_text);
    let c = dir.path().join("c");
    assert_eq!(code(&run(&["extract-eta", "--config", &cfg2, "--out", c.to_str().unwrap()])), 0);
    assert_eq!(fs::read(a.join("snr.csv")).unwrap(), fs::read(c.join("snr.csv")).unwrap());
}

#[test]
fn single_point_sweep_matches_extraction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "seed = 4\nmode = \"noiseless\"\n[readout]\ndelta_mhz = 0.7\n[detuning]\ndelta_mhz = [0.7]\nconditions = [\"optimal-active\"]\n",
    );
    let s = dir.path().join("s");
    let e = dir.path().join("e");
    assert_eq!(code(&run(&["sweep-detuning", "--config", &cfg, "--out", s.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["extract-eta", "--config", &cfg, "--out", e.to_str().unwrap()])), 0);
    let mut rows = csv::Reader::from_path(s.join("summary.csv")).unwrap();
    let headers = rows.headers().unwrap().clone();
    let row = rows.records().next().unwrap().unwrap();
    let col = |name: &str| row[headers.iter().position(|h| h == name).unwrap()].to_string();
    assert_eq!(col("condition"), "optimal-active");
    assert_eq!(col("status"), "ok");
    let sweep_eta: f64 = col("eta_e").parse().unwrap();
    let eta = eta_values(&json(&e.join("report.json")))[0].1;
    assert_eq!(sweep_eta, eta);
    assert!(s.join("sweep/delta_00.json").exists());
}

#[test]
fn skyline_and_detuned_square_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.toml", "seed = 8\nmode = \"noiseless\"\n[envelope]\nkind = \"skyline\"\n");
    let out = dir.path().join("k");
    let o = run(&["extract-eta", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let eta = eta_values(&json(&out.join("report.json")))[0].1;
    assert!((eta / 0.165 - 1.0).abs() < 1e-6, "{eta}");

    let cfg = write(dir.path(), "d.toml", "seed = 8\nmode = \"noiseless\"\n[readout]\ndelta_mhz = -1.4\n[weights]\nkind = \"both\"\n");
    let out = dir.path().join("d");
    assert_eq!(code(&run(&["extract-eta", "--config", &cfg, "--out", out.to_str().unwrap()])), 0);
    let etas = eta_values(&json(&out.join("report.json")));
    assert!((etas[0].1 / 0.165 - 1.0).abs() < 1e-6);
    assert!(etas[1].1 < 0.8 * etas[0].1, "{etas:?}");
}

#[test]
fn chain_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = concat!(env!("CARGO_MANIFEST_DIR"), "/data/chain_gain_sweep.csv");
    let out = dir.path().join("c");
    let o = run(&["fit-chain", "--csv", csv, "--freq-ghz", "7.8524", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&out.join("chain_fit.json"));
    let p = &r["fit"]["params"];
    for (k, v) in [("eta_pre", 0.22), ("insertion_loss_db", 4.6), ("t_noise", 2.6)] {
        let x = p[k].as_f64().unwrap();
        assert!((x / v - 1.0).abs() < 0.3, "{k} = {x}");
    }
    let mut stages = csv::Reader::from_path(out.join("stages.csv")).unwrap();
    assert!(stages.records().count() > 100);
    assert_eq!(r["points"].as_array().unwrap().len(), 25);
}

#[test]
fn shipped_configs_are_valid() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for name in ["reference.toml", "skyline.toml", "passive.toml", "sweep.toml", "chain.toml"] {
        let c = readout_eta::experiment::ConfigFile::load(&data.join(name)).unwrap();
        c.validate().unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| data.join(n).to_str().unwrap().to_string();
    let out = |n: &str| dir.path().join(n).to_str().unwrap().to_string();

    let o = run(&["fit-chain", "--config", &d("chain.toml"), "--out", &out("chain")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("chain/chain_fit.json"));
    assert!((r["pump_optimum"]["power_dbm"].as_f64().unwrap() + 71.0).abs() < 0.25);
    assert!(dir.path().join("chain/pump_map.csv").exists());

    for cfg in ["skyline.toml", "passive.toml"] {
        let o = run(&["extract-eta", "--config", &d(cfg), "--mode", "noiseless", "--out", &out(cfg)]);
        assert_eq!(code(&o), 0, "{cfg}: {}", stderr(&o));
        let etas = eta_values(&json(&dir.path().join(cfg).join("report.json")));
        assert!((etas[0].1 / 0.165 - 1.0).abs() < 1e-3, "{cfg}: {etas:?}");
    }
}
