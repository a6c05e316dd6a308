//! End-to-end tests of the command-line interface: pipelines, exit codes,
//! and output determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xcoupler"))
}

/// Run one command line, splitting on whitespace (paths contain none here).
fn sh(line: &str) -> Output {
    bin()
        .args(line.split_whitespace())
        .output()
        .expect("binary runs")
}

fn ok(line: &str) -> Output {
    let out = sh(line);
    assert!(
        out.status.success(),
        "`{line}` failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn path(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn design1_pipeline_reproduces_band_figures() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = path(&dir, "m1.json");
    let sweep = path(&dir, "m1.s2p");
    let report = path(&dir, "band.json");

    ok(&format!(
        "synth --order 4 --rl 20 --tz-f 4.15e9 --f0 3.26e9 --bw 1.15e9 \
         --topology fig7 -o {matrix}"
    ));
    ok(&format!(
        "respond --matrix {matrix} --qu 0 --fstart 1.6e9 --fstop 5.5e9 --points 2001 -o {sweep}"
    ));
    ok(&format!(
        "extract band --in {sweep} --f0 3.26e9 --bw 1.15e9 -o {report}"
    ));

    let doc: serde_json::Value = serde_json::from_str(&read(Path::new(&report))).unwrap();
    let bw = doc["bw_hz"].as_f64().unwrap();
    assert!((bw - 1.15e9).abs() / 1.15e9 < 0.02, "bw = {bw}");
    let rl = doc["rl_min_db"].as_f64().unwrap();
    assert!((rl - 20.0).abs() < 0.5, "rl_min = {rl}");
    let tz = doc["tz_freqs_hz"][0].as_f64().unwrap();
    assert!((tz - 4.15e9).abs() / 4.15e9 < 0.01, "tz = {tz}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(&dir, "a.json");
    let b = path(&dir, "b.json");
    for out in [&a, &b] {
        ok(&format!(
            "synth --order 3 --rl 18 --tz-omega 1.8 --topology transversal -o {out}"
        ));
    }
    assert_eq!(read(Path::new(&a)), read(Path::new(&b)));
}

#[test]
fn unknown_flag_exits_2_with_usage() {
    let out = sh("synth --does-not-exist");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("usage"), "{err}");
}

#[test]
fn help_exists_for_every_subcommand() {
    for sub in ["synth", "respond", "extract", "fit", "convert"] {
        let out = sh(&format!("{sub} --help"));
        assert_eq!(out.status.code(), Some(0), "{sub} --help");
        assert!(!out.stdout.is_empty());
    }
    let out = sh("--help");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn data_errors_exit_1_with_single_line_message() {
    let dir = tempfile::tempdir().unwrap();
    // label count conflicting with the order
    let bad = path(&dir, "bad.json");
    std::fs::write(
        &bad,
        r#"{"order":2,"labels":["S","1","L"],
           "matrix":[[0,1,0,0],[1,0,1,0],[0,1,0,1],[0,0,1,0]]}"#,
    )
    .unwrap();
    let csv = path(&dir, "x.csv");
    let out = sh(&format!(
        "respond --matrix {bad} --f0 3.26e9 --bw 1.15e9 -o {csv}"
    ));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim().lines().count(), 1, "stderr: {err}");
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn convert_round_trips_between_formats() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = path(&dir, "m.json");
    let s2p = path(&dir, "sweep.s2p");
    let csv = path(&dir, "sweep.csv");
    let back = path(&dir, "back.s2p");

    ok(&format!(
        "synth --order 2 --rl 20 --f0 3.26e9 --bw 1.15e9 -o {matrix}"
    ));
    ok(&format!(
        "respond --matrix {matrix} --points 101 --format db -o {s2p}"
    ));
    ok(&format!("convert --in {s2p} --out {csv}"));
    ok(&format!("convert --in {csv} --out {back} --format ri"));
    let text = read(Path::new(&back));
    assert!(
        text.contains("# GHz S RI R 50"),
        "{}",
        &text[..120.min(text.len())]
    );
}

#[test]
fn fit_recovers_perturbed_design_and_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = path(&dir, "m1.json");
    let target = path(&dir, "target.s2p");
    let init = path(&dir, "init.json");
    let fitout = path(&dir, "fit.json");

    ok(&format!(
        "synth --order 4 --rl 20 --tz-f 4.15e9 --f0 3.26e9 --bw 1.15e9 \
         --topology fig7 -o {matrix}"
    ));
    ok(&format!(
        "respond --matrix {matrix} --points 161 -o {target}"
    ));

    // perturb one coupling in the initial guess
    let mut v: serde_json::Value = serde_json::from_str(&read(Path::new(&matrix))).unwrap();
    let old = v["matrix"][1][2].as_f64().unwrap();
    v["matrix"][1][2] = serde_json::json!(old * 1.07);
    v["matrix"][2][1] = serde_json::json!(old * 1.07);
    std::fs::write(&init, serde_json::to_string(&v).unwrap()).unwrap();

    let out = bin()
        .env("XCOUPLER_THREADS", "2")
        .args(
            format!(
                "fit --target {target} --mask fig7 --init {init} --starts 2 --seed 11 -o {fitout}"
            )
            .split_whitespace(),
        )
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fit: serde_json::Value = serde_json::from_str(&read(Path::new(&fitout))).unwrap();
    assert_eq!(fit["fit"]["converged"], serde_json::json!(true));
    assert!(fit["fit"]["cost"].as_f64().unwrap() <= 1e-10);
    let recovered = fit["matrix"][1][2].as_f64().unwrap();
    assert!(
        (recovered - old).abs() < 0.01,
        "recovered {recovered} vs {old}"
    );
}

#[test]
fn fit_output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = path(&dir, "m.json");
    let target = path(&dir, "t.s2p");
    ok(&format!(
        "synth --order 4 --rl 20 --tz-f 4.15e9 --f0 3.26e9 --bw 1.15e9 \
         --topology fig7 -o {matrix}"
    ));
    ok(&format!(
        "respond --matrix {matrix} --points 121 -o {target}"
    ));

    let mut v: serde_json::Value = serde_json::from_str(&read(Path::new(&matrix))).unwrap();
    let old = v["matrix"][0][1].as_f64().unwrap();
    v["matrix"][0][1] = serde_json::json!(old * 0.92);
    v["matrix"][1][0] = serde_json::json!(old * 0.92);
    let init = path(&dir, "init.json");
    std::fs::write(&init, serde_json::to_string(&v).unwrap()).unwrap();

    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let fitout = path(&dir, &format!("fit{threads}.json"));
        let out = bin()
            .env("XCOUPLER_THREADS", threads)
            .args(
                format!(
                    "fit --target {target} --mask fig7 --init {init} \
                     --starts 3 --seed 5 -o {fitout}"
                )
                .split_whitespace(),
            )
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(read(Path::new(&fitout)));
    }
    assert_eq!(outputs[0], outputs[1], "thread count changed the result");
}

#[test]
fn extract_kij_reports_coupling_and_normalized_value() {
    let dir = tempfile::tempdir().unwrap();
    // synthetic split-resonance sweep written directly as Touchstone
    let f0: f64 = 3.26e9;
    let k: f64 = 0.28786;
    let fa = f0 / (1.0 + k).sqrt();
    let fb = f0 / (1.0 - k).sqrt();
    let gamma = f0 / 2000.0;
    let mut body = String::from("# Hz S MA R 50\n");
    let n = 3001;
    let lo = fa - 30.0 * gamma;
    let hi = fb + 30.0 * gamma;
    for i in 0..n {
        let f = lo + (hi - lo) * (i as f64) / ((n - 1) as f64);
        let lorentz = |fc: f64| gamma * gamma / ((f - fc) * (f - fc) + gamma * gamma);
        let mag = 0.5 * (lorentz(fa) + lorentz(fb));
        body.push_str(&format!(
            "{f:.3} {mag:.9e} 0 {mag:.9e} 0 {mag:.9e} 0 {mag:.9e} 0\n"
        ));
    }
    let s2p = path(&dir, "split.s2p");
    std::fs::write(&s2p, body).unwrap();

    let out = ok(&format!("extract kij --in {s2p} --f0 3.26e9 --bw 1.15e9"));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let got_k = report["k"].as_f64().unwrap();
    assert!((got_k - k).abs() / k < 0.01, "k = {got_k}");
    let m = report["m_normalized"].as_f64().unwrap();
    assert!((m - 0.816).abs() < 0.01, "M = {m}");
}
