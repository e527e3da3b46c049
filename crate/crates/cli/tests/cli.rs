use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use samplex::bounds::regime_report;
use samplex::estimator::avg_distortion;
use samplex::schemes::theorem6_points;
use samplex::{FilterSpec, SignalSpec};

fn samplex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samplex")).args(args).env_remove("SAMPLEX_THREADS").output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = samplex(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn failure(args: &[&str]) -> (i32, String) {
    let out = samplex(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-11 * a.abs().max(b.abs()).max(1e-300)
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn ensemble_distortion_of_thirteen_point_set() {
    let v = json(&["distortion", "--n1", "4", "--n", "7", "--sigma", "0.1", "--generator", "thm6", "--m", "13"]);
    assert!((v["D"].as_f64().unwrap() - 0.5093).abs() <= 5e-5);
    assert_eq!(v["Pi_diagonal"], Value::Bool(true));
    let sp = SignalSpec::uniform(1.0, 4, 7, 1.0, 0.01).unwrap();
    let d = avg_distortion(&sp, &FilterSpec::allpass(7), &theorem6_points(13, &sp).unwrap()).unwrap();
    assert!(close(v["D"].as_f64().unwrap(), d));
}

#[test]
fn no_samples_give_prior_moments() {
    let v = json(&["distortion", "--n1", "3", "--n", "5", "--p", "2", "--points", ""]);
    assert_eq!(v["D"].as_f64(), Some(10.0));
    assert_eq!(v["V"].as_f64(), Some(40.0));
}

#[test]
fn active_filter_rejected_with_exit_2() {
    let (code, err) = failure(&["distortion", "--n1", "1", "--n", "2", "--points", "0,0.5", "--filter", r#"{"gains":[[1.5,0],[1,0]]}"#]);
    assert_eq!(code, 2);
    assert!(err.contains("FilterViolation"), "{err}");
}

#[test]
fn singular_system_exits_3() {
    let (code, err) = failure(&["distortion", "--n1", "1", "--n", "1", "--sigma2", "1e-30", "--generator", "uniform", "--m", "10"]);
    assert_eq!(code, 3);
    assert!(err.contains("NotPositiveDefinite"), "{err}");
}

#[test]
fn config_validation() {
    let dir = tempfile::tempdir().unwrap();
    let noiseless = write_config(dir.path(), r#"{"signal":{"T":1,"N1":1,"N2":2,"p":1,"sigma2":0},"scheme":{"points":[0,0.5]}}"#);
    let (code, err) = failure(&["distortion", "--config", &noiseless]);
    assert_eq!(code, 2);
    assert!(err.contains("sigma2"), "{err}");

    let unknown = write_config(dir.path(), r#"{"signal":{"T":1,"N1":1,"N2":2,"p":1,"sigma2":1},"schema":{}}"#);
    assert_eq!(failure(&["distortion", "--config", &unknown]).0, 2);

    let ok = write_config(
        dir.path(),
        r#"{"signal":{"T":1,"N1":4,"N2":10,"p":1,"sigma2":0.01},"scheme":{"generator":"thm6","m":13}}"#,
    );
    let from_file = json(&["distortion", "--config", &ok]);
    assert!((from_file["D"].as_f64().unwrap() - 0.5093).abs() <= 5e-5);
    // flags override the file
    let louder = json(&["distortion", "--config", &ok, "--sigma2", "4"]);
    assert!(louder["D"].as_f64().unwrap() > from_file["D"].as_f64().unwrap());
    assert_eq!(failure(&["distortion", "--config", "/nonexistent/config.json"]).0, 1);
}

#[test]
fn bounds_delegate() {
    for (n1, n, m) in [(3, 5, 4), (2, 3, 9), (4, 7, 11)] {
        let v = json(&["bounds", "--n1", &n1.to_string(), "--n", &n.to_string(), "--m", &m.to_string()]);
        let sp = SignalSpec::uniform(1.0, n1, n, 1.0, 1.0).unwrap();
        let r = regime_report(&sp, m).unwrap();
        assert!(close(v["lemma1_d"].as_f64().unwrap(), r.lemma1_d));
        assert!(close(v["lemma2_v"].as_f64().unwrap(), r.lemma2_v));
        assert_eq!(v["tight_flags"]["lemma1"].as_bool(), Some(r.tight_flags["lemma1"]));
        assert_eq!(v["tight_flags"]["lemma2"].as_bool(), Some(r.tight_flags["lemma2"]));
        assert_eq!(v["thm6_upper_d"].as_f64().is_some(), r.thm6_upper_d.is_some());
    }
}

#[test]
fn points_delegate() {
    let grid = json(&["points", "--n1", "3", "--n", "5", "--generator", "half-landau", "--m", "4", "--tau", "0.1"]);
    assert_eq!(grid["m"].as_u64(), Some(4));
    assert_eq!(grid["verdicts"]["prop4"]["satisfied"], Value::Bool(true));
    let dense = json(&["points", "--n1", "3", "--n", "5", "--generator", "uniform", "--m", "15"]);
    assert_eq!(dense["verdicts"]["thm7"]["satisfied"], Value::Bool(true));
    let pairs = json(&["points", "--n1", "4", "--n", "7", "--generator", "thm6", "--m", "12"]);
    assert_eq!(pairs["verdicts"]["lemma1"]["satisfied"], Value::Bool(true));
    assert_eq!(pairs["scheme"].as_array().unwrap().len(), 12);
    let (code, _) = failure(&["points", "--n1", "2", "--n", "5", "--generator", "thm6", "--m", "8"]);
    assert_eq!(code, 2);
}

#[test]
fn check_reports_regime() {
    let v = json(&["check", "--n1", "3", "--n", "2", "--points", "0,0.5"]);
    assert_eq!(v["regime"], Value::String("halfLandau".into()));
    let none = json(&["check", "--n1", "3", "--n", "2", "--points", "0,0.1,0.2"]);
    assert_eq!(none["regime"], Value::Null);
}

#[test]
fn simulation_reproducible_across_thread_counts() {
    let args = ["simulate", "--n1", "2", "--n", "3", "--sigma2", "0.3", "--generator", "uniform", "--m", "5", "--trials", "5000", "--seed", "11"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_samplex")).args(args).env("SAMPLEX_THREADS", threads).output().unwrap()
    };
    let one = run("1");
    assert!(one.status.success());
    assert_eq!(one.stdout, run("4").stdout);
    let v: Value = serde_json::from_slice(&one.stdout).unwrap();
    assert!(v["mean_z"].as_f64().unwrap() < 4.0);
    assert_eq!(run("0").status.code(), Some(2));
}

#[test]
fn discrete_search_value() {
    let v = json(&["search-discrete", "--period", "15", "--n1", "1", "--n", "4", "--m", "3", "--audit", "50"]);
    assert!(close(v["best_d"].as_f64().unwrap(), 2.800669031981));
    assert_eq!(v["ties"].as_array().unwrap().len(), 15);
    assert_eq!(v["audit"]["passed"], Value::Bool(true));
    assert_eq!(failure(&["search-discrete", "--period", "15.5", "--n1", "1", "--n", "4", "--m", "3"]).0, 2);
}

#[test]
fn sweep_csv() {
    let out = samplex(&["sweep", "--n1", "2", "--n", "3", "--strategies", "uniform,bounds", "--m-max", "6"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "M,uniform,lemma1,lemma2,union_lower");
    assert_eq!(lines.len(), 7);
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    assert!(samplex(&["sweep", "--kind", "t2", "--n1", "2", "--n", "1", "--out", out_dir]).status.success());
    let t2 = fs::read_to_string(dir.path().join("sweep_t2.csv")).unwrap();
    assert!(t2.starts_with("t2,D,V\n"));
    assert_eq!(failure(&["sweep", "--n1", "2", "--n", "3", "--strategies", "best"]).0, 2);
}

#[test]
fn compress_outputs() {
    let v = json(&["compress", "--n1", "1", "--n", "1", "--sigma2", "1", "--points", "0,0.25,0.5,0.75", "--dc-target", "0.1"]);
    assert!(v["rate"]["nc_lower_bits"].as_f64().unwrap() > 0.0);
    assert!(v.get("decomposition").is_none());
    assert_eq!(failure(&["compress", "--n1", "1", "--n", "1", "--points", "0"]).0, 2);
}

#[test]
fn figures_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ids = ["fig3", "fig4", "fig7", "fig8", "fig10"];
    for dir in [&a, &b] {
        let mut args = vec!["figures", "--out", dir.path().to_str().unwrap()];
        args.extend(ids);
        assert!(samplex(&args).status.success());
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
    let fig8 = fs::read_to_string(a.path().join("fig8_n1_9_n_9.csv")).unwrap();
    assert_eq!(fig8.lines().count(), 37);
    let fig7 = fs::read_to_string(a.path().join("fig7_n1_7_n_8.csv")).unwrap();
    let row29: Vec<&str> = fig7.lines().nth(29).unwrap().split(',').collect();
    assert_eq!(row29[0], "29");
    // uniform meets the exponential-sum bound from M = 29
    assert!(close(row29[1].parse().unwrap(), row29[3].parse().unwrap()));
    assert_eq!(failure(&["figures", "fig6"]).0, 2);
}
