use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cns(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cns")).args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const SMALL: &str = "n_grid = 16\ndt = 1e-3\nt_end = 0.02\nphi = cosine{amp=1, axis=1}\nseed = 3\n";

#[test]
fn invalid_config_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    for text in ["t_end = 0\n", "colour = blue\n", "eps = 2\n", "init_c_amp = 2\ns0 = 1\n"] {
        fs::write(tmp.path().join("bad.cfg"), text).unwrap();
        let o = cns(&["simulate", "--config", "bad.cfg", "--out", "o"], tmp.path());
        assert_eq!(code(&o), 2, "{text:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = cns(&["simulate", "--config", "missing.cfg"], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn small_run_writes_one_row_per_step() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("a.cfg"), format!("{SMALL}snapshot_every = 10\n")).unwrap();
    let o = cns(&["simulate", "--config", "a.cfg", "--out", "o"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("o");
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,mass,c_max,"));
    assert_eq!(csv.lines().count(), 1 + 21);
    for tag in ["000000", "000010", "000020"] {
        assert!(out.join("snapshots").join(format!("n_{tag}.cns")).exists());
    }
    assert!(out.join("u_final.cns").exists());
    let s = summary(&out);
    assert_eq!(s["steps"], 20);
    assert!(s["mass_drift"].as_f64().unwrap() <= 1e-10);
    assert!(s["max_divergence"].as_f64().unwrap() <= 1e-11);
    assert!(s["k_hat"].as_f64().unwrap() > 0.0);
    assert_eq!(s["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn identical_configs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("a.cfg"), format!("{SMALL}init = random_band\n")).unwrap();
    for out in ["o1", "o2"] {
        assert_eq!(code(&cns(&["simulate", "--config", "a.cfg", "--out", out], tmp.path())), 0);
    }
    let a = fs::read(tmp.path().join("o1/diagnostics.csv")).unwrap();
    let b = fs::read(tmp.path().join("o2/diagnostics.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn steady_state_stays_put() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("a.cfg"),
        "n_grid = 16\nt_end = 0.02\ninit = uniform\ninit_c_amp = 0\ns0 = 1\ninit_u_norm = 0\n",
    )
    .unwrap();
    assert_eq!(code(&cns(&["simulate", "--config", "a.cfg", "--out", "o"], tmp.path())), 0);
    let s = summary(&tmp.path().join("o"));
    assert_eq!(s["mass_drift"].as_f64().unwrap(), 0.0);
    assert_eq!(s["c_max_envelope"].as_f64().unwrap(), 0.0);
    assert!((s["k_hat"].as_f64().unwrap() - 1e-6).abs() < 1e-9);
}

#[test]
fn sweep_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("a.cfg"), SMALL).unwrap();
    let o = cns(&["sweep-eps", "--config", "a.cfg", "--eps-list", "0.1,0.05,0.025", "--out", "s"], tmp.path());
    assert!(matches!(code(&o), 0 | 4), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("s");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["diff_n"].as_array().unwrap().len(), 2);
    let monotone = ["n", "c", "u"].iter().all(|k| report["monotone"][k].as_bool().unwrap());
    assert_eq!(code(&o) == 0, monotone);
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 3);
    assert_eq!(fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).count(), 3);

    for list in ["0.1,0.05", "0.05,0.1,0.2", "0.1,x,0.01"] {
        let o = cns(&["sweep-eps", "--config", "a.cfg", "--eps-list", list, "--out", "s2"], tmp.path());
        assert_eq!(code(&o), 2, "{list}");
    }
}

#[test]
fn verify_suites() {
    let tmp = tempfile::tempdir().unwrap();
    for suite in ["operators", "coefficients"] {
        let o = cns(&["verify", "--suite", suite, "--out", "v"], tmp.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.contains("[PASS]") && !text.contains("[FAIL]"));
        assert!(tmp.path().join(format!("v/verify_{suite}.json")).exists());
    }
    assert_eq!(code(&cns(&["verify", "--suite", "bogus"], tmp.path())), 2);
}
