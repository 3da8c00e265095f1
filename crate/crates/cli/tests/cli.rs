use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn pfbm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfbm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn generate_writes_requested_rows() {
    let d = TempDir::new().unwrap();
    let o = pfbm(d.path(), &["generate", "--h", "0.75", "--n", "1024", "--dt", "0.001", "--seed", "7", "--out", "p.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(d.path().join("p.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,re,im"));
    assert_eq!(lines.count(), 1024);

    let again = pfbm(d.path(), &["generate", "--h", "0.75", "--n", "1024", "--dt", "0.001", "--seed", "7", "--out", "q.csv"]);
    assert_eq!(code(&again), 0);
    assert_eq!(text, fs::read_to_string(d.path().join("q.csv")).unwrap());
}

#[test]
fn generate_rejects_bad_hurst() {
    let d = TempDir::new().unwrap();
    let o = pfbm(d.path(), &["generate", "--h", "1.2", "--n", "16", "--dt", "0.1", "--out", "p.csv"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("h:"), "{}", stderr(&o));
}

#[test]
fn sigma2_prints_value_and_agreement() {
    let d = TempDir::new().unwrap();
    let o = pfbm(d.path(), &["sigma2", "--h", "0.75"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("sigma2(0.75) = 1.18774"), "{out}");
    assert!(out.contains("relative gap"), "{out}");
}

#[test]
fn passing_run_exits_zero_and_writes_outputs() {
    let d = TempDir::new().unwrap();
    let o = pfbm(d.path(), &["mixing", "--out", "res", "--quiet"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let res = d.path().join("res");
    for f in ["mixing.json", "mixing.csv", "summary.json", "reports.csv", "run.json"] {
        assert!(res.join(f).is_file(), "{f} missing");
    }
    assert!(!res.join(".run.json.tmp").exists());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(res.join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["verdict"], "pass");
    assert_eq!(manifest["experiments"][0]["label"], "mixing");
    assert_eq!(manifest["configs"][0]["seed"]["master_seed"], 0);
    let csv = fs::read_to_string(res.join("reports.csv")).unwrap();
    assert!(csv.starts_with("name,"));
    assert!(csv.contains("mixing/mixing n=0"));
}

#[test]
fn forced_failure_exits_one() {
    let d = TempDir::new().unwrap();
    write(d.path(), "fail.toml", "experiment = \"mixing\"\n\n[mixing]\nn_max = 3\n");
    let o = pfbm(d.path(), &["run", "--config", "fail.toml", "--out", "res"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("overall: fail"), "{out}");
    assert!(d.path().join("res/run.json").is_file());
}

#[test]
fn forced_inconclusive_exits_two() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "inc.toml",
        "experiment = \"skew-check\"\n\n[skew-check]\nguard_eps = 0.5\ngrid = { kind = \"uniform\", n = 1024, t_max = 1.0 }\n",
    );
    let o = pfbm(d.path(), &["run", "--config", "inc.toml", "--out", "res"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("overall: inconclusive"));
}

#[test]
fn failure_outranks_inconclusive() {
    let d = TempDir::new().unwrap();
    write(
        d.path(),
        "both.toml",
        "experiment = [\"skew-check\", \"mixing\"]\n\n[skew-check]\nguard_eps = 0.5\ngrid = { kind = \"uniform\", n = 1024, t_max = 1.0 }\n\n[mixing]\nn_max = 3\n",
    );
    let o = pfbm(d.path(), &["run", "--config", "both.toml", "--out", "res", "--quiet"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn config_errors_exit_one_with_location() {
    let d = TempDir::new().unwrap();
    write(d.path(), "typo.toml", "h = 0.75\n\n[ergodic-radial]\nhurst = 0.7\n");
    let o = pfbm(d.path(), &["run", "--config", "typo.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    write(d.path(), "range.toml", "h = 1.2\nexperiment = \"ergodic-radial\"\n");
    let o = pfbm(d.path(), &["run", "--config", "range.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("h:"), "{}", stderr(&o));

    write(d.path(), "grid.toml", "[ergodic-radial]\ncheckpoints = [12.345]\n");
    let o = pfbm(d.path(), &["run", "--config", "grid.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("checkpoints"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_and_unwritable_output_exit_one() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&pfbm(d.path(), &["bogus"])), 1);
    write(d.path(), "blocker", "");
    let o = pfbm(d.path(), &["mixing", "--out", "blocker/res", "--quiet"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("output directory"), "{}", stderr(&o));
}

#[test]
fn help_exits_zero() {
    let d = TempDir::new().unwrap();
    let o = pfbm(d.path(), &["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for sub in ["generate", "ergodic", "prop20", "winding-cf", "clt", "sigma2", "corollary19", "all"] {
        assert!(text.contains(sub), "{sub}");
    }
}

#[test]
fn outputs_are_invariant_to_workers_and_replayable() {
    let d = TempDir::new().unwrap();
    let args = |out: &'static str, w: &'static str| {
        vec!["uniform-angle", "--paths", "2000", "--out", out, "--workers", w, "--quiet"]
    };
    assert_eq!(code(&pfbm(d.path(), &args("one", "1"))), 0);
    assert_eq!(code(&pfbm(d.path(), &args("three", "3"))), 0);
    let replay = pfbm(d.path(), &["replay", "one/run.json", "--out", "again", "--workers", "2", "--quiet"]);
    assert_eq!(code(&replay), 0, "{}", stderr(&replay));
    for f in ["summary.json", "reports.csv", "uniform-angle.json", "uniform-angle.csv"] {
        let a = fs::read(d.path().join("one").join(f)).unwrap();
        assert_eq!(a, fs::read(d.path().join("three").join(f)).unwrap(), "{f} differs across workers");
        assert_eq!(a, fs::read(d.path().join("again").join(f)).unwrap(), "{f} differs on replay");
    }
}

#[test]
fn json_flag_writes_per_path_lines() {
    let d = TempDir::new().unwrap();
    let o = pfbm(d.path(), &["corollary19", "--paths", "100", "--json", "--out", "res", "--quiet"]);
    assert!(matches!(code(&o), 0..=2), "{}", stderr(&o));
    let text = fs::read_to_string(d.path().join("res/corollary19.paths.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["path"], 0);
    assert!(text.lines().count() >= 100);
}

#[test]
fn flags_override_config() {
    let d = TempDir::new().unwrap();
    write(d.path(), "sym.toml", "seed = 3\n\n[symmetry]\npaths = 5000\n");
    let o = pfbm(
        d.path(),
        &["symmetry", "--config", "sym.toml", "--paths", "2000", "--z0", "0.5,-0.5", "--out", "res", "--quiet"],
    );
    assert!(matches!(code(&o), 0..=2), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("res/run.json")).unwrap()).unwrap();
    let c = &m["configs"][0];
    assert_eq!(c["n_paths"], 2000);
    assert_eq!(c["seed"]["master_seed"], 3);
    assert_eq!(c["z0"], serde_json::json!([0.5, -0.5]));
}
