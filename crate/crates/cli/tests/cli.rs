use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn ncmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncmax")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ncmax-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn list_prints_every_experiment() {
    let out = ncmax(&["--list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["cuculescu", "strong_maximal", "jmz_tensor_martingale", "freegroup_sigma", "remark23_divergence"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from\n{text}");
    }
}

#[test]
fn small_run_writes_csv_and_summary() {
    let csv = scratch("cuculescu.csv");
    let out = ncmax(&["cuculescu", "--seed", "3", "--dims", "4,8", "--corpus-size", "3", "--output", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let body = fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("seed,index,d,depth,lambda"));
    assert!(csv.with_extension("summary.json").exists());
}

#[test]
fn config_file_and_flags_agree() {
    let a = scratch("a.csv");
    let b = scratch("b.csv");
    let cfg = scratch("cfg.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"schema_version": 1, "experiment": "jmz_tensor_martingale", "seed": 11, "dims": [4, 4], "corpus_size": 2, "output": {:?}}}"#,
            a.to_str().unwrap()
        ),
    )
    .unwrap();
    assert_eq!(ncmax(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(0));
    let out = ncmax(&["jmz-tensor-martingale", "--seed", "11", "--dims", "4,4", "--corpus-size", "2", "--output", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn word_table_has_no_counterexamples() {
    let csv = scratch("words.csv");
    let out = ncmax(&["freegroup", "--max-len", "4", "--check", "sigma", "--output", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1 + 161);
}

#[test]
fn bad_configs_exit_with_2() {
    let cfg = scratch("bad.json");
    fs::write(&cfg, r#"{"schema_version": 9, "experiment": "cuculescu"}"#).unwrap();
    assert_eq!(ncmax(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(ncmax(&["run", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    assert_eq!(ncmax(&["cuculescu", "--corpus-size", "0"]).status.code(), Some(2));
    assert_eq!(ncmax(&[]).status.code(), Some(2));
}
