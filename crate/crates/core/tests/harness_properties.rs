use std::fs;
use std::path::PathBuf;

use ncmax::harness::{evaluate, run, summarize, Experiment, ExperimentConfig, Summary};
use ncmax::Error;
use proptest::prelude::*;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ncmax-harness-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn small(e: Experiment, out: PathBuf) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(e, out);
    c.corpus_size = 4;
    c
}

#[test]
fn identical_configs_write_identical_bytes() {
    for e in [Experiment::Cuculescu, Experiment::JmzTensorMartingale, Experiment::FreegroupDiagram] {
        let a = run(&small(e, scratch(&format!("{}-a.csv", e.name())))).unwrap();
        let b = run(&small(e, scratch(&format!("{}-b.csv", e.name())))).unwrap();
        assert_eq!(fs::read(&a.csv_path).unwrap(), fs::read(&b.csv_path).unwrap());
        assert_eq!(a.summary, b.summary);
    }
}

#[test]
fn summary_file_round_trips() {
    let out = run(&small(Experiment::Cuculescu, scratch("summary.csv"))).unwrap();
    let text = fs::read_to_string(&out.summary_path).unwrap();
    let back: Summary = serde_json::from_str(&text).unwrap();
    assert_eq!(back, out.summary);
    assert_eq!(back.schema_version, 1);
    assert_eq!(back.rows, back.pass_count + back.fail_count);
    assert_eq!(out.exit_code(), if back.fail_count == 0 { 0 } else { 1 });
    let lines = fs::read_to_string(&out.csv_path).unwrap().lines().count();
    assert_eq!(lines, back.rows + 1);
}

#[test]
fn config_errors_are_reported_as_config() {
    let bad = [
        r#"{"schema_version": 2, "experiment": "cuculescu", "seed": 1, "dims": [4], "corpus_size": 1, "output": "x.csv"}"#,
        r#"{"schema_version": 1, "experiment": "cuculescu", "seed": 1, "dims": [], "corpus_size": 1, "output": "x.csv"}"#,
        r#"{"schema_version": 1, "experiment": "cuculescu", "seed": 1, "dims": [4], "corpus_size": 1, "output": "x.csv", "bogus": 3}"#,
        r#"{"schema_version": 1, "experiment": "nothing", "seed": 1, "dims": [4], "corpus_size": 1, "output": "x.csv"}"#,
    ];
    for text in bad {
        let r = ExperimentConfig::from_json(text).and_then(|c| c.validate().map(|_| c));
        assert!(matches!(r, Err(Error::Config(_))), "{text}: {r:?}");
    }
}

#[test]
fn every_preset_validates_and_serializes() {
    for e in Experiment::ALL {
        let c = ExperimentConfig::preset(e, PathBuf::from("p.csv"));
        c.validate().unwrap();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.experiment, e);
        assert_eq!(back.seed, c.seed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn rows_depend_only_on_seed_and_index(seed in any::<u64>(), n in 1usize..5) {
        let mut c = small(Experiment::Cuculescu, PathBuf::from("unwritten.csv"));
        c.seed = seed;
        c.dims = vec![4];
        c.corpus_size = n + 2;
        let long = evaluate(&c).unwrap();
        c.corpus_size = n;
        let short = evaluate(&c).unwrap();
        let prefix: Vec<_> = long.iter().filter(|r| r.index < n as u64).map(|r| r.cells.clone()).collect();
        prop_assert_eq!(prefix, short.iter().map(|r| r.cells.clone()).collect::<Vec<_>>());
        let s = summarize(&c, &short);
        prop_assert_eq!(s.rows, short.len());
    }
}
