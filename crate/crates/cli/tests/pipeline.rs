//! End-to-end runs of the `rnnbof` binary on the bundled toy cohort.

mod common;

use std::fs;
use std::time::Instant;

use common::*;

#[test]
fn toy_pipeline_emits_table_and_reruns_byte_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let outputs = run_all(&toy_config(), a.path(), &PIPELINE);
    assert!(
        start.elapsed().as_secs() < 60,
        "toy pipeline took {:?}",
        start.elapsed()
    );

    let table = String::from_utf8_lossy(&outputs.last().unwrap().stdout).to_string();
    assert!(table.contains("AUC-PRG"), "{table}");
    for model in ["dasa", "rnn_n1", "rnn_n5", "ffnn_n1", "logistic_n5"] {
        assert!(table.contains(model), "{model} missing from\n{table}");
    }
    let csv = fs::read_to_string(a.path().join("report/table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7);

    run_all(&toy_config(), b.path(), &PIPELINE);
    let (pa, pb) = (payloads(a.path()), payloads(b.path()));
    assert_eq!(pa.keys().collect::<Vec<_>>(), pb.keys().collect::<Vec<_>>());
    for (name, bytes) in &pa {
        assert!(bytes == &pb[name], "{name} differs between runs");
    }
    assert!(pa.contains_key("tuning/rnn_n5/trials.csv"));
    assert!(a.path().join("tuning/rnn_n5/metadata.json").exists());
}

#[test]
fn synth_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.toml");
    fs::write(
        &cfg,
        "seed = 4\n[synth]\nn_patients = 6\nn_static = 2\nn_informative_static = 1\n\
         n_dynamic = 4\nn_instrument_items = 2\nn_state_views = 1\n",
    )
    .unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    run_all(&cfg, &a, &["synth"]);
    run_all(&cfg, &b, &["synth"]);
    assert_eq!(payloads(&a), payloads(&b));
    let o = run(&cfg, &c, &["synth", "--seed", "5"]);
    assert!(o.status.success());
    assert_ne!(
        fs::read(a.join("synth/events.csv")).unwrap(),
        fs::read(c.join("synth/events.csv")).unwrap()
    );
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_variant(
        dir.path(),
        "bad.toml",
        "window_lengths = [1]\nno_such_key = 3\n",
    );
    let o = run(&cfg, &dir.path().join("out"), &["preprocess"]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let cfg = toy_variant(dir.path(), "zero.toml", "cv_folds = 0\n");
    let o = run(&cfg, &dir.path().join("out"), &["preprocess"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(
        &dir.path().join("absent.toml"),
        &dir.path().join("out"),
        &["preprocess"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_or_tampered_artifacts_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_variant(
        dir.path(),
        "exp.toml",
        "window_lengths = [1]\nfamilies = [\"logistic\"]\n",
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &["window"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("preprocess"));

    run_all(&cfg, &out, &["preprocess", "window"]);
    let o = run(&cfg, &out, &["evaluate"]);
    assert_eq!(o.status.code(), Some(3));

    // models are fitted from the preprocessed cohort, so editing it must be caught
    let events = out.join("preprocess/events.csv");
    let text = fs::read_to_string(&events)
        .unwrap()
        .replacen(",0,", ",1,", 1);
    fs::write(&events, text).unwrap();
    let o = run(&cfg, &out, &["train"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no longer matches"));
}

#[test]
fn compare_with_instrument_and_logistic_has_two_sorted_rows() {
    let dir = tempfile::tempdir().unwrap();
    let body = "window_lengths = [1]\nfamilies = [\"logistic\"]\n\
        [bootstrap]\nresamples = 100\n\
        [[psychometric]]\nname = \"dasa\"\nmax_total = 7\ncomponents = [\n"
        .to_string()
        + &(1..=7)
            .map(|i| format!("  {{ feature = \"item_{i}\", max_score = 1 }},\n"))
            .collect::<String>()
        + "]\n";
    let cfg = toy_variant(dir.path(), "exp.toml", &body);
    let out = dir.path().join("out");
    run_all(
        &cfg,
        &out,
        &["preprocess", "window", "train", "evaluate", "compare"],
    );
    let csv = fs::read_to_string(out.join("report/table.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2, "{csv}");
    let names: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert!(names.contains(&"dasa") && names.contains(&"logistic_n1"));
    let aucs: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(aucs[0] >= aucs[1]);
    assert_eq!(rows[0][4].parse::<f64>().unwrap(), 0.0);
}
