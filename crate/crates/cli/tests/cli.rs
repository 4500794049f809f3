use std::path::Path;
use std::process::{Command, Output};

fn gslda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gslda"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth_toy(dir: &Path) {
    let out = gslda(&["synth", "--toy", "--seed", "5", "--docs", "60", "--out", p(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        format!("corpus = corpus.tsv\nontology = ontology.tsv\niterations = 6\ninitial_topics = 2\n{extra}"),
    )
    .unwrap();
    cfg
}

#[test]
fn synth_writes_loadable_files() {
    let dir = tempfile::tempdir().unwrap();
    synth_toy(dir.path());
    let corpus = gslda::io::read_corpus(&dir.path().join("corpus.tsv")).unwrap();
    let o = gslda::io::read_ontology(&dir.path().join("ontology.tsv")).unwrap();
    assert_eq!(corpus.num_docs(), 60);
    assert_eq!(o.num_words(), 31);
    assert!(dir.path().join("ground_truth.json").exists());
}

#[test]
fn synth_from_ontology() {
    let dir = tempfile::tempdir().unwrap();
    let onto = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/dag_ontology.tsv");
    let out = gslda(&["synth", "--ontology", p(&onto), "--docs", "10", "--topics", "2", "--out", p(dir.path())]);
    assert!(out.status.success());
    let corpus = gslda::io::read_corpus(&dir.path().join("corpus.tsv")).unwrap();
    assert_eq!((corpus.num_docs(), corpus.vocab_size()), (10, 40));
}

#[test]
fn run_compare_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth_toy(dir.path());
    let cfg = write_config(dir.path(), "");
    let gs = dir.path().join("gs");
    let lida = dir.path().join("lida");
    for (mode, out_dir) in [("gs", &gs), ("lida", &lida)] {
        let out = gslda(&["run", "--config", p(&cfg), "--mode", mode, "--seed", "1", "--output-dir", p(out_dir)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        for f in ["trace.csv", "timing.csv", "checkpoint.json", "summary.json"] {
            assert!(out_dir.join(f).exists(), "{mode}: {f}");
        }
    }
    let header = |d: &Path| std::fs::read_to_string(d.join("trace.csv")).unwrap().lines().next().unwrap().to_string();
    assert!(header(&gs).ends_with("mh_accept_rate"));
    assert!(!header(&lida).contains("mh_accept_rate"));

    let out = gslda(&[
        "compare",
        "--gs",
        p(&gs.join("trace.csv")),
        "--lida",
        p(&lida.join("trace.csv")),
        "--burn-in",
        "2",
        "--out",
        p(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("comparison.csv").exists());
    assert!(dir.path().join("comparison.json").exists());

    let out = gslda(&[
        "validate",
        "--checkpoint",
        p(&gs.join("checkpoint.json")),
        "--ontology",
        p(&dir.path().join("ontology.tsv")),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));
}

#[test]
fn several_seeds_get_their_own_directories() {
    let dir = tempfile::tempdir().unwrap();
    synth_toy(dir.path());
    let cfg = write_config(dir.path(), "mode = lida\n");
    let out_dir = dir.path().join("multi");
    let out = gslda(&["run", "--config", p(&cfg), "--seeds", "3,4", "--output-dir", p(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("seed-3/trace.csv").exists());
    assert!(out_dir.join("seed-4/trace.csv").exists());
}

#[test]
fn overrides_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    synth_toy(dir.path());
    let cfg = write_config(dir.path(), "");
    let mut traces = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = gslda(&["run", "--config", p(&cfg), "--set", "iterations=4", "--set", "beta_mh=500", "--output-dir", p(&out_dir)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        traces.push(std::fs::read(out_dir.join("trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    assert_eq!(String::from_utf8_lossy(&traces[0]).lines().count(), 5);
}

#[test]
fn bad_input_exits_with_status_2() {
    let dir = tempfile::tempdir().unwrap();
    synth_toy(dir.path());

    let missing = gslda(&["run", "--config", p(&dir.path().join("nope.cfg"))]);
    assert_eq!(missing.status.code(), Some(2));

    let cfg = write_config(dir.path(), "alpha_b = -1\n");
    assert_eq!(gslda(&["run", "--config", p(&cfg)]).status.code(), Some(2));

    let cfg = write_config(dir.path(), "");
    let bad = gslda(&["run", "--config", p(&cfg), "--set", "unknown_key=1"]);
    assert_eq!(bad.status.code(), Some(2));

    std::fs::write(dir.path().join("corpus.tsv"), "N=1 V=31\n0\t99\t1\n").unwrap();
    let out = gslda(&["run", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corpus.tsv:2:"));

    let out = gslda(&["synth", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_checkpoint_exits_with_status_3() {
    let dir = tempfile::tempdir().unwrap();
    synth_toy(dir.path());
    let cfg = write_config(dir.path(), "");
    let run_dir = dir.path().join("r");
    assert!(gslda(&["run", "--config", p(&cfg), "--output-dir", p(&run_dir)]).status.success());
    // with no edges every P row must be a point mass
    let flat = dir.path().join("flat.tsv");
    std::fs::write(&flat, "V=31\n").unwrap();
    let out = gslda(&["validate", "--checkpoint", p(&run_dir.join("checkpoint.json")), "--ontology", p(&flat)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn compare_rejects_short_traces() {
    let dir = tempfile::tempdir().unwrap();
    synth_toy(dir.path());
    let cfg = write_config(dir.path(), "");
    let run_dir = dir.path().join("r");
    assert!(gslda(&["run", "--config", p(&cfg), "--output-dir", p(&run_dir)]).status.success());
    let trace = run_dir.join("trace.csv");
    let out = gslda(&["compare", "--gs", p(&trace), "--lida", p(&trace), "--burn-in", "200"]);
    assert_eq!(out.status.code(), Some(3));
}
