use std::path::{Path, PathBuf};

use gslda::eval::TraceRow;
use gslda::io::{self, Checkpoint};
use gslda::synth::{gen_toy, ToySpec};
use gslda::{Corpus, Error, Mode, Ontology, RunConfig, State};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn corpus_round_trip() {
    let (o, corpus, _) = gen_toy(&ToySpec { n_docs: 30, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.tsv");
    io::write_corpus(&path, &corpus).unwrap();
    assert_eq!(io::read_corpus(&path).unwrap(), corpus);
    let opath = dir.path().join("o.tsv");
    io::write_ontology(&opath, &o).unwrap();
    assert_eq!(io::read_ontology(&opath).unwrap(), o);
}

#[test]
fn corpus_parse_errors_name_the_line() {
    let p = Path::new("corpus.tsv");
    let cases = [
        ("", 1),
        ("N=2\n", 1),
        ("N=2 V=3\n0\t1\n", 2),
        ("N=2 V=3\n0\t1\t2\n2\t0\t1\n", 3),
        ("N=2 V=3\n# comment\n\n0\t3\t1\n", 4),
        ("N=2 V=3\n0\tx\t1\n", 2),
    ];
    for (text, line) in cases {
        match io::parse_corpus(text, p) {
            Err(Error::Parse { line: l, path, .. }) => {
                assert_eq!(l, line, "{text:?}");
                assert_eq!(path, p);
            }
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn ontology_parse_errors() {
    let p = Path::new("o.tsv");
    assert!(matches!(io::parse_ontology("V=3\n0\t3\n", p), Err(Error::Parse { line: 2, .. })));
    assert!(matches!(io::parse_ontology("V=3\n1\t1\n", p), Err(Error::Parse { line: 2, .. })));
    assert!(matches!(io::parse_ontology("W=3\n", p), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(
        io::parse_ontology("V=3\n0\t1\n1\t2\n2\t0\n", p),
        Err(Error::CyclicGraph(_))
    ));
}

#[test]
fn duplicate_triplets_are_summed() {
    let c = io::parse_corpus("N=1 V=2\n0\t1\t2\n0\t1\t3\n", Path::new("x")).unwrap();
    assert_eq!(c.count(0, 1), 5);
}

#[test]
fn checkpoint_round_trip_is_lossless() {
    let (o, corpus, _) = gen_toy(&ToySpec { n_docs: 10, ..Default::default() }).unwrap();
    let mut rng = gslda::RngStream::new(4, 2);
    let state: State = gslda::init::init_prior(&mut rng, &corpus, &o, &Default::default(), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    io::write_checkpoint(&path, &Checkpoint::from_state(&state, 12, 4)).unwrap();
    let back = io::read_checkpoint(&path).unwrap();
    assert_eq!(back.iteration, 12);
    let restored: State = back.to_state().unwrap();
    assert_eq!(restored, state);
    // masks are stored as 0/1
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"Bbar\""));
    assert!(!text.contains("true"));
}

#[test]
fn f32_state_round_trips_through_checkpoint() {
    let (o, corpus, _) = gen_toy(&ToySpec { n_docs: 5, ..Default::default() }).unwrap();
    let mut rng = gslda::RngStream::new(1, 2);
    let state: gslda::State32 = gslda::init::init_prior(&mut rng, &corpus, &o, &Default::default(), 2).unwrap();
    let ck = Checkpoint::from_state(&state, 0, 1);
    let text = serde_json::to_string(&ck).unwrap();
    let back: Checkpoint = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_state::<f32>().unwrap(), state);
}

#[test]
fn bad_mask_values_are_rejected() {
    let ck = Checkpoint {
        iteration: 0,
        seed: 0,
        lida: false,
        b: vec![vec![1.0]],
        bbar: vec![vec![2]],
        a: vec![vec![1.0]],
        abar: vec![vec![1]],
        p: vec![vec![1.0]],
    };
    assert!(ck.to_state::<f64>().is_err());
}

#[test]
fn trace_round_trip_with_and_without_mh_column() {
    let rows: Vec<TraceRow> = (1..=3)
        .map(|i| TraceRow {
            iteration: i,
            train_ll: -1234.5678901234 * i as f64,
            heldout_ll: if i == 2 { f64::NEG_INFINITY } else { -12.25 },
            k: 3,
            nonzero_a: 10 - i,
            mh_accept_rate: Some(0.125 * i as f64),
        })
        .collect();
    let text = io::format_trace(&rows).unwrap();
    assert!(text.starts_with("iteration,train_ll,heldout_ll,K,nonzero_A,mh_accept_rate\n"));
    assert_eq!(io::parse_trace(&text).unwrap(), rows);

    let lida: Vec<TraceRow> = rows.iter().map(|r| TraceRow { mh_accept_rate: None, ..*r }).collect();
    let text = io::format_trace(&lida).unwrap();
    assert!(!text.contains("mh_accept_rate"));
    assert_eq!(io::parse_trace(&text).unwrap(), lida);
}

#[test]
fn config_file_round_trip_through_loader() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "corpus = c.tsv\nontology = o.tsv\nmode = lida\nheldout_fraction = 0.05\n").unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    assert_eq!(cfg.corpus_path, dir.path().join("c.tsv"));
    assert_eq!(cfg.mode, Mode::Lida);
    assert_eq!(cfg.heldout_fraction, 0.05);
}

#[test]
fn dag_fixture_ingests_and_runs() {
    let o = io::read_ontology(&fixture("dag_ontology.tsv")).unwrap();
    let corpus: Corpus = io::read_corpus(&fixture("dag_corpus.tsv")).unwrap();
    assert_eq!(o.num_words(), 40);
    assert_eq!(corpus.num_docs(), 100);
    assert_eq!(corpus.vocab_size(), 40);
    // some node has several parents, so this is not a tree
    assert!((0..40).any(|w| o.edges().iter().filter(|&&(_, c)| c == w).count() > 1));
    let cfg = RunConfig {
        corpus_path: "unused".into(),
        ontology_path: "unused".into(),
        iterations: 3,
        initial_topics: 2,
        ..Default::default()
    };
    let out = gslda::run::run_chain::<f64>(&corpus, &o, &cfg, 1, |it| {
        it.counts.check(it.corpus, &o).map_err(Error::Config)?;
        it.state.validate(&o).map_err(|v| Error::Config(v.to_string()))
    })
    .unwrap();
    assert_eq!(out.trace.len(), 3);
    assert!(out.trace.iter().all(|r| r.train_ll.is_finite()));
}

#[test]
fn ontology_equality_ignores_edge_order() {
    let a = Ontology::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
    let b = Ontology::from_edges(3, &[(0, 2), (0, 1), (0, 1)]).unwrap();
    assert_eq!(a, b);
}
