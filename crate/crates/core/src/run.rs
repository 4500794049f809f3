//! Chain orchestration: per iteration, one Gibbs sweep, then split/merge
//! attempts (GS mode only), then one prune and one birth proposal.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::birth_death::{birth_death_step, BirthDeathStats};
use crate::config::{Mode, RunConfig};
use crate::corpus::Corpus;
use crate::counts::CountTensors;
use crate::error::{Error, Result};
use crate::eval::TraceRow;
use crate::gibbs::gibbs_sweep;
use crate::init::initialize;
use crate::io::{self, Checkpoint};
use crate::likelihood::{corpus_loglik_or_neg_inf, heldout_loglik};
use crate::mh_sparsify::{mh_sweep, MhStats};
use crate::model_state::ModelState;
use crate::ontology::Ontology;
use crate::rng::RngStream;
use crate::scalar::Real;

/// Random streams derived from the run seed.
pub const STREAM_SAMPLER: u64 = 0;
pub const STREAM_HELDOUT: u64 = 1;
pub const STREAM_INIT: u64 = 2;

/// State of the chain at the end of one iteration.
pub struct IterationReport<'a, T> {
    pub iteration: usize,
    pub corpus: &'a Corpus,
    pub state: &'a ModelState<T>,
    pub counts: &'a CountTensors,
    pub row: &'a TraceRow,
    pub mh: &'a MhStats,
    pub birth_death: &'a BirthDeathStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub mode: Mode,
    pub iterations: usize,
    pub training_tokens: u64,
    pub heldout_tokens: u64,
    pub final_train_ll: f64,
    pub final_heldout_ll: f64,
    pub final_topics: usize,
    pub final_nonzero_a: usize,
    pub mh: MhStats,
    pub birth_death: BirthDeathStats,
    pub seconds: f64,
}

pub struct ChainOutput<T> {
    pub trace: Vec<TraceRow>,
    pub seconds: Vec<f64>,
    pub state: ModelState<T>,
    pub corpus: Corpus,
    pub summary: RunSummary,
}

/// Held-out score, or `-inf` when some held-out token is impossible.
fn heldout_or_neg_inf<T: Real>(corpus: &Corpus, state: &ModelState<T>) -> Result<f64> {
    match heldout_loglik(corpus.heldout(), state) {
        Err(Error::ZeroProbabilityToken { .. }) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}

/// Runs one chain on `corpus` (before the held-out split) with the given
/// seed. `on_iteration` sees the chain after every iteration.
pub fn run_chain<T: Real>(
    corpus: &Corpus,
    ontology: &Ontology,
    cfg: &RunConfig,
    seed: u64,
    mut on_iteration: impl FnMut(&IterationReport<T>) -> Result<()>,
) -> Result<ChainOutput<T>> {
    cfg.validate()?;
    if corpus.vocab_size() != ontology.num_words() {
        return Err(Error::DimensionMismatch(format!(
            "corpus vocabulary {} differs from ontology size {}",
            corpus.vocab_size(),
            ontology.num_words()
        )));
    }
    let started = Instant::now();
    let mut hp = cfg.hyperparams;
    hp.seed = seed;
    let corpus = corpus.split_heldout(&mut RngStream::new(seed, STREAM_HELDOUT), cfg.heldout_fraction)?;
    let mut state: ModelState<T> = initialize(
        &mut RngStream::new(seed, STREAM_INIT),
        cfg.init,
        &corpus,
        ontology,
        &hp,
        cfg.initial_topics,
    )?;
    if cfg.mode == Mode::Lida {
        state = state.lida_mode();
    }
    let attempts = cfg.mh_attempts.unwrap_or(ontology.num_words());
    let mut rng = RngStream::new(seed, STREAM_SAMPLER);

    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut seconds = Vec::with_capacity(cfg.iterations);
    let mut mh_total = MhStats::default();
    let mut bd_total = BirthDeathStats::default();
    for iteration in 1..=cfg.iterations {
        let t0 = Instant::now();
        let (mut counts, _) = gibbs_sweep(&mut rng, &corpus, &mut state, ontology, &hp)?;
        let mh = match cfg.mode {
            Mode::Gs => mh_sweep(&mut rng, &corpus, &mut state, ontology, &hp, &mut counts, attempts)?,
            Mode::Lida => MhStats::default(),
        };
        let bd = if cfg.fixed_topics {
            BirthDeathStats::default()
        } else {
            birth_death_step(&mut rng, &corpus, &mut state, &mut counts, &hp)?
        };
        let row = TraceRow {
            iteration,
            train_ll: corpus_loglik_or_neg_inf(&corpus, &state)?,
            heldout_ll: heldout_or_neg_inf(&corpus, &state)?,
            k: state.num_topics(),
            nonzero_a: state.sparsity_count(),
            mh_accept_rate: (cfg.mode == Mode::Gs).then(|| mh.accept_rate()),
        };
        seconds.push(t0.elapsed().as_secs_f64());
        on_iteration(&IterationReport {
            iteration,
            corpus: &corpus,
            state: &state,
            counts: &counts,
            row: &row,
            mh: &mh,
            birth_death: &bd,
        })?;
        mh_total.merge(&mh);
        bd_total.births_proposed += bd.births_proposed;
        bd_total.births_accepted += bd.births_accepted;
        bd_total.deaths += bd.deaths;
        trace.push(row);
    }

    let last = trace.last().expect("at least one iteration");
    let summary = RunSummary {
        seed,
        mode: cfg.mode,
        iterations: cfg.iterations,
        training_tokens: corpus.total_tokens(),
        heldout_tokens: corpus.heldout_tokens(),
        final_train_ll: last.train_ll,
        final_heldout_ll: last.heldout_ll,
        final_topics: last.k,
        final_nonzero_a: last.nonzero_a,
        mh: mh_total,
        birth_death: bd_total,
        seconds: started.elapsed().as_secs_f64(),
    };
    Ok(ChainOutput {
        trace,
        seconds,
        state,
        corpus,
        summary,
    })
}

/// Runs one chain and writes `trace.csv`, `timing.csv`, `checkpoint.json`,
/// `summary.json` (and periodic checkpoints) into `out_dir`.
pub fn run_to_dir(
    corpus: &Corpus,
    ontology: &Ontology,
    cfg: &RunConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let out = run_chain::<f64>(corpus, ontology, cfg, seed, |it| {
        if cfg.checkpoint_every > 0 && it.iteration % cfg.checkpoint_every == 0 {
            let path = out_dir.join(format!("checkpoint-{:05}.json", it.iteration));
            io::write_checkpoint(&path, &Checkpoint::from_state(it.state, it.iteration, seed))?;
        }
        Ok(())
    })?;
    io::write_trace(&out_dir.join("trace.csv"), &out.trace)?;
    io::write_timing(&out_dir.join("timing.csv"), &out.seconds)?;
    io::write_checkpoint(
        &out_dir.join("checkpoint.json"),
        &Checkpoint::from_state(&out.state, cfg.iterations, seed),
    )?;
    io::write_json(&out_dir.join("summary.json"), &out.summary)?;
    Ok(out.summary)
}

/// Thread cap for parallel chains from `GSLDA_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("GSLDA_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("GSLDA_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Runs one chain per seed in parallel. A single seed writes straight into
/// the configured output directory; several seeds write to `seed-<n>`
/// subdirectories.
pub fn run(cfg: &RunConfig, seeds: &[u64]) -> Result<Vec<RunSummary>> {
    cfg.validate()?;
    let corpus = io::read_corpus(&cfg.corpus_path)?;
    let ontology = io::read_ontology(&cfg.ontology_path)?;
    if seeds.len() <= 1 {
        let seed = seeds.first().copied().unwrap_or(cfg.hyperparams.seed);
        return Ok(vec![run_to_dir(&corpus, &ontology, cfg, seed, &cfg.output_dir)?]);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_to_dir(&corpus, &ontology, cfg, s, &cfg.output_dir.join(format!("seed-{s}"))))
            .collect()
    })
}
