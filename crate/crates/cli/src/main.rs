use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gslda::eval::compare_runs;
use gslda::io;
use gslda::synth::{gen_random, gen_toy, ToySpec};
use gslda::{Error, RunConfig, State};

#[derive(Parser)]
#[command(name = "gslda", version, about = "Graph-sparse LDA inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more chains from a config file
    Run(RunArgs),
    /// Generate a synthetic corpus with known parameters
    Synth(SynthArgs),
    /// Compare a GS trace against a LIDA trace
    Compare(CompareArgs),
    /// Check a checkpoint against an ontology
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds, run in parallel
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Overrides the output directory
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Extra `key=value` settings applied after the config file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    init: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Binary-tree toy problem
    #[arg(long, conflicts_with = "ontology")]
    toy: bool,
    /// Ontology for a corpus drawn from the priors
    #[arg(long)]
    ontology: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    docs: Option<usize>,
    #[arg(long)]
    tokens_per_doc: Option<u32>,
    /// Toy concept nodes (heap ids), one topic each
    #[arg(long, value_delimiter = ',')]
    concepts: Vec<usize>,
    #[arg(long)]
    depth: Option<u32>,
    /// Topic count for prior draws
    #[arg(long, default_value_t = 3)]
    topics: usize,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    gs: PathBuf,
    #[arg(long)]
    lida: PathBuf,
    #[arg(long, default_value_t = 200)]
    burn_in: usize,
    /// Directory for comparison.csv and comparison.json
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
}

/// Exit status 2: bad input. Exit status 3: failure while computing.
enum Failure {
    Config(Error),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn config_stage<T>(r: gslda::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let mut cfg = config_stage(RunConfig::load(&a.config))?;
    for o in &a.overrides {
        config_stage(cfg.apply_override(o))?;
    }
    if let Some(m) = &a.mode {
        config_stage(cfg.set("mode", m, Path::new("")))?;
    }
    if let Some(i) = &a.init {
        config_stage(cfg.set("init", i, Path::new("")))?;
    }
    if let Some(n) = a.iterations {
        cfg.iterations = n;
    }
    if let Some(d) = a.output_dir {
        cfg.output_dir = d;
    }
    if let Some(s) = a.seed {
        cfg.hyperparams.seed = s;
    }
    config_stage(cfg.validate())?;
    config_stage(gslda::run::thread_cap())?;
    let corpus = config_stage(io::read_corpus(&cfg.corpus_path))?;
    let ontology = config_stage(io::read_ontology(&cfg.ontology_path))?;
    if corpus.vocab_size() != ontology.num_words() {
        return Err(Failure::Config(Error::Config(format!(
            "corpus has V={} but the ontology has {} words",
            corpus.vocab_size(),
            ontology.num_words()
        ))));
    }
    let seeds = if a.seeds.is_empty() { vec![cfg.hyperparams.seed] } else { a.seeds };
    let summaries = gslda::run::run(&cfg, &seeds)?;
    for s in &summaries {
        println!(
            "seed {}: train_ll {:.3} heldout_ll {:.3} K {} nonzero_A {} mh accepted {}/{} ({:.1}s)",
            s.seed,
            s.final_train_ll,
            s.final_heldout_ll,
            s.final_topics,
            s.final_nonzero_a,
            s.mh.accepted,
            s.mh.proposed,
            s.seconds
        );
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<(), Failure> {
    if a.toy {
        let mut spec = ToySpec {
            seed: a.seed,
            ..Default::default()
        };
        if let Some(d) = a.depth {
            spec.tree_depth = d;
        }
        if !a.concepts.is_empty() {
            spec.concept_nodes = a.concepts;
        }
        if let Some(n) = a.docs {
            spec.n_docs = n;
        }
        if let Some(t) = a.tokens_per_doc {
            spec.tokens_per_doc = t;
        }
        let (ontology, corpus, truth) = config_stage(gen_toy(&spec))?;
        io::write_ontology(&a.out.join("ontology.tsv"), &ontology)?;
        io::write_corpus(&a.out.join("corpus.tsv"), &corpus)?;
        io::write_json(&a.out.join("ground_truth.json"), &truth)?;
    } else if let Some(path) = a.ontology {
        let ontology = config_stage(io::read_ontology(&path))?;
        let hp = gslda::HyperParams::default();
        let (corpus, truth) = config_stage(gen_random(
            a.docs.unwrap_or(100),
            a.tokens_per_doc.unwrap_or(50),
            a.topics,
            &ontology,
            &hp,
            a.seed,
        ))?;
        io::write_ontology(&a.out.join("ontology.tsv"), &ontology)?;
        io::write_corpus(&a.out.join("corpus.tsv"), &corpus)?;
        io::write_json(&a.out.join("ground_truth.json"), &truth)?;
    } else {
        return Err(Failure::Config(Error::Config(
            "pass --toy or --ontology <file>".into(),
        )));
    }
    println!("wrote corpus.tsv, ontology.tsv, ground_truth.json to {}", a.out.display());
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<(), Failure> {
    let gs = config_stage(io::read_trace(&a.gs))?;
    let lida = config_stage(io::read_trace(&a.lida))?;
    let report = compare_runs(&gs, &lida, a.burn_in)?;
    if let Some(dir) = &a.out {
        io::write_string(&dir.join("comparison.csv"), &io::format_comparison_csv(&report)?)?;
        io::write_json(&dir.join("comparison.json"), &report)?;
    }
    println!(
        "kept {} samples after burn-in {}: median rel_ll_diff {:.6}, median nonzeros gs {} lida {}",
        report.samples_kept,
        report.burn_in,
        report.median_rel_ll_diff,
        report.median_gs_nonzeros,
        report.median_lida_nonzeros
    );
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<(), Failure> {
    let ontology = config_stage(io::read_ontology(&a.ontology))?;
    let checkpoint = io::read_checkpoint(&a.checkpoint)?;
    let state: State = checkpoint.to_state()?;
    match state.validate(&ontology) {
        Ok(()) => {
            println!(
                "ok: N={} K={} V={}",
                state.num_docs(),
                state.num_topics(),
                state.vocab_size()
            );
            Ok(())
        }
        Err(v) => Err(Failure::Runtime(format!("invalid checkpoint: {v}"))),
    }
}
