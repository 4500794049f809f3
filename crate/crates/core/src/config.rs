//! Run configuration: a flat `key = value` file with `#` comments.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::InitMethod;
use crate::io::read_to_string;
use crate::model_state::HyperParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Gs,
    Lida,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gs" => Ok(Mode::Gs),
            "lida" => Ok(Mode::Lida),
            other => Err(Error::Config(format!("unknown mode `{other}` (expected gs or lida)"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Gs => "gs",
            Mode::Lida => "lida",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    pub ontology_path: PathBuf,
    pub mode: Mode,
    pub iterations: usize,
    pub heldout_fraction: f64,
    pub hyperparams: HyperParams,
    /// Write a checkpoint every this many iterations; 0 writes only the final one.
    pub checkpoint_every: usize,
    pub output_dir: PathBuf,
    pub initial_topics: usize,
    pub init: InitMethod,
    /// Split/merge attempts per sweep; defaults to the vocabulary size.
    pub mh_attempts: Option<usize>,
    /// Disables topic births and deaths.
    pub fixed_topics: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus_path: PathBuf::new(),
            ontology_path: PathBuf::new(),
            mode: Mode::Gs,
            iterations: 250,
            heldout_fraction: 0.01,
            hyperparams: HyperParams::default(),
            checkpoint_every: 0,
            output_dir: PathBuf::from("out"),
            initial_topics: 1,
            init: InitMethod::Prior,
            mh_attempts: None,
            fixed_topics: false,
        }
    }
}

fn parse_value<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value for `{key}`: `{value}`")))
}

impl RunConfig {
    /// Sets one key. Relative paths are resolved against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let hp = &mut self.hyperparams;
        match key {
            "corpus" => self.corpus_path = base.join(value),
            "ontology" => self.ontology_path = base.join(value),
            "output_dir" => self.output_dir = base.join(value),
            "mode" => self.mode = value.parse()?,
            "init" => self.init = value.parse()?,
            "iterations" => self.iterations = parse_value(key, value)?,
            "heldout_fraction" => self.heldout_fraction = parse_value(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse_value(key, value)?,
            "initial_topics" => self.initial_topics = parse_value(key, value)?,
            "mh_attempts" => self.mh_attempts = Some(parse_value(key, value)?),
            "fixed_topics" => self.fixed_topics = parse_value(key, value)?,
            "seed" => hp.seed = parse_value(key, value)?,
            "alpha_b" => hp.alpha_b = parse_value(key, value)?,
            "alpha_a" => hp.alpha_a = parse_value(key, value)?,
            "alpha_p" => hp.alpha_p = parse_value(key, value)?,
            "gamma_b" => hp.gamma_b = parse_value(key, value)?,
            "gamma_a" => hp.gamma_a = parse_value(key, value)?,
            "p_split" => hp.p_split = parse_value(key, value)?,
            "beta_mh" => hp.beta_mh = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        self.set(k.trim(), v.trim(), Path::new(""))
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new(""));
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, found `{line}`")))?;
            cfg.set(k.trim(), v.trim(), base).map_err(|e| match e {
                Error::Config(msg) => at(msg),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.heldout_fraction) {
            return Err(Error::Config(format!(
                "heldout_fraction must lie in [0, 0.5), got {}",
                self.heldout_fraction
            )));
        }
        if self.initial_topics == 0 {
            return Err(Error::Config("initial_topics must be at least 1".into()));
        }
        if self.corpus_path.as_os_str().is_empty() || self.ontology_path.as_os_str().is_empty() {
            return Err(Error::Config("both `corpus` and `ontology` must be set".into()));
        }
        self.hyperparams.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_resolves_paths() {
        let text = "# toy\ncorpus = corpus.tsv\nontology=onto.tsv  # edges\nmode = lida\niterations = 3\nbeta_mh = 1e5\nseed = 7\n";
        let cfg = RunConfig::parse(text, Path::new("/data/run.cfg")).unwrap();
        assert_eq!(cfg.corpus_path, Path::new("/data/corpus.tsv"));
        assert_eq!(cfg.ontology_path, Path::new("/data/onto.tsv"));
        assert_eq!(cfg.mode, Mode::Lida);
        assert_eq!(cfg.iterations, 3);
        assert_eq!(cfg.hyperparams.beta_mh, 1e5);
        assert_eq!(cfg.hyperparams.seed, 7);
        cfg.validate().unwrap();
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = RunConfig::parse("corpus = a\n\nbogus = 1\n", Path::new("x.cfg")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = RunConfig::parse("iterations = many\n", Path::new("x.cfg")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = RunConfig::parse("just words\n", Path::new("x.cfg")).unwrap_err();
        assert!(err.is_config_error());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig {
            corpus_path: "c".into(),
            ontology_path: "o".into(),
            ..Default::default()
        };
        cfg.validate().unwrap();
        cfg.heldout_fraction = 0.5;
        assert!(cfg.validate().is_err());
        cfg.heldout_fraction = 0.0;
        cfg.iterations = 0;
        assert!(cfg.validate().is_err());
        cfg.iterations = 1;
        cfg.apply_override("p_split=1.0").unwrap();
        assert!(cfg.validate().is_err());
    }
}
