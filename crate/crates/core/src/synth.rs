//! Synthetic corpora with known parameters: the binary-tree toy problem and
//! draws from the full generative model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::distributions::{sample_dirichlet_on, sample_multinomial};
use crate::error::{Error, Result};
use crate::likelihood::doc_word_dist;
use crate::matrix::Matrix;
use crate::model_state::HyperParams;
use crate::ontology::Ontology;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySpec {
    pub tree_depth: u32,
    /// One topic per concept node.
    pub concept_nodes: Vec<usize>,
    pub ancestor_mass: f64,
    pub descendant_mass: f64,
    pub n_docs: usize,
    pub tokens_per_doc: u32,
    pub seed: u64,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            tree_depth: 5,
            concept_nodes: vec![9, 5, 6],
            ancestor_mass: 0.10,
            descendant_mass: 0.90,
            n_docs: 1000,
            tokens_per_doc: 50,
            seed: 0,
        }
    }
}

impl ToySpec {
    pub fn n_topics(&self) -> usize {
        self.concept_nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tree_depth == 0 || self.tree_depth > 20 {
            return Err(Error::InvalidSpec(format!("tree depth {} outside 1..=20", self.tree_depth)));
        }
        let v = (1usize << self.tree_depth) - 1;
        if self.concept_nodes.is_empty() {
            return Err(Error::InvalidSpec("no concept nodes".into()));
        }
        for (i, &c) in self.concept_nodes.iter().enumerate() {
            if c >= v {
                return Err(Error::InvalidSpec(format!("concept node {c} outside vocabulary of {v}")));
            }
            if self.concept_nodes[..i].contains(&c) {
                return Err(Error::InvalidSpec(format!("concept node {c} listed twice")));
            }
            if c == 0 && self.ancestor_mass > 0.0 {
                return Err(Error::InvalidSpec("the root has no ancestors to carry mass".into()));
            }
        }
        let masses_ok = self.ancestor_mass >= 0.0
            && self.descendant_mass >= 0.0
            && (self.ancestor_mass + self.descendant_mass - 1.0).abs() < 1e-12;
        if !masses_ok {
            return Err(Error::InvalidSpec(format!(
                "ancestor and descendant mass must be nonnegative and sum to 1, got {} and {}",
                self.ancestor_mass, self.descendant_mass
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub a_true: Matrix<f64>,
    pub p_true: Matrix<f64>,
    pub b_true: Matrix<f64>,
}

pub fn gen_toy(spec: &ToySpec) -> Result<(Ontology, Corpus, GroundTruth)> {
    spec.validate()?;
    let ontology = Ontology::binary_tree(spec.tree_depth);
    let v = ontology.num_words();
    let k = spec.n_topics();

    let mut a_true = Matrix::zeros(k, v);
    for (i, &c) in spec.concept_nodes.iter().enumerate() {
        a_true[(i, c)] = 1.0;
    }
    let mut p_true = Matrix::zeros(v, v);
    for c in 0..v {
        if spec.concept_nodes.contains(&c) {
            let up = ontology.ancestors(c);
            let down = ontology.descendants(c);
            for &w in up {
                p_true[(c, w)] = spec.ancestor_mass / up.len() as f64;
            }
            for &w in down {
                p_true[(c, w)] = spec.descendant_mass / down.len() as f64;
            }
        } else {
            let reach = ontology.reach(c);
            for &w in reach {
                p_true[(c, w)] = 1.0 / reach.len() as f64;
            }
        }
    }

    let mut rng = RngStream::new(spec.seed, 0);
    let all_topics: Vec<usize> = (0..k).collect();
    let mut b_true = Matrix::zeros(spec.n_docs, k);
    for n in 0..spec.n_docs {
        let row = sample_dirichlet_on::<f64, _>(&mut rng, k, &all_topics, |_| 1.0)?;
        b_true.set_row(n, &row);
    }
    let truth = GroundTruth { a_true, p_true, b_true };
    let corpus = draw_tokens(&mut rng, &truth, spec.tokens_per_doc)?;
    Ok((ontology, corpus, truth))
}

/// Draws every parameter from the model's priors (finite-`K` version), then
/// `tokens_per_doc` tokens per document.
pub fn gen_random(
    n_docs: usize,
    tokens_per_doc: u32,
    n_topics: usize,
    ontology: &Ontology,
    hp: &HyperParams,
    seed: u64,
) -> Result<(Corpus, GroundTruth)> {
    if n_topics == 0 {
        return Err(Error::InvalidSpec("at least one topic is required".into()));
    }
    let v = ontology.num_words();
    if v == 0 {
        return Err(Error::InvalidSpec("empty vocabulary".into()));
    }
    let mut rng = RngStream::new(seed, 0);

    let b_true = masked_prior_rows(&mut rng, n_docs, n_topics, hp.gamma_b / n_topics as f64, hp.alpha_b)?;
    let a_true = masked_prior_rows(&mut rng, n_topics, v, hp.gamma_a / v as f64, hp.alpha_a)?;
    let mut p_true = Matrix::zeros(v, v);
    for c in 0..v {
        let row = sample_dirichlet_on::<f64, _>(&mut rng, v, ontology.reach(c), |_| hp.alpha_p)?;
        p_true.set_row(c, &row);
    }
    let truth = GroundTruth { a_true, p_true, b_true };
    let corpus = draw_tokens(&mut rng, &truth, tokens_per_doc)?;
    Ok((corpus, truth))
}

/// Rows whose sparsity pattern has column inclusion rates `Beta(prior_a, 1)`;
/// an empty row gets one uniformly chosen entry.
fn masked_prior_rows<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    prior_a: f64,
    alpha: f64,
) -> Result<Matrix<f64>> {
    let rates: Vec<f64> = (0..cols)
        .map(|_| {
            // Beta(a, 1) by inversion
            let u: f64 = rng.random();
            u.powf(1.0 / prior_a)
        })
        .collect();
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let mut support: Vec<usize> = (0..cols).filter(|&j| rng.random::<f64>() < rates[j]).collect();
        if support.is_empty() {
            support.push(rng.random_range(0..cols));
        }
        let row = sample_dirichlet_on::<f64, _>(rng, cols, &support, |_| alpha)?;
        out.set_row(i, &row);
    }
    Ok(out)
}

fn draw_tokens<R: Rng + ?Sized>(rng: &mut R, truth: &GroundTruth, tokens_per_doc: u32) -> Result<Corpus> {
    let n_docs = truth.b_true.rows();
    let v = truth.p_true.rows();
    let mut triplets = Vec::new();
    for n in 0..n_docs {
        if tokens_per_doc == 0 {
            continue;
        }
        let dist = doc_word_dist(truth.b_true.row(n), &truth.a_true, &truth.p_true)?;
        let draw = sample_multinomial(rng, &dist, tokens_per_doc as u64);
        triplets.extend(
            draw.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(w, &c)| (n, w, c as u32)),
        );
    }
    Corpus::from_triplets(n_docs, v, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_concept_rows() {
        let (o, corpus, truth) = gen_toy(&ToySpec { n_docs: 5, ..Default::default() }).unwrap();
        assert_eq!(o.num_words(), 31);
        assert_eq!(corpus.num_docs(), 5);
        assert_eq!(corpus.total_tokens(), 250);
        let spec = ToySpec {
            concept_nodes: vec![2],
            n_docs: 1,
            ..Default::default()
        };
        let (o, _, truth2) = gen_toy(&spec).unwrap();
        let row = truth2.p_true.row(2);
        assert!((row[0] - 0.10).abs() < 1e-15);
        let down = o.descendants(2);
        assert_eq!(down.len(), 15);
        for &w in down {
            assert!((row[w] - 0.9 / 15.0).abs() < 1e-15);
        }
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(truth.a_true.count_positive(), 3);
    }

    #[test]
    fn empty_documents_are_allowed() {
        let (_, corpus, _) = gen_toy(&ToySpec { tokens_per_doc: 0, n_docs: 4, ..Default::default() }).unwrap();
        assert_eq!(corpus.total_tokens(), 0);
        assert_eq!(corpus.num_docs(), 4);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            ToySpec { concept_nodes: vec![9, 9], ..Default::default() },
            ToySpec { concept_nodes: vec![40], ..Default::default() },
            ToySpec { ancestor_mass: 0.2, ..Default::default() },
            ToySpec { concept_nodes: vec![0], ..Default::default() },
            ToySpec { concept_nodes: vec![], ..Default::default() },
        ];
        for spec in bad {
            assert!(matches!(gen_toy(&spec), Err(Error::InvalidSpec(_))), "{spec:?}");
        }
    }

    #[test]
    fn single_word_vocabulary() {
        let o = Ontology::flat(1);
        let (corpus, _) = gen_random(3, 7, 1, &o, &HyperParams::default(), 1).unwrap();
        assert_eq!(corpus.to_dense(), vec![vec![7]; 3]);
    }

    #[test]
    fn seeded_replay() {
        let o = Ontology::binary_tree(3);
        let hp = HyperParams::default();
        let x = gen_random(20, 30, 2, &o, &hp, 9).unwrap();
        let y = gen_random(20, 30, 2, &o, &hp, 9).unwrap();
        assert_eq!(x, y);
    }
}
