//! Data log-likelihood `Σ_{n,w} X_nw · log (B_n A P)_w` and held-out scoring.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model_state::ModelState;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodReport {
    pub train_ll: f64,
    pub heldout_ll: f64,
    pub per_doc_ll: Vec<f64>,
}

/// Word distribution of one document: the row vector `b_n · A · P`.
pub fn doc_word_dist<T: Real>(b_n: &[T], a: &Matrix<T>, p: &Matrix<T>) -> Result<Vec<T>> {
    let concept = Matrix::vec_mul(b_n, a)?;
    Matrix::vec_mul(&concept, p)
}

/// `A · P`, the effective topic-word matrix.
pub fn topic_word_matrix<T: Real>(a: &Matrix<T>, p: &Matrix<T>) -> Result<Matrix<T>> {
    a.matmul(p)
}

/// Log-likelihood of document `n`'s training counts given a precomputed
/// topic-word matrix.
pub fn doc_loglik<T: Real>(corpus: &Corpus, n: usize, b_n: &[T], topic_word: &Matrix<T>) -> Result<f64> {
    let mut ll = 0.0;
    for &(w, x) in corpus.doc(n) {
        let p: f64 = b_n
            .iter()
            .enumerate()
            .filter(|(_, &b)| b > T::zero())
            .map(|(k, &b)| b.as_f64() * topic_word[(k, w)].as_f64())
            .sum();
        if p <= 0.0 {
            return Err(Error::ZeroProbabilityToken { doc: n, word: w });
        }
        ll += x as f64 * p.ln();
    }
    Ok(ll)
}

pub fn per_doc_loglik<T: Real>(corpus: &Corpus, state: &ModelState<T>) -> Result<Vec<f64>> {
    check_dims(corpus, state)?;
    let tw = topic_word_matrix(&state.a, &state.p)?;
    (0..corpus.num_docs())
        .map(|n| doc_loglik(corpus, n, state.b.row(n), &tw))
        .collect()
}

/// Training-set log-likelihood.
pub fn corpus_loglik<T: Real>(corpus: &Corpus, state: &ModelState<T>) -> Result<f64> {
    Ok(per_doc_loglik(corpus, state)?.iter().sum())
}

/// Same as [`corpus_loglik`] but returns `-inf` instead of failing on an
/// impossible token.
pub fn corpus_loglik_or_neg_inf<T: Real>(corpus: &Corpus, state: &ModelState<T>) -> Result<f64> {
    match corpus_loglik(corpus, state) {
        Err(Error::ZeroProbabilityToken { .. }) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}

/// Score of held-out `(doc, word, count)` triplets under the trained
/// document-topic rows.
pub fn heldout_loglik<T: Real>(heldout: &[(usize, usize, u32)], state: &ModelState<T>) -> Result<f64> {
    if heldout.is_empty() {
        return Ok(0.0);
    }
    let tw = topic_word_matrix(&state.a, &state.p)?;
    let mut ll = 0.0;
    for &(n, w, c) in heldout {
        if n >= state.num_docs() || w >= state.vocab_size() {
            return Err(Error::IdOutOfRange {
                id: n.max(w),
                size: state.num_docs().max(state.vocab_size()),
            });
        }
        let p: f64 = state
            .b
            .row(n)
            .iter()
            .enumerate()
            .map(|(k, &b)| b.as_f64() * tw[(k, w)].as_f64())
            .sum();
        if p <= 0.0 {
            return Err(Error::ZeroProbabilityToken { doc: n, word: w });
        }
        ll += c as f64 * p.ln();
    }
    Ok(ll)
}

pub fn report<T: Real>(corpus: &Corpus, state: &ModelState<T>) -> Result<LikelihoodReport> {
    let per_doc_ll = per_doc_loglik(corpus, state)?;
    Ok(LikelihoodReport {
        train_ll: per_doc_ll.iter().sum(),
        heldout_ll: heldout_loglik(corpus.heldout(), state)?,
        per_doc_ll,
    })
}

fn check_dims<T: Real>(corpus: &Corpus, state: &ModelState<T>) -> Result<()> {
    if corpus.num_docs() != state.num_docs() || corpus.vocab_size() != state.vocab_size() {
        return Err(Error::DimensionMismatch(format!(
            "corpus is {}x{}, state is {}x{}",
            corpus.num_docs(),
            corpus.vocab_size(),
            state.num_docs(),
            state.vocab_size()
        )));
    }
    Ok(())
}
