//! One blocked-Gibbs sweep.
//!
//! Order within a sweep: `C_NKV`, `C_KVV`, `B̄`, `B`, `Ā`, `A`, `P`. The mask
//! updates integrate out the masked Dirichlet rows and the Beta-distributed
//! inclusion rates, and are done entry by entry so each draw conditions on the
//! current value of the rest of the mask. Every mask row must keep at least one
//! active entry (a masked Dirichlet over an empty set is undefined), so an entry
//! that is the last active one in its row stays on.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::counts::{CountMatrix, CountTensors, Entry};
use crate::distributions::{bernoulli_log_odds, log_beta, sample_dirichlet_on, sample_multinomial};
use crate::error::{Error, Result};
use crate::likelihood::topic_word_matrix;
use crate::matrix::{Mask, Matrix};
use crate::model_state::{HyperParams, ModelState};
use crate::ontology::Ontology;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub nonzero_a: usize,
    pub nonzero_bbar: usize,
    pub topics_used: usize,
    pub sweep_time: f64,
}

impl SweepStats {
    /// Everything except wall-clock time.
    pub fn deterministic_part(&self) -> (usize, usize, usize) {
        (self.nonzero_a, self.nonzero_bbar, self.topics_used)
    }
}

/// Allocates every observed count `X_nw` across topics with weights
/// `B_nk · (A P)_kw`.
pub fn resample_counts_nkv<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    corpus: &Corpus,
    state: &ModelState<T>,
) -> Result<CountTensors> {
    let k = state.num_topics();
    let tw = topic_word_matrix(&state.a, &state.p)?;
    let mut counts = CountTensors::new(corpus.num_docs(), k, corpus.vocab_size());
    let mut weights = vec![T::zero(); k];
    for n in 0..corpus.num_docs() {
        let b_n = state.b.row(n);
        for &(w, x) in corpus.doc(n) {
            for (kk, dst) in weights.iter_mut().enumerate() {
                *dst = b_n[kk] * tw[(kk, w)];
            }
            if !weights.iter().any(|&p| p > T::zero()) {
                return Err(Error::ZeroProbabilityToken { doc: n, word: w });
            }
            let alloc = sample_multinomial(rng, &weights, x as u64);
            for (kk, &c) in alloc.iter().enumerate() {
                if c > 0 {
                    counts.nkv.push(Entry {
                        i: n as u32,
                        j: kk as u32,
                        w: w as u32,
                        count: c as u32,
                    });
                }
            }
        }
    }
    Ok(counts)
}

/// Allocates each topic's tokens of word `w` across concepts with weights
/// `A_kc · P_cw`.
pub fn resample_counts_kvv<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    counts: &CountTensors,
    state: &ModelState<T>,
) -> Result<Vec<Entry>> {
    let v = state.vocab_size();
    let tw = counts.topic_word();
    let mut out = Vec::new();
    let mut weights = vec![T::zero(); v];
    for k in 0..state.num_topics() {
        let a_k = state.a.row(k);
        let active: Vec<usize> = (0..v).filter(|&c| a_k[c] > T::zero()).collect();
        for w in 0..v {
            let total = tw.get(k, w);
            if total == 0 {
                continue;
            }
            weights.iter_mut().for_each(|x| *x = T::zero());
            for &c in &active {
                weights[c] = a_k[c] * state.p[(c, w)];
            }
            if !weights.iter().any(|&p| p > T::zero()) {
                // find a document to blame
                let doc = counts
                    .nkv
                    .iter()
                    .find(|e| e.j as usize == k && e.w as usize == w)
                    .map_or(0, |e| e.i as usize);
                return Err(Error::ZeroProbabilityToken { doc, word: w });
            }
            let alloc = sample_multinomial(rng, &weights, total);
            for (c, &n) in alloc.iter().enumerate() {
                if n > 0 {
                    out.push(Entry {
                        i: k as u32,
                        j: c as u32,
                        w: w as u32,
                        count: n as u32,
                    });
                }
            }
        }
    }
    out.sort_unstable_by_key(|e| (e.i, e.j, e.w));
    Ok(out)
}

/// Log-odds that a zero-count mask entry is on, with the row's Dirichlet and
/// the column's inclusion rate integrated out.
///
/// * `row_others` – active entries elsewhere in the row (must be ≥ 1)
/// * `row_tokens` – total tokens in the row's multinomial
/// * `col_others` – active entries elsewhere in the column
/// * `col_len` – number of entries in the column
/// * `prior_a` – first Beta parameter of the inclusion rate (second is 1)
pub fn mask_log_odds(
    alpha: f64,
    row_others: usize,
    row_tokens: u64,
    col_others: usize,
    col_len: usize,
    prior_a: f64,
) -> f64 {
    debug_assert!(row_others >= 1 && col_others < col_len);
    let m = row_others as f64 * alpha;
    let lik = log_beta(m + row_tokens as f64, alpha).expect("positive")
        - log_beta(m, alpha).expect("positive");
    let prior = (col_others as f64 + prior_a).ln() - ((col_len - col_others) as f64).ln();
    lik + prior
}

/// Inclusion probability ψ_nk of a zero-count document-topic entry.
pub fn psi(alpha_b: f64, gamma_b: f64, row_others: usize, doc_tokens: u64, col_others: usize, n_docs: usize, n_topics: usize) -> f64 {
    logistic(mask_log_odds(
        alpha_b,
        row_others,
        doc_tokens,
        col_others,
        n_docs,
        gamma_b / n_topics as f64,
    ))
}

/// Inclusion probability φ_kc of a zero-count topic-concept entry.
pub fn phi(alpha_a: f64, gamma_a: f64, row_others: usize, topic_tokens: u64, col_others: usize, n_topics: usize, vocab: usize) -> f64 {
    logistic(mask_log_odds(
        alpha_a,
        row_others,
        topic_tokens,
        col_others,
        n_topics,
        gamma_a / vocab as f64,
    ))
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Sequential Gibbs update of a mask given per-entry counts.
///
/// `row_tokens[i]` is the total multinomial size of row `i`.
fn resample_mask<R: Rng + ?Sized>(
    rng: &mut R,
    mask: &Mask,
    counts: &CountMatrix,
    row_tokens: &[u64],
    alpha: f64,
    prior_a: f64,
) -> Mask {
    let (rows, cols) = (mask.rows(), mask.cols());
    let mut out = mask.clone();
    let mut row_sum: Vec<usize> = (0..rows).map(|i| out.row_sum(i)).collect();
    let mut col_sum: Vec<usize> = (0..cols).map(|j| out.col_sum(j)).collect();
    for i in 0..rows {
        for j in 0..cols {
            let cur = out.get(i, j) as usize;
            let row_others = row_sum[i] - cur;
            let col_others = col_sum[j] - cur;
            let on = if counts.get(i, j) > 0 || row_others == 0 {
                true
            } else {
                let lo = mask_log_odds(alpha, row_others, row_tokens[i], col_others, rows, prior_a);
                bernoulli_log_odds(rng, lo)
            };
            let new = on as usize;
            row_sum[i] = row_others + new;
            col_sum[j] = col_others + new;
            out.set(i, j, on);
        }
    }
    out
}

pub fn resample_bbar<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    counts: &CountTensors,
    corpus: &Corpus,
    state: &ModelState<T>,
    hp: &HyperParams,
) -> Mask {
    let dt = counts.doc_topic();
    let tokens: Vec<u64> = (0..corpus.num_docs()).map(|n| corpus.doc_total(n)).collect();
    let prior_a = hp.gamma_b / state.num_topics() as f64;
    resample_mask(rng, &state.bbar, &dt, &tokens, hp.alpha_b, prior_a)
}

pub fn resample_b<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    counts: &CountTensors,
    bbar: &Mask,
    hp: &HyperParams,
) -> Result<Matrix<T>> {
    let dt = counts.doc_topic();
    masked_dirichlet_rows(rng, bbar, &dt, hp.alpha_b)
}

pub fn resample_abar<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    counts: &CountTensors,
    state: &ModelState<T>,
    hp: &HyperParams,
) -> Mask {
    let tc = counts.topic_concept();
    let tokens: Vec<u64> = (0..tc.rows()).map(|k| tc.row_sum(k)).collect();
    let prior_a = hp.gamma_a / state.vocab_size() as f64;
    resample_mask(rng, &state.abar, &tc, &tokens, hp.alpha_a, prior_a)
}

pub fn resample_a<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    counts: &CountTensors,
    abar: &Mask,
    hp: &HyperParams,
) -> Result<Matrix<T>> {
    let tc = counts.topic_concept();
    masked_dirichlet_rows(rng, abar, &tc, hp.alpha_a)
}

pub fn resample_p<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    counts: &CountTensors,
    ontology: &Ontology,
    hp: &HyperParams,
) -> Result<Matrix<T>> {
    let cw = counts.concept_word();
    let v = ontology.num_words();
    let mut p = Matrix::zeros(v, v);
    for c in 0..v {
        let row = sample_dirichlet_on::<T, _>(rng, v, ontology.reach(c), |w| {
            hp.alpha_p + cw.get(c, w) as f64
        })?;
        p.set_row(c, &row);
    }
    Ok(p)
}

fn masked_dirichlet_rows<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    mask: &Mask,
    counts: &CountMatrix,
    alpha: f64,
) -> Result<Matrix<T>> {
    let mut out = Matrix::zeros(mask.rows(), mask.cols());
    for i in 0..mask.rows() {
        let support: Vec<usize> = (0..mask.cols()).filter(|&j| mask.get(i, j)).collect();
        let row = sample_dirichlet_on::<T, _>(rng, mask.cols(), &support, |j| {
            alpha + counts.get(i, j) as f64
        })?;
        out.set_row(i, &row);
    }
    Ok(out)
}

/// Runs the seven conditional updates in order, mutating `state`. Returns the
/// count tensors drawn during the sweep.
pub fn gibbs_sweep<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    corpus: &Corpus,
    state: &mut ModelState<T>,
    ontology: &Ontology,
    hp: &HyperParams,
) -> Result<(CountTensors, SweepStats)> {
    let start = Instant::now();
    let mut counts = resample_counts_nkv(rng, corpus, state)?;
    counts.kvv = resample_counts_kvv(rng, &counts, state)?;

    state.bbar = resample_bbar(rng, &counts, corpus, state, hp);
    state.b = resample_b(rng, &counts, &state.bbar, hp)?;
    state.abar = resample_abar(rng, &counts, state, hp);
    state.a = resample_a(rng, &counts, &state.abar, hp)?;
    if !state.lida {
        state.p = resample_p(rng, &counts, ontology, hp)?;
    }

    let dt = counts.doc_topic();
    let topics_used = (0..state.num_topics())
        .filter(|&k| (0..dt.rows()).any(|n| dt.get(n, k) > 0))
        .count();
    let stats = SweepStats {
        nonzero_a: state.sparsity_count(),
        nonzero_bbar: state.bbar.count_ones(),
        topics_used,
        sweep_time: start.elapsed().as_secs_f64(),
    };
    Ok((counts, stats))
}
