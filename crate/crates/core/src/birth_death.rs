//! Topic-count moves: pruning of topics no document uses, and a
//! Metropolis-Hastings birth of one new topic in a single document.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::counts::CountTensors;
use crate::distributions::{dirichlet_log_pdf, sample_dirichlet_on};
use crate::error::Result;
use crate::likelihood::{doc_loglik, topic_word_matrix};
use crate::model_state::{HyperParams, ModelState};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BirthDeathStats {
    pub births_proposed: usize,
    pub births_accepted: usize,
    pub deaths: usize,
}

/// Removes every topic whose `B̄` column is empty. The last topic is never
/// removed. Returns the number of topics removed.
pub fn prune_unused<T: Real>(state: &mut ModelState<T>) -> usize {
    let keep = prune_keep(state);
    keep.iter().filter(|&&x| !x).count()
}

/// Same as [`prune_unused`], returning which of the old topics survived.
pub fn prune_keep<T: Real>(state: &mut ModelState<T>) -> Vec<bool> {
    let k = state.num_topics();
    let mut keep: Vec<bool> = (0..k).map(|j| state.bbar.col_sum(j) > 0).collect();
    if !keep.iter().any(|&x| x) {
        keep[0] = true;
    }
    if keep.iter().all(|&x| x) {
        return keep;
    }
    debug_assert!((0..state.num_docs())
        .all(|n| (0..k).all(|j| keep[j] || state.b[(n, j)] == T::zero())));
    state.b.retain_cols(&keep);
    state.bbar.retain_cols(&keep);
    state.a.retain_rows(&keep);
    state.abar.retain_rows(&keep);
    keep
}

/// Proposes one new topic drawn from the prior, switched on in a single
/// uniformly chosen document. `counts` supplies the document's current topic
/// counts. Returns whether the birth was accepted.
pub fn propose_topic<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    corpus: &Corpus,
    state: &mut ModelState<T>,
    counts: &CountTensors,
    hp: &HyperParams,
) -> Result<bool> {
    let (n_docs, k, v) = (state.num_docs(), state.num_topics(), state.vocab_size());
    if n_docs == 0 {
        return Ok(false);
    }
    let n = rng.random_range(0..n_docs);

    let include = hp.gamma_a / (hp.gamma_a + v as f64);
    let mut support: Vec<usize> = (0..v).filter(|_| rng.random::<f64>() < include).collect();
    if support.is_empty() {
        support.push(rng.random_range(0..v));
    }
    let new_row = sample_dirichlet_on::<T, _>(rng, v, &support, |_| hp.alpha_a)?;

    let dt = counts.doc_topic_row(n);
    let mut b_support: Vec<usize> = (0..k).filter(|&j| state.bbar.get(n, j)).collect();
    b_support.push(k);
    let b_new = sample_dirichlet_on::<T, _>(rng, k + 1, &b_support, |j| {
        hp.alpha_b + dt.get(j).copied().unwrap_or(0) as f64
    })?;

    let mut a_new = state.a.clone();
    a_new.push_row(&new_row);
    let tw_old = topic_word_matrix(&state.a, &state.p)?;
    let tw_new = topic_word_matrix(&a_new, &state.p)?;
    let old_support = &b_support[..b_support.len() - 1];
    let ll_old = doc_loglik(corpus, n, state.b.row(n), &tw_old)?;
    let ll_new = doc_loglik(corpus, n, &b_new, &tw_new)?;
    let log_alpha = ll_new + dirichlet_log_pdf(&b_new, &b_support, |_| hp.alpha_b)
        + (hp.gamma_b / n_docs as f64).ln()
        - ll_old
        - dirichlet_log_pdf(state.b.row(n), old_support, |_| hp.alpha_b);
    let u: f64 = rng.random();
    if !(log_alpha >= 0.0 || u.ln() < log_alpha) {
        return Ok(false);
    }

    state.a = a_new;
    let mut mask_row = vec![false; v];
    for &c in &support {
        mask_row[c] = true;
    }
    state.abar.push_row(&mask_row);
    state.b.push_col(T::zero());
    state.bbar.push_col(false);
    state.b.set_row(n, &b_new);
    state.bbar.set(n, k, true);
    Ok(true)
}

/// One prune followed by one birth proposal. `counts` are renumbered to
/// follow the pruned topics.
pub fn birth_death_step<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    corpus: &Corpus,
    state: &mut ModelState<T>,
    counts: &mut CountTensors,
    hp: &HyperParams,
) -> Result<BirthDeathStats> {
    let keep = prune_keep(state);
    let deaths = keep.iter().filter(|&&x| !x).count();
    if deaths > 0 {
        counts.retain_topics(&keep);
    }
    let accepted = propose_topic(rng, corpus, state, counts, hp)?;
    if accepted {
        // the newborn topic holds no counts yet
        counts.num_topics += 1;
    }
    Ok(BirthDeathStats {
        births_proposed: 1,
        births_accepted: accepted as usize,
        deaths,
    })
}
