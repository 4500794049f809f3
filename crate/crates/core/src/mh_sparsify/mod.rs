//! Split/merge Metropolis-Hastings moves on a topic's concept weights, paired
//! with a compensating change to `P` that keeps `A P` nearly fixed.
//!
//! For topic `k` and concept `w̃` with descendant set `D` (including `w̃`):
//!
//! * merge moves all of the row's mass on `D` onto `w̃`;
//! * split takes the mass on `w̃` (when it is the row's only mass in `D`) and
//!   spreads it over a random nonempty `T ⊆ D`, `T ≠ {w̃}`, with
//!   `Dirichlet(1)` fractions.
//!
//! Each move is the exact inverse of the other, so the acceptance ratio
//! includes the subset choice, the fraction density and the Jacobian `m^{|T|-1}`
//! of the map `(m, r) ↦ m r`.
//!
//! The compensating `P′` redraws only the rows in `D`, around the solution of
//! `min ‖A P − A′ P̂‖²` over those rows.

mod qp;

pub use qp::{qp_objective, solve_p_star, solve_rows, solve_target, QpOptions, QpSolution};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::corpus::Corpus;
use crate::counts::CountTensors;
use crate::distributions::{dirichlet_log_pdf, log_beta_bernoulli, sample_dirichlet_on, sample_log_gamma};
use crate::error::{Error, Result};
use crate::gibbs::{resample_counts_kvv, resample_counts_nkv};
use crate::likelihood::corpus_loglik_or_neg_inf;
use crate::matrix::{Mask, Matrix};
use crate::model_state::{HyperParams, ModelState};
use crate::ontology::Ontology;
use crate::scalar::Real;

/// Floor applied to `P★` entries before scaling by `beta_mh`.
pub const P_STAR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Split,
    Merge,
}

/// The `A` half of a move.
#[derive(Debug, Clone)]
pub struct AMove<T> {
    pub kind: MoveKind,
    pub topic: usize,
    pub concept: usize,
    pub a_prime: Matrix<T>,
    /// Concepts of `D` carrying mass on the split side of the move.
    pub block: Vec<usize>,
    /// Mass of row `topic` on `D`.
    pub mass: f64,
    pub log_q_forward: f64,
    pub log_q_reverse: f64,
    pub log_jacobian: f64,
}

#[derive(Debug, Clone)]
pub struct MhProposal<T> {
    pub kind: MoveKind,
    pub topic: usize,
    pub concept: usize,
    pub a_prime: Matrix<T>,
    pub p_star: Matrix<T>,
    pub p_prime: Matrix<T>,
    /// Rows of `P` the move may change.
    pub rows: Vec<usize>,
    pub log_q_forward: f64,
    pub log_q_reverse: f64,
    pub log_jacobian: f64,
    /// `‖A P − A′ P★‖_F`.
    pub residual: f64,
    pub qp_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MhStats {
    pub proposed: usize,
    pub accepted: usize,
    /// Proposals skipped because the chosen move had nothing to act on.
    pub degenerate: usize,
    pub mean_residual: f64,
}

impl MhStats {
    pub fn accept_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn merge(&mut self, other: &MhStats) {
        let evaluated = (self.proposed - self.degenerate) as f64;
        let other_eval = (other.proposed - other.degenerate) as f64;
        let total = evaluated + other_eval;
        if total > 0.0 {
            self.mean_residual =
                (self.mean_residual * evaluated + other.mean_residual * other_eval) / total;
        }
        self.proposed += other.proposed;
        self.accepted += other.accepted;
        self.degenerate += other.degenerate;
    }
}

/// What happened to one attempted move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MhOutcome {
    Degenerate,
    Evaluated {
        kind: MoveKind,
        accepted: bool,
        log_accept: f64,
        loglik_before: f64,
        loglik_after: f64,
        residual: f64,
    },
}

impl MhOutcome {
    pub fn accepted(&self) -> bool {
        matches!(self, MhOutcome::Evaluated { accepted: true, .. })
    }
}

/// Draws `(kind, k, w̃)` uniformly and builds the `A` half of the move.
pub fn propose_a<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    state: &ModelState<T>,
    ontology: &Ontology,
    hp: &HyperParams,
) -> Result<AMove<T>> {
    let k = rng.random_range(0..state.num_topics());
    let w = rng.random_range(0..state.vocab_size());
    if rng.random::<f64>() < hp.p_split {
        split_at(rng, &state.a, ontology, hp, k, w)
    } else {
        merge_at(&state.a, ontology, hp, k, w)
    }
}

fn log_pick(hp: &HyperParams, kind: MoveKind, k: usize, v: usize) -> f64 {
    let p = match kind {
        MoveKind::Split => hp.p_split,
        MoveKind::Merge => 1.0 - hp.p_split,
    };
    p.ln() - ((k * v) as f64).ln()
}

fn ln_choose(n: usize, r: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0)
}

/// Log probability of choosing `block` as the split target within `D`.
fn log_subset(d: usize, block: usize) -> f64 {
    let ways = if block == 1 { ((d - 1) as f64).ln() } else { ln_choose(d, block) };
    -(d as f64).ln() - ways
}

/// Log of the split's full `A`-side proposal density for a given block.
fn log_split_density(hp: &HyperParams, k: usize, v: usize, d: usize, block: usize) -> f64 {
    log_pick(hp, MoveKind::Split, k, v) + log_subset(d, block) + ln_gamma(block as f64)
}

pub fn split_at<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    a: &Matrix<T>,
    ontology: &Ontology,
    hp: &HyperParams,
    k: usize,
    w: usize,
) -> Result<AMove<T>> {
    let d = ontology.descendants(w);
    let row = a.row(k);
    if row[w] <= T::zero() {
        return Err(Error::DegenerateMove("split of a concept with no mass"));
    }
    if d.len() < 2 {
        return Err(Error::DegenerateMove("split at a leaf"));
    }
    if d.iter().any(|&c| c != w && row[c] > T::zero()) {
        return Err(Error::DegenerateMove("split with mass already below the concept"));
    }
    let size = rng.random_range(1..=d.len());
    let block: Vec<usize> = if size == 1 {
        let others: Vec<usize> = d.iter().copied().filter(|&c| c != w).collect();
        vec![others[rng.random_range(0..others.len())]]
    } else {
        let mut picked: Vec<usize> = index::sample(rng, d.len(), size).into_iter().map(|i| d[i]).collect();
        picked.sort_unstable();
        picked
    };
    let mass = row[w].as_f64();
    let logs: Vec<f64> = block.iter().map(|_| sample_log_gamma(rng, 1.0)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logs.iter().map(|l| (l - max).exp()).sum();

    let mut a_prime = a.clone();
    let out = a_prime.row_mut(k);
    out[w] = T::zero();
    for (&c, &l) in block.iter().zip(&logs) {
        out[c] = T::of(mass * (l - max).exp() / total).max(T::tiny());
    }

    let (kk, v) = (a.rows(), a.cols());
    let n = block.len();
    Ok(AMove {
        kind: MoveKind::Split,
        topic: k,
        concept: w,
        a_prime,
        log_q_forward: log_split_density(hp, kk, v, d.len(), n),
        log_q_reverse: log_pick(hp, MoveKind::Merge, kk, v),
        log_jacobian: (n as f64 - 1.0) * mass.ln(),
        block,
        mass,
    })
}

pub fn merge_at<T: Real>(
    a: &Matrix<T>,
    ontology: &Ontology,
    hp: &HyperParams,
    k: usize,
    w: usize,
) -> Result<AMove<T>> {
    let d = ontology.descendants(w);
    let row = a.row(k);
    let block: Vec<usize> = d.iter().copied().filter(|&c| row[c] > T::zero()).collect();
    if block.is_empty() {
        return Err(Error::DegenerateMove("merge of a subgraph with no mass"));
    }
    if block == [w] {
        return Err(Error::DegenerateMove("merge of a subgraph already merged"));
    }
    let mass: f64 = block.iter().map(|&c| row[c].as_f64()).sum();
    let mut a_prime = a.clone();
    let out = a_prime.row_mut(k);
    for &c in &block {
        out[c] = T::zero();
    }
    out[w] = T::of(mass);

    let (kk, v) = (a.rows(), a.cols());
    let n = block.len();
    Ok(AMove {
        kind: MoveKind::Merge,
        topic: k,
        concept: w,
        a_prime,
        log_q_forward: log_pick(hp, MoveKind::Merge, kk, v),
        log_q_reverse: log_split_density(hp, kk, v, d.len(), n),
        log_jacobian: -(n as f64 - 1.0) * mass.ln(),
        block,
        mass,
    })
}

/// Redraws the listed rows of `P` from `Dirichlet(beta · max(P★_v, ε))` on
/// each row's reach set; other rows are copied from `p_star`. Returns the
/// draw and its log density.
pub fn propose_p<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    p_star: &Matrix<T>,
    ontology: &Ontology,
    rows: &[usize],
    beta: f64,
) -> Result<(Matrix<T>, f64)> {
    let v = p_star.cols();
    let mut p_prime = p_star.clone();
    for &r in rows {
        let centre = p_star.row(r);
        let row = sample_dirichlet_on::<T, _>(rng, v, ontology.reach(r), |w| {
            beta * centre[w].as_f64().max(P_STAR_FLOOR)
        })?;
        p_prime.set_row(r, &row);
    }
    let density = p_proposal_log_density(&p_prime, p_star, ontology, rows, beta);
    Ok((p_prime, density))
}

/// Log density of `p` under the row proposal centred at `p_star`.
pub fn p_proposal_log_density<T: Real>(
    p: &Matrix<T>,
    p_star: &Matrix<T>,
    ontology: &Ontology,
    rows: &[usize],
    beta: f64,
) -> f64 {
    rows.iter()
        .map(|&r| {
            let centre = p_star.row(r);
            dirichlet_log_pdf(p.row(r), ontology.reach(r), |w| {
                beta * centre[w].as_f64().max(P_STAR_FLOOR)
            })
        })
        .sum()
}

/// Builds the full proposal: the `A` half from [`propose_a`], `P★` over the
/// rows in `D`, the `P′` draw, and the reverse `P` density.
pub fn propose<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    state: &ModelState<T>,
    ontology: &Ontology,
    hp: &HyperParams,
) -> Result<MhProposal<T>> {
    let mv = propose_a(rng, state, ontology, hp)?;
    complete_proposal(rng, state, ontology, hp, mv)
}

pub fn complete_proposal<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    state: &ModelState<T>,
    ontology: &Ontology,
    hp: &HyperParams,
    mv: AMove<T>,
) -> Result<MhProposal<T>> {
    let rows = ontology.descendants(mv.concept).to_vec();
    let opts = QpOptions::default();
    let fwd = solve_rows(&state.a, &mv.a_prime, &state.p, ontology, &rows, opts);
    let (p_prime, log_qp_fwd) = propose_p(rng, &fwd.p_star, ontology, &rows, hp.beta_mh)?;
    let rev = solve_rows(&mv.a_prime, &state.a, &p_prime, ontology, &rows, opts);
    let log_qp_rev = p_proposal_log_density(&state.p, &rev.p_star, ontology, &rows, hp.beta_mh);
    Ok(MhProposal {
        kind: mv.kind,
        topic: mv.topic,
        concept: mv.concept,
        residual: fwd.objective.sqrt(),
        qp_converged: fwd.converged && rev.converged,
        a_prime: mv.a_prime,
        p_star: fwd.p_star,
        p_prime,
        rows,
        log_q_forward: mv.log_q_forward + log_qp_fwd,
        log_q_reverse: mv.log_q_reverse + log_qp_rev,
        log_jacobian: mv.log_jacobian,
    })
}

/// Log prior of the `A` side: the concept-inclusion masks with their column
/// rates integrated out, times the Dirichlet density of each row.
pub fn log_prior_a<T: Real>(a: &Matrix<T>, hp: &HyperParams) -> f64 {
    let (k, v) = (a.rows(), a.cols());
    let mask = Mask::support_of(a);
    let prior_a = hp.gamma_a / v as f64;
    let masks: f64 = (0..v)
        .map(|c| log_beta_bernoulli(mask.col_sum(c), k, prior_a, 1.0))
        .sum();
    let rows: f64 = (0..k)
        .map(|i| {
            let support: Vec<usize> = (0..v).filter(|&c| mask.get(i, c)).collect();
            dirichlet_log_pdf(a.row(i), &support, |_| hp.alpha_a)
        })
        .sum();
    masks + rows
}

/// Log prior of the listed rows of `P`.
pub fn log_prior_p<T: Real>(p: &Matrix<T>, ontology: &Ontology, rows: &[usize], hp: &HyperParams) -> f64 {
    rows.iter()
        .map(|&r| dirichlet_log_pdf(p.row(r), ontology.reach(r), |_| hp.alpha_p))
        .sum()
}

/// `log a_MH` for `proposal` given the current training log-likelihood.
pub fn log_acceptance<T: Real>(
    corpus: &Corpus,
    state: &ModelState<T>,
    ontology: &Ontology,
    hp: &HyperParams,
    proposal: &MhProposal<T>,
    loglik: f64,
) -> Result<(f64, f64)> {
    let trial = ModelState {
        b: state.b.clone(),
        bbar: state.bbar.clone(),
        a: proposal.a_prime.clone(),
        abar: Mask::support_of(&proposal.a_prime),
        p: proposal.p_prime.clone(),
        lida: state.lida,
    };
    let loglik_after = corpus_loglik_or_neg_inf(corpus, &trial)?;
    if loglik_after == f64::NEG_INFINITY {
        return Ok((f64::NEG_INFINITY, loglik_after));
    }
    let target = (loglik_after - loglik)
        + (log_prior_a(&proposal.a_prime, hp) - log_prior_a(&state.a, hp))
        + (log_prior_p(&proposal.p_prime, ontology, &proposal.rows, hp)
            - log_prior_p(&state.p, ontology, &proposal.rows, hp));
    let log_a = target + proposal.log_q_reverse - proposal.log_q_forward + proposal.log_jacobian;
    Ok((log_a, loglik_after))
}

/// One split/merge attempt. `loglik` must hold the training log-likelihood of
/// the current state and is updated on acceptance; `counts` are redrawn so
/// they stay consistent with the new parameters.
pub fn mh_step_cached<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    corpus: &Corpus,
    state: &mut ModelState<T>,
    ontology: &Ontology,
    hp: &HyperParams,
    counts: &mut CountTensors,
    loglik: &mut f64,
) -> Result<MhOutcome> {
    let proposal = match propose(rng, state, ontology, hp) {
        Ok(p) => p,
        Err(Error::DegenerateMove(_)) => return Ok(MhOutcome::Degenerate),
        Err(e) => return Err(e),
    };
    let (log_accept, loglik_after) = log_acceptance(corpus, state, ontology, hp, &proposal, *loglik)?;
    let u: f64 = rng.random();
    let accepted = log_accept >= 0.0 || u.ln() < log_accept;
    let loglik_before = *loglik;
    if accepted {
        state.abar = Mask::support_of(&proposal.a_prime);
        state.a = proposal.a_prime;
        state.p = proposal.p_prime;
        *loglik = loglik_after;
        *counts = resample_counts_nkv(rng, corpus, state)?;
        counts.kvv = resample_counts_kvv(rng, counts, state)?;
    }
    Ok(MhOutcome::Evaluated {
        kind: proposal.kind,
        accepted,
        log_accept,
        loglik_before,
        loglik_after,
        residual: proposal.residual,
    })
}

pub fn mh_step<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    corpus: &Corpus,
    state: &mut ModelState<T>,
    ontology: &Ontology,
    hp: &HyperParams,
    counts: &mut CountTensors,
) -> Result<MhOutcome> {
    let mut loglik = corpus_loglik_or_neg_inf(corpus, state)?;
    mh_step_cached(rng, corpus, state, ontology, hp, counts, &mut loglik)
}

/// `attempts` split/merge attempts in a row. No-op in LIDA mode.
pub fn mh_sweep<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    corpus: &Corpus,
    state: &mut ModelState<T>,
    ontology: &Ontology,
    hp: &HyperParams,
    counts: &mut CountTensors,
    attempts: usize,
) -> Result<MhStats> {
    let mut stats = MhStats::default();
    if state.lida {
        return Ok(stats);
    }
    let mut loglik = corpus_loglik_or_neg_inf(corpus, state)?;
    let mut residual_sum = 0.0;
    for _ in 0..attempts {
        stats.proposed += 1;
        match mh_step_cached(rng, corpus, state, ontology, hp, counts, &mut loglik)? {
            MhOutcome::Degenerate => stats.degenerate += 1,
            MhOutcome::Evaluated { accepted, residual, .. } => {
                stats.accepted += accepted as usize;
                residual_sum += residual;
            }
        }
    }
    let evaluated = stats.proposed - stats.degenerate;
    if evaluated > 0 {
        stats.mean_residual = residual_sum / evaluated as f64;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn row_sum(a: &Matrix<f64>, k: usize) -> f64 {
        a.row(k).iter().sum()
    }

    #[test]
    fn merge_at_root_collapses_row() {
        let o = Ontology::binary_tree(3);
        let a = Matrix::from_rows(vec![vec![0.1, 0.2, 0.05, 0.15, 0.1, 0.3, 0.1]]).unwrap();
        let mv = merge_at(&a, &o, &HyperParams::default(), 0, 0).unwrap();
        let mut expect = vec![0.0f64; 7];
        expect[0] = 1.0;
        for (x, y) in mv.a_prime.row(0).iter().zip(&expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_moves_are_reported() {
        let o = Ontology::binary_tree(3);
        let hp = HyperParams::default();
        let mut rng = RngStream::new(0, 0);
        let a = Matrix::from_rows(vec![vec![0.0, 0.5, 0.0, 0.5, 0.0, 0.0, 0.0]]).unwrap();
        // no mass on the concept itself
        assert!(matches!(split_at(&mut rng, &a, &o, &hp, 0, 0), Err(Error::DegenerateMove(_))));
        // leaf
        assert!(matches!(split_at(&mut rng, &a, &o, &hp, 0, 3), Err(Error::DegenerateMove(_))));
        // mass below already
        assert!(matches!(split_at(&mut rng, &a, &o, &hp, 0, 1), Err(Error::DegenerateMove(_))));
        // nothing to merge
        assert!(matches!(merge_at(&a, &o, &hp, 0, 2), Err(Error::DegenerateMove(_))));
        assert!(matches!(merge_at(&a, &o, &hp, 0, 3), Err(Error::DegenerateMove(_))));
    }

    #[test]
    fn moves_conserve_mass_and_invert() {
        let o = Ontology::binary_tree(4);
        let hp = HyperParams::default();
        let mut rng = RngStream::new(5, 0);
        let mut row = vec![0.0; 15];
        row[0] = 0.3;
        row[1] = 0.45;
        row[12] = 0.25;
        let a = Matrix::from_rows(vec![row]).unwrap();
        for _ in 0..200 {
            let split = split_at(&mut rng, &a, &o, &hp, 0, 1).unwrap();
            assert!((row_sum(&split.a_prime, 0) - row_sum(&a, 0)).abs() < 1e-12);
            let merge = merge_at(&split.a_prime, &o, &hp, 0, 1).unwrap();
            assert!((row_sum(&merge.a_prime, 0) - 1.0).abs() < 1e-12);
            assert!(merge.a_prime.max_abs_diff(&a) < 1e-15);
            assert_eq!(merge.block, split.block);
            assert!((split.log_q_forward - merge.log_q_reverse).abs() < 1e-12);
            assert!((split.log_q_reverse - merge.log_q_forward).abs() < 1e-12);
            assert!((split.log_jacobian + merge.log_jacobian).abs() < 1e-12);
        }
    }

    #[test]
    fn subset_probabilities_sum_to_one() {
        for d in 2..8usize {
            let mut total = ((d - 1) as f64) * log_subset(d, 1).exp();
            for s in 2..=d {
                total += ln_choose(d, s).exp() * log_subset(d, s).exp();
            }
            assert!((total - 1.0).abs() < 1e-12, "d = {d}: {total}");
        }
    }

    #[test]
    fn singleton_support_row_is_point_mass() {
        let o = Ontology::flat(3);
        let p = Matrix::<f64>::identity(3);
        let mut rng = RngStream::new(1, 0);
        let (pp, dens) = propose_p(&mut rng, &p, &o, &[0, 1, 2], 1e3).unwrap();
        assert_eq!(pp, p);
        assert_eq!(dens, 0.0);
    }

    #[test]
    fn identity_proposal_has_unit_acceptance() {
        let o = Ontology::chain(3);
        let hp = HyperParams::default();
        let corpus = Corpus::from_dense(&[vec![3, 1, 2], vec![0, 4, 1]]).unwrap();
        let state = ModelState {
            b: Matrix::from_rows(vec![vec![1.0], vec![1.0]]).unwrap(),
            bbar: Mask::ones(2, 1),
            a: Matrix::from_rows(vec![vec![0.2, 0.5, 0.3]]).unwrap(),
            abar: Mask::ones(1, 3),
            p: Matrix::from_fn(3, 3, |_, _| 1.0 / 3.0),
            lida: false,
        };
        let proposal = MhProposal {
            kind: MoveKind::Merge,
            topic: 0,
            concept: 0,
            a_prime: state.a.clone(),
            p_star: state.p.clone(),
            p_prime: state.p.clone(),
            rows: vec![0, 1, 2],
            log_q_forward: -1.7,
            log_q_reverse: -1.7,
            log_jacobian: 0.0,
            residual: 0.0,
            qp_converged: true,
        };
        let ll = corpus_loglik_or_neg_inf(&corpus, &state).unwrap();
        let (log_a, after) = log_acceptance(&corpus, &state, &o, &hp, &proposal, ll).unwrap();
        assert_eq!(log_a, 0.0);
        assert_eq!(after, ll);
    }
}
