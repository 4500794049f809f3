//! Starting states for a chain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::distributions::{project_simplex_on, sample_dirichlet_on};
use crate::error::{Error, Result};
use crate::matrix::{Mask, Matrix};
use crate::mh_sparsify::{solve_target, QpOptions};
use crate::model_state::{HyperParams, ModelState};
use crate::ontology::Ontology;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    #[default]
    Prior,
    Nmf,
}

impl std::str::FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prior" => Ok(InitMethod::Prior),
            "nmf" => Ok(InitMethod::Nmf),
            other => Err(Error::Config(format!("unknown init method `{other}` (expected prior or nmf)"))),
        }
    }
}

/// Weight of the uniform component mixed into factorization-based starts.
const SMOOTHING: f64 = 1e-3;

pub fn initialize<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    method: InitMethod,
    corpus: &Corpus,
    ontology: &Ontology,
    hp: &HyperParams,
    num_topics: usize,
) -> Result<ModelState<T>> {
    match method {
        InitMethod::Prior => init_prior(rng, corpus, ontology, hp, num_topics),
        InitMethod::Nmf => init_nmf(rng, corpus, ontology, num_topics),
    }
}

/// Dirichlet draws from the priors with every mask entry switched on, so
/// every observed token starts with positive probability.
pub fn init_prior<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    corpus: &Corpus,
    ontology: &Ontology,
    hp: &HyperParams,
    num_topics: usize,
) -> Result<ModelState<T>> {
    check(corpus, ontology, num_topics)?;
    let (n, k, v) = (corpus.num_docs(), num_topics, ontology.num_words());
    let topics: Vec<usize> = (0..k).collect();
    let words: Vec<usize> = (0..v).collect();
    let mut b = Matrix::zeros(n, k);
    for i in 0..n {
        b.set_row(i, &sample_dirichlet_on::<T, _>(rng, k, &topics, |_| hp.alpha_b)?);
    }
    let mut a = Matrix::zeros(k, v);
    for i in 0..k {
        a.set_row(i, &sample_dirichlet_on::<T, _>(rng, v, &words, |_| hp.alpha_a)?);
    }
    let mut p = Matrix::zeros(v, v);
    for c in 0..v {
        p.set_row(c, &sample_dirichlet_on::<T, _>(rng, v, ontology.reach(c), |_| hp.alpha_p)?);
    }
    Ok(ModelState {
        b,
        bbar: Mask::ones(n, k),
        a,
        abar: Mask::ones(k, v),
        p,
        lida: false,
    })
}

fn check(corpus: &Corpus, ontology: &Ontology, num_topics: usize) -> Result<()> {
    if num_topics == 0 {
        return Err(Error::Config("initial_topics must be at least 1".into()));
    }
    if corpus.vocab_size() != ontology.num_words() {
        return Err(Error::DimensionMismatch(format!(
            "corpus vocabulary {} differs from ontology size {}",
            corpus.vocab_size(),
            ontology.num_words()
        )));
    }
    Ok(())
}

/// Multiplicative-update factorization `X ≈ B M` (KL loss), then an
/// alternating split `M ≈ A P` with `P` on the ontology masks. The result is
/// lightly smoothed so every mask starts full.
pub fn init_nmf<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    corpus: &Corpus,
    ontology: &Ontology,
    num_topics: usize,
) -> Result<ModelState<T>> {
    check(corpus, ontology, num_topics)?;
    let (n, k, v) = (corpus.num_docs(), num_topics, ontology.num_words());
    let x = corpus.to_dense();
    let mut w: Vec<f64> = (0..n * k).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut h: Vec<f64> = (0..k * v).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut ratio = vec![0.0; v];
    for _ in 0..100 {
        // H ← H ⊙ (Wᵀ (X / WH)) / (Wᵀ 1)
        let mut num = vec![0.0; k * v];
        let mut col_w = vec![0.0; k];
        for i in 0..n {
            doc_ratio(&x[i], &w[i * k..(i + 1) * k], &h, k, &mut ratio);
            for j in 0..k {
                let wij = w[i * k + j];
                col_w[j] += wij;
                for c in 0..v {
                    num[j * v + c] += wij * ratio[c];
                }
            }
        }
        for j in 0..k {
            for c in 0..v {
                h[j * v + c] *= num[j * v + c] / col_w[j].max(1e-300);
            }
        }
        // W ← W ⊙ ((X / WH) Hᵀ) / (1 Hᵀ)
        let row_h: Vec<f64> = (0..k).map(|j| h[j * v..(j + 1) * v].iter().sum()).collect();
        for i in 0..n {
            doc_ratio(&x[i], &w[i * k..(i + 1) * k], &h, k, &mut ratio);
            for j in 0..k {
                let s: f64 = (0..v).map(|c| ratio[c] * h[j * v + c]).sum();
                w[i * k + j] *= s / row_h[j].max(1e-300);
            }
        }
    }

    let row_h: Vec<f64> = (0..k).map(|j| h[j * v..(j + 1) * v].iter().sum()).collect();
    let b = Matrix::from_fn(n, k, |i, j| {
        let total: f64 = (0..k).map(|l| w[i * k + l] * row_h[l]).sum();
        let share = if total > 0.0 { w[i * k + j] * row_h[j] / total } else { 1.0 / k as f64 };
        T::of((1.0 - SMOOTHING) * share + SMOOTHING / k as f64)
    });
    let m = Matrix::from_fn(k, v, |j, c| T::of(h[j * v + c] / row_h[j].max(1e-300)));

    let (a, p) = split_topic_words(&m, ontology);
    let a = Matrix::from_fn(k, v, |j, c| T::of((1.0 - SMOOTHING) * a[(j, c)].as_f64() + SMOOTHING / v as f64));
    let mut p_smooth = Matrix::zeros(v, v);
    for c in 0..v {
        let reach = ontology.reach(c);
        for &w in reach {
            p_smooth[(c, w)] = T::of((1.0 - SMOOTHING) * p[(c, w)].as_f64() + SMOOTHING / reach.len() as f64);
        }
    }
    Ok(ModelState {
        b,
        bbar: Mask::ones(n, k),
        a,
        abar: Mask::ones(k, v),
        p: p_smooth,
        lida: false,
    })
}

/// `X_i / (W_i H)`, zero where `X` is zero.
fn doc_ratio(x: &[u32], w_i: &[f64], h: &[f64], k: usize, out: &mut [f64]) {
    let v = out.len();
    for c in 0..v {
        out[c] = if x[c] == 0 {
            0.0
        } else {
            let wh: f64 = (0..k).map(|j| w_i[j] * h[j * v + c]).sum();
            x[c] as f64 / wh.max(1e-300)
        };
    }
}

/// Alternating least squares split `M ≈ A P` with rows of `A` on the full
/// simplex and rows of `P` on their reach sets. Starts from `A = M`, `P = I`.
pub fn split_topic_words<T: Real>(m: &Matrix<T>, ontology: &Ontology) -> (Matrix<T>, Matrix<T>) {
    let (k, v) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut p = Matrix::<T>::identity(v);
    let all_rows: Vec<usize> = (0..v).collect();
    let support: Vec<usize> = (0..v).collect();
    let mut scratch = Vec::new();
    for _ in 0..20 {
        p = solve_target(m, &a, &p, ontology, &all_rows, QpOptions { max_iter: 500, tol: 1e-8 }).p_star;
        // projected gradient on A with P fixed
        let pf: Vec<f64> = p.as_slice().iter().map(|x| x.as_f64()).collect();
        let gram = gram_rows(&pf, v);
        let lipschitz = 2.0 * gram_bound(&gram, v) + 1e-12;
        let mut af: Vec<f64> = a.as_slice().iter().map(|x| x.as_f64()).collect();
        let mf: Vec<f64> = m.as_slice().iter().map(|x| x.as_f64()).collect();
        for _ in 0..200 {
            for j in 0..k {
                let row = &af[j * v..(j + 1) * v];
                let mut resid = vec![0.0; v];
                for (c, &ac) in row.iter().enumerate() {
                    if ac != 0.0 {
                        for w in 0..v {
                            resid[w] += ac * pf[c * v + w];
                        }
                    }
                }
                for w in 0..v {
                    resid[w] -= mf[j * v + w];
                }
                let mut next: Vec<f64> = (0..v)
                    .map(|c| {
                        let g: f64 = 2.0 * (0..v).map(|w| resid[w] * pf[c * v + w]).sum::<f64>();
                        row[c] - g / lipschitz
                    })
                    .collect();
                project_simplex_on(&mut next, &support, &mut scratch);
                af[j * v..(j + 1) * v].copy_from_slice(&next);
            }
        }
        a = Matrix::from_fn(k, v, |j, c| T::of(af[j * v + c]));
    }
    (a, p)
}

/// `P Pᵀ`.
fn gram_rows(p: &[f64], v: usize) -> Vec<f64> {
    let mut g = vec![0.0; v * v];
    for i in 0..v {
        for j in 0..v {
            g[i * v + j] = (0..v).map(|w| p[i * v + w] * p[j * v + w]).sum();
        }
    }
    g
}

/// Gershgorin bound on the spectral norm of a symmetric matrix.
fn gram_bound(g: &[f64], v: usize) -> f64 {
    (0..v)
        .map(|i| (0..v).map(|j| g[i * v + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
