//! `min_P̂ ‖A P − A′ P̂‖²_F` with every row of `P̂` on the simplex over its
//! ontology reach set.
//!
//! Accelerated projected gradient with adaptive restart. Iterates are kept in
//! `f64` regardless of the model scalar.

use crate::distributions::project_simplex_on;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ontology::Ontology;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub max_iter: usize,
    /// Stop when the gradient-mapping norm drops below this.
    pub tol: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution<T> {
    pub p_star: Matrix<T>,
    pub objective: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// `‖A P − A′ P̂‖²_F`.
pub fn qp_objective<T: Real>(a: &Matrix<T>, a_prime: &Matrix<T>, p: &Matrix<T>, p_hat: &Matrix<T>) -> f64 {
    let lhs = a.matmul(p).expect("shapes");
    let rhs = a_prime.matmul(p_hat).expect("shapes");
    lhs.as_slice()
        .iter()
        .zip(rhs.as_slice())
        .map(|(&x, &y)| (x.as_f64() - y.as_f64()).powi(2))
        .sum()
}

/// Solves over all rows; fails if the iteration cap is hit first.
pub fn solve_p_star<T: Real>(
    a: &Matrix<T>,
    a_prime: &Matrix<T>,
    p: &Matrix<T>,
    ontology: &Ontology,
) -> Result<Matrix<T>> {
    check_shapes(a, a_prime, p, ontology)?;
    let rows: Vec<usize> = (0..p.rows()).collect();
    let sol = solve_rows(a, a_prime, p, ontology, &rows, QpOptions::default());
    if sol.converged {
        Ok(sol.p_star)
    } else {
        Err(Error::SolverDidNotConverge {
            iterations: sol.iterations,
            grad_norm: sol.grad_norm,
        })
    }
}

fn check_shapes<T: Real>(a: &Matrix<T>, a_prime: &Matrix<T>, p: &Matrix<T>, o: &Ontology) -> Result<()> {
    let v = o.num_words();
    if a.rows() != a_prime.rows()
        || a.cols() != v
        || a_prime.cols() != v
        || p.rows() != v
        || p.cols() != v
    {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{}, A' {}x{}, P {}x{}, ontology over {v} words",
            a.rows(),
            a.cols(),
            a_prime.rows(),
            a_prime.cols(),
            p.rows(),
            p.cols()
        )));
    }
    Ok(())
}

/// Solves with only `free_rows` of `P̂` allowed to move; every other row is
/// held at `P`. Free rows that `A′` never uses do not enter the objective and
/// also stay at `P`. Never fails: a non-converged solve returns its last
/// iterate with `converged = false`.
pub fn solve_rows<T: Real>(
    a: &Matrix<T>,
    a_prime: &Matrix<T>,
    p: &Matrix<T>,
    ontology: &Ontology,
    free_rows: &[usize],
    opts: QpOptions,
) -> QpSolution<T> {
    let target = a.matmul(p).expect("shapes");
    solve_target(&target, a_prime, p, ontology, free_rows, opts)
}

/// `min ‖target − A′ P̂‖²` over the free rows of `P̂`, warm-started at (and
/// otherwise fixed to) `warm`.
pub fn solve_target<T: Real>(
    target: &Matrix<T>,
    a_prime: &Matrix<T>,
    warm: &Matrix<T>,
    ontology: &Ontology,
    free_rows: &[usize],
    opts: QpOptions,
) -> QpSolution<T> {
    let p = warm;
    let k = a_prime.rows();
    let v = p.cols();
    let ap: Vec<f64> = a_prime.as_slice().iter().map(|x| x.as_f64()).collect();
    let col_used = |c: usize| (0..k).any(|i| ap[i * v + c] != 0.0);
    let mut is_free = vec![false; v];
    for &r in free_rows {
        is_free[r] = true;
    }
    let rows: Vec<usize> = (0..v).filter(|&c| is_free[c] && col_used(c)).collect();
    let nr = rows.len();

    // Y = target − A′_fixed P_fixed
    let mut y: Vec<f64> = target.as_slice().iter().map(|x| x.as_f64()).collect();
    for i in 0..k {
        for c in (0..v).filter(|&c| !(is_free[c] && col_used(c))) {
            let w = ap[i * v + c];
            if w == 0.0 {
                continue;
            }
            for (dst, &pc) in y[i * v..(i + 1) * v].iter_mut().zip(p.row(c)) {
                *dst -= w * pc.as_f64();
            }
        }
    }
    // A′ restricted to the free columns, K × nr
    let a_r: Vec<f64> = (0..k)
        .flat_map(|i| rows.iter().map(move |&c| (i, c)))
        .map(|(i, c)| ap[i * v + c])
        .collect();

    let objective_of = |x: &[f64], resid: &mut Vec<f64>| -> f64 {
        residual(&a_r, x, &y, k, nr, v, resid);
        resid.iter().map(|r| r * r).sum()
    };

    let mut x: Vec<f64> = rows
        .iter()
        .flat_map(|&c| p.row(c).iter().map(|e| e.as_f64()))
        .collect();
    let supports: Vec<&[usize]> = rows.iter().map(|&c| ontology.reach(c)).collect();
    let mut scratch = Vec::new();
    if !rows.iter().all(|&c| row_feasible(p.row(c), ontology.reach(c))) {
        project_all(&mut x, &supports, v, &mut scratch);
    }

    let mut resid = vec![0.0; k * v];
    let mut iterations = 0;
    let mut grad_norm = 0.0;
    let mut converged = true;

    if nr > 0 {
        let lipschitz = 2.0 * gram_spectral_norm(&a_r, k, nr) * (1.0 + 1e-9) + 1e-300;
        let step = 1.0 / lipschitz;
        let mut yk = x.clone();
        let mut x_new = vec![0.0; x.len()];
        let mut grad = vec![0.0; x.len()];
        let mut t = 1.0f64;
        converged = false;
        for it in 0..opts.max_iter {
            iterations = it + 1;
            residual(&a_r, &yk, &y, k, nr, v, &mut resid);
            gradient(&a_r, &resid, k, nr, v, &mut grad);
            for ((dst, &yv), &g) in x_new.iter_mut().zip(&yk).zip(&grad) {
                *dst = yv - step * g;
            }
            project_all(&mut x_new, &supports, v, &mut scratch);
            let gm: f64 = yk
                .iter()
                .zip(&x_new)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                * lipschitz;
            grad_norm = gm;
            if gm < opts.tol {
                // the warm start is already optimal; keep it bit for bit
                if it > 0 {
                    x.copy_from_slice(&x_new);
                }
                converged = true;
                break;
            }
            // restart momentum when it points uphill
            let uphill: f64 = yk
                .iter()
                .zip(&x_new)
                .zip(&x)
                .map(|((&yv, &xn), &xo)| (yv - xn) * (xn - xo))
                .sum();
            let t_next = if uphill > 0.0 {
                1.0
            } else {
                (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
            };
            let beta = if uphill > 0.0 { 0.0 } else { (t - 1.0) / t_next };
            for i in 0..x.len() {
                yk[i] = x_new[i] + beta * (x_new[i] - x[i]);
            }
            x.copy_from_slice(&x_new);
            t = t_next;
        }
    }

    let objective = objective_of(&x, &mut resid);
    let mut p_star = p.clone();
    for (ri, &c) in rows.iter().enumerate() {
        let row = p_star.row_mut(c);
        for (dst, &src) in row.iter_mut().zip(&x[ri * v..(ri + 1) * v]) {
            *dst = T::of(src);
        }
    }
    QpSolution {
        p_star,
        objective,
        iterations,
        grad_norm,
        converged,
    }
}

fn row_feasible<T: Real>(row: &[T], support: &[usize]) -> bool {
    let on: f64 = support.iter().map(|&i| row[i].as_f64()).sum();
    let all: f64 = row.iter().map(|x| x.as_f64()).sum();
    row.iter().all(|&x| x >= T::zero()) && (on - 1.0).abs() <= 1e-12 && (all - on).abs() == 0.0
}

/// `A′_R X − Y`.
fn residual(a_r: &[f64], x: &[f64], y: &[f64], k: usize, nr: usize, v: usize, out: &mut Vec<f64>) {
    out.clear();
    out.extend(y.iter().map(|&t| -t));
    for i in 0..k {
        let o = &mut out[i * v..(i + 1) * v];
        for r in 0..nr {
            let w = a_r[i * nr + r];
            if w == 0.0 {
                continue;
            }
            for (dst, &xv) in o.iter_mut().zip(&x[r * v..(r + 1) * v]) {
                *dst += w * xv;
            }
        }
    }
}

/// `2 A′_Rᵀ (A′_R X − Y)`.
fn gradient(a_r: &[f64], resid: &[f64], k: usize, nr: usize, v: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|g| *g = 0.0);
    for r in 0..nr {
        let g = &mut out[r * v..(r + 1) * v];
        for i in 0..k {
            let w = a_r[i * nr + r];
            if w == 0.0 {
                continue;
            }
            for (dst, &e) in g.iter_mut().zip(&resid[i * v..(i + 1) * v]) {
                *dst += 2.0 * w * e;
            }
        }
    }
}

fn project_all(x: &mut [f64], supports: &[&[usize]], v: usize, scratch: &mut Vec<f64>) {
    for (r, support) in supports.iter().enumerate() {
        let row = &mut x[r * v..(r + 1) * v];
        // off-support coordinates are pinned at zero
        let mut on = vec![false; v];
        for &i in support.iter() {
            on[i] = true;
        }
        for (i, xv) in row.iter_mut().enumerate() {
            if !on[i] {
                *xv = 0.0;
            }
        }
        project_simplex_on(row, support, scratch);
    }
}

/// Largest eigenvalue of `A′_R A′_Rᵀ` (`K × K`), which equals `‖A′_Rᵀ A′_R‖₂`.
fn gram_spectral_norm(a_r: &[f64], k: usize, nr: usize) -> f64 {
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            g[i * k + j] = (0..nr).map(|r| a_r[i * nr + r] * a_r[j * nr + r]).sum();
        }
    }
    // Gershgorin bound is a safe upper estimate; refine with power iteration.
    let bound = (0..k)
        .map(|i| (0..k).map(|j| g[i * k + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut vec = vec![1.0; k];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut next = vec![0.0; k];
        for i in 0..k {
            next[i] = (0..k).map(|j| g[i * k + j] * vec[j]).sum();
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let prev = lambda;
        lambda = norm / vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        vec = next.into_iter().map(|x| x / norm).collect();
        if (lambda - prev).abs() <= 1e-12 * lambda {
            break;
        }
    }
    // power iteration approaches from below; never exceed the safe bound
    (lambda * (1.0 + 1e-6)).min(bound).max(lambda)
}
