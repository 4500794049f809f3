//! Run comparison: relative held-out log-likelihood and topic sparsity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_state::ModelState;
use crate::scalar::Real;

/// One row of a run trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub train_ll: f64,
    pub heldout_ll: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "nonzero_A")]
    pub nonzero_a: usize,
    /// Absent when split/merge moves are off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mh_accept_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub burn_in: usize,
    pub samples_kept: usize,
    /// Iteration number of each kept sample.
    pub iterations: Vec<usize>,
    /// `(ll_gs − ll_lida) / |mean ll|` per kept sample.
    pub rel_ll_diff: Vec<f64>,
    pub gs_nonzeros: Vec<usize>,
    pub lida_nonzeros: Vec<usize>,
    /// Mean held-out log-likelihood over both sets of kept samples.
    pub mean_heldout_ll: f64,
    pub median_rel_ll_diff: f64,
    pub median_gs_nonzeros: f64,
    pub median_lida_nonzeros: f64,
}

/// Number of nonzero topic-concept weights.
pub fn sparsity_count<T: Real>(state: &ModelState<T>) -> usize {
    state.sparsity_count()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Compares two traces of equal length, keeping the samples after the first
/// `burn_in` rows.
pub fn compare_runs(gs: &[TraceRow], lida: &[TraceRow], burn_in: usize) -> Result<ComparisonReport> {
    if gs.len() != lida.len() {
        return Err(Error::LengthMismatch(format!(
            "gs trace has {} rows, lida trace {}",
            gs.len(),
            lida.len()
        )));
    }
    if gs.len() <= burn_in {
        return Err(Error::LengthMismatch(format!(
            "traces have {} rows, need more than the burn-in of {burn_in}",
            gs.len()
        )));
    }
    let gs = &gs[burn_in..];
    let lida = &lida[burn_in..];
    let kept = gs.len();
    let mean = gs.iter().chain(lida).map(|r| r.heldout_ll).sum::<f64>() / (2 * kept) as f64;
    let scale = mean.abs();
    let rel_ll_diff: Vec<f64> = gs
        .iter()
        .zip(lida)
        .map(|(g, l)| {
            let diff = g.heldout_ll - l.heldout_ll;
            if diff == 0.0 {
                0.0
            } else {
                diff / scale
            }
        })
        .collect();
    let gs_nonzeros: Vec<usize> = gs.iter().map(|r| r.nonzero_a).collect();
    let lida_nonzeros: Vec<usize> = lida.iter().map(|r| r.nonzero_a).collect();
    let as_f64 = |v: &[usize]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    Ok(ComparisonReport {
        burn_in,
        samples_kept: kept,
        iterations: gs.iter().map(|r| r.iteration).collect(),
        median_rel_ll_diff: median(&rel_ll_diff),
        median_gs_nonzeros: median(&as_f64(&gs_nonzeros)),
        median_lida_nonzeros: median(&as_f64(&lida_nonzeros)),
        rel_ll_diff,
        gs_nonzeros,
        lida_nonzeros,
        mean_heldout_ll: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(lls: &[f64], nz: usize) -> Vec<TraceRow> {
        lls.iter()
            .enumerate()
            .map(|(i, &ll)| TraceRow {
                iteration: i + 1,
                train_ll: 0.0,
                heldout_ll: ll,
                k: 3,
                nonzero_a: nz,
                mh_accept_rate: None,
            })
            .collect()
    }

    #[test]
    fn identical_traces() {
        let t = trace(&[-10.0, -9.0, -8.0, -8.5], 4);
        let r = compare_runs(&t, &t, 2).unwrap();
        assert_eq!(r.samples_kept, 2);
        assert_eq!(r.rel_ll_diff, vec![0.0, 0.0]);
        assert_eq!(r.iterations, vec![3, 4]);
    }

    #[test]
    fn lower_lida_gives_positive_differences() {
        let gs = trace(&[-10.0, -9.0, -8.0], 3);
        let lida = trace(&[-11.0, -10.0, -9.0], 9);
        let r = compare_runs(&gs, &lida, 1).unwrap();
        assert!(r.rel_ll_diff.iter().all(|&d| d > 0.0));
        // mean over {-9, -8, -10, -9} = -9
        assert!((r.rel_ll_diff[0] - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(r.median_gs_nonzeros, 3.0);
        assert_eq!(r.median_lida_nonzeros, 9.0);
    }

    #[test]
    fn length_checks() {
        let a = trace(&[-1.0, -2.0], 1);
        let b = trace(&[-1.0], 1);
        assert!(matches!(compare_runs(&a, &b, 0), Err(Error::LengthMismatch(_))));
        assert!(matches!(compare_runs(&a, &a, 2), Err(Error::LengthMismatch(_))));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
