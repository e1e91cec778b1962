//! Ground-truth evaluation of a run: pseudo-regret, mean squared gap error,
//! maximum pairwise gap error and the Pareto product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{GapTable, GapTables};

/// Metrics of one trial after `t` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: usize,
    pub cum_regret: f64,
    pub mse_mu: f64,
    #[serde(rename = "mse_M")]
    pub mse_m: f64,
    pub max_err_mu: f64,
    #[serde(rename = "max_err_M")]
    pub max_err_m: f64,
}

impl Checkpoint {
    /// Evaluates estimated tables against the truth. The truth is restricted
    /// to the labels the estimates cover.
    pub fn evaluate(
        t: usize,
        cum_regret: f64,
        est_super: &GapTable,
        est_base: &GapTable,
        truth: &GapTables,
    ) -> Result<Self> {
        let errs_super = score_errors(est_super, &truth.super_gap)?;
        let errs_base = score_errors(est_base, &truth.base_gap)?;
        Ok(Self {
            t,
            cum_regret,
            mse_mu: pairwise_mse(&errs_base),
            mse_m: pairwise_mse(&errs_super),
            max_err_mu: spread(&errs_base),
            max_err_m: spread(&errs_super),
        })
    }

    /// `max_err_M * sqrt(cum_regret)` for this checkpoint.
    pub fn pareto_product(&self) -> f64 {
        pareto_product(self.max_err_m, self.cum_regret)
    }
}

/// Cumulative pseudo-regret of a sequence of played super-arm indices.
pub fn regret(trace: &[usize], gaps: &GapTables) -> Result<f64> {
    trace
        .iter()
        .map(|&i| {
            gaps.opt_gap.get(i).copied().ok_or_else(|| {
                Error::InvalidParameter(format!("arm index {i} outside 0..{}", gaps.opt_gap.len()))
            })
        })
        .sum()
}

/// Mean squared error over unordered pairs of base arms. Both tables must
/// share labels; non-estimable arms are left out of `est` by the caller.
pub fn mse_mu(est: &GapTable, truth: &GapTable) -> Result<f64> {
    Ok(pairwise_mse(&score_errors(est, truth)?))
}

/// Mean squared error over unordered pairs of super arms.
#[allow(non_snake_case)]
pub fn mse_M(est: &GapTable, truth: &GapTable) -> Result<f64> {
    Ok(pairwise_mse(&score_errors(est, truth)?))
}

/// `max_{i<j} |est(i,j) - truth(i,j)|`.
pub fn max_pairwise_error(est: &GapTable, truth: &GapTable) -> Result<f64> {
    Ok(spread(&score_errors(est, truth)?))
}

/// `max_err * sqrt(regret)`.
pub fn pareto_product(max_err: f64, regret: f64) -> f64 {
    debug_assert!(max_err >= 0.0 && regret >= 0.0);
    max_err * regret.max(0.0).sqrt()
}

// Pairwise errors of score tables are differences of per-item score errors.
fn score_errors(est: &GapTable, truth: &GapTable) -> Result<Vec<f64>> {
    let truth = truth.restrict(est.labels()).ok_or_else(|| {
        Error::InvalidParameter("estimated table has labels missing from the truth".into())
    })?;
    Ok(est.scores().iter().zip(truth.scores()).map(|(a, b)| a - b).collect())
}

// sum_{i<j} (e_i - e_j)^2 = k * sum (e_i - mean)^2.
fn pairwise_mse(errs: &[f64]) -> f64 {
    let k = errs.len();
    if k < 2 {
        return 0.0;
    }
    let mean = errs.iter().sum::<f64>() / k as f64;
    let centered: f64 = errs.iter().map(|e| (e - mean).powi(2)).sum();
    2.0 * centered / (k as f64 - 1.0)
}

fn spread(errs: &[f64]) -> f64 {
    if errs.len() < 2 {
        return 0.0;
    }
    let hi = errs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = errs.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

/// Sample mean and standard error of the mean. The error is `None` for a
/// single value.
pub fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, Some((var / n as f64).sqrt()))
}
