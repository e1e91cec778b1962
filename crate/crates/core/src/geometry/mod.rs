//! Convex and spectral machinery for full-bandit feedback.
//!
//! Super arms are embedded as indicator vectors `theta_M` in `{0,1}^d`.
//! The mirror-descent region is `Q = Co{theta_M / m}`, a subset of the
//! probability simplex when every arm has size `m`.

mod decompose;
pub mod linalg;
mod projection;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::SuperArmFamily;

pub use decompose::{decompose, decompose_nnls, decompose_peel, DECOMPOSE_TOL};
pub use linalg::{pseudo_inverse, range_projector};
pub use projection::{
    kl_divergence, kl_project, project_frank_wolfe, project_water_filling, projection_accuracy,
    ProjectionReport, FW_EPS_FLOOR, FW_MAX_ITERATIONS,
};

/// Tolerance for singleton-in-span membership.
pub const SPAN_TOL: f64 = 1e-8;

/// Indicator vector of a non-empty subset of `0..d`.
pub fn vectorize(subset: &[usize], d: usize) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(Error::InvalidFamily("super arms are non-empty".into()));
    }
    let mut theta = vec![0.0; d];
    for &e in subset {
        if e >= d {
            return Err(Error::ArmOutOfRange { arm: e + 1, d });
        }
        theta[e] = 1.0;
    }
    Ok(theta)
}

/// Members of an indicator vector.
pub fn devectorize(theta: &[f64]) -> Vec<usize> {
    theta
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.5)
        .map(|(e, _)| e)
        .collect()
}

/// The `|M| x d` matrix whose rows are the arm indicators.
#[derive(Debug, Clone)]
pub struct ThetaMatrix {
    rows: DMatrix<f64>,
    m: Option<usize>,
}

impl ThetaMatrix {
    pub fn new(family: &SuperArmFamily) -> Self {
        let rows = DMatrix::from_fn(family.len(), family.d(), |i, e| {
            if family.contains(i, e) {
                1.0
            } else {
                0.0
            }
        });
        Self { rows, m: family.uniform_size() }
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn d(&self) -> usize {
        self.rows.ncols()
    }

    pub fn m(&self) -> Option<usize> {
        self.m
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.rows.row(i).iter().copied().collect()
    }
}

/// `E[theta theta^T]` for an arm drawn with the given law.
pub fn covariance(weights: &[f64], theta: &ThetaMatrix) -> Result<DMatrix<f64>> {
    if weights.len() != theta.len() {
        return Err(Error::NotADistribution(format!(
            "{} weights for {} arms",
            weights.len(),
            theta.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::NotADistribution("weights must be non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotADistribution(format!("weights sum to {total}")));
    }
    let d = theta.d();
    let mut sigma = DMatrix::zeros(d, d);
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = theta.rows.row(i);
        sigma += row.transpose() * row * w;
    }
    Ok(sigma)
}

/// Covariance of a sparse arm law, accumulated over the support only.
pub fn sparse_covariance(p: &SparseArmDistribution, family: &SuperArmFamily) -> DMatrix<f64> {
    let d = family.d();
    let mut sigma = DMatrix::zeros(d, d);
    for &(arm, w) in p.pairs() {
        let members = family.arm(arm);
        for &a in members {
            for &b in members {
                sigma[(a, b)] += w;
            }
        }
    }
    sigma
}

/// Problem constants of a family under uniform super-arm play.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralConstants {
    /// Smallest nonzero eigenvalue of the uniform-law covariance.
    pub lambda_min: f64,
    /// Base-arm distribution induced by uniform arm play.
    pub rho0: Vec<f64>,
    /// `min_e m * rho0(e)`, i.e. the smallest fraction of arms containing a base arm.
    pub rho_min: f64,
    /// Common arm size, when the family has one.
    pub m: Option<usize>,
    /// Pseudo-inverse of the uniform-law covariance.
    #[serde(skip)]
    pub sigma_unif_pinv: DMatrix<f64>,
}

pub fn spectral_constants(family: &SuperArmFamily) -> Result<SpectralConstants> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let theta = ThetaMatrix::new(family);
    let k = family.len();
    let sigma = covariance(&vec![1.0 / k as f64; k], &theta)?;
    let (values, _) = linalg::positive_spectrum(&sigma)?;
    let lambda_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let cover = family.coverage();
    let total_size: usize = cover.iter().sum();
    let rho0 = cover.iter().map(|&c| c as f64 / total_size as f64).collect();
    let rho_min = cover.iter().map(|&c| c as f64 / k as f64).fold(f64::INFINITY, f64::min);
    Ok(SpectralConstants {
        lambda_min,
        rho0,
        rho_min,
        m: family.uniform_size(),
        sigma_unif_pinv: pseudo_inverse(&sigma)?,
    })
}

/// Base arms whose singleton indicator lies in the span of the arm
/// indicators, i.e. whose mean is identifiable from aggregate rewards.
pub fn estimable_base_arms(family: &SuperArmFamily) -> Vec<usize> {
    let theta = ThetaMatrix::new(family);
    let gram = theta.rows.transpose() * &theta.rows;
    let proj = range_projector(&gram).expect("Gram matrices are symmetric");
    (0..family.d())
        .filter(|&e| {
            let residual: f64 = (0..family.d())
                .map(|r| {
                    let target = if r == e { 1.0 } else { 0.0 };
                    (target - proj[(r, e)]).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            residual <= SPAN_TOL
        })
        .collect()
}

/// A finitely supported law over super arms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseArmDistribution {
    pairs: Vec<(usize, f64)>,
}

impl SparseArmDistribution {
    /// Builds a law from `(arm, weight)` pairs; zero weights are dropped and
    /// repeated arms merged.
    pub fn new(pairs: Vec<(usize, f64)>) -> Result<Self> {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (arm, w) in pairs {
            if !(w >= 0.0) {
                return Err(Error::NotADistribution(format!("weight {w} on arm {arm}")));
            }
            if w == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|(a, _)| *a == arm) {
                Some(slot) => slot.1 += w,
                None => merged.push((arm, w)),
            }
        }
        let total: f64 = merged.iter().map(|p| p.1).sum();
        if merged.is_empty() || (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotADistribution(format!("weights sum to {total}")));
        }
        for p in &mut merged {
            p.1 /= total;
        }
        Ok(Self { pairs: merged })
    }

    /// Builds a law from one weight per arm index.
    pub fn from_dense(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::NotADistribution("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !((total - 1.0).abs() <= 1e-9) {
            return Err(Error::NotADistribution(format!("weights sum to {total}")));
        }
        let pairs = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| (i, w / total))
            .collect();
        Ok(Self { pairs })
    }

    pub fn point_mass(arm: usize) -> Self {
        Self { pairs: vec![(arm, 1.0)] }
    }

    pub fn pairs(&self) -> &[(usize, f64)] {
        &self.pairs
    }

    pub fn support_len(&self) -> usize {
        self.pairs.len()
    }

    pub fn weight(&self, arm: usize) -> f64 {
        self.pairs.iter().find(|p| p.0 == arm).map_or(0.0, |p| p.1)
    }

    /// `sum of weight * theta_arm`.
    pub fn mean_theta(&self, family: &SuperArmFamily) -> Vec<f64> {
        let mut out = vec![0.0; family.d()];
        for &(arm, w) in &self.pairs {
            for &e in family.arm(arm) {
                out[e] += w;
            }
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(arm, w) in &self.pairs {
            acc += w;
            if u < acc {
                return arm;
            }
        }
        self.pairs.last().expect("distribution is non-empty").0
    }
}
