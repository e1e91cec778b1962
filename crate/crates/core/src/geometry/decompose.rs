//! Carathéodory decomposition of a point of `Co(theta)` into at most
//! `d + 1` super arms.

use nalgebra::{DMatrix, DVector};

use super::SparseArmDistribution;
use crate::error::{Error, Result};
use crate::instance::SuperArmFamily;

/// Reconstruction tolerance in the max norm.
pub const DECOMPOSE_TOL: f64 = 1e-9;

const SNAP: f64 = 1e-13;

/// Writes `target` as a convex combination of arm indicators.
///
/// Complete uniform matroids use greedy vertex peeling; other families use a
/// non-negative least-squares solve whose passive set is linearly
/// independent, which bounds the support by `d + 1`.
pub fn decompose(family: &SuperArmFamily, target: &[f64]) -> Result<SparseArmDistribution> {
    if target.len() != family.d() {
        return Err(Error::InvalidParameter(format!(
            "target has length {}, expected {}",
            target.len(),
            family.d()
        )));
    }
    if target.iter().any(|&x| !(-SNAP..=1.0 + SNAP).contains(&x)) {
        return Err(Error::Decomposition { residual: f64::NAN });
    }
    if family.is_complete_uniform() {
        decompose_peel(family, target)
    } else {
        decompose_nnls(family, target)
    }
}

fn reconstruction_error(family: &SuperArmFamily, p: &SparseArmDistribution, target: &[f64]) -> f64 {
    p.mean_theta(family)
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn finish(
    family: &SuperArmFamily,
    pairs: Vec<(usize, f64)>,
    target: &[f64],
) -> Result<SparseArmDistribution> {
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if pairs.is_empty() || (total - 1.0).abs() > DECOMPOSE_TOL {
        return Err(Error::Decomposition { residual: (total - 1.0).abs() });
    }
    let p = SparseArmDistribution::new(pairs)?;
    let residual = reconstruction_error(family, &p, target);
    if residual > DECOMPOSE_TOL || p.support_len() > family.d() + 1 {
        return Err(Error::Decomposition { residual });
    }
    Ok(p)
}

/// Greedy peeling for the family of all size-`m` subsets.
///
/// With remaining mass `s`, the residual lies in `{0 <= x <= s, sum x = m s}`.
/// Each step takes the arm on the `m` largest residual coordinates and
/// removes as much of it as keeps the residual feasible, which either zeroes
/// a coordinate or makes one tight. At most `d + 1` steps are needed.
pub fn decompose_peel(family: &SuperArmFamily, target: &[f64]) -> Result<SparseArmDistribution> {
    let d = family.d();
    let m = family
        .uniform_size()
        .filter(|_| family.is_complete_uniform())
        .ok_or_else(|| Error::InvalidFamily("peeling needs a complete uniform matroid".into()))?;
    let sum: f64 = target.iter().sum();
    if (sum - m as f64).abs() > DECOMPOSE_TOL {
        return Err(Error::Decomposition { residual: (sum - m as f64).abs() });
    }
    let mut x: Vec<f64> = target.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mut mass = 1.0;
    let mut pairs = Vec::with_capacity(d + 1);
    let mut order: Vec<usize> = (0..d).collect();
    for _ in 0..=d + 1 {
        if mass <= SNAP {
            break;
        }
        order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
        let (inside, outside) = order.split_at(m);
        let floor = inside.iter().map(|&e| x[e]).fold(f64::INFINITY, f64::min);
        let ceiling = outside.iter().map(|&e| x[e]).fold(0.0, f64::max);
        let step = floor.min(mass - ceiling).min(mass);
        if step <= 0.0 {
            break;
        }
        let arm = family.index_of(inside).expect("complete matroid holds every m-subset");
        pairs.push((arm, step));
        for &e in inside {
            x[e] -= step;
        }
        mass -= step;
        for v in x.iter_mut() {
            if v.abs() <= SNAP {
                *v = 0.0;
            } else if (*v - mass).abs() <= SNAP {
                *v = mass;
            }
        }
    }
    finish(family, pairs, target)
}

/// Lawson-Hanson non-negative least squares on
/// `[theta^T; 1^T] w = [target; 1]`.
pub fn decompose_nnls(family: &SuperArmFamily, target: &[f64]) -> Result<SparseArmDistribution> {
    let d = family.d();
    let k = family.len();
    let rows = d + 1;
    let a = DMatrix::from_fn(rows, k, |r, c| {
        if r == d || family.contains(c, r) {
            1.0
        } else {
            0.0
        }
    });
    let mut b = DVector::from_element(rows, 1.0);
    b.rows_mut(0, d).copy_from_slice(target);
    let w = nnls(&a, &b, 3 * k + 10)?;
    let pairs = w
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (i, v))
        .collect();
    finish(family, pairs, target)
}

fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_outer: usize) -> Result<Vec<f64>> {
    let n = a.ncols();
    let tol = 1e-12 * a.amax().max(1.0) * b.amax().max(1.0);
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let residual = |x: &[f64]| b - a * DVector::from_column_slice(x);

    for _ in 0..max_outer {
        let r = residual(&x);
        if r.amax() <= SNAP {
            return Ok(x);
        }
        let grad = a.transpose() * &r;
        let candidate = (0..n)
            .filter(|&j| !passive[j] && grad[j] > tol)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = candidate else {
            return Ok(x);
        };
        passive[j] = true;

        for _ in 0..n + 1 {
            let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let sub = DMatrix::from_fn(a.nrows(), cols.len(), |r, c| a[(r, cols[c])]);
            let sol = sub
                .svd(true, true)
                .solve(b, 1e-14)
                .map_err(|_| Error::Decomposition { residual: f64::NAN })?;
            if sol.iter().all(|&v| v > 0.0) {
                for (c, &i) in cols.iter().enumerate() {
                    x[i] = sol[c];
                }
                break;
            }
            // Step toward the unconstrained solution until a weight hits zero.
            let mut step = 1.0f64;
            for (c, &i) in cols.iter().enumerate() {
                if sol[c] <= 0.0 {
                    let denom = x[i] - sol[c];
                    if denom > 0.0 {
                        step = step.min(x[i] / denom);
                    } else {
                        step = 0.0;
                    }
                }
            }
            for (c, &i) in cols.iter().enumerate() {
                x[i] += step * (sol[c] - x[i]);
                if x[i] <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    let r = residual(&x);
    Err(Error::Decomposition { residual: r.amax() })
}
