//! KL projection onto `Q = Co{theta_M / m}`.

use crate::error::{Error, Result};
use crate::instance::SuperArmFamily;

/// The generic solver never certifies gaps below this value; double
/// precision cannot resolve KL differences much smaller.
pub const FW_EPS_FLOOR: f64 = 1e-11;

pub const FW_MAX_ITERATIONS: usize = 50_000;

const LINE_SEARCH_STEPS: usize = 100;

/// `KL(p, q) = sum p log(p / q)` with `0 log 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum()
}

/// Projection accuracy for round `t`: `1 / (t^2 max(1, ln t)^3)`.
pub fn projection_accuracy(t: usize) -> f64 {
    let t = t.max(1) as f64;
    1.0 / (t * t * t.ln().max(1.0).powi(3))
}

/// Diagnostics from a projection solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionReport {
    pub iterations: usize,
    /// Certified upper bound on `KL(q, q~) - min KL`; zero for the closed form.
    pub gap: f64,
}

fn check_input(family: &SuperArmFamily, q_tilde: &[f64], eps: f64) -> Result<usize> {
    let m = family
        .uniform_size()
        .ok_or_else(|| Error::InvalidFamily("KL projection needs a common arm size".into()))?;
    if q_tilde.len() != family.d() {
        return Err(Error::InvalidParameter(format!(
            "distribution has length {}, expected {}",
            q_tilde.len(),
            family.d()
        )));
    }
    if q_tilde.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::NotADistribution("entries must be strictly positive".into()));
    }
    let total: f64 = q_tilde.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotADistribution(format!("entries sum to {total}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("accuracy must be positive, got {eps}")));
    }
    Ok(m)
}

/// Returns `q` in `Q` with `KL(q, q~) <= min over Q + eps`.
pub fn kl_project(family: &SuperArmFamily, q_tilde: &[f64], eps: f64) -> Result<Vec<f64>> {
    let m = check_input(family, q_tilde, eps)?;
    if family.is_complete_uniform() {
        Ok(water_fill(q_tilde, m))
    } else {
        project_frank_wolfe(family, q_tilde, eps, FW_MAX_ITERATIONS).map(|(q, _)| q)
    }
}

/// Closed-form projection onto `{q >= 0, sum q = 1, q <= 1/m}`, the region of
/// the complete size-`m` matroid: `q(e) = min(c q~(e), 1/m)`.
pub fn project_water_filling(family: &SuperArmFamily, q_tilde: &[f64]) -> Result<Vec<f64>> {
    let m = check_input(family, q_tilde, 1.0)?;
    if !family.is_complete_uniform() {
        return Err(Error::InvalidFamily("water filling needs a complete uniform matroid".into()));
    }
    Ok(water_fill(q_tilde, m))
}

fn water_fill(q_tilde: &[f64], m: usize) -> Vec<f64> {
    let d = q_tilde.len();
    let cap = 1.0 / m as f64;
    if m == d {
        return vec![cap; d];
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| q_tilde[b].total_cmp(&q_tilde[a]));
    let mut tail: f64 = q_tilde.iter().sum();
    for capped in 0..m {
        let scale = (1.0 - capped as f64 * cap) / tail;
        if scale * q_tilde[order[capped]] <= cap {
            let mut out = vec![0.0; d];
            for (rank, &e) in order.iter().enumerate() {
                out[e] = if rank < capped { cap } else { scale * q_tilde[e] };
            }
            return out;
        }
        tail -= q_tilde[order[capped]];
    }
    unreachable!("at most m - 1 coordinates can be capped when d > m")
}

/// Away-step Frank-Wolfe over the arm weights, stopped on the duality gap.
///
/// The linear minimization step is the combinatorial oracle, so any family
/// with a common arm size works. The certified gap is floored at
/// [`FW_EPS_FLOOR`].
pub fn project_frank_wolfe(
    family: &SuperArmFamily,
    q_tilde: &[f64],
    eps: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, ProjectionReport)> {
    let m = check_input(family, q_tilde, eps)?;
    let eps = eps.max(FW_EPS_FLOOR);
    let d = family.d();
    let k = family.len();
    let inv_m = 1.0 / m as f64;
    let mut weights = vec![1.0 / k as f64; k];
    let mut x = vec![0.0; d];
    for arm in family.arms() {
        for &e in arm {
            x[e] += inv_m / k as f64;
        }
    }
    let mut grad = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let mut gap = f64::INFINITY;

    for iter in 0..max_iterations {
        for e in 0..d {
            grad[e] = if x[e] > 0.0 {
                (x[e] / q_tilde[e]).ln() + 1.0
            } else {
                (f64::MIN_POSITIVE / q_tilde[e]).ln() + 1.0
            };
        }
        let gx: f64 = x.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let arm_score = |i: usize| inv_m * family.arm(i).iter().map(|&e| grad[e]).sum::<f64>();
        let (toward, toward_score) = (0..k)
            .map(|i| (i, arm_score(i)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("family is non-empty");
        gap = gx - toward_score;
        if gap <= eps {
            return Ok((x, ProjectionReport { iterations: iter, gap: gap.max(0.0) }));
        }
        let (away, away_score) = (0..k)
            .filter(|&i| weights[i] > 0.0)
            .map(|i| (i, arm_score(i)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("active set is non-empty");

        let frank_wolfe = gap >= away_score - gx || weights[away] >= 1.0;
        let max_step;
        dir.iter_mut().zip(&x).for_each(|(di, &xi)| *di = -xi);
        if frank_wolfe {
            for &e in family.arm(toward) {
                dir[e] += inv_m;
            }
            max_step = 1.0;
        } else {
            dir.iter_mut().for_each(|di| *di = -*di);
            for &e in family.arm(away) {
                dir[e] -= inv_m;
            }
            max_step = weights[away] / (1.0 - weights[away]);
        }
        let step = line_search(&x, &dir, q_tilde, max_step);
        if step <= 0.0 {
            break;
        }
        if frank_wolfe {
            weights.iter_mut().for_each(|w| *w *= 1.0 - step);
            weights[toward] += step;
        } else {
            weights.iter_mut().for_each(|w| *w *= 1.0 + step);
            weights[away] -= step;
            if step >= max_step {
                weights[away] = 0.0;
            }
        }
        if iter % 64 == 63 {
            x.iter_mut().for_each(|v| *v = 0.0);
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    for &e in family.arm(i) {
                        x[e] += w * inv_m;
                    }
                }
            }
        } else {
            x.iter_mut().zip(&dir).for_each(|(xi, di)| *xi = (*xi + step * di).max(0.0));
        }
    }
    Err(Error::Solver { iterations: max_iterations, gap })
}

/// Minimizes `s -> KL(x + s dir, q~)` on `[0, max_step]` by bisection on the
/// derivative. `dir` sums to zero, so the derivative is `sum dir log(. / q~)`.
fn line_search(x: &[f64], dir: &[f64], q_tilde: &[f64], max_step: f64) -> f64 {
    let slope = |s: f64| -> f64 {
        x.iter()
            .zip(dir)
            .zip(q_tilde)
            .filter(|((_, &di), _)| di != 0.0)
            .map(|((&xi, &di), &qi)| {
                let v = xi + s * di;
                if v <= 0.0 {
                    if di < 0.0 {
                        f64::INFINITY
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    di * (v / qi).ln()
                }
            })
            .sum()
    };
    if slope(max_step) <= 0.0 {
        return max_step;
    }
    if slope(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, max_step);
    for _ in 0..LINE_SEARCH_STEPS {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * max_step {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn water_filling_reference() {
        let f = SuperArmFamily::uniform_matroid(3, 2).unwrap();
        let q = kl_project(&f, &[0.7, 0.2, 0.1], 1e-9).unwrap();
        let expected = [0.5, 1.0 / 3.0, 1.0 / 6.0];
        for (a, b) in q.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{q:?}");
        }
    }

    #[test]
    fn feasible_points_are_fixed() {
        let f = SuperArmFamily::uniform_matroid(3, 2).unwrap();
        let p = [0.5, 0.3, 0.2];
        let q = kl_project(&f, &p, 1e-9).unwrap();
        for (a, b) in q.iter().zip(p) {
            assert!((a - b).abs() < 1e-12);
        }
        let f = SuperArmFamily::uniform_matroid(5, 2).unwrap();
        let q = kl_project(&f, &[0.2; 5], 1e-9).unwrap();
        assert!(q.iter().all(|v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn frank_wolfe_matches_water_filling() {
        // The generic solver accepts complete matroids too.
        let f = SuperArmFamily::uniform_matroid(4, 2).unwrap();
        let q_tilde = [0.55, 0.25, 0.12, 0.08];
        let closed = project_water_filling(&f, &q_tilde).unwrap();
        let (fw, report) = project_frank_wolfe(&f, &q_tilde, 1e-12, FW_MAX_ITERATIONS).unwrap();
        assert!(report.gap <= FW_EPS_FLOOR);
        for (a, b) in closed.iter().zip(&fw) {
            assert!((a - b).abs() < 1e-5, "{closed:?} vs {fw:?}");
        }
        let kl_closed = kl_divergence(&closed, &q_tilde);
        let kl_fw = kl_divergence(&fw, &q_tilde);
        assert!(kl_fw - kl_closed <= FW_EPS_FLOOR + 1e-14);
    }

    #[test]
    fn segment_projection_is_interior_optimum() {
        // Q is the segment between (1/2,1/2,0) and (0,1/2,1/2); the optimum
        // satisfies lambda / (1 - lambda) = q1 / q3.
        let f = SuperArmFamily::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let q_tilde = [0.3, 0.6, 0.1];
        let q = kl_project(&f, &q_tilde, 1e-10).unwrap();
        let lambda = 0.75;
        let expected = [lambda / 2.0, 0.5, (1.0 - lambda) / 2.0];
        for (a, b) in q.iter().zip(expected) {
            assert!((a - b).abs() < 1e-5, "{q:?}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = SuperArmFamily::uniform_matroid(3, 2).unwrap();
        assert!(kl_project(&f, &[0.5, 0.5, 0.0], 1e-9).is_err());
        assert!(kl_project(&f, &[0.5, 0.6, 0.1], 1e-9).is_err());
        assert!(kl_project(&f, &[0.5, 0.3, 0.2], 0.0).is_err());
        let mixed = SuperArmFamily::restricted(2).unwrap();
        assert!(matches!(
            kl_project(&mixed, &[0.25; 4], 1e-9),
            Err(Error::InvalidFamily(_))
        ));
    }

    #[test]
    fn accuracy_schedule() {
        assert_eq!(projection_accuracy(1), 1.0);
        assert_eq!(projection_accuracy(2), 0.25);
        let t = 100.0f64;
        assert!((projection_accuracy(100) - 1.0 / (t * t * t.ln().powi(3))).abs() < 1e-18);
    }

    #[test]
    fn frank_wolfe_on_matchings() {
        let f = SuperArmFamily::perfect_matchings(3).unwrap();
        let q_tilde = [0.2, 0.05, 0.05, 0.1, 0.15, 0.05, 0.1, 0.2, 0.1];
        let (q, report) = project_frank_wolfe(&f, &q_tilde, 1e-10, FW_MAX_ITERATIONS).unwrap();
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(report.gap <= 1e-10);
        // Every row and column of the 3x3 grid carries mass 1/3.
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| q[i * 3 + j]).sum();
            let col: f64 = (0..3).map(|j| q[j * 3 + i]).sum();
            assert!((row - 1.0 / 3.0).abs() < 1e-9 && (col - 1.0 / 3.0).abs() < 1e-9);
        }
    }
}
