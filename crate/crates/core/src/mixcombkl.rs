//! Mirror descent with KL projection for full-bandit feedback, mixed with
//! forced uniform exploration for inference.
//!
//! Each round draws `U_t ~ Bernoulli(1 / (2 t^alpha))`. Exploration rounds
//! play uniformly over the family and feed the gap accumulators; the other
//! rounds play from a decomposition of the mirror point and take an
//! exponentiated-gradient step followed by a KL projection back onto `Q`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    decompose, estimable_base_arms, kl_project, projection_accuracy, pseudo_inverse,
    sparse_covariance, SparseArmDistribution, SpectralConstants,
};
use crate::instance::{GapTable, SuperArmFamily};

/// Largest family for which every super-arm accumulator is kept by default.
pub const MAX_TRACKED_ARMS: usize = 10_000;

/// Largest `alpha` for which the regret/inference guarantee holds.
pub const PARETO_ALPHA_MAX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlParams {
    pub alpha: f64,
    /// `lambda_min * m^{-3/2}`.
    pub c: f64,
    pub gamma: f64,
    /// `gamma * c`.
    pub eta: f64,
    pub n: usize,
}

/// Learning-rate and mixing parameters for horizon `n`.
///
/// `alpha` outside `[0, 1/2]` is rejected with
/// [`Error::AlphaOutsideParetoRange`]; use [`kl_params_unchecked`] to run
/// such values anyway.
pub fn kl_params(
    constants: &SpectralConstants,
    family: &SuperArmFamily,
    n: usize,
    alpha: f64,
) -> Result<KlParams> {
    if (0.0..=PARETO_ALPHA_MAX).contains(&alpha) {
        kl_params_unchecked(constants, family, n, alpha)
    } else {
        Err(Error::AlphaOutsideParetoRange { alpha, max: PARETO_ALPHA_MAX })
    }
}

/// As [`kl_params`], accepting any finite `alpha >= 0`.
pub fn kl_params_unchecked(
    constants: &SpectralConstants,
    family: &SuperArmFamily,
    n: usize,
    alpha: f64,
) -> Result<KlParams> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let m = family
        .uniform_size()
        .ok_or_else(|| Error::InvalidFamily("full-bandit play needs a common arm size".into()))?
        as f64;
    let d = family.d() as f64;
    let c = constants.lambda_min * m.powf(-1.5);
    let explore = (m * (1.0 / constants.rho_min).ln()).sqrt();
    let exploit = (c * (c * m * m * d + m) * n as f64).sqrt();
    let gamma = explore / (explore + exploit);
    Ok(KlParams { alpha, c, gamma, eta: gamma * c, n })
}

/// Probability of a uniform exploration round at round `t`.
pub fn exploration_probability(t: usize, alpha: f64) -> f64 {
    (0.5 / (t.max(1) as f64).powf(alpha)).min(1.0)
}

/// What was played in one round and why.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlSelection {
    pub t: usize,
    pub arm: usize,
    pub u_flag: bool,
    /// `P(U_t = 1)` for this round.
    pub explore_prob: f64,
}

/// Per-round record for trace consumers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlTrace {
    pub t: usize,
    pub u_flag: bool,
    pub arm: usize,
    pub observed_total: f64,
}

#[derive(Debug, Clone)]
pub struct KlState {
    family: SuperArmFamily,
    params: KlParams,
    constants: SpectralConstants,
    m: usize,
    t: usize,
    q: Vec<f64>,
    tracked: Vec<usize>,
    estimable: Vec<usize>,
    acc_super: Vec<f64>,
    acc_base: Vec<f64>,
    last_p: Option<SparseArmDistribution>,
    explore_rounds: usize,
}

impl KlState {
    /// Fresh state with `q = rho0` and zero accumulators, tracking every
    /// super arm.
    pub fn new(family: SuperArmFamily, constants: SpectralConstants, params: KlParams) -> Result<Self> {
        if family.len() > MAX_TRACKED_ARMS {
            return Err(Error::Sizing(format!(
                "{} super arms; pass an explicit subset to track",
                family.len()
            )));
        }
        let tracked = (0..family.len()).collect();
        Self::with_tracked(family, constants, params, tracked)
    }

    /// Fresh state keeping super-arm accumulators for `tracked` only.
    pub fn with_tracked(
        family: SuperArmFamily,
        constants: SpectralConstants,
        params: KlParams,
        tracked: Vec<usize>,
    ) -> Result<Self> {
        let m = family
            .uniform_size()
            .ok_or_else(|| Error::InvalidFamily("full-bandit play needs a common arm size".into()))?;
        if let Some(&bad) = tracked.iter().find(|&&i| i >= family.len()) {
            return Err(Error::InvalidParameter(format!("tracked arm {bad} outside the family")));
        }
        let estimable = estimable_base_arms(&family);
        Ok(Self {
            q: constants.rho0.clone(),
            acc_super: vec![0.0; tracked.len()],
            acc_base: vec![0.0; estimable.len()],
            tracked,
            estimable,
            family,
            params,
            constants,
            m,
            t: 0,
            last_p: None,
            explore_rounds: 0,
        })
    }

    pub fn family(&self) -> &SuperArmFamily {
        &self.family
    }

    pub fn params(&self) -> &KlParams {
        &self.params
    }

    /// Rounds completed so far.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Current mirror point.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Base arms identifiable from aggregate rewards.
    pub fn estimable(&self) -> &[usize] {
        &self.estimable
    }

    pub fn tracked(&self) -> &[usize] {
        &self.tracked
    }

    /// Law used by the most recent mirror-descent round.
    pub fn last_p(&self) -> Option<&SparseArmDistribution> {
        self.last_p.as_ref()
    }

    pub fn explore_rounds(&self) -> usize {
        self.explore_rounds
    }

    pub fn super_accumulators(&self) -> &[f64] {
        &self.acc_super
    }

    pub fn base_accumulators(&self) -> &[f64] {
        &self.acc_base
    }

    /// The sampling law of a mirror-descent round:
    /// `(1 - gamma) * decompose(m q) + gamma * uniform`.
    ///
    /// Its mean is `m q'` with `q' = (1 - gamma) q + gamma rho0`, and its
    /// covariance dominates `gamma` times the uniform-law covariance.
    pub fn mixed_law(&self) -> Result<SparseArmDistribution> {
        let target: Vec<f64> = self.q.iter().map(|x| x * self.m as f64).collect();
        let core = decompose(&self.family, &target)?;
        let k = self.family.len();
        let gamma = self.params.gamma;
        let mut dense = vec![gamma / k as f64; k];
        for &(arm, w) in core.pairs() {
            dense[arm] += (1.0 - gamma) * w;
        }
        SparseArmDistribution::from_dense(&dense)
    }

    /// Draws `U_t` and the super arm for the next round.
    pub fn select<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<KlSelection> {
        let t = self.t + 1;
        let explore_prob = exploration_probability(t, self.params.alpha);
        let u_flag = rng.random::<f64>() < explore_prob;
        let arm = if u_flag {
            rng.random_range(0..self.family.len())
        } else {
            let p = self.mixed_law()?;
            let arm = p.sample(rng);
            self.last_p = Some(p);
            arm
        };
        Ok(KlSelection { t, arm, u_flag, explore_prob })
    }

    /// Feeds back `f(M(t), w_t)` for the selection made this round.
    pub fn update(&mut self, observed_total: f64, selection: &KlSelection) -> Result<()> {
        if selection.t != self.t + 1 {
            return Err(Error::State(format!(
                "selection is for round {}, state expects round {}",
                selection.t,
                self.t + 1
            )));
        }
        if !(observed_total >= 0.0 && observed_total <= self.m as f64) {
            return Err(Error::InvalidParameter(format!(
                "observed total {observed_total} outside [0, {}]",
                self.m
            )));
        }
        let members = self.family.arm(selection.arm).to_vec();
        if selection.u_flag {
            let w = estimate_weights(&self.constants.sigma_unif_pinv, &members, observed_total);
            let scale = 2.0 * (selection.t as f64).powf(self.params.alpha);
            for (slot, &k) in self.acc_super.iter_mut().zip(&self.tracked) {
                *slot += scale * self.family.value(k, &w);
            }
            for (slot, &e) in self.acc_base.iter_mut().zip(&self.estimable) {
                *slot += scale * w[e];
            }
            self.explore_rounds += 1;
        } else {
            let p = self
                .last_p
                .as_ref()
                .ok_or_else(|| Error::State("no mirror-descent law for this round".into()))?;
            let pinv = pseudo_inverse(&sparse_covariance(p, &self.family))?;
            let w = estimate_weights(&pinv, &members, observed_total);
            let eta = self.params.eta;
            let logits: Vec<f64> = self.q.iter().zip(&w).map(|(q, w)| q.ln() + eta * w).collect();
            let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut q_tilde: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
            let total: f64 = q_tilde.iter().sum();
            q_tilde.iter_mut().for_each(|x| *x /= total);
            self.q = kl_project(&self.family, &q_tilde, projection_accuracy(selection.t))?;
        }
        self.t += 1;
        Ok(())
    }

    /// Gap estimates `(R(i) - R(j)) / n` over the tracked super arms and the
    /// estimable base arms.
    pub fn estimates(&self, n: usize) -> Result<(GapTable, GapTable)> {
        if n == 0 || n > self.t {
            return Err(Error::State(format!(
                "estimates for n = {n} requested after {} rounds",
                self.t
            )));
        }
        let scale = 1.0 / n as f64;
        let super_gap = GapTable::from_scores(
            self.tracked.clone(),
            self.acc_super.iter().map(|r| r * scale).collect(),
        );
        let base_gap = GapTable::from_scores(
            self.estimable.clone(),
            self.acc_base.iter().map(|r| r * scale).collect(),
        );
        Ok((super_gap, base_gap))
    }
}

// f * pinv * theta_M, with theta_M given by its members.
fn estimate_weights(pinv: &DMatrix<f64>, members: &[usize], total: f64) -> Vec<f64> {
    (0..pinv.nrows())
        .map(|r| total * members.iter().map(|&e| pinv[(r, e)]).sum::<f64>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::spectral_constants;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(d: usize, m: usize, n: usize, alpha: f64) -> KlState {
        let f = SuperArmFamily::uniform_matroid(d, m).unwrap();
        let c = spectral_constants(&f).unwrap();
        let p = kl_params(&c, &f, n, alpha).unwrap();
        KlState::new(f, c, p).unwrap()
    }

    #[test]
    fn parameters_small_matroid() {
        let s = setup(3, 2, 100, 0.0);
        let p = s.params();
        // lambda_min = 1/3, rho_min = 2/3.
        let c = (1.0 / 3.0) * 2f64.powf(-1.5);
        let a = (2.0 * 1.5f64.ln()).sqrt();
        let b = (c * (c * 4.0 * 3.0 + 2.0) * 100.0).sqrt();
        assert!((p.c - c).abs() < 1e-12);
        assert!((p.c - 0.117851).abs() < 1e-6);
        assert!((p.gamma - a / (a + b)).abs() < 1e-12);
        assert!((p.eta / p.gamma - p.c).abs() < 1e-15);
    }

    #[test]
    fn parameters_reference_matroid() {
        let s = setup(8, 3, 5000, 0.5);
        let expected = 15.0 / 56.0 * 3f64.powf(-1.5);
        assert!((s.params().c - expected).abs() < 1e-9);
        assert!(s.params().gamma > 0.0 && s.params().gamma < 1.0);
    }

    #[test]
    fn alpha_range_is_checked() {
        let f = SuperArmFamily::uniform_matroid(4, 2).unwrap();
        let c = spectral_constants(&f).unwrap();
        assert!(matches!(kl_params(&c, &f, 10, 1.0), Err(Error::AlphaOutsideParetoRange { .. })));
        assert!(kl_params_unchecked(&c, &f, 10, 1.0).is_ok());
        assert!(kl_params_unchecked(&c, &f, 10, -0.1).is_err());
        assert!(kl_params(&c, &f, 0, 0.25).is_err());
        let mixed = SuperArmFamily::restricted(2).unwrap();
        let mc = spectral_constants(&mixed).unwrap();
        assert!(matches!(kl_params(&mc, &mixed, 10, 0.0), Err(Error::InvalidFamily(_))));
    }

    #[test]
    fn exploration_probabilities() {
        assert_eq!(exploration_probability(16, 0.5), 0.125);
        assert_eq!(exploration_probability(1000, 0.0), 0.5);
    }

    #[test]
    fn explore_round_accumulates_scaled_estimates() {
        let mut s = setup(4, 2, 100, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // A zero reward leaves every accumulator at zero.
        for _ in 0..3 {
            let sel = s.select(&mut rng).unwrap();
            s.update(0.0, &sel).unwrap();
        }
        assert!(s.super_accumulators().iter().all(|&r| r == 0.0));
        let explored = s.explore_rounds();
        let sel = KlSelection { t: 4, arm: 0, u_flag: true, explore_prob: 0.25 };
        s.update(1.5, &sel).unwrap();
        let pinv = &s.constants.sigma_unif_pinv;
        for (k, &r) in s.super_accumulators().iter().enumerate() {
            let mut dot = 0.0;
            for &a in s.family.arm(k) {
                for &b in s.family.arm(0) {
                    dot += pinv[(a, b)];
                }
            }
            assert!((r - 2.0 * 2.0 * 1.5 * dot).abs() < 1e-12);
        }
        assert_eq!(s.explore_rounds(), explored + 1);
    }

    #[test]
    fn exploit_round_moves_q_but_not_accumulators() {
        let mut s = setup(4, 2, 100, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let before = s.q().to_vec();
        loop {
            let sel = s.select(&mut rng).unwrap();
            if !sel.u_flag {
                s.update(0.0, &sel).unwrap();
                assert!(before.iter().zip(s.q()).all(|(a, b)| (a - b).abs() < 1e-12));
                let sel = s.select(&mut rng).unwrap();
                if !sel.u_flag {
                    s.update(2.0, &sel).unwrap();
                    assert!(s.super_accumulators().iter().all(|&r| r == 0.0));
                    assert!(s.q() != before.as_slice());
                    break;
                }
                s.update(0.0, &sel).unwrap();
            } else {
                s.update(0.0, &sel).unwrap();
            }
        }
    }

    #[test]
    fn mirror_point_stays_in_region() {
        let mut s = setup(6, 3, 500, 0.25);
        let mu = [0.9, 0.7, 0.6, 0.4, 0.2, 0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let sel = s.select(&mut rng).unwrap();
            let total: f64 = s.family().arm(sel.arm).iter().map(|&e| mu[e]).sum();
            s.update(total, &sel).unwrap();
            let sum: f64 = s.q().iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
            assert!(s.q().iter().all(|&x| x >= -1e-6 && x <= 1.0 / 3.0 + 1e-6));
        }
    }

    #[test]
    fn mixed_law_reconstructs_mixed_point() {
        let s = setup(5, 2, 200, 0.0);
        let p = s.mixed_law().unwrap();
        let mean = p.mean_theta(s.family());
        let g = s.params().gamma;
        for e in 0..5 {
            let q_mixed = (1.0 - g) * s.q()[e] + g * s.constants.rho0[e];
            assert!((mean[e] - 2.0 * q_mixed).abs() < 1e-9);
        }
    }

    #[test]
    fn estimates_are_scaled_differences() {
        let mut s = setup(4, 2, 100, 0.0);
        assert!(matches!(s.estimates(1), Err(Error::State(_))));
        s.t = 100;
        s.acc_super[0] = 120.0;
        s.acc_super[1] = 80.0;
        let (sup, base) = s.estimates(100).unwrap();
        assert!((sup.get(0, 1) - 0.4).abs() < 1e-12);
        assert_eq!(sup.get(2, 2), 0.0);
        assert_eq!(sup.get(0, 1), -sup.get(1, 0));
        assert_eq!(base.labels(), &[0, 1, 2, 3]);
    }

    #[test]
    fn bad_feedback_is_rejected() {
        let mut s = setup(4, 2, 100, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sel = s.select(&mut rng).unwrap();
        assert!(s.update(2.5, &sel).is_err());
        assert!(s.update(f64::NAN, &sel).is_err());
        let stale = KlSelection { t: 7, ..sel };
        assert!(matches!(s.update(1.0, &stale), Err(Error::State(_))));
    }
}
