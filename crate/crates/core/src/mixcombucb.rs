//! UCB with forced sampling of covering super arms for semi-bandit feedback.
//!
//! Initialization plays the oracle on a binary weight vector until every
//! covered base arm has been seen once, remembering for each base arm `e`
//! the super arm `M_e` it was first seen in. Each later round plays the UCB
//! super arm with probability `1 - m0 alpha_t` and each `M_e` with
//! probability `alpha_t = 1 / (m0 t^alpha)`. Observed rewards are
//! inverse-propensity weighted into per-arm accumulators.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{solve_oracle, GapTable, SuperArmFamily};

/// `sqrt(2 ln t / s)`.
pub fn confidence_radius(t: usize, s: usize) -> Result<f64> {
    if t == 0 || s == 0 {
        return Err(Error::Domain(format!("confidence radius needs t, s >= 1, got t={t}, s={s}")));
    }
    Ok((2.0 * (t as f64).ln() / s as f64).sqrt())
}

/// A base arm and the super arm it was first observed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ForcedPair {
    pub base: usize,
    pub arm: usize,
}

/// What initialization did.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitReport {
    /// Super arms played, in order; each is one oracle call and one round.
    pub played: Vec<usize>,
    /// Base arms in no super arm; they are left out of `E`.
    pub dropped: Vec<usize>,
}

impl InitReport {
    pub fn oracle_calls(&self) -> usize {
        self.played.len()
    }
}

/// The mixture used in one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiRecord {
    pub t: usize,
    /// `argmax_M f(M, U_t)`.
    pub ucb_arm: usize,
    pub alpha_t: f64,
    pub selected: usize,
}

#[derive(Debug, Clone)]
pub struct UcbState {
    family: SuperArmFamily,
    alpha: f64,
    t: usize,
    w_hat: Vec<f64>,
    counts: Vec<usize>,
    acc: Vec<f64>,
    forced: Vec<ForcedPair>,
    // |{k : e in M_k}| per base arm.
    forced_multiplicity: Vec<usize>,
    covered: Vec<usize>,
}

/// Runs initialization. `observe(arm)` plays a super arm and returns a
/// reward vector of length `d`; only the arm's members are read.
pub fn init_ucb<F>(family: &SuperArmFamily, alpha: f64, mut observe: F) -> Result<(UcbState, InitReport)>
where
    F: FnMut(usize) -> Vec<f64>,
{
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let d = family.d();
    let covered = family.covered();
    let mut u = vec![0.0; d];
    for &e in &covered {
        u[e] = 1.0;
    }
    let dropped = (0..d).filter(|&e| u[e] == 0.0).collect();
    let mut w_hat = vec![0.0; d];
    let mut counts = vec![0; d];
    let mut forced = Vec::with_capacity(covered.len());
    let mut played = Vec::new();
    while u.iter().any(|&x| x > 0.0) {
        let (arm, _) = solve_oracle(family, &u)?;
        let w = observe(arm);
        if w.len() != d {
            return Err(Error::ObservationMismatch(format!(
                "reward vector has length {}, expected {d}",
                w.len()
            )));
        }
        played.push(arm);
        for &e in family.arm(arm) {
            if u[e] > 0.0 {
                w_hat[e] = w[e];
                counts[e] = 1;
                u[e] = 0.0;
                forced.push(ForcedPair { base: e, arm });
            }
        }
    }
    let mut forced_multiplicity = vec![0; d];
    for pair in &forced {
        for &e in family.arm(pair.arm) {
            forced_multiplicity[e] += 1;
        }
    }
    let state = UcbState {
        family: family.clone(),
        alpha,
        t: forced.len(),
        w_hat,
        counts,
        acc: vec![0.0; d],
        forced,
        forced_multiplicity,
        covered,
    };
    Ok((state, InitReport { played, dropped }))
}

impl UcbState {
    pub fn family(&self) -> &SuperArmFamily {
        &self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Size of the forced mixture, one entry per covered base arm.
    pub fn m0(&self) -> usize {
        self.forced.len()
    }

    /// The round the next selection is for. The main loop starts at `m0`.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn w_hat(&self) -> &[f64] {
        &self.w_hat
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn accumulators(&self) -> &[f64] {
        &self.acc
    }

    pub fn forced(&self) -> &[ForcedPair] {
        &self.forced
    }

    /// Base arms with at least one covering super arm.
    pub fn covered(&self) -> &[usize] {
        &self.covered
    }

    /// `1 / (m0 t^alpha)`.
    pub fn alpha_t(&self, t: usize) -> f64 {
        1.0 / (self.m0() as f64 * (t.max(1) as f64).powf(self.alpha))
    }

    /// `U_t(e) = w_hat(e) + c_{t-1, T(e)}`; uncovered arms get 0.
    pub fn ucb_indices(&self, t: usize) -> Vec<f64> {
        let horizon = t.saturating_sub(1).max(1);
        (0..self.family.d())
            .map(|e| match self.counts[e] {
                0 => 0.0,
                s => self.w_hat[e] + confidence_radius(horizon, s).expect("t, s >= 1"),
            })
            .collect()
    }

    /// Mixture weights `pi_t` over super arms, as `(arm, mass)` pairs with
    /// repeated forced arms merged.
    pub fn mixture(&self, record: &PiRecord) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = vec![(record.ucb_arm, 1.0 - self.m0() as f64 * record.alpha_t)];
        for pair in &self.forced {
            match out.iter_mut().find(|(a, _)| *a == pair.arm) {
                Some(slot) => slot.1 += record.alpha_t,
                None => out.push((pair.arm, record.alpha_t)),
            }
        }
        out.retain(|p| p.1 > 0.0);
        out
    }

    /// Draws the super arm for round `t`.
    pub fn select<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<PiRecord> {
        let t = self.t;
        let (ucb_arm, _) = solve_oracle(&self.family, &self.ucb_indices(t))?;
        let alpha_t = self.alpha_t(t);
        let forced_mass = self.m0() as f64 * alpha_t;
        let selected = if rng.random::<f64>() < forced_mass {
            self.forced[rng.random_range(0..self.m0())].arm
        } else {
            ucb_arm
        };
        Ok(PiRecord { t, ucb_arm, alpha_t, selected })
    }

    /// `P(e in M(t))` under the recorded mixture.
    pub fn inclusion_prob(&self, record: &PiRecord, e: usize) -> Result<f64> {
        if e >= self.family.d() || self.counts[e] == 0 {
            return Err(Error::Domain(format!("base arm {} is not covered", e + 1)));
        }
        let ucb = if self.family.contains(record.ucb_arm, e) {
            1.0 - self.m0() as f64 * record.alpha_t
        } else {
            0.0
        };
        Ok(ucb + record.alpha_t * self.forced_multiplicity[e] as f64)
    }

    /// Feeds back the semi-bandit observation `{(e, w(e)) : e in M(t)}`.
    pub fn update(&mut self, observed: &[(usize, f64)], record: &PiRecord) -> Result<()> {
        if record.t != self.t {
            return Err(Error::State(format!(
                "record is for round {}, state expects round {}",
                record.t, self.t
            )));
        }
        let members = self.family.arm(record.selected);
        let mut seen: Vec<usize> = observed.iter().map(|p| p.0).collect();
        seen.sort_unstable();
        if seen != members {
            return Err(Error::ObservationMismatch(format!(
                "observed arms {seen:?}, selected arm has {members:?}"
            )));
        }
        let mut probs = Vec::with_capacity(observed.len());
        for &(e, _) in observed {
            probs.push(self.inclusion_prob(record, e)?);
        }
        for (&(e, w), p) in observed.iter().zip(probs) {
            self.acc[e] += w / p;
            let s = self.counts[e] as f64;
            self.w_hat[e] = (s * self.w_hat[e] + w) / (s + 1.0);
            self.counts[e] += 1;
        }
        self.t += 1;
        Ok(())
    }

    /// Gap estimates after `n` rounds: super-arm scores
    /// `sum_{e in M} acc(e) / n` and base scores `acc(e) / n` over the
    /// covered arms.
    pub fn estimates(&self, n: usize) -> Result<(GapTable, GapTable)> {
        if n == 0 || n >= self.t {
            return Err(Error::State(format!(
                "estimates for n = {n} requested with the next round at {}",
                self.t
            )));
        }
        let scale = 1.0 / n as f64;
        let scores: Vec<f64> = (0..self.family.len())
            .map(|k| self.family.value(k, &self.acc) * scale)
            .collect();
        let super_gap = GapTable::from_scores((0..self.family.len()).collect(), scores);
        let base_gap = GapTable::from_scores(
            self.covered.clone(),
            self.covered.iter().map(|&e| self.acc[e] * scale).collect(),
        );
        Ok((super_gap, base_gap))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_env(d: usize, value: f64) -> impl FnMut(usize) -> Vec<f64> {
        move |_| vec![value; d]
    }

    #[test]
    fn radius_reference_values() {
        assert_eq!(confidence_radius(1, 7).unwrap(), 0.0);
        let t = std::f64::consts::E.powi(2);
        assert!(((2.0 * t.ln() / 2.0).sqrt() - 2f64.sqrt()).abs() < 1e-12);
        assert!((confidence_radius(100, 10).unwrap() - 0.959705).abs() < 1e-6);
        assert!(matches!(confidence_radius(5, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn init_on_uniform_matroid() {
        let f = SuperArmFamily::uniform_matroid(9, 4).unwrap();
        let (s, report) = init_ucb(&f, 0.5, constant_env(9, 0.5)).unwrap();
        assert_eq!(report.oracle_calls(), 3);
        assert_eq!(s.m0(), 9);
        assert_eq!(s.covered(), (0..9).collect::<Vec<_>>().as_slice());
        let arms: Vec<&[usize]> = report.played.iter().map(|&i| f.arm(i)).collect();
        assert_eq!(arms, vec![&[0, 1, 2, 3][..], &[4, 5, 6, 7], &[0, 1, 2, 8]]);
        assert!(s.counts().iter().all(|&c| c == 1));
        assert_eq!(s.forced().last().unwrap(), &ForcedPair { base: 8, arm: report.played[2] });
    }

    #[test]
    fn init_on_restricted_family() {
        let f = SuperArmFamily::restricted(2).unwrap();
        let (s, report) = init_ucb(&f, 0.5, constant_env(4, 1.0)).unwrap();
        let arms: Vec<&[usize]> = report.played.iter().map(|&i| f.arm(i)).collect();
        assert_eq!(arms, vec![&[2, 3][..], &[0], &[1]]);
        assert_eq!(s.m0(), 4);
        let pairs: Vec<(usize, Vec<usize>)> =
            s.forced().iter().map(|p| (p.base, f.arm(p.arm).to_vec())).collect();
        assert_eq!(
            pairs,
            vec![(2, vec![2, 3]), (3, vec![2, 3]), (0, vec![0]), (1, vec![1])]
        );
    }

    #[test]
    fn init_single_arm_and_uncovered() {
        let f = SuperArmFamily::new(3, vec![vec![0, 1]]).unwrap();
        let (s, report) = init_ucb(&f, 0.0, constant_env(3, 0.2)).unwrap();
        assert_eq!(report.oracle_calls(), 1);
        assert_eq!(s.m0(), 2);
        assert_eq!(report.dropped, vec![2]);
        let rec = PiRecord { t: 2, ucb_arm: 0, alpha_t: 0.5, selected: 0 };
        assert!(matches!(s.inclusion_prob(&rec, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn mixture_and_inclusion_probabilities() {
        let f = SuperArmFamily::restricted(2).unwrap();
        let (s, _) = init_ucb(&f, 1.0, constant_env(4, 1.0)).unwrap();
        assert_eq!(s.alpha_t(10), 1.0 / 40.0);
        let ucb_arm = f.index_of(&[0]).unwrap();
        let rec = PiRecord { t: 10, ucb_arm, alpha_t: s.alpha_t(10), selected: ucb_arm };
        let pi = s.mixture(&rec);
        let total: f64 = pi.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let pair = f.index_of(&[2, 3]).unwrap();
        let mass = |arm: usize| pi.iter().find(|p| p.0 == arm).unwrap().1;
        assert!((mass(ucb_arm) - (0.9 + 0.025)).abs() < 1e-12);
        assert!((mass(pair) - 0.05).abs() < 1e-12);
        assert!((s.inclusion_prob(&rec, 3).unwrap() - 0.05).abs() < 1e-12);
        assert!((s.inclusion_prob(&rec, 0).unwrap() - 0.925).abs() < 1e-12);
        let rec2 = PiRecord { ucb_arm: pair, selected: pair, ..rec };
        assert!((s.inclusion_prob(&rec2, 3).unwrap() - 0.95).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_is_pure_forced_sampling() {
        let f = SuperArmFamily::uniform_matroid(5, 2).unwrap();
        let (mut s, _) = init_ucb(&f, 0.0, constant_env(5, 0.5)).unwrap();
        let forced: Vec<usize> = s.forced().iter().map(|p| p.arm).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let rec = s.select(&mut rng).unwrap();
            assert!((s.m0() as f64 * rec.alpha_t - 1.0).abs() < 1e-12);
            assert!(forced.contains(&rec.selected));
            let obs: Vec<(usize, f64)> = f.arm(rec.selected).iter().map(|&e| (e, 0.5)).collect();
            s.update(&obs, &rec).unwrap();
        }
    }

    #[test]
    fn update_arithmetic() {
        let f = SuperArmFamily::restricted(2).unwrap();
        let (mut s, _) = init_ucb(&f, 1.0, constant_env(4, 0.5)).unwrap();
        s.t = 10;
        let arm = f.index_of(&[2, 3]).unwrap();
        let rec = PiRecord { t: 10, ucb_arm: f.index_of(&[0]).unwrap(), alpha_t: 0.025, selected: arm };
        assert!(matches!(s.update(&[(2, 1.0)], &rec), Err(Error::ObservationMismatch(_))));
        s.update(&[(3, 1.0), (2, 0.0)], &rec).unwrap();
        assert!((s.accumulators()[3] - 20.0).abs() < 1e-12);
        assert_eq!(s.accumulators()[2], 0.0);
        assert_eq!(s.accumulators()[0], 0.0);
        assert_eq!(s.counts(), &[1, 1, 2, 2]);
        assert!((s.w_hat()[3] - 0.75).abs() < 1e-12);
        assert!((s.w_hat()[2] - 0.25).abs() < 1e-12);
        assert_eq!(s.w_hat()[0], 0.5);
        assert!(matches!(s.update(&[(3, 1.0), (2, 0.0)], &rec), Err(Error::State(_))));
    }

    #[test]
    fn estimates_arithmetic() {
        let f = SuperArmFamily::uniform_matroid(4, 2).unwrap();
        let (mut s, _) = init_ucb(&f, 0.5, constant_env(4, 0.5)).unwrap();
        s.acc = vec![50.0, 30.0, 10.0, 10.0];
        s.t = 101;
        let (sup, base) = s.estimates(100).unwrap();
        let i = f.index_of(&[0, 1]).unwrap();
        let j = f.index_of(&[2, 3]).unwrap();
        assert!((sup.get(i, j) - 0.6).abs() < 1e-12);
        assert_eq!(sup.get(i, j), -sup.get(j, i));
        assert_eq!(sup.get(i, i), 0.0);
        assert!((base.get(0, 1) - 0.2).abs() < 1e-12);
        assert!(s.estimates(101).is_err());
    }
}
