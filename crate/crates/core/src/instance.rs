//! Bandit instances: super-arm families, reward laws, the exact
//! combinatorial oracle and ground-truth gap quantities.
//!
//! Base arms are 0-indexed everywhere in the library API. Only the JSON
//! file format uses 1-indexed arms.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest family the generators will enumerate.
pub const MAX_FAMILY_SIZE: u128 = 1_000_000;

/// A set of feasible super arms over `d` base arms.
///
/// Each arm is stored as a sorted list of distinct base-arm indices.
/// The family is immutable after construction.
#[derive(Debug, Clone)]
pub struct SuperArmFamily {
    d: usize,
    arms: Vec<Vec<usize>>,
    uniform_size: Option<usize>,
    complete_uniform: bool,
    lookup: HashMap<Vec<usize>, usize>,
}

impl PartialEq for SuperArmFamily {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.arms == other.arms
    }
}

impl SuperArmFamily {
    /// Builds a family from explicit arms. Members are sorted; empty arms,
    /// out-of-range members, repeated members and duplicate arms are rejected.
    pub fn new(d: usize, arms: Vec<Vec<usize>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidFamily("d must be positive".into()));
        }
        if arms.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if arms.len() as u128 > MAX_FAMILY_SIZE {
            return Err(Error::Sizing(format!(
                "{} arms exceeds the enumeration guard of {MAX_FAMILY_SIZE}",
                arms.len()
            )));
        }
        let mut lookup = HashMap::with_capacity(arms.len());
        let mut sorted_arms = Vec::with_capacity(arms.len());
        for (idx, mut arm) in arms.into_iter().enumerate() {
            if arm.is_empty() {
                return Err(Error::InvalidFamily(format!("arm {idx} is empty")));
            }
            arm.sort_unstable();
            if let Some(&bad) = arm.iter().find(|&&e| e >= d) {
                return Err(Error::ArmOutOfRange { arm: bad + 1, d });
            }
            if arm.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidFamily(format!("arm {idx} repeats a base arm")));
            }
            if lookup.insert(arm.clone(), idx).is_some() {
                return Err(Error::InvalidFamily(format!("arm {idx} is a duplicate")));
            }
            sorted_arms.push(arm);
        }
        let first = sorted_arms[0].len();
        let uniform_size = sorted_arms.iter().all(|a| a.len() == first).then_some(first);
        let complete_uniform = match uniform_size {
            Some(m) => binomial(d, m).is_some_and(|c| c == sorted_arms.len() as u128),
            None => false,
        };
        Ok(Self {
            d,
            arms: sorted_arms,
            uniform_size,
            complete_uniform,
            lookup,
        })
    }

    /// All subsets of exactly `m` base arms, in lexicographic order.
    pub fn uniform_matroid(d: usize, m: usize) -> Result<Self> {
        if m == 0 || m > d {
            return Err(Error::Sizing(format!("need 1 <= m <= d, got d={d}, m={m}")));
        }
        match binomial(d, m) {
            Some(c) if c <= MAX_FAMILY_SIZE => {}
            _ => {
                return Err(Error::Sizing(format!(
                    "C({d},{m}) exceeds the enumeration guard of {MAX_FAMILY_SIZE}"
                )))
            }
        }
        Self::new(d, combinations(d, m))
    }

    /// The family `{{1},{2},{3,4},...,{2d0-1,2d0}}` over `2*d0` base arms, in
    /// which only the two singleton base arms are identifiable from full
    /// bandit feedback.
    pub fn restricted(d0: usize) -> Result<Self> {
        if d0 == 0 {
            return Err(Error::InvalidParameter("d0 must be at least 1".into()));
        }
        let mut arms = vec![vec![0], vec![1]];
        for k in 1..d0 {
            arms.push(vec![2 * k, 2 * k + 1]);
        }
        Self::new(2 * d0, arms)
    }

    /// Perfect matchings of the complete bipartite graph `K_{m,m}`. Base arm
    /// `i * m + j` is the edge from left vertex `i` to right vertex `j`.
    pub fn perfect_matchings(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Sizing("m must be positive".into()));
        }
        let count: u128 = (1..=m as u128).product();
        if count > MAX_FAMILY_SIZE {
            return Err(Error::Sizing(format!("{m}! exceeds the enumeration guard")));
        }
        let mut arms = Vec::with_capacity(count as usize);
        let mut perm: Vec<usize> = (0..m).collect();
        loop {
            arms.push(perm.iter().enumerate().map(|(i, &j)| i * m + j).collect());
            if !next_permutation(&mut perm) {
                break;
            }
        }
        Self::new(m * m, arms)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[Vec<usize>] {
        &self.arms
    }

    pub fn arm(&self, index: usize) -> &[usize] {
        &self.arms[index]
    }

    /// Common arm size, when every arm has the same cardinality.
    pub fn uniform_size(&self) -> Option<usize> {
        self.uniform_size
    }

    /// Largest arm cardinality.
    pub fn max_size(&self) -> usize {
        self.arms.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// True when the family holds every size-`m` subset of the base arms.
    pub fn is_complete_uniform(&self) -> bool {
        self.complete_uniform
    }

    /// Index of the arm with exactly these (0-indexed) members.
    pub fn index_of(&self, members: &[usize]) -> Option<usize> {
        let mut key = members.to_vec();
        key.sort_unstable();
        self.lookup.get(&key).copied()
    }

    pub fn contains(&self, arm: usize, e: usize) -> bool {
        self.arms[arm].binary_search(&e).is_ok()
    }

    /// Number of arms containing each base arm.
    pub fn coverage(&self) -> Vec<usize> {
        let mut cover = vec![0; self.d];
        for arm in &self.arms {
            for &e in arm {
                cover[e] += 1;
            }
        }
        cover
    }

    /// Base arms contained in at least one super arm.
    pub fn covered(&self) -> Vec<usize> {
        self.coverage()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(e, _)| e)
            .collect()
    }

    /// `f(M, w) = sum of w(e) over e in M`.
    pub fn value(&self, arm: usize, weights: &[f64]) -> f64 {
        self.arms[arm].iter().map(|&e| weights[e]).sum()
    }
}

/// Per-coordinate reward law. Every law has mean `mu(e)` and support in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLaw {
    /// Independent Bernoulli(`mu(e)`) coordinates.
    #[default]
    Bernoulli,
    /// Uniform on `[mu - h, mu + h]` with `h = min(0.1, mu, 1 - mu)`.
    Uniform,
}

impl NoiseLaw {
    /// Uniform-law half width, shrunk near the boundary so the mean stays `mu`.
    pub const UNIFORM_HALF_WIDTH: f64 = 0.1;

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R, mu: f64) -> f64 {
        match self {
            NoiseLaw::Bernoulli => {
                if rng.random::<f64>() < mu {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseLaw::Uniform => {
                let h = Self::UNIFORM_HALF_WIDTH.min(mu).min(1.0 - mu);
                mu - h + 2.0 * h * rng.random::<f64>()
            }
        }
    }
}

impl std::str::FromStr for NoiseLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(NoiseLaw::Bernoulli),
            "uniform" => Ok(NoiseLaw::Uniform),
            other => Err(Error::InvalidParameter(format!("unknown noise law {other:?}"))),
        }
    }
}

/// A family together with base-arm means and a reward law.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    family: SuperArmFamily,
    mu: Vec<f64>,
    noise: NoiseLaw,
}

impl BanditInstance {
    pub fn new(family: SuperArmFamily, mu: Vec<f64>, noise: NoiseLaw) -> Result<Self> {
        if mu.len() != family.d() {
            return Err(Error::InvalidParameter(format!(
                "mean vector has length {}, family has d = {}",
                mu.len(),
                family.d()
            )));
        }
        if let Some(bad) = mu.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::InvalidParameter(format!("mean {bad} lies outside [0, 1]")));
        }
        Ok(Self { family, mu, noise })
    }

    pub fn family(&self) -> &SuperArmFamily {
        &self.family
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn noise(&self) -> NoiseLaw {
        self.noise
    }

    pub fn d(&self) -> usize {
        self.family.d()
    }

    /// Expected reward of a super arm.
    pub fn mean_value(&self, arm: usize) -> f64 {
        self.family.value(arm, &self.mu)
    }
}

/// Two-arm Bernoulli instances `(B(1/2 - zeta), B(1/2))` and
/// `(B(1/2 - zeta), B(1/2 + 2g))` over the family `{{1},{2}}`.
pub fn make_hard_pair(zeta: f64, g: f64) -> Result<(BanditInstance, BanditInstance)> {
    if !(0.0..1.0).contains(&zeta) || !(0.0..=0.125).contains(&g) {
        return Err(Error::InvalidParameter(format!(
            "need zeta in [0,1) and g in [0,1/8], got zeta={zeta}, g={g}"
        )));
    }
    let low = 0.5 - zeta;
    if low < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "1/2 - zeta = {low} is not a valid Bernoulli mean"
        )));
    }
    let family = SuperArmFamily::new(2, vec![vec![0], vec![1]])?;
    let first = BanditInstance::new(family.clone(), vec![low, 0.5], NoiseLaw::Bernoulli)?;
    let second = BanditInstance::new(family, vec![low, 0.5 + 2.0 * g], NoiseLaw::Bernoulli)?;
    Ok((first, second))
}

/// `d` independent uniform draws on `[lo, hi)`.
pub fn sample_means<R: Rng + ?Sized>(rng: &mut R, d: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo >= 0.0 && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mean range requires 0 <= lo < hi <= 1, got [{lo}, {hi}]"
        )));
    }
    Ok((0..d).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
}

/// One reward vector `w_t` with independent coordinates.
pub fn sample_reward<R: Rng + ?Sized>(rng: &mut R, inst: &BanditInstance) -> Vec<f64> {
    inst.mu.iter().map(|&m| inst.noise.sample(rng, m)).collect()
}

/// Exact maximizer of `f(M, w)` over the family. Ties go to the lowest index.
pub fn solve_oracle(family: &SuperArmFamily, weights: &[f64]) -> Result<(usize, f64)> {
    if weights.len() != family.d() {
        return Err(Error::InvalidParameter(format!(
            "weight vector has length {}, expected {}",
            weights.len(),
            family.d()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidParameter("oracle weights must be finite".into()));
    }
    let mut best = (0, family.value(0, weights));
    for idx in 1..family.len() {
        let v = family.value(idx, weights);
        if v > best.1 {
            best = (idx, v);
        }
    }
    Ok(best)
}

/// An antisymmetric table of pairwise gaps `v(i) - v(j)`.
///
/// Every gap table in this library is a difference of per-item scores, so
/// the table is stored by its scores. `labels` names the rows: super-arm
/// indices or base-arm indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTable {
    labels: Vec<usize>,
    scores: Vec<f64>,
}

impl GapTable {
    pub fn from_scores(labels: Vec<usize>, scores: Vec<f64>) -> Self {
        assert_eq!(labels.len(), scores.len(), "one score per label");
        Self { labels, scores }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Gap between rows `i` and `j` (positions, not labels).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.scores[i] - self.scores[j]
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| (0..self.len()).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// The same table restricted to the given labels, in that order.
    pub fn restrict(&self, labels: &[usize]) -> Option<GapTable> {
        let scores = labels
            .iter()
            .map(|l| self.labels.iter().position(|x| x == l).map(|p| self.scores[p]))
            .collect::<Option<Vec<_>>>()?;
        Some(GapTable::from_scores(labels.to_vec(), scores))
    }
}

/// Ground-truth gaps of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTables {
    /// `Delta_M^{(i,j)} = f(M_i, mu) - f(M_j, mu)` over all super arms.
    pub super_gap: GapTable,
    /// `Delta_mu^{(i,j)} = mu(i) - mu(j)` over all base arms.
    pub base_gap: GapTable,
    /// `f(M*, mu) - f(M, mu)` per super arm.
    pub opt_gap: Vec<f64>,
    pub best_index: usize,
}

pub fn true_gaps(inst: &BanditInstance) -> GapTables {
    let family = inst.family();
    let values: Vec<f64> = (0..family.len()).map(|i| inst.mean_value(i)).collect();
    let (best_index, _) = solve_oracle(family, inst.mu()).expect("instance means are finite");
    let best = values[best_index];
    GapTables {
        super_gap: GapTable::from_scores((0..family.len()).collect(), values.clone()),
        base_gap: GapTable::from_scores((0..inst.d()).collect(), inst.mu().to_vec()),
        opt_gap: values.iter().map(|v| (best - v).max(0.0)).collect(),
        best_index,
    }
}

/// Minimum gap `Delta_{e,min}`: the optimal value minus the best value of a
/// suboptimal arm containing `e`. `e` must lie outside the optimal arm.
pub fn min_gap(inst: &BanditInstance, e: usize) -> Result<f64> {
    let family = inst.family();
    if e >= inst.d() {
        return Err(Error::ArmOutOfRange { arm: e + 1, d: inst.d() });
    }
    let gaps = true_gaps(inst);
    if family.contains(gaps.best_index, e) {
        return Err(Error::Domain(format!("base arm {} belongs to the optimal arm", e + 1)));
    }
    let best = inst.mean_value(gaps.best_index);
    let runner_up = (0..family.len())
        .filter(|&i| gaps.opt_gap[i] > 0.0 && family.contains(i, e))
        .map(|i| inst.mean_value(i))
        .fold(f64::NEG_INFINITY, f64::max);
    if runner_up == f64::NEG_INFINITY {
        return Err(Error::Domain(format!(
            "base arm {} is not contained in any suboptimal arm",
            e + 1
        )));
    }
    Ok(best - runner_up)
}

/// Minimum gaps of every eligible base arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargeGapReport {
    /// `(base arm, Delta_{e,min})` for each eligible base arm.
    pub per_arm: Vec<(usize, f64)>,
    /// Smallest minimum gap; `None` when no base arm is eligible.
    pub min_gap: Option<f64>,
}

pub fn large_gap_report(inst: &BanditInstance) -> LargeGapReport {
    let per_arm: Vec<(usize, f64)> = (0..inst.d())
        .filter_map(|e| min_gap(inst, e).ok().map(|g| (e, g)))
        .collect();
    let min_gap = per_arm.iter().map(|&(_, g)| g).reduce(f64::min);
    LargeGapReport { per_arm, min_gap }
}

/// On-disk form of a family or instance. Arms are 1-indexed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub d: usize,
    pub arms: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseLaw>,
}

impl InstanceFile {
    pub fn from_family(family: &SuperArmFamily) -> Self {
        Self {
            d: family.d(),
            arms: family
                .arms()
                .iter()
                .map(|a| a.iter().map(|e| e + 1).collect())
                .collect(),
            mu: None,
            noise: None,
        }
    }

    pub fn from_instance(inst: &BanditInstance) -> Self {
        Self {
            mu: Some(inst.mu().to_vec()),
            noise: Some(inst.noise()),
            ..Self::from_family(inst.family())
        }
    }

    pub fn family(&self) -> Result<SuperArmFamily> {
        let arms = self
            .arms
            .iter()
            .map(|arm| {
                arm.iter()
                    .map(|&e| {
                        if e == 0 || e > self.d {
                            Err(Error::ArmOutOfRange { arm: e, d: self.d })
                        } else {
                            Ok(e - 1)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        SuperArmFamily::new(self.d, arms)
    }

    /// The instance described by the file; `mu` must be present.
    pub fn instance(&self) -> Result<BanditInstance> {
        let mu = self
            .mu
            .clone()
            .ok_or_else(|| Error::Format("instance file has no \"mu\" field".into()))?;
        BanditInstance::new(self.family()?, mu, self.noise.unwrap_or_default())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance files always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] != i + n - k) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot has a successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference() -> BanditInstance {
        BanditInstance::new(
            SuperArmFamily::uniform_matroid(4, 2).unwrap(),
            vec![0.9, 0.8, 0.2, 0.1],
            NoiseLaw::Bernoulli,
        )
        .unwrap()
    }

    #[test]
    fn uniform_matroid_counts() {
        assert_eq!(SuperArmFamily::uniform_matroid(8, 3).unwrap().len(), 56);
        assert_eq!(SuperArmFamily::uniform_matroid(9, 4).unwrap().len(), 126);
        let single = SuperArmFamily::uniform_matroid(2, 2).unwrap();
        assert_eq!(single.arms(), &[vec![0, 1]]);
        assert_eq!(single.uniform_size(), Some(2));
        assert!(single.is_complete_uniform());
    }

    #[test]
    fn uniform_matroid_is_lexicographic() {
        let f = SuperArmFamily::uniform_matroid(4, 2).unwrap();
        let expected = vec![
            vec![0, 1],
            vec![0, 2],
            vec![0, 3],
            vec![1, 2],
            vec![1, 3],
            vec![2, 3],
        ];
        assert_eq!(f.arms(), expected.as_slice());
    }

    #[test]
    fn uniform_matroid_rejects_bad_sizes() {
        assert!(matches!(SuperArmFamily::uniform_matroid(3, 4), Err(Error::Sizing(_))));
        assert!(matches!(SuperArmFamily::uniform_matroid(3, 0), Err(Error::Sizing(_))));
        assert!(matches!(SuperArmFamily::uniform_matroid(60, 30), Err(Error::Sizing(_))));
    }

    #[test]
    fn restricted_family_shapes() {
        let f = SuperArmFamily::restricted(3).unwrap();
        assert_eq!(f.d(), 6);
        assert_eq!(f.arms(), &[vec![0], vec![1], vec![2, 3], vec![4, 5]]);
        assert_eq!(f.uniform_size(), None);
        let f = SuperArmFamily::restricted(1).unwrap();
        assert_eq!(f.arms(), &[vec![0], vec![1]]);
        assert_eq!(f.d(), 2);
        assert_eq!(SuperArmFamily::restricted(2).unwrap().len(), 3);
        assert!(SuperArmFamily::restricted(0).is_err());
    }

    #[test]
    fn perfect_matchings_of_k33() {
        let f = SuperArmFamily::perfect_matchings(3).unwrap();
        assert_eq!(f.d(), 9);
        assert_eq!(f.len(), 6);
        assert_eq!(f.uniform_size(), Some(3));
        assert!(!f.is_complete_uniform());
        assert!(f.coverage().iter().all(|&c| c == 2));
    }

    #[test]
    fn family_validation() {
        assert!(matches!(SuperArmFamily::new(3, vec![]), Err(Error::EmptyFamily)));
        assert!(SuperArmFamily::new(3, vec![vec![]]).is_err());
        assert!(matches!(
            SuperArmFamily::new(3, vec![vec![3]]),
            Err(Error::ArmOutOfRange { arm: 4, d: 3 })
        ));
        assert!(SuperArmFamily::new(3, vec![vec![0, 1], vec![1, 0]]).is_err());
        assert!(SuperArmFamily::new(3, vec![vec![1, 1]]).is_err());
    }

    #[test]
    fn hard_pair_means() {
        let (a, b) = make_hard_pair(0.1, 0.05).unwrap();
        assert!((a.mu()[0] - 0.4).abs() < 1e-15 && (a.mu()[1] - 0.5).abs() < 1e-15);
        assert!((b.mu()[0] - 0.4).abs() < 1e-15 && (b.mu()[1] - 0.6).abs() < 1e-15);
        let (a, b) = make_hard_pair(0.0, 0.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mu(), &[0.5, 0.5]);
        let (_, b) = make_hard_pair(0.2, 0.125).unwrap();
        assert_eq!(b.mu()[1], 0.75);
        assert!(make_hard_pair(1.0, 0.0).is_err());
        assert!(make_hard_pair(0.1, 0.2).is_err());
        assert!(make_hard_pair(0.6, 0.0).is_err());
    }

    #[test]
    fn sample_means_is_deterministic_and_validated() {
        let a = sample_means(&mut ChaCha8Rng::seed_from_u64(5), 8, 0.1, 0.9).unwrap();
        let b = sample_means(&mut ChaCha8Rng::seed_from_u64(5), 8, 0.1, 0.9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|m| (0.1..0.9).contains(m)));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_means(&mut rng, 3, 0.5, 0.5).is_err());
        assert!(sample_means(&mut rng, 3, -0.1, 0.5).is_err());
    }

    #[test]
    fn sample_means_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = sample_means(&mut rng, 100_000, 0.1, 0.9).unwrap();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        // SE of U(0.1, 0.9): 0.8 / sqrt(12 * 1e5).
        let se = 0.8 / (12.0f64 * 1e5).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn degenerate_bernoulli_rewards() {
        let f = SuperArmFamily::uniform_matroid(2, 1).unwrap();
        let inst = BanditInstance::new(f, vec![1.0, 0.0], NoiseLaw::Bernoulli).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(sample_reward(&mut rng, &inst), vec![1.0, 0.0]);
        }
    }

    #[test]
    fn reward_means_converge() {
        for noise in [NoiseLaw::Bernoulli, NoiseLaw::Uniform] {
            let f = SuperArmFamily::uniform_matroid(3, 1).unwrap();
            let inst = BanditInstance::new(f, vec![0.3, 0.95, 0.5], noise).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let n = 100_000;
            let mut sum = [0.0; 3];
            for _ in 0..n {
                let w = sample_reward(&mut rng, &inst);
                assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
                for e in 0..3 {
                    sum[e] += w[e];
                }
            }
            for e in 0..3 {
                let mu = inst.mu()[e];
                // Bernoulli variance bounds the uniform-law variance.
                let se = (mu * (1.0 - mu) / n as f64).sqrt();
                assert!((sum[e] / n as f64 - mu).abs() < 3.0 * se, "{noise:?} arm {e}");
            }
        }
    }

    #[test]
    fn oracle_reference_examples() {
        let inst = reference();
        let (idx, v) = solve_oracle(inst.family(), inst.mu()).unwrap();
        assert_eq!(inst.family().arm(idx), &[0, 1]);
        assert!((v - 1.7).abs() < 1e-12);
        let (idx, _) = solve_oracle(inst.family(), &[0.5; 4]).unwrap();
        assert_eq!(idx, 0);
        let single = SuperArmFamily::uniform_matroid(2, 2).unwrap();
        assert_eq!(solve_oracle(&single, &[-3.0, 7.0]).unwrap().0, 0);
        assert!(solve_oracle(inst.family(), &[f64::NAN, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn reference_gaps() {
        let inst = reference();
        let g = true_gaps(&inst);
        let idx34 = inst.family().index_of(&[2, 3]).unwrap();
        assert!((g.opt_gap[idx34] - 1.4).abs() < 1e-12);
        assert!((g.base_gap.get(0, 1) - 0.1).abs() < 1e-12);
        assert_eq!(g.opt_gap[g.best_index], 0.0);
        assert!((g.super_gap.get(g.best_index, idx34) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn reference_min_gaps() {
        let inst = reference();
        assert!((min_gap(&inst, 3).unwrap() - 0.7).abs() < 1e-12);
        assert!((min_gap(&inst, 2).unwrap() - 0.6).abs() < 1e-12);
        assert!(matches!(min_gap(&inst, 0), Err(Error::Domain(_))));
        let report = large_gap_report(&inst);
        assert!((report.min_gap.unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(report.per_arm.len(), 2);
    }

    #[test]
    fn min_gap_uncovered_arm() {
        let f = SuperArmFamily::new(3, vec![vec![0], vec![1]]).unwrap();
        let inst = BanditInstance::new(f, vec![0.9, 0.1, 0.5], NoiseLaw::Bernoulli).unwrap();
        assert!(matches!(min_gap(&inst, 2), Err(Error::Domain(_))));
        assert!((min_gap(&inst, 1).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_one_indexed() {
        let inst = reference();
        let file = InstanceFile::from_instance(&inst);
        let text = file.to_json();
        assert!(text.starts_with(r#"{"d":4,"arms":[[1,2],[1,3]"#), "{text}");
        assert!(text.contains(r#""noise":"bernoulli""#));
        let back = InstanceFile::from_json(&text).unwrap().instance().unwrap();
        assert_eq!(back, inst);
        let bad = r#"{"d": 2, "arms": [[0, 1]]}"#;
        assert!(InstanceFile::from_json(bad).unwrap().family().is_err());
        let family_only = InstanceFile::from_json(r#"{"d": 2, "arms": [[1], [2]]}"#).unwrap();
        assert!(family_only.family().is_ok());
        assert!(matches!(family_only.instance(), Err(Error::Format(_))));
    }

    #[test]
    fn gap_table_restrict() {
        let t = GapTable::from_scores(vec![0, 1, 2], vec![0.5, 0.25, 0.0]);
        let r = t.restrict(&[2, 0]).unwrap();
        assert_eq!(r.get(0, 1), -0.5);
        assert!(t.restrict(&[7]).is_none());
    }
}
