//! Seeded experiment runs: trials, checkpoints, alpha sweeps and output.
//!
//! Every trial derives its seed from the base seed and the trial index with
//! [`trial_seed`], then splits it into three independent ChaCha8 streams for
//! the means, the environment and the policy. The same trial index sees the
//! same means and reward stream for every alpha in a sweep.

use std::io::Write;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{spectral_constants, SpectralConstants};
use crate::instance::{
    large_gap_report, sample_means, sample_reward, true_gaps, BanditInstance, GapTable, GapTables,
    InstanceFile, NoiseLaw, SuperArmFamily,
};
use crate::metrics::{mean_and_se, pareto_product, Checkpoint};
use crate::mixcombkl::{kl_params, kl_params_unchecked, KlState, PARETO_ALPHA_MAX};
use crate::mixcombucb::init_ucb;

/// Identifier of the seed-splitting function, recorded in output metadata.
pub const SEED_MIX_ID: &str = "splitmix64-v1";

/// Exact CSV header.
pub const CSV_HEADER: &str =
    "algo,alpha,trial,seed,t,cum_regret,mse_mu,mse_M,max_err_mu,max_err_M,pareto_product";

const MEANS_STREAM: u64 = 0;
const ENV_STREAM: u64 = 1;
const POLICY_STREAM: u64 = 2;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed: `splitmix64(base ^ splitmix64(trial))`.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    splitmix64(base ^ splitmix64(trial as u64))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    /// Full-bandit feedback.
    Kl,
    /// Semi-bandit feedback.
    Ucb,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Kl => "kl",
            Algo::Ucb => "ucb",
        }
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" => Ok(Algo::Kl),
            "ucb" => Ok(Algo::Ucb),
            other => Err(Error::InvalidParameter(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilySpec {
    UniformMatroid { d: usize, m: usize },
    Restricted { d0: usize },
    PerfectMatchings { m: usize },
    File { path: PathBuf },
}

impl FamilySpec {
    pub fn build(&self) -> Result<SuperArmFamily> {
        match self {
            FamilySpec::UniformMatroid { d, m } => SuperArmFamily::uniform_matroid(*d, *m),
            FamilySpec::Restricted { d0 } => SuperArmFamily::restricted(*d0),
            FamilySpec::PerfectMatchings { m } => SuperArmFamily::perfect_matchings(*m),
            FamilySpec::File { path } => InstanceFile::load(path)
                .map_err(|e| match e {
                    Error::Io(msg) => Error::InvalidParameter(format!("{}: {msg}", path.display())),
                    other => other,
                })?
                .family(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeanSpec {
    /// Independent `U[lo, hi)` draws.
    Uniform { lo: f64, hi: f64 },
    Explicit { mu: Vec<f64> },
}

impl Default for MeanSpec {
    fn default() -> Self {
        MeanSpec::Uniform { lo: 0.1, hi: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointSchedule {
    /// Powers of two below `n`, then `n`.
    #[default]
    PowersOfTwo,
    /// Only the horizon.
    Final,
}

impl CheckpointSchedule {
    pub fn rounds(self, n: usize) -> Vec<usize> {
        match self {
            CheckpointSchedule::Final => vec![n],
            CheckpointSchedule::PowersOfTwo => {
                let mut out: Vec<usize> =
                    std::iter::successors(Some(1usize), |&t| t.checked_mul(2)).take_while(|&t| t < n).collect();
                out.push(n);
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algo: Algo,
    pub family: FamilySpec,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub means: MeanSpec,
    #[serde(default)]
    pub noise: NoiseLaw,
    /// Draw the means once and share them across trials.
    #[serde(default)]
    pub fixed_instance: bool,
    #[serde(default)]
    pub checkpoints: CheckpointSchedule,
    /// Worker threads; `None` uses the rayon default. Never affects output.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(algo: Algo, family: FamilySpec, n: usize, alphas: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            algo,
            family,
            n,
            alphas,
            trials,
            seed,
            means: MeanSpec::default(),
            noise: NoiseLaw::default(),
            fixed_instance: false,
            checkpoints: CheckpointSchedule::default(),
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::InvalidParameter("alpha grid is empty".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidParameter(format!("alpha {a} outside [0, 1]")));
        }
        if let MeanSpec::Uniform { lo, hi } = self.means {
            if !(lo >= 0.0 && lo < hi && hi <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "mean range requires 0 <= lo < hi <= 1, got [{lo}, {hi}]"
                )));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Final estimated gap tables of a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedGaps {
    pub super_gap: GapTable,
    pub base_gap: GapTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub algo: Algo,
    pub alpha: f64,
    pub trial: usize,
    pub seed: u64,
    pub mu: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    pub estimated: EstimatedGaps,
    pub truth: GapTables,
    pub warnings: Vec<String>,
}

impl TrialResult {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("every trial logs its horizon")
    }
}

/// Mean over trials with the standard error of the mean (`None` for one
/// trial).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: Option<f64>,
}

impl Stat {
    fn of(values: &[f64]) -> Self {
        let (mean, se) = mean_and_se(values);
        Self { mean, se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub t: usize,
    pub cum_regret: Stat,
    pub mse_mu: Stat,
    #[serde(rename = "mse_M")]
    pub mse_m: Stat,
    pub max_err_mu: Stat,
    #[serde(rename = "max_err_M")]
    pub max_err_m: Stat,
    /// Mean of the per-trial products.
    pub pareto_product: Stat,
    /// `mean(max_err_M) * sqrt(mean(cum_regret))`.
    pub pareto_of_means: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryBlock {
    pub algo: Algo,
    pub alpha: f64,
    pub rows: Vec<SummaryRow>,
}

impl SummaryBlock {
    pub fn last(&self) -> &SummaryRow {
        self.rows.last().expect("summaries have at least one row")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed_mix: String,
    pub version: String,
}

impl Default for Metadata {
    fn default() -> Self {
        Self { seed_mix: SEED_MIX_ID.into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub metadata: Metadata,
    pub trials: Vec<TrialResult>,
    pub summary: Vec<SummaryBlock>,
}

/// A validated configuration with its family (and, for full-bandit runs,
/// the family's constants) built once.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    family: SuperArmFamily,
    constants: Option<SpectralConstants>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let family = config.family.build()?;
        if let MeanSpec::Explicit { mu } = &config.means {
            BanditInstance::new(family.clone(), mu.clone(), config.noise)?;
        }
        let constants = match config.algo {
            Algo::Kl => {
                let c = spectral_constants(&family)?;
                // Rejects families without a common size before any trial runs.
                kl_params_unchecked(&c, &family, config.n, 0.0)?;
                Some(c)
            }
            Algo::Ucb => None,
        };
        Ok(Self { config, family, constants })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn family(&self) -> &SuperArmFamily {
        &self.family
    }

    /// The instance trial `trial` runs on.
    pub fn instance(&self, trial: usize) -> Result<BanditInstance> {
        let mu = match &self.config.means {
            MeanSpec::Explicit { mu } => mu.clone(),
            MeanSpec::Uniform { lo, hi } => {
                let source = if self.config.fixed_instance { 0 } else { trial };
                let mut rng = stream(trial_seed(self.config.seed, source), MEANS_STREAM);
                sample_means(&mut rng, self.family.d(), *lo, *hi)?
            }
        };
        BanditInstance::new(self.family.clone(), mu, self.config.noise)
    }

    /// Runs one trial at one alpha.
    pub fn run_trial(&self, alpha: f64, trial: usize) -> Result<TrialResult> {
        self.run_trial_inner(alpha, trial)
            .map_err(|e| Error::Trial { trial, source: Box::new(e) })
    }

    fn run_trial_inner(&self, alpha: f64, trial: usize) -> Result<TrialResult> {
        let seed = trial_seed(self.config.seed, trial);
        let inst = self.instance(trial)?;
        let truth = true_gaps(&inst);
        let mut env = stream(seed, ENV_STREAM);
        let mut policy = stream(seed, POLICY_STREAM);
        let schedule = self.config.checkpoints.rounds(self.config.n);
        let mut warnings = Vec::new();
        let (checkpoints, estimated) = match self.config.algo {
            Algo::Kl => self.run_kl(&inst, &truth, alpha, &schedule, &mut env, &mut policy, &mut warnings)?,
            Algo::Ucb => self.run_ucb(&inst, &truth, alpha, &schedule, &mut env, &mut policy, &mut warnings)?,
        };
        Ok(TrialResult {
            algo: self.config.algo,
            alpha,
            trial,
            seed,
            mu: inst.mu().to_vec(),
            checkpoints,
            estimated,
            truth,
            warnings,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn run_kl(
        &self,
        inst: &BanditInstance,
        truth: &GapTables,
        alpha: f64,
        schedule: &[usize],
        env: &mut ChaCha8Rng,
        policy: &mut ChaCha8Rng,
        warnings: &mut Vec<String>,
    ) -> Result<(Vec<Checkpoint>, EstimatedGaps)> {
        let constants = self.constants.clone().expect("built for full-bandit runs");
        let n = self.config.n;
        let params = match kl_params(&constants, &self.family, n, alpha) {
            Ok(p) => p,
            Err(e @ Error::AlphaOutsideParetoRange { .. }) => {
                warnings.push(format!("{e}; running without the Pareto guarantee"));
                kl_params_unchecked(&constants, &self.family, n, alpha)?
            }
            Err(e) => return Err(e),
        };
        let mut state = KlState::new(self.family.clone(), constants, params)?;
        let mut regret = 0.0;
        let mut checkpoints = Vec::with_capacity(schedule.len());
        let mut next = schedule.iter().peekable();
        let mut last = None;
        for t in 1..=n {
            let sel = state.select(policy)?;
            let w = sample_reward(env, inst);
            let total = self.family.value(sel.arm, &w);
            state.update(total, &sel)?;
            regret += truth.opt_gap[sel.arm];
            if next.peek() == Some(&&t) {
                next.next();
                let (sup, base) = state.estimates(t)?;
                checkpoints.push(Checkpoint::evaluate(t, regret, &sup, &base, truth)?);
                last = Some(EstimatedGaps { super_gap: sup, base_gap: base });
            }
        }
        Ok((checkpoints, last.expect("the horizon is a checkpoint")))
    }

    #[allow(clippy::too_many_arguments)]
    fn run_ucb(
        &self,
        inst: &BanditInstance,
        truth: &GapTables,
        alpha: f64,
        schedule: &[usize],
        env: &mut ChaCha8Rng,
        policy: &mut ChaCha8Rng,
        warnings: &mut Vec<String>,
    ) -> Result<(Vec<Checkpoint>, EstimatedGaps)> {
        let n = self.config.n;
        if alpha == 0.0 {
            warnings.push(
                "alpha = 0 puts all mixture mass on the forced arms; the UCB arm is never chosen for its own sake"
                    .into(),
            );
        }
        if alpha > PARETO_ALPHA_MAX {
            let gap = large_gap_report(inst).min_gap;
            warnings.push(match gap {
                Some(g) => format!("alpha = {alpha} needs the large-gap property; smallest minimum gap is {g}"),
                None => format!("alpha = {alpha} needs the large-gap property"),
            });
        }
        let mut regret = 0.0;
        let (mut state, report) = init_ucb(&self.family, alpha, |arm| {
            regret += truth.opt_gap[arm];
            sample_reward(env, inst)
        })?;
        if !report.dropped.is_empty() {
            let arms: Vec<usize> = report.dropped.iter().map(|e| e + 1).collect();
            warnings.push(format!("base arms {arms:?} lie in no super arm and are not estimated"));
        }
        let m0 = state.m0();
        let mut checkpoints = Vec::with_capacity(schedule.len());
        let mut last = None;
        let mut record = |t: usize, regret: f64, state: &crate::mixcombucb::UcbState| -> Result<()> {
            let (sup, base) = state.estimates(t)?;
            checkpoints.push(Checkpoint::evaluate(t, regret, &sup, &base, truth)?);
            last = Some(EstimatedGaps { super_gap: sup, base_gap: base });
            Ok(())
        };
        for &t in schedule.iter().filter(|&&t| t < m0) {
            record(t, regret, &state)?;
        }
        let mut next = schedule.iter().filter(|&&t| t >= m0).peekable();
        for t in m0..=n {
            let rec = state.select(policy)?;
            let w = sample_reward(env, inst);
            let observed: Vec<(usize, f64)> =
                self.family.arm(rec.selected).iter().map(|&e| (e, w[e])).collect();
            state.update(&observed, &rec)?;
            regret += truth.opt_gap[rec.selected];
            if next.peek() == Some(&&t) {
                next.next();
                record(t, regret, &state)?;
            }
        }
        Ok((checkpoints, last.expect("the horizon is a checkpoint")))
    }

    /// Runs every trial for every alpha. Returns the results completed in
    /// order up to the first failure, and that failure.
    pub fn run_trials(&self) -> (Vec<TrialResult>, Option<Error>) {
        let pool = match rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers.unwrap_or(0))
            .build()
        {
            Ok(pool) => pool,
            Err(e) => return (Vec::new(), Some(Error::Io(format!("worker pool: {e}")))),
        };
        let jobs: Vec<(f64, usize)> = self
            .config
            .alphas
            .iter()
            .flat_map(|&a| (0..self.config.trials).map(move |i| (a, i)))
            .collect();
        let results: Vec<Result<TrialResult>> =
            pool.install(|| jobs.par_iter().map(|&(a, i)| self.run_trial(a, i)).collect());
        let mut done = Vec::with_capacity(results.len());
        for r in results {
            match r {
                Ok(t) => done.push(t),
                Err(e) => return (done, Some(e)),
            }
        }
        (done, None)
    }

    pub fn run(&self) -> Result<ExperimentOutput> {
        let (trials, err) = self.run_trials();
        if let Some(e) = err {
            return Err(e);
        }
        let summary = summarize(&trials);
        Ok(ExperimentOutput {
            config: self.config.clone(),
            metadata: Metadata::default(),
            trials,
            summary,
        })
    }
}

/// Runs trial `trial` of `config` at `alpha`.
pub fn run_trial(config: &ExperimentConfig, alpha: f64, trial: usize) -> Result<TrialResult> {
    Experiment::new(config.clone())?.run_trial(alpha, trial)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    Experiment::new(config.clone())?.run()
}

/// Per-alpha, per-checkpoint aggregates. Trials are reduced in the order
/// given, so the result does not depend on how they were scheduled.
pub fn summarize(trials: &[TrialResult]) -> Vec<SummaryBlock> {
    let mut alphas: Vec<(Algo, f64)> = Vec::new();
    for t in trials {
        if !alphas.iter().any(|&(g, a)| g == t.algo && a == t.alpha) {
            alphas.push((t.algo, t.alpha));
        }
    }
    alphas
        .into_iter()
        .map(|(algo, alpha)| {
            let group: Vec<&TrialResult> =
                trials.iter().filter(|t| t.algo == algo && t.alpha == alpha).collect();
            let rows = group[0]
                .checkpoints
                .iter()
                .enumerate()
                .map(|(k, cp)| {
                    let column = |f: &dyn Fn(&Checkpoint) -> f64| -> Vec<f64> {
                        group.iter().map(|t| f(&t.checkpoints[k])).collect()
                    };
                    let regret = Stat::of(&column(&|c| c.cum_regret));
                    let max_err_m = Stat::of(&column(&|c| c.max_err_m));
                    SummaryRow {
                        t: cp.t,
                        cum_regret: regret,
                        mse_mu: Stat::of(&column(&|c| c.mse_mu)),
                        mse_m: Stat::of(&column(&|c| c.mse_m)),
                        max_err_mu: Stat::of(&column(&|c| c.max_err_mu)),
                        max_err_m,
                        pareto_product: Stat::of(&column(&|c| c.pareto_product())),
                        pareto_of_means: pareto_product(max_err_m.mean, regret.mean),
                    }
                })
                .collect();
            SummaryBlock { algo, alpha, rows }
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    algo: &'a str,
    alpha: f64,
    trial: usize,
    seed: u64,
    t: usize,
    cum_regret: f64,
    mse_mu: f64,
    #[serde(rename = "mse_M")]
    mse_m: f64,
    max_err_mu: f64,
    #[serde(rename = "max_err_M")]
    max_err_m: f64,
    pareto_product: f64,
}

/// One row per trial per checkpoint, under [`CSV_HEADER`].
pub fn write_csv<W: Write>(trials: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for tr in trials {
        for c in &tr.checkpoints {
            w.serialize(CsvRow {
                algo: tr.algo.as_str(),
                alpha: tr.alpha,
                trial: tr.trial,
                seed: tr.seed,
                t: c.t,
                cum_regret: c.cum_regret,
                mse_mu: c.mse_mu,
                mse_m: c.mse_m,
                max_err_mu: c.max_err_mu,
                max_err_m: c.max_err_m,
                pareto_product: c.pareto_product(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(output: &ExperimentOutput, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, output)?;
    writeln!(out)?;
    Ok(())
}
