//! Seeded Monte Carlo runs of coop-UCB2 (unconstrained model) and selective
//! learning (constrained model).
//!
//! Run `r` of an experiment is a pure function of `(config, r)`: its generator
//! is seeded with [`mix_seed`]`(master_seed, r)`. Within a run, stream 0
//! draws the arm means and stream `1 + k N + i` is the reward tape of agent
//! `k` on arm `i`, so two configs sharing a seed see the same means and the
//! same rewards for the same pulls. Summaries fold runs in index order, so
//! the worker count never changes a result.

mod presets;

pub use presets::{Preset, PresetScale};

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bandits::BanditInstance;
use crate::error::{Error, Result};
use crate::estimation::{ConsensusOperator, EstimateState, StepObservation};
use crate::graphs::{
    self, consensus_matrix, graph_indices, DivisorMode, Graph, GraphKind, KappaSpec,
};
use crate::policies::{self, FKind, PolicyParams, RankAssignment};
use crate::regret::{
    fusion_lower_bound, BoundCurve, Cor1Bound, Cor2Bound, RegretLedger, RewardModel,
};

pub const DEFAULT_GAMMA: f64 = 1.1;
pub const DEFAULT_ETA: f64 = 1.0;

/// Upper bound on buffered run results per aggregation block, in `f64`s.
const BLOCK_BUDGET: usize = 1 << 22;

/// SplitMix64 finalizer.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(master) ^ index)`: the seed of run `index`.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Complete {
        m: usize,
    },
    Ring {
        m: usize,
    },
    Path {
        m: usize,
    },
    Star {
        m: usize,
    },
    House,
    FourAgent,
    /// Without a `seed`, the graph seed is derived from the master seed.
    ErdosRenyi {
        m: usize,
        rho: f64,
        seed: Option<u64>,
    },
    EdgeList {
        path: PathBuf,
    },
    /// 1-based node pairs.
    Edges {
        m: usize,
        edges: Vec<(usize, usize)>,
    },
}

impl GraphSpec {
    pub fn build(&self, master_seed: u64) -> Result<Graph> {
        match self {
            GraphSpec::Complete { m } => graphs::generate(GraphKind::Complete, *m, None),
            GraphSpec::Ring { m } => graphs::generate(GraphKind::Ring, *m, None),
            GraphSpec::Path { m } => graphs::generate(GraphKind::Path, *m, None),
            GraphSpec::Star { m } => graphs::generate(GraphKind::Star, *m, None),
            GraphSpec::House => graphs::generate(GraphKind::House, 5, None),
            GraphSpec::FourAgent => graphs::generate(GraphKind::FourAgent, 4, None),
            GraphSpec::ErdosRenyi { m, rho, seed } => {
                let seed = seed.unwrap_or_else(|| mix_seed(master_seed, u64::MAX));
                graphs::erdos_renyi(*m, *rho, &mut ChaCha8Rng::seed_from_u64(seed))
            }
            GraphSpec::EdgeList { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                Graph::parse_edge_list(&text)
            }
            GraphSpec::Edges { m, edges } => Graph::from_one_based(*m, edges),
        }
    }

    /// Short name for labels.
    pub fn name(&self) -> String {
        match self {
            GraphSpec::Complete { m } => format!("complete{m}"),
            GraphSpec::Ring { m } => format!("ring{m}"),
            GraphSpec::Path { m } => format!("path{m}"),
            GraphSpec::Star { m } => format!("star{m}"),
            GraphSpec::House => "house".into(),
            GraphSpec::FourAgent => "four_agent".into(),
            GraphSpec::ErdosRenyi { m, rho, .. } => format!("er{m}_rho{rho}"),
            GraphSpec::EdgeList { path } => path.display().to_string(),
            GraphSpec::Edges { m, .. } => format!("edges{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArmSpec {
    Fixed {
        means: Vec<f64>,
    },
    /// Fresh means from `Normal(mean, sd)` in every run.
    Resample {
        #[serde(default)]
        mean: f64,
        #[serde(default = "default_prior_sd")]
        sd: f64,
    },
}

fn default_prior_sd() -> f64 {
    10.0
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_kappa() -> KappaSpec {
    KappaSpec::DmaxRatio
}

fn default_true() -> bool {
    true
}

/// One Monte Carlo experiment, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub model: RewardModel,
    pub graph_spec: GraphSpec,
    /// Number of arms.
    #[serde(alias = "num_arms")]
    pub n: usize,
    pub arm_spec: ArmSpec,
    pub sigma_s: f64,
    /// Defaults to `sigma_s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_g: Option<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_kappa")]
    pub kappa_spec: KappaSpec,
    #[serde(default)]
    pub divisor_mode: DivisorMode,
    /// Horizon.
    #[serde(alias = "horizon")]
    pub t: usize,
    pub runs: usize,
    pub master_seed: u64,
    /// 1-based ranks for selective learning; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    #[serde(default)]
    pub f_kind: FKind,
    /// Constrained model only: shift every mean up so the smallest is 0,
    /// which keeps group regret nondecreasing. Selections are unaffected.
    #[serde(default = "default_true")]
    pub shift_means_positive: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.graph_spec.name())
    }

    pub fn sigma_g(&self) -> f64 {
        self.sigma_g.unwrap_or(self.sigma_s)
    }

    pub fn policy_params(&self) -> Result<PolicyParams> {
        let p = PolicyParams {
            gamma: self.gamma,
            eta: self.eta,
            sigma_g: self.sigma_g(),
            f_kind: self.f_kind,
        };
        p.validate()?;
        Ok(p)
    }

    /// Makes a relative edge-list path relative to `base` instead of the
    /// working directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let GraphSpec::EdgeList { path } = &mut self.graph_spec {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Means actually used, after resampling and shifting.
    pub means: Vec<f64>,
    pub ledger: RegretLedger,
    /// `pulls[k * N + i]`: times agent `k` pulled arm `i`.
    pub pulls: Vec<u64>,
}

/// A validated config with its graph and consensus operator built.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    graph: Graph,
    kappa: f64,
    operator: ConsensusOperator,
    params: PolicyParams,
    ranks: RankAssignment,
    fixed: Option<BanditInstance>,
}

impl Experiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let c = config;
        if c.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if c.n == 0 || c.t < c.n {
            return Err(Error::Config(format!(
                "need N >= 1 and T >= N, got N = {}, T = {}",
                c.n, c.t
            )));
        }
        if !(c.sigma_s >= 0.0) || !c.sigma_s.is_finite() {
            return Err(Error::Config(format!(
                "sigma_s must be a nonnegative number, got {}",
                c.sigma_s
            )));
        }
        let params = c.policy_params()?;
        let graph = c.graph_spec.build(c.master_seed)?;
        let m = graph.num_agents();
        if c.model == RewardModel::Constrained && m > c.n {
            return Err(Error::Config(format!(
                "constrained model needs M <= N, got M = {m}, N = {}",
                c.n
            )));
        }
        let ranks = match &c.ranks {
            Some(r) if r.len() != m => {
                return Err(Error::Config(format!(
                    "{} ranks given for {m} agents",
                    r.len()
                )))
            }
            Some(r) => RankAssignment::new(r.clone())?,
            None => RankAssignment::identity(m),
        };
        let kappa = c.kappa_spec.resolve(&graph, c.divisor_mode);
        let p = consensus_matrix(&graph, kappa, c.divisor_mode)?;
        let fixed = match &c.arm_spec {
            ArmSpec::Fixed { means } => {
                if means.len() != c.n {
                    return Err(Error::Config(format!(
                        "{} means given for N = {}",
                        means.len(),
                        c.n
                    )));
                }
                Some(Self::instance_from(c, means.clone())?)
            }
            ArmSpec::Resample { mean, sd } => {
                if !(*sd >= 0.0) || !mean.is_finite() {
                    return Err(Error::Config(format!("invalid mean prior ({mean}, {sd})")));
                }
                None
            }
        };
        Ok(Self {
            config: c.clone(),
            graph,
            kappa,
            operator: ConsensusOperator::new(&p),
            params,
            ranks,
            fixed,
        })
    }

    fn instance_from(c: &ExperimentConfig, means: Vec<f64>) -> Result<BanditInstance> {
        let inst = BanditInstance::gaussian(means, c.sigma_s, c.sigma_g())?;
        if c.model != RewardModel::Constrained {
            return Ok(inst);
        }
        inst.ordering(true)?;
        let min = inst.means().iter().copied().fold(f64::INFINITY, f64::min);
        if c.shift_means_positive && min < 0.0 {
            inst.shifted(-min)
        } else {
            Ok(inst)
        }
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Resolved step size.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    /// The fixed instance, after any shift; `None` when means are resampled.
    pub fn fixed_instance(&self) -> Option<&BanditInstance> {
        self.fixed.as_ref()
    }

    pub fn run_single(&self, run_index: u64) -> Result<RunResult> {
        let c = &self.config;
        let (m, n) = (self.graph.num_agents(), c.n);
        let mut base = ChaCha8Rng::seed_from_u64(mix_seed(c.master_seed, run_index));
        let instance = match (&self.fixed, &c.arm_spec) {
            (Some(inst), _) => inst.clone(),
            (None, ArmSpec::Resample { mean, sd }) => {
                let prior = Normal::new(*mean, *sd).map_err(|e| Error::Config(e.to_string()))?;
                let means = (0..n).map(|_| prior.sample(&mut base)).collect();
                Self::instance_from(c, means)?
            }
            (None, ArmSpec::Fixed { .. }) => unreachable!("fixed instances are built up front"),
        };
        let ordering = instance.ordering(c.model == RewardModel::Constrained)?;
        let mut tapes: Vec<ChaCha8Rng> = (0..m * n)
            .map(|s| {
                let mut rng = base.clone();
                rng.set_stream(1 + s as u64);
                rng
            })
            .collect();

        let mut state = EstimateState::new(m, n)?;
        let mut ledger = RegretLedger::new(m, c.t);
        let mut pulls = vec![0u64; m * n];
        let mut obs = StepObservation {
            selections: vec![0; m],
            realized: vec![0.0; m],
        };
        let (mut q, mut w) = (vec![0.0; n], vec![0.0; n]);
        for t in 1..=c.t {
            match c.model {
                RewardModel::Unconstrained => {
                    for k in 0..m {
                        obs.selections[k] = policies::coop_ucb2_select(&state, k, t, &self.params);
                    }
                }
                RewardModel::Constrained if t <= n => {
                    for k in 0..m {
                        obs.selections[k] = policies::selective_learning_select(
                            &state,
                            k,
                            self.ranks.rank(k),
                            t,
                            &self.params,
                        )?;
                    }
                }
                RewardModel::Constrained => {
                    let bonus = policies::Bonus::new((t - 1) as f64, &self.params, m);
                    for k in 0..m {
                        policies::scores(
                            state.n_hat_row(k),
                            state.s_hat_row(k),
                            &bonus,
                            &mut q,
                            &mut w,
                        );
                        obs.selections[k] =
                            policies::select_from_scores(&q, &w, self.ranks.rank(k));
                    }
                }
            }
            for k in 0..m {
                let arm = obs.selections[k];
                obs.realized[k] = instance.draw(arm, &mut tapes[k * n + arm]);
                pulls[k * n + arm] += 1;
            }
            match c.model {
                RewardModel::Unconstrained => {
                    ledger.accrue_unconstrained(&obs.selections, &ordering)?
                }
                RewardModel::Constrained => {
                    ledger.accrue_constrained(
                        &obs.selections,
                        &instance,
                        &ordering,
                        &self.ranks,
                    )?;
                }
            }
            state.consensus_step(&self.operator, &obs)?;
        }
        Ok(RunResult {
            means: instance.means().to_vec(),
            ledger,
            pulls,
        })
    }

    /// Runs `runs` Monte Carlo repetitions; `workers = None` uses every core.
    pub fn run(&self, workers: Option<usize>) -> Result<ExperimentSummary> {
        let c = &self.config;
        let m = self.graph.num_agents();
        let per_run = (m + 2) * c.t;
        let block = (BLOCK_BUDGET / per_run).clamp(1, 1024);
        let mut group = Accumulator::new(c.t);
        let mut collisions = Accumulator::new(c.t);
        let mut agents: Vec<Accumulator> = (0..m).map(|_| Accumulator::new(c.t)).collect();
        let mut collision_buf = vec![0.0; c.t];
        let mut start = 0;
        while start < c.runs {
            let end = (start + block).min(c.runs);
            for result in self.run_block(start..end, workers)? {
                let ledger = &result.ledger;
                group.push(ledger.group_cum());
                for (k, acc) in agents.iter_mut().enumerate() {
                    acc.push(ledger.agent_cum(k));
                }
                for (dst, &src) in collision_buf.iter_mut().zip(ledger.collisions()) {
                    *dst = src as f64;
                }
                collisions.push(&collision_buf);
            }
            start = end;
        }
        let (group_mean, group_sem) = group.finish();
        let (collision_mean, collision_sem) = collisions.finish();
        let (agent_mean, agent_sem) = agents.into_iter().map(Accumulator::finish).unzip();
        Ok(ExperimentSummary {
            label: c.label(),
            model: c.model,
            num_agents: m,
            horizon: c.t,
            runs: c.runs,
            group_mean,
            group_sem,
            agent_mean,
            agent_sem,
            collision_mean,
            collision_sem,
        })
    }

    #[cfg(feature = "parallel")]
    fn run_block(
        &self,
        range: std::ops::Range<usize>,
        workers: Option<usize>,
    ) -> Result<Vec<RunResult>> {
        use rayon::prelude::*;
        let job = || {
            range
                .clone()
                .into_par_iter()
                .map(|r| self.run_single(r as u64))
                .collect()
        };
        match workers {
            Some(1) => range.clone().map(|r| self.run_single(r as u64)).collect(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .install(job),
            None => job(),
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn run_block(
        &self,
        range: std::ops::Range<usize>,
        _workers: Option<usize>,
    ) -> Result<Vec<RunResult>> {
        range.map(|r| self.run_single(r as u64)).collect()
    }
}

/// Theoretical curves for a config with fixed means: the upper bound of the
/// config's model followed by the matching fusion-center lower bound (and,
/// for the constrained model, the concise upper bound).
pub fn bound_curves(config: &ExperimentConfig) -> Result<Vec<BoundCurve>> {
    let exp = Experiment::new(config)?;
    let instance = exp.fixed_instance().ok_or_else(|| {
        Error::Config("bounds need fixed arm means (arm_spec kind \"fixed\")".into())
    })?;
    let idx = graph_indices(exp.graph(), exp.kappa(), config.divisor_mode)?;
    let m = exp.graph().num_agents();
    let t = config.t;
    Ok(match config.model {
        RewardModel::Unconstrained => vec![
            Cor1Bound::new(instance, exp.params(), m, idx.epsilon_n, &idx.epsilon_c)?.curve(t),
            fusion_lower_bound(t, instance, RewardModel::Unconstrained, m)?,
        ],
        RewardModel::Constrained => {
            let b = Cor2Bound::new(instance, exp.params(), m, idx.epsilon_n, &idx.epsilon_c)?;
            vec![
                b.curve(t),
                b.concise_curve(t),
                fusion_lower_bound(t, instance, RewardModel::Constrained, m)?,
            ]
        }
    })
}

pub fn run_single(config: &ExperimentConfig, run_index: u64) -> Result<RunResult> {
    Experiment::new(config)?.run_single(run_index)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    Experiment::new(config)?.run(None)
}

/// Same as [`run_experiment`] on a fixed number of worker threads.
pub fn run_experiment_with(config: &ExperimentConfig, workers: usize) -> Result<ExperimentSummary> {
    if workers == 0 {
        return Err(Error::InvalidParameter("workers must be at least 1".into()));
    }
    Experiment::new(config)?.run(Some(workers))
}

/// Monte Carlo means and standard errors, indexed by `t - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub label: String,
    pub model: RewardModel,
    pub num_agents: usize,
    pub horizon: usize,
    pub runs: usize,
    pub group_mean: Vec<f64>,
    pub group_sem: Vec<f64>,
    pub agent_mean: Vec<Vec<f64>>,
    pub agent_sem: Vec<Vec<f64>>,
    /// Colliding agents per step.
    pub collision_mean: Vec<f64>,
    pub collision_sem: Vec<f64>,
}

impl ExperimentSummary {
    pub fn final_group(&self) -> (f64, f64) {
        (
            self.group_mean[self.horizon - 1],
            self.group_sem[self.horizon - 1],
        )
    }

    /// Mean collisions per step over steps `from..=to` (1-based).
    pub fn collision_rate(&self, from: usize, to: usize) -> f64 {
        let window = &self.collision_mean[from - 1..to];
        window.iter().sum::<f64>() / window.len() as f64
    }
}

/// Welford running mean and variance of equal-length series.
struct Accumulator {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *mean;
            *mean += d / n;
            *m2 += d * (v - *mean);
        }
    }

    fn finish(self) -> (Vec<f64>, Vec<f64>) {
        let n = self.count as f64;
        let sem = if self.count > 1 {
            self.m2
                .iter()
                .map(|m2| (m2 / (n - 1.0) / n).sqrt())
                .collect()
        } else {
            vec![0.0; self.mean.len()]
        };
        (self.mean, sem)
    }
}
