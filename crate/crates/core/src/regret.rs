//! Regret bookkeeping for both reward models and the theoretical curves it is
//! compared against.
//!
//! Regret is accrued with true means (pseudo-regret), so a run's ledger is the
//! expected regret conditioned on its selections.

use serde::{Deserialize, Serialize};

use crate::bandits::{ArmOrdering, BanditInstance, RewardKind};
use crate::error::{Error, Result};
use crate::policies::{PolicyParams, RankAssignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardModel {
    /// Every agent collects its own draw.
    Unconstrained,
    /// An agent is paid only when no other agent picked the same arm.
    Constrained,
}

/// Cumulative regret per agent and for the group, indexed by `t - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    num_agents: usize,
    per_agent: Vec<Vec<f64>>,
    group: Vec<f64>,
    collisions: Vec<u32>,
    arm_load: Vec<u32>,
}

impl RegretLedger {
    pub fn new(num_agents: usize, horizon_hint: usize) -> Self {
        Self {
            num_agents,
            per_agent: vec![Vec::with_capacity(horizon_hint); num_agents],
            group: Vec::with_capacity(horizon_hint),
            collisions: Vec::with_capacity(horizon_hint),
            arm_load: Vec::new(),
        }
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    /// Steps recorded.
    pub fn len(&self) -> usize {
        self.group.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group.is_empty()
    }

    pub fn agent_cum(&self, agent: usize) -> &[f64] {
        &self.per_agent[agent]
    }

    pub fn group_cum(&self) -> &[f64] {
        &self.group
    }

    /// Agents that collided at each step; all zeros under the unconstrained model.
    pub fn collisions(&self) -> &[u32] {
        &self.collisions
    }

    fn push(&mut self, increments: impl Iterator<Item = f64>, collisions: u32) {
        let mut total = 0.0;
        for (k, inc) in increments.enumerate() {
            let prev = self.per_agent[k].last().copied().unwrap_or(0.0);
            self.per_agent[k].push(prev + inc);
            total += inc;
        }
        let prev = self.group.last().copied().unwrap_or(0.0);
        self.group.push(prev + total);
        self.collisions.push(collisions);
    }

    /// Adds `gap(i^k)` for every agent.
    pub fn accrue_unconstrained(
        &mut self,
        selections: &[usize],
        ordering: &ArmOrdering,
    ) -> Result<()> {
        self.check(selections, ordering.gaps.len())?;
        self.push(selections.iter().map(|&i| ordering.gaps[i]), 0);
        Ok(())
    }

    /// Agent `k` loses `m_{b^{rank_k}} - m_{i^k}` when alone on its arm and
    /// `m_{b^{rank_k}}` when it collided. Returns the number of colliding agents.
    pub fn accrue_constrained(
        &mut self,
        selections: &[usize],
        instance: &BanditInstance,
        ordering: &ArmOrdering,
        ranks: &RankAssignment,
    ) -> Result<u32> {
        let n = instance.num_arms();
        self.check(selections, n)?;
        if ranks.ranks().len() != self.num_agents {
            return Err(Error::DimensionMismatch(format!(
                "{} ranks for {} agents",
                ranks.ranks().len(),
                self.num_agents
            )));
        }
        let mut load = std::mem::take(&mut self.arm_load);
        load.clear();
        load.resize(n, 0);
        for &i in selections {
            load[i] += 1;
        }
        let collided = selections.iter().filter(|&&i| load[i] > 1).count() as u32;
        let increments = selections.iter().enumerate().map(|(k, &i)| {
            let target = instance.mean(ordering.order[ranks.rank(k) - 1]);
            if load[i] == 1 {
                target - instance.mean(i)
            } else {
                target
            }
        });
        self.push(increments, collided);
        self.arm_load = load;
        Ok(collided)
    }

    fn check(&self, selections: &[usize], num_arms: usize) -> Result<()> {
        if selections.len() != self.num_agents {
            return Err(Error::DimensionMismatch(format!(
                "{} selections for {} agents",
                selections.len(),
                self.num_agents
            )));
        }
        if let Some(&arm) = selections.iter().find(|&&i| i >= num_arms) {
            return Err(Error::InvalidArm { arm, num_arms });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Cor1Upper,
    Cor2Upper,
    ConciseUpper,
    FusionLowerUnc,
    FusionLowerCon,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Cor1Upper => "cor1_upper",
            BoundKind::Cor2Upper => "cor2_upper",
            BoundKind::ConciseUpper => "concise_upper",
            BoundKind::FusionLowerUnc => "fusion_lower_unc",
            BoundKind::FusionLowerCon => "fusion_lower_con",
        }
    }
}

/// A bound evaluated at `t = 1..=T`; `values[t - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub values: Vec<f64>,
}

impl BoundCurve {
    fn tabulate(kind: BoundKind, horizon: usize, f: impl Fn(f64) -> f64) -> Self {
        Self {
            kind,
            values: (1..=horizon).map(|t| f(t as f64)).collect(),
        }
    }
}

/// `t_k^dagger = ceil(f^{-1}(eps_c^k))`.
pub fn t_dagger(eps_c: f64, params: &PolicyParams) -> f64 {
    params.f_kind.inverse(eps_c).ceil()
}

fn shared_constant(
    params: &PolicyParams,
    num_agents: usize,
    eps_n: f64,
    eps_c: &[f64],
    multiplier: f64,
) -> f64 {
    let (gamma, eta) = (params.gamma, params.eta);
    let m = num_agents as f64;
    let warmup: f64 = eps_c.iter().map(|&e| t_dagger(e, params) - 1.0).sum();
    let tail = 1.0 / ((gamma - 1.0) * (gamma - 1.0))
        + gamma * ((1.0 + eps_n) * (1.0 + eta)).ln() / (gamma - 1.0)
        + 1.0;
    warmup + m * (1.0 + eps_n) + 1.0 + multiplier / (1.0 + eta).ln() * tail
}

/// Constant `L` of the coop-UCB2 selection bound.
pub fn constant_l(params: &PolicyParams, num_agents: usize, eps_n: f64, eps_c: &[f64]) -> f64 {
    shared_constant(params, num_agents, eps_n, eps_c, 2.0 * num_agents as f64)
}

/// Constant `L-bar` of the selective-learning bound.
pub fn constant_l_bar(
    params: &PolicyParams,
    num_agents: usize,
    num_arms: usize,
    eps_n: f64,
    eps_c: &[f64],
) -> f64 {
    shared_constant(
        params,
        num_agents,
        eps_n,
        eps_c,
        2.0 * num_agents as f64 * (num_arms as f64 + 1.0),
    )
}

/// `a (ln T + sqrt(ln^2 T + b ln T f(T)))`, which equals
/// `a ln T (1 + sqrt(1 + b f(T) / ln T))` without dividing by `ln T`.
#[derive(Debug, Clone, Copy)]
struct LogTerm {
    a: f64,
    b: f64,
}

impl LogTerm {
    fn new(gap: f64, params: &PolicyParams, num_agents: usize, gap_power: i32) -> Self {
        let s2 = params.sigma_g * params.sigma_g;
        let g = params.g();
        Self {
            a: 4.0 * s2 * params.gamma / (gap.powi(gap_power) * g),
            b: gap * gap * num_agents as f64 * g / (2.0 * params.gamma * s2),
        }
    }

    fn at(&self, t: f64, params: &PolicyParams) -> f64 {
        let lt = t.ln().max(0.0);
        self.a * (lt + (lt * lt + self.b * lt * params.f_kind.eval(t)).sqrt())
    }
}

fn check_eps(num_agents: usize, eps_n: f64, eps_c: &[f64]) -> Result<()> {
    if num_agents == 0 || eps_c.len() != num_agents {
        return Err(Error::DimensionMismatch(format!(
            "{} eps_c values for {num_agents} agents",
            eps_c.len()
        )));
    }
    if !(eps_n >= 0.0) || eps_c.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::InvalidParameter(
            "indices must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// Group regret bound of coop-UCB2 under the unconstrained model.
#[derive(Debug, Clone)]
pub struct Cor1Bound {
    params: PolicyParams,
    terms: Vec<LogTerm>,
    constant: f64,
}

impl Cor1Bound {
    pub fn new(
        instance: &BanditInstance,
        params: &PolicyParams,
        num_agents: usize,
        eps_n: f64,
        eps_c: &[f64],
    ) -> Result<Self> {
        params.validate()?;
        check_eps(num_agents, eps_n, eps_c)?;
        let ordering = instance.ordering(false)?;
        let l = constant_l(params, num_agents, eps_n, eps_c);
        let terms = ordering
            .gaps
            .iter()
            .filter(|&&d| d > 0.0)
            .map(|&d| LogTerm::new(d, params, num_agents, 1))
            .collect();
        Ok(Self {
            params: *params,
            terms,
            constant: l * ordering.gaps.iter().sum::<f64>(),
        })
    }

    pub fn at(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.at(t, &self.params))
            .sum::<f64>()
            + self.constant
    }

    /// The part that does not grow with `T`.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `lim (bound / ln T)`, i.e. `sum_i 8 sigma_g^2 gamma / (gap_i G)`.
    pub fn log_coefficient(&self) -> f64 {
        self.terms.iter().map(|term| 2.0 * term.a).sum()
    }

    pub fn curve(&self, horizon: usize) -> BoundCurve {
        BoundCurve::tabulate(BoundKind::Cor1Upper, horizon, |t| self.at(t))
    }
}

/// Group regret bound of selective learning under the constrained model.
#[derive(Debug, Clone)]
pub struct Cor2Bound {
    params: PolicyParams,
    term: Option<LogTerm>,
    l_bar: f64,
    num_agents: usize,
    num_arms: usize,
    best_mean: f64,
    top_sum: f64,
}

impl Cor2Bound {
    pub fn new(
        instance: &BanditInstance,
        params: &PolicyParams,
        num_agents: usize,
        eps_n: f64,
        eps_c: &[f64],
    ) -> Result<Self> {
        params.validate()?;
        check_eps(num_agents, eps_n, eps_c)?;
        let n = instance.num_arms();
        if num_agents > n {
            return Err(Error::InvalidParameter(format!(
                "constrained model needs M <= N, got {num_agents} > {n}"
            )));
        }
        let ordering = instance.ordering(true)?;
        let best_mean = instance.mean(ordering.best());
        if best_mean <= 0.0 {
            return Err(Error::NonpositiveBestMean(best_mean));
        }
        let term = ordering
            .delta_min
            .is_finite()
            .then(|| LogTerm::new(ordering.delta_min, params, num_agents, 2));
        Ok(Self {
            params: *params,
            term,
            l_bar: constant_l_bar(params, num_agents, n, eps_n, eps_c),
            num_agents,
            num_arms: n,
            best_mean,
            top_sum: ordering.order[..num_agents]
                .iter()
                .map(|&i| instance.mean(i))
                .sum(),
        })
    }

    /// Bound on the expected number of incorrect selections, `B`.
    pub fn incorrect_selections(&self, t: f64) -> f64 {
        self.term.map_or(0.0, |term| term.at(t, &self.params)) + self.l_bar
    }

    /// `m* N B + sum_{k<=M} m_{b^k} B`
    pub fn at(&self, t: f64) -> f64 {
        (self.best_mean * self.num_arms as f64 + self.top_sum) * self.incorrect_selections(t)
    }

    /// `m* B (M + N)`
    pub fn concise_at(&self, t: f64) -> f64 {
        self.best_mean * self.incorrect_selections(t) * (self.num_agents + self.num_arms) as f64
    }

    pub fn curve(&self, horizon: usize) -> BoundCurve {
        BoundCurve::tabulate(BoundKind::Cor2Upper, horizon, |t| self.at(t))
    }

    pub fn concise_curve(&self, horizon: usize) -> BoundCurve {
        BoundCurve::tabulate(BoundKind::ConciseUpper, horizon, |t| self.concise_at(t))
    }
}

/// Centralized lower-bound curve for Gaussian arms, with the vanishing
/// correction dropped.
pub fn fusion_lower_bound(
    horizon: usize,
    instance: &BanditInstance,
    model: RewardModel,
    num_agents: usize,
) -> Result<BoundCurve> {
    let sigma = match instance.reward_kind() {
        RewardKind::Gaussian { sigma } => sigma,
        _ => return Err(Error::UnsupportedRewardKind),
    };
    let ordering = instance.ordering(false)?;
    // gap / KL with KL = gap^2 / (2 sigma^2)
    let coefficient = |gap: f64| {
        if gap > 0.0 {
            2.0 * sigma * sigma / gap
        } else {
            0.0
        }
    };
    let (kind, coeff) = match model {
        RewardModel::Unconstrained => (
            BoundKind::FusionLowerUnc,
            ordering.gaps.iter().map(|&d| coefficient(d)).sum::<f64>(),
        ),
        RewardModel::Constrained => {
            if num_agents == 0 || num_agents > instance.num_arms() {
                return Err(Error::InvalidParameter(
                    "constrained model needs 1 <= M <= N".into(),
                ));
            }
            let pivot = instance.mean(ordering.order[num_agents - 1]);
            let c = ordering.order[num_agents..]
                .iter()
                .map(|&i| coefficient(pivot - instance.mean(i)))
                .sum();
            (BoundKind::FusionLowerCon, c)
        }
    };
    Ok(BoundCurve::tabulate(kind, horizon, |t| coeff * t.ln()))
}
