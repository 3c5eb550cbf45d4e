//! coop-UCB2 and coop-UCB2 with selective learning.
//!
//! Arms and agents are 0-based here; ranks are 1-based (`1..=M`). The time
//! passed to the bonus is `tau = t - 1`, the step whose estimates are used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::EstimateState;

/// Sublogarithmic `f` in the bonus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FKind {
    /// `f(t) = sqrt(ln t)`
    #[default]
    SqrtLog,
}

impl FKind {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            FKind::SqrtLog => t.ln().max(0.0).sqrt(),
        }
    }

    /// Smallest `t` with `f(t) >= x`, for `x >= 0`.
    pub fn inverse(self, x: f64) -> f64 {
        match self {
            FKind::SqrtLog => (x * x).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub gamma: f64,
    pub eta: f64,
    pub sigma_g: f64,
    #[serde(default)]
    pub f_kind: FKind,
}

impl PolicyParams {
    pub fn new(gamma: f64, eta: f64, sigma_g: f64) -> Result<Self> {
        let p = Self {
            gamma,
            eta,
            sigma_g,
            f_kind: FKind::SqrtLog,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if !(self.eta > 0.0 && self.eta < 4.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in (0, 4), got {}",
                self.eta
            )));
        }
        if !(self.sigma_g > 0.0) || !self.sigma_g.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma_g must be positive, got {}",
                self.sigma_g
            )));
        }
        Ok(())
    }

    /// `G(eta) = 1 - eta^2 / 16`
    pub fn g(&self) -> f64 {
        1.0 - self.eta * self.eta / 16.0
    }
}

/// The parts of the bonus that depend only on `(tau, params, M)`, so a step
/// evaluates `ln` and `f` once for all agents and arms.
#[derive(Debug, Clone, Copy)]
pub struct Bonus {
    scale: f64,
    ln_tau: f64,
    f_tau: f64,
}

impl Bonus {
    pub fn new(tau: f64, params: &PolicyParams, num_agents: usize) -> Self {
        Self {
            scale: params.sigma_g * params.sigma_g * 2.0 * params.gamma
                / (params.g() * num_agents as f64),
            ln_tau: tau.ln().max(0.0),
            f_tau: params.f_kind.eval(tau),
        }
    }

    /// `C` for an estimated count of `n_hat`; infinite when the arm is unsampled.
    pub fn at(&self, n_hat: f64) -> f64 {
        if n_hat <= 0.0 {
            return f64::INFINITY;
        }
        (self.scale * (n_hat + self.f_tau) * self.ln_tau / (n_hat * n_hat)).sqrt()
    }
}

/// `sigma_g * sqrt((2 gamma / G) * (n + f(tau)) / (M n) * ln(tau) / n)`.
pub fn ucb_bonus(n_hat: f64, tau: f64, params: &PolicyParams, num_agents: usize) -> f64 {
    Bonus::new(tau, params, num_agents).at(n_hat)
}

/// Upper and lower confidence scores `Q = mu + C`, `W = mu - C` of one agent.
/// Unsampled arms get `Q = +inf`, `W = -inf`.
pub fn scores(n_row: &[f64], s_row: &[f64], bonus: &Bonus, q: &mut [f64], w: &mut [f64]) {
    for i in 0..n_row.len() {
        let n = n_row[i];
        if n <= 0.0 {
            q[i] = f64::INFINITY;
            w[i] = f64::NEG_INFINITY;
        } else {
            let mu = s_row[i] / n;
            let c = bonus.at(n);
            q[i] = mu + c;
            w[i] = mu - c;
        }
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// coop-UCB2 choice of one agent at step `t >= 1`.
pub fn coop_ucb2_select(
    state: &EstimateState,
    agent: usize,
    t: usize,
    params: &PolicyParams,
) -> usize {
    let n = state.num_arms();
    if t <= n {
        return t - 1;
    }
    let bonus = Bonus::new((t - 1) as f64, params, state.num_agents());
    select_max_q(state.n_hat_row(agent), state.s_hat_row(agent), &bonus)
}

/// argmax of `Q` without materializing the score vector.
pub fn select_max_q(n_row: &[f64], s_row: &[f64], bonus: &Bonus) -> usize {
    let mut best = 0;
    let mut best_q = f64::NEG_INFINITY;
    for i in 0..n_row.len() {
        let n = n_row[i];
        let q = if n <= 0.0 {
            f64::INFINITY
        } else {
            s_row[i] / n + bonus.at(n)
        };
        if q > best_q || i == 0 {
            best = i;
            best_q = q;
        }
    }
    best
}

/// Preassigned ranks, `ranks[k]` in `1..=M`, each used once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankAssignment {
    ranks: Vec<usize>,
}

impl RankAssignment {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let m = ranks.len();
        let mut seen = vec![false; m];
        for &r in &ranks {
            if r == 0 || r > m {
                return Err(Error::RankOutOfRange { rank: r, max: m });
            }
            if seen[r - 1] {
                return Err(Error::InvalidParameter(format!("rank {r} assigned twice")));
            }
            seen[r - 1] = true;
        }
        Ok(Self { ranks })
    }

    /// Agent `k` gets rank `k + 1`.
    pub fn identity(num_agents: usize) -> Self {
        Self {
            ranks: (1..=num_agents).collect(),
        }
    }

    pub fn rank(&self, agent: usize) -> usize {
        self.ranks[agent]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }
}

/// Selective-learning choice of one agent with rank `rank` at step `t >= 1`.
pub fn selective_learning_select(
    state: &EstimateState,
    agent: usize,
    rank: usize,
    t: usize,
    params: &PolicyParams,
) -> Result<usize> {
    let n = state.num_arms();
    let max = state.num_agents().min(n);
    if rank == 0 || rank > max {
        return Err(Error::RankOutOfRange { rank, max });
    }
    if t <= n {
        return Ok((t + rank - 2) % n);
    }
    let bonus = Bonus::new((t - 1) as f64, params, state.num_agents());
    let mut q = vec![0.0; n];
    let mut w = vec![0.0; n];
    scores(
        state.n_hat_row(agent),
        state.s_hat_row(agent),
        &bonus,
        &mut q,
        &mut w,
    );
    Ok(select_from_scores(&q, &w, rank))
}

/// Among the `rank` arms with the largest `Q` (stable, lowest index first),
/// the one with the smallest `W` (lowest index on ties).
pub fn select_from_scores(q: &[f64], w: &[f64], rank: usize) -> usize {
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]));
    let top = &order[..rank];
    let mut best = top[0];
    for &i in &top[1..] {
        if w[i] < w[best] || (w[i] == w[best] && i < best) {
            best = i;
        }
    }
    best
}
