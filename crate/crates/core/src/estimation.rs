//! Running-consensus estimation of per-arm pull counts and reward totals.
//!
//! Each step every agent adds its own observation to its current estimate and
//! then averages with its neighbors through `P`:
//!
//! ```text
//! n_hat_i <- P (n_hat_i + xi_i)
//! s_hat_i <- P (s_hat_i + r_i)
//! ```
//!
//! where `xi_i[k]` is 1 if agent `k` pulled arm `i` and `r_i[k]` is the value
//! it observed there (0 otherwise).

use crate::error::{Error, Result};
use crate::graphs::ConsensusMatrix;
use crate::policies::PolicyParams;

/// `P` in the form used by the simulation loop.
///
/// Sparse rows by default. When every edge carries the same weight `w` and
/// the graph is dense, `P x` is evaluated from the complement instead:
/// `(P x)_k = P_kk x_k + w (sum(x) - x_k - sum_{j not adjacent to k} x_j)`,
/// which costs `O(M)` on the complete graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusOperator {
    size: usize,
    form: Form,
}

#[derive(Debug, Clone, PartialEq)]
enum Form {
    Rows {
        row_starts: Vec<usize>,
        cols: Vec<usize>,
        values: Vec<f64>,
    },
    Complement {
        diagonal: Vec<f64>,
        weight: f64,
        row_starts: Vec<usize>,
        cols: Vec<usize>,
    },
}

impl ConsensusOperator {
    pub fn new(p: &ConsensusMatrix) -> Self {
        let m = p.size();
        let mut weight = None;
        let mut uniform = true;
        let mut edges = 0usize;
        for r in 0..m {
            for c in 0..m {
                let v = p.get(r, c);
                if r == c || v == 0.0 {
                    continue;
                }
                edges += 1;
                match weight {
                    None => weight = Some(v),
                    Some(w) if w != v => uniform = false,
                    _ => {}
                }
            }
        }
        let pairs = m * m.saturating_sub(1);
        if let (true, Some(weight)) = (uniform, weight) {
            if 2 * edges > pairs {
                let mut row_starts = vec![0];
                let mut cols = Vec::new();
                for r in 0..m {
                    cols.extend((0..m).filter(|&c| c != r && p.get(r, c) == 0.0));
                    row_starts.push(cols.len());
                }
                let diagonal = (0..m).map(|k| p.get(k, k)).collect();
                return Self {
                    size: m,
                    form: Form::Complement {
                        diagonal,
                        weight,
                        row_starts,
                        cols,
                    },
                };
            }
        }
        let (row_starts, cols, values) = p.sparse_rows();
        Self {
            size: m,
            form: Form::Rows {
                row_starts,
                cols,
                values,
            },
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `out = P x` applied blockwise: `x` holds `size` consecutive blocks of
    /// `width` values and block `k` of `out` mixes the blocks of `x`.
    fn apply_blocks(&self, x: &[f64], out: &mut [f64], width: usize) {
        let m = self.size;
        match &self.form {
            Form::Rows {
                row_starts,
                cols,
                values,
            } => {
                for k in 0..m {
                    let dst = &mut out[k * width..(k + 1) * width];
                    dst.iter_mut().for_each(|v| *v = 0.0);
                    for idx in row_starts[k]..row_starts[k + 1] {
                        let w = values[idx];
                        let src = &x[cols[idx] * width..(cols[idx] + 1) * width];
                        for (o, s) in dst.iter_mut().zip(src) {
                            *o += w * s;
                        }
                    }
                }
            }
            Form::Complement {
                diagonal,
                weight,
                row_starts,
                cols,
            } => {
                let mut total = vec![0.0; width];
                for block in x.chunks_exact(width) {
                    for (t, v) in total.iter_mut().zip(block) {
                        *t += v;
                    }
                }
                for k in 0..m {
                    let dst = &mut out[k * width..(k + 1) * width];
                    let own = &x[k * width..(k + 1) * width];
                    for ((o, t), v) in dst.iter_mut().zip(&total).zip(own) {
                        *o = t - v;
                    }
                    for &j in &cols[row_starts[k]..row_starts[k + 1]] {
                        for (o, s) in dst.iter_mut().zip(&x[j * width..(j + 1) * width]) {
                            *o -= s;
                        }
                    }
                    for (o, v) in dst.iter_mut().zip(own) {
                        *o = diagonal[k] * v + weight * *o;
                    }
                }
            }
        }
    }
}

impl From<&ConsensusMatrix> for ConsensusOperator {
    fn from(p: &ConsensusMatrix) -> Self {
        Self::new(p)
    }
}

/// What every agent did in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepObservation {
    /// Arm pulled by each agent.
    pub selections: Vec<usize>,
    /// Value each agent observed at its arm (observed even under a collision).
    pub realized: Vec<f64>,
}

/// Per-agent, per-arm running-consensus accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateState {
    num_agents: usize,
    num_arms: usize,
    /// Agent-major: agent `k` owns `[k * 2N, (k + 1) * 2N)`, counts first,
    /// then reward sums.
    values: Vec<f64>,
    scratch: Vec<f64>,
    total_pulls: Vec<u64>,
    t: usize,
}

impl EstimateState {
    /// All-zero estimates at `t = 0`.
    pub fn new(num_agents: usize, num_arms: usize) -> Result<Self> {
        if num_agents == 0 || num_arms == 0 {
            return Err(Error::InvalidParameter(
                "need at least one agent and one arm".into(),
            ));
        }
        let len = num_agents * num_arms * 2;
        Ok(Self {
            num_agents,
            num_arms,
            values: vec![0.0; len],
            scratch: vec![0.0; len],
            total_pulls: vec![0; num_arms],
            t: 0,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    /// Steps taken so far.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n_hat(&self, agent: usize, arm: usize) -> f64 {
        self.values[agent * 2 * self.num_arms + arm]
    }

    pub fn s_hat(&self, agent: usize, arm: usize) -> f64 {
        self.values[agent * 2 * self.num_arms + self.num_arms + arm]
    }

    /// Counts estimated by `agent`, one per arm.
    pub fn n_hat_row(&self, agent: usize) -> &[f64] {
        let base = agent * 2 * self.num_arms;
        &self.values[base..base + self.num_arms]
    }

    /// Reward sums estimated by `agent`, one per arm.
    pub fn s_hat_row(&self, agent: usize) -> &[f64] {
        let base = agent * 2 * self.num_arms + self.num_arms;
        &self.values[base..base + self.num_arms]
    }

    /// Pulls of `arm` by all agents so far.
    pub fn total_pulls(&self, arm: usize) -> u64 {
        self.total_pulls[arm]
    }

    /// Centralized per-agent pull count `n_i^cent(t)`.
    pub fn n_cent(&self, arm: usize) -> f64 {
        self.total_pulls[arm] as f64 / self.num_agents as f64
    }

    /// Estimated empirical mean `s_hat / n_hat`.
    pub fn mu_hat(&self, agent: usize, arm: usize) -> Result<f64> {
        let n = self.n_hat(agent, arm);
        if n == 0.0 {
            return Err(Error::UnsampledArm { agent, arm });
        }
        Ok(self.s_hat(agent, arm) / n)
    }

    /// Adds one step of observations and mixes through `op`.
    pub fn consensus_step(&mut self, op: &ConsensusOperator, obs: &StepObservation) -> Result<()> {
        let (m, n) = (self.num_agents, self.num_arms);
        if op.size != m || obs.selections.len() != m || obs.realized.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "state has {m} agents, operator {} and observation {}/{}",
                op.size,
                obs.selections.len(),
                obs.realized.len()
            )));
        }
        if let Some(&arm) = obs.selections.iter().find(|&&a| a >= n) {
            return Err(Error::InvalidArm { arm, num_arms: n });
        }

        let width = 2 * n;
        for (k, (&arm, &r)) in obs.selections.iter().zip(&obs.realized).enumerate() {
            self.values[k * width + arm] += 1.0;
            self.values[k * width + n + arm] += r;
            self.total_pulls[arm] += 1;
        }
        op.apply_blocks(&self.values, &mut self.scratch, width);
        std::mem::swap(&mut self.values, &mut self.scratch);
        self.t += 1;
        Ok(())
    }
}

/// Tail bound on the normalized estimation error
/// `(s_hat - m n_hat) / sqrt((n_hat + eps_c) / M)` exceeding `delta` at step
/// `t`, valid when the sampling rule is pre-visible:
/// `ceil(ln(t + eps_n) / ln(1 + eta)) * exp(-delta^2 G(eta) / (2 sigma_g^2))`.
pub fn tail_bound(t: f64, delta: f64, eps_n: f64, params: &PolicyParams) -> f64 {
    let periods = ((t + eps_n).ln() / (1.0 + params.eta).ln()).ceil();
    periods * (-delta * delta * params.g() / (2.0 * params.sigma_g * params.sigma_g)).exp()
}
