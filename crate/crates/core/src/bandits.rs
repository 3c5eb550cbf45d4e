//! Stationary arms with sub-Gaussian rewards.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardKind {
    Gaussian {
        sigma: f64,
    },
    /// Reward 1 with probability equal to the arm mean, else 0.
    Bernoulli,
    /// Uniform on `[mean - half_width, mean + half_width]`.
    Uniform {
        half_width: f64,
    },
}

/// `N` arms with known-to-the-simulator means.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    means: Vec<f64>,
    reward: RewardKind,
    sigma_g: f64,
}

impl BanditInstance {
    /// `sigma_g` is the sub-Gaussian parameter handed to the policies; it is
    /// not checked against the reward distribution.
    pub fn new(means: Vec<f64>, reward: RewardKind, sigma_g: f64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one arm is required".into(),
            ));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter("arm means must be finite".into()));
        }
        if !(sigma_g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_g must be positive, got {sigma_g}"
            )));
        }
        match reward {
            RewardKind::Bernoulli if means.iter().any(|m| !(0.0..=1.0).contains(m)) => {
                return Err(Error::InvalidParameter(
                    "Bernoulli means must lie in [0, 1]".into(),
                ))
            }
            RewardKind::Gaussian { sigma } if !(sigma >= 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "sampling sigma must be >= 0, got {sigma}"
                )))
            }
            RewardKind::Uniform { half_width } if !(half_width >= 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "half width must be >= 0, got {half_width}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            means,
            reward,
            sigma_g,
        })
    }

    pub fn gaussian(means: Vec<f64>, sigma_s: f64, sigma_g: f64) -> Result<Self> {
        Self::new(means, RewardKind::Gaussian { sigma: sigma_s }, sigma_g)
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    pub fn reward_kind(&self) -> RewardKind {
        self.reward
    }

    pub fn sigma_g(&self) -> f64 {
        self.sigma_g
    }

    /// Adds `offset` to every mean. Only location families can be shifted.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        if matches!(self.reward, RewardKind::Bernoulli) {
            return Err(Error::InvalidParameter(
                "cannot shift Bernoulli arms".into(),
            ));
        }
        Self::new(
            self.means.iter().map(|m| m + offset).collect(),
            self.reward,
            self.sigma_g,
        )
    }

    /// One independent draw from `arm`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<f64> {
        if arm >= self.means.len() {
            return Err(Error::InvalidArm {
                arm,
                num_arms: self.means.len(),
            });
        }
        Ok(self.draw(arm, rng))
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        let mean = self.means[arm];
        match self.reward {
            RewardKind::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sigma * z
            }
            RewardKind::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardKind::Uniform { half_width } => {
                mean + half_width * (2.0 * rng.random::<f64>() - 1.0)
            }
        }
    }

    /// Arms sorted by decreasing mean, ties by ascending index. In `strict`
    /// mode (the constrained reward model) equal means are an error.
    pub fn ordering(&self, strict: bool) -> Result<ArmOrdering> {
        let n = self.means.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.means[b].total_cmp(&self.means[a]));
        let best = self.means[order[0]];
        let gaps = self.means.iter().map(|m| best - m).collect();
        let mut delta_min = f64::INFINITY;
        for w in order.windows(2) {
            let gap = self.means[w[0]] - self.means[w[1]];
            if strict && gap == 0.0 {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::DuplicateMeans(a, b));
            }
            delta_min = delta_min.min(gap);
        }
        Ok(ArmOrdering {
            order,
            gaps,
            delta_min,
        })
    }
}

/// Ground-truth ranking of the arms.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmOrdering {
    /// `order[r]` is the arm with the `(r+1)`-th largest mean.
    pub order: Vec<usize>,
    /// `gaps[i] = best mean - mean of arm i`.
    pub gaps: Vec<f64>,
    /// Smallest difference between two means; infinite for a single arm.
    pub delta_min: f64,
}

impl ArmOrdering {
    pub fn best(&self) -> usize {
        self.order[0]
    }
}
