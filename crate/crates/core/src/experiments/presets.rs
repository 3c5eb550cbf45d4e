use serde::{Deserialize, Serialize};

use super::{mix_seed, ArmSpec, ExperimentConfig, GraphSpec, DEFAULT_ETA, DEFAULT_GAMMA};
use crate::graphs::{DivisorMode, KappaSpec};
use crate::policies::FKind;
use crate::regret::RewardModel;

/// Edge probabilities of the large random-graph sweep.
pub const ER_SWEEP_RHOS: [f64; 5] = [0.05, 0.1, 0.2, 0.5, 1.0];
pub const ER_SWEEP_AGENTS: usize = 100;
pub const ER_GRAPHS_PER_RHO: usize = 3;

const ER_SEED_SALT: u64 = 0x4552_5357_4545_5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Four-agent graph, ten arms: agents ordered by `eps_c`.
    Ex1FourAgent,
    /// House graph with a narrower mean prior.
    Ex2House,
    /// Five 5-node graphs, two arms, `kappa = 0.02`: groups ordered by `eps_n`.
    Ex3FiveGraphs,
    /// Same runs as `Ex3FiveGraphs`, read per agent to find each graph's best agent.
    Ex3BestAgent,
    /// 100 agents on Erdős–Rényi graphs of increasing density.
    Ex4ErSweep,
}

/// Desk-scale run count and horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresetScale {
    pub runs: usize,
    pub horizon: usize,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Ex1FourAgent,
        Preset::Ex2House,
        Preset::Ex3FiveGraphs,
        Preset::Ex3BestAgent,
        Preset::Ex4ErSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Ex1FourAgent => "ex1",
            Preset::Ex2House => "ex2",
            Preset::Ex3FiveGraphs => "ex3",
            Preset::Ex3BestAgent => "ex3_best_agent",
            Preset::Ex4ErSweep => "ex4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let name = name.to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|p| {
            p.name() == name
                || serde_json::to_value(p)
                    .ok()
                    .and_then(|v| v.as_str().map(|s| s == name))
                    == Some(true)
        })
    }

    pub fn default_scale(self) -> PresetScale {
        match self {
            Preset::Ex4ErSweep => PresetScale {
                runs: 500,
                horizon: 500,
            },
            _ => PresetScale {
                runs: 5000,
                horizon: 500,
            },
        }
    }

    pub fn configs(self, scale: PresetScale, master_seed: u64) -> Vec<ExperimentConfig> {
        let base =
            |label: String, graph_spec: GraphSpec, n: usize, sd: f64, kappa_spec: KappaSpec| {
                ExperimentConfig {
                    label: Some(label),
                    model: RewardModel::Unconstrained,
                    graph_spec,
                    n,
                    arm_spec: ArmSpec::Resample { mean: 0.0, sd },
                    sigma_s: 30.0,
                    sigma_g: None,
                    gamma: DEFAULT_GAMMA,
                    eta: DEFAULT_ETA,
                    kappa_spec,
                    divisor_mode: DivisorMode::DmaxPlusOne,
                    t: scale.horizon,
                    runs: scale.runs,
                    master_seed,
                    ranks: None,
                    f_kind: FKind::SqrtLog,
                    shift_means_positive: true,
                }
            };
        let five = || {
            [
                ("complete", GraphSpec::Complete { m: 5 }),
                ("ring", GraphSpec::Ring { m: 5 }),
                ("house", GraphSpec::House),
                ("line", GraphSpec::Path { m: 5 }),
                ("star", GraphSpec::Star { m: 5 }),
            ]
        };
        let small_kappa = KappaSpec::Value { value: 0.02 };
        match self {
            Preset::Ex1FourAgent => {
                vec![base(
                    "ex1_four_agent".into(),
                    GraphSpec::FourAgent,
                    10,
                    10.0,
                    KappaSpec::DmaxRatio,
                )]
            }
            Preset::Ex2House => vec![base(
                "ex2_house".into(),
                GraphSpec::House,
                10,
                5.0,
                KappaSpec::DmaxRatio,
            )],
            Preset::Ex3FiveGraphs => five()
                .into_iter()
                .map(|(name, g)| base(format!("ex3:{name}"), g, 2, 10.0, small_kappa))
                .collect(),
            Preset::Ex3BestAgent => five()
                .into_iter()
                .map(|(name, g)| base(format!("ex3_best_agent:{name}"), g, 2, 10.0, small_kappa))
                .collect(),
            Preset::Ex4ErSweep => {
                let mut out = Vec::new();
                for (ri, &rho) in ER_SWEEP_RHOS.iter().enumerate() {
                    for gi in 0..ER_GRAPHS_PER_RHO {
                        let seed = mix_seed(
                            master_seed ^ ER_SEED_SALT,
                            (ri * ER_GRAPHS_PER_RHO + gi) as u64,
                        );
                        let graph = GraphSpec::ErdosRenyi {
                            m: ER_SWEEP_AGENTS,
                            rho,
                            seed: Some(seed),
                        };
                        out.push(base(
                            format!("ex4:rho={rho}:g{}", gi + 1),
                            graph,
                            2,
                            10.0,
                            KappaSpec::DmaxRatio,
                        ));
                    }
                }
                out
            }
        }
    }
}
