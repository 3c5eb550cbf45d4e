//! Communication graphs, the consensus matrix built on them, its spectrum,
//! and the spectral explore-exploit indices derived from that spectrum.
//!
//! Nodes are 0-based in the API. The text edge-list format is 1-based.

mod centrality;
mod consensus;
mod indices;
mod spectrum;

pub use centrality::{degree_centrality, information_centrality};
pub use consensus::{consensus_matrix, ConsensusMatrix, DivisorMode, KappaSpec};
pub use indices::{epsilon_c, epsilon_n, graph_indices, GraphIndices};
pub use spectrum::{eigendecompose, jacobi_eigen, Spectrum};

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resampling cap when drawing a connected Erdős–Rényi graph.
pub const ER_MAX_ATTEMPTS: usize = 10_000;

/// Undirected, connected, simple graph over `num_agents` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_agents: usize,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from 0-based node pairs. Duplicate edges (in either
    /// orientation) collapse to one.
    pub fn new(num_agents: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if num_agents == 0 {
            return Err(Error::InvalidParameter(
                "a graph needs at least one node".into(),
            ));
        }
        let mut adjacency = vec![false; num_agents * num_agents];
        for &(a, b) in edges {
            if a >= num_agents || b >= num_agents || a == b {
                return Err(Error::InvalidEdge(a + 1, b + 1, num_agents));
            }
            adjacency[a * num_agents + b] = true;
            adjacency[b * num_agents + a] = true;
        }
        let neighbors = (0..num_agents)
            .map(|i| {
                (0..num_agents)
                    .filter(|&j| adjacency[i * num_agents + j])
                    .collect()
            })
            .collect();
        let graph = Self {
            num_agents,
            adjacency,
            neighbors,
        };
        if let Some(unreachable) = graph.first_unreachable() {
            return Err(Error::DisconnectedGraph {
                unreachable: unreachable + 1,
            });
        }
        Ok(graph)
    }

    /// Same as [`Graph::new`] but with 1-based node labels.
    pub fn from_one_based(num_agents: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut zero_based = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == 0 || b == 0 {
                return Err(Error::InvalidEdge(a, b, num_agents));
            }
            zero_based.push((a - 1, b - 1));
        }
        Self::new(num_agents, &zero_based)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut seen = vec![false; self.num_agents];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a * self.num_agents + b]
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edges as 0-based pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.num_agents {
            for &b in &self.neighbors[a] {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Dense row-major graph Laplacian `D - A`.
    pub fn laplacian(&self) -> Vec<f64> {
        let m = self.num_agents;
        let mut lap = vec![0.0; m * m];
        for i in 0..m {
            lap[i * m + i] = self.degree(i) as f64;
            for &j in &self.neighbors[i] {
                lap[i * m + j] = -1.0;
            }
        }
        lap
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.num_agents {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .map(|(a, b)| (perm[a], perm[b]))
            .collect();
        Self::new(self.num_agents, &edges)
    }

    /// Serializes to the edge-list text format (1-based).
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.num_agents);
        for (a, b) in self.edges() {
            let _ = writeln!(out, "{} {}", a + 1, b + 1);
        }
        out
    }

    /// Parses the edge-list text format: first non-comment line is `M`, then
    /// one `i j` pair per line (1-based). Lines starting with `#` and blank
    /// lines are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line_no, header) = lines
            .next()
            .ok_or_else(|| Error::Config("edge list is empty".into()))?;
        let num_agents: usize = header.parse().map_err(|_| {
            Error::Config(format!(
                "line {line_no}: expected node count, got {header:?}"
            ))
        })?;
        let mut edges = Vec::new();
        for (line_no, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed: Option<Vec<usize>> = fields.iter().map(|f| f.parse().ok()).collect();
            match parsed.as_deref() {
                Some([a, b]) => edges.push((*a, *b)),
                _ => {
                    return Err(Error::Config(format!(
                        "line {line_no}: expected two node indices, got {line:?}"
                    )))
                }
            }
        }
        Self::from_one_based(num_agents, &edges)
    }
}

/// Named topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Complete,
    Ring,
    Path,
    Star,
    /// Five-node "house": edges 1-2, 1-3, 1-5, 2-4, 2-5, 3-4.
    House,
    /// Four-node graph with edges 1-2, 1-3, 1-4, 2-3.
    FourAgent,
    ErdosRenyi,
}

impl GraphKind {
    pub const ALL: [GraphKind; 7] = [
        GraphKind::Complete,
        GraphKind::Ring,
        GraphKind::Path,
        GraphKind::Star,
        GraphKind::House,
        GraphKind::FourAgent,
        GraphKind::ErdosRenyi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Complete => "complete",
            GraphKind::Ring => "ring",
            GraphKind::Path => "path",
            GraphKind::Star => "star",
            GraphKind::House => "house",
            GraphKind::FourAgent => "four_agent",
            GraphKind::ErdosRenyi => "erdos_renyi",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let name = name.replace('-', "_");
        match name.as_str() {
            "line" => Some(GraphKind::Path),
            "all_to_all" => Some(GraphKind::Complete),
            "er" => Some(GraphKind::ErdosRenyi),
            _ => Self::ALL.into_iter().find(|k| k.name() == name),
        }
    }
}

/// Parses a deterministic graph name with its size: `complete5`, `line7`,
/// `house`, `four_agent`.
pub fn named(name: &str) -> Result<Graph> {
    let lower = name.trim().to_ascii_lowercase();
    let (kind_name, digits) =
        lower.split_at(lower.trim_end_matches(|c: char| c.is_ascii_digit()).len());
    let kind = GraphKind::from_name(kind_name)
        .filter(|k| *k != GraphKind::ErdosRenyi)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown graph '{name}'")))?;
    let m = match (kind, digits) {
        (GraphKind::House, _) => 5,
        (GraphKind::FourAgent, _) => 4,
        (_, "") => {
            return Err(Error::InvalidParameter(format!(
                "graph '{name}' needs a size, e.g. {kind_name}5"
            )))
        }
        (_, d) => d
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad size in '{name}'")))?,
    };
    generate(kind, m, None)
}

/// Builds one of the named deterministic topologies. `ErdosRenyi` requires
/// `er = Some((rho, rng))`; `House` and `FourAgent` ignore `num_agents`.
pub fn generate(
    kind: GraphKind,
    num_agents: usize,
    er: Option<(f64, &mut dyn RngCore)>,
) -> Result<Graph> {
    let m = num_agents;
    match kind {
        GraphKind::Complete => {
            let edges: Vec<_> = (0..m)
                .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
                .collect();
            Graph::new(m, &edges)
        }
        GraphKind::Path => Graph::new(m, &path_edges(m)),
        GraphKind::Ring => {
            let mut edges = path_edges(m);
            if m >= 3 {
                edges.push((m - 1, 0));
            }
            Graph::new(m, &edges)
        }
        GraphKind::Star => {
            let edges: Vec<_> = (1..m).map(|b| (0, b)).collect();
            Graph::new(m, &edges)
        }
        GraphKind::House => {
            Graph::from_one_based(5, &[(1, 2), (1, 3), (1, 5), (2, 4), (2, 5), (3, 4)])
        }
        GraphKind::FourAgent => Graph::from_one_based(4, &[(1, 2), (1, 3), (1, 4), (2, 3)]),
        GraphKind::ErdosRenyi => {
            let (rho, rng) = er.ok_or_else(|| {
                Error::InvalidParameter("erdos_renyi needs an edge probability and an rng".into())
            })?;
            erdos_renyi(m, rho, rng)
        }
    }
}

fn path_edges(m: usize) -> Vec<(usize, usize)> {
    (1..m).map(|b| (b - 1, b)).collect()
}

/// G(M, rho): every pair is linked independently with probability `rho`.
/// The whole graph is redrawn until it is connected.
pub fn erdos_renyi<R: Rng + ?Sized>(num_agents: usize, rho: f64, rng: &mut R) -> Result<Graph> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "edge probability {rho} not in (0, 1]"
        )));
    }
    if num_agents == 0 {
        return Err(Error::InvalidParameter(
            "a graph needs at least one node".into(),
        ));
    }
    for _ in 0..ER_MAX_ATTEMPTS {
        let mut edges = Vec::new();
        for a in 0..num_agents {
            for b in a + 1..num_agents {
                if rho >= 1.0 || rng.random::<f64>() < rho {
                    edges.push((a, b));
                }
            }
        }
        match Graph::new(num_agents, &edges) {
            Ok(g) => return Ok(g),
            Err(Error::DisconnectedGraph { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidParameter(format!(
        "no connected G({num_agents}, {rho}) sample in {ER_MAX_ATTEMPTS} attempts"
    )))
}
