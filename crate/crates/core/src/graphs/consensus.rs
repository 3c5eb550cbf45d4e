use serde::{Deserialize, Serialize};

use super::{eigendecompose, Graph};
use crate::error::{Error, Result};

/// Eigenvalues of `P` at or below `-1 + STABILITY_MARGIN` are rejected.
pub const STABILITY_MARGIN: f64 = 1e-12;

/// Divisor `d` in `P = I - (kappa / d) L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisorMode {
    /// `d = d_max`.
    Dmax,
    /// `d = d_max + 1`.
    #[default]
    DmaxPlusOne,
}

impl DivisorMode {
    pub fn divisor(self, max_degree: usize) -> f64 {
        match self {
            DivisorMode::Dmax => max_degree as f64,
            DivisorMode::DmaxPlusOne => (max_degree + 1) as f64,
        }
    }
}

/// How the step size `kappa` is chosen for a graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KappaSpec {
    Value {
        value: f64,
    },
    /// Max-degree rule: `kappa` is picked so the edge weight `kappa / d`
    /// equals `1 / (d_max + 1)`. Under [`DivisorMode::Dmax`] this is
    /// `kappa = d_max / (d_max + 1)`; under [`DivisorMode::DmaxPlusOne`] it is
    /// `kappa = 1`.
    DmaxRatio,
}

impl KappaSpec {
    pub fn resolve(self, graph: &Graph, mode: DivisorMode) -> f64 {
        match self {
            KappaSpec::Value { value } => value,
            KappaSpec::DmaxRatio => {
                let dmax = graph.max_degree();
                if dmax == 0 {
                    return 1.0;
                }
                mode.divisor(dmax) / (dmax + 1) as f64
            }
        }
    }
}

/// Symmetric doubly stochastic consensus matrix `P = I - (kappa / d) L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusMatrix {
    size: usize,
    entries: Vec<f64>,
    kappa: f64,
    divisor_mode: DivisorMode,
    weight: f64,
}

impl ConsensusMatrix {
    /// Wraps an arbitrary symmetric matrix, e.g. a hand-written 2x2 case.
    /// Doubly stochasticity is checked; `kappa` and the weight are reported
    /// as NaN.
    pub fn from_entries(size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size || size == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {size}x{size} matrix",
                entries.len()
            )));
        }
        let p = Self {
            size,
            entries,
            kappa: f64::NAN,
            divisor_mode: DivisorMode::default(),
            weight: f64::NAN,
        };
        p.check_doubly_stochastic(1e-12)?;
        Ok(p)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.size + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn divisor_mode(&self) -> DivisorMode {
        self.divisor_mode
    }

    /// Off-diagonal weight `kappa / d` on every edge.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.size;
        (0..m)
            .map(|r| {
                self.entries[r * m..(r + 1) * m]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Row and column sums within `tol` of one, symmetric within `tol`.
    pub fn check_doubly_stochastic(&self, tol: f64) -> Result<()> {
        let m = self.size;
        for i in 0..m {
            let row: f64 = (0..m).map(|j| self.get(i, j)).sum();
            let col: f64 = (0..m).map(|j| self.get(j, i)).sum();
            if (row - 1.0).abs() > tol || (col - 1.0).abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "row/column {i} of P sums to {row}/{col}, not 1"
                )));
            }
            for j in 0..i {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return Err(Error::InvalidParameter(format!(
                        "P is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Nonzero entries as compressed rows `(row_start, cols, values)`.
    pub fn sparse_rows(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let m = self.size;
        let mut starts = Vec::with_capacity(m + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        starts.push(0);
        for r in 0..m {
            for c in 0..m {
                let v = self.entries[r * m + c];
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            starts.push(cols.len());
        }
        (starts, cols, vals)
    }
}

/// Builds `P = I - (kappa / d) L` and rejects step sizes that push an
/// eigenvalue to `-1` or below.
pub fn consensus_matrix(
    graph: &Graph,
    kappa: f64,
    divisor_mode: DivisorMode,
) -> Result<ConsensusMatrix> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let m = graph.num_agents();
    let dmax = graph.max_degree();
    let weight = if dmax == 0 {
        0.0
    } else {
        kappa / divisor_mode.divisor(dmax)
    };
    let mut entries = graph.laplacian();
    for (idx, e) in entries.iter_mut().enumerate() {
        let identity = if idx / m == idx % m { 1.0 } else { 0.0 };
        *e = identity - weight * *e;
    }
    let p = ConsensusMatrix {
        size: m,
        entries,
        kappa,
        divisor_mode,
        weight,
    };

    // Gershgorin: every eigenvalue of L lies in [0, 2 d_max].
    let gershgorin_floor = 1.0 - 2.0 * weight * dmax as f64;
    if gershgorin_floor <= -1.0 + STABILITY_MARGIN {
        let spectrum = eigendecompose(&p)?;
        let min_eigenvalue = *spectrum.eigenvalues().last().expect("nonempty spectrum");
        if min_eigenvalue <= -1.0 + STABILITY_MARGIN {
            return Err(Error::UnstableStepSize { min_eigenvalue });
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{generate, GraphKind};

    #[test]
    fn path2_matrix() {
        let g = generate(GraphKind::Path, 2, None).unwrap();
        let p = consensus_matrix(&g, 0.5, DivisorMode::DmaxPlusOne).unwrap();
        assert_eq!(p.entries(), &[0.75, 0.25, 0.25, 0.75]);
    }

    #[test]
    fn ring5_small_kappa() {
        let g = generate(GraphKind::Ring, 5, None).unwrap();
        let p = consensus_matrix(&g, 0.02, DivisorMode::DmaxPlusOne).unwrap();
        assert!((p.get(0, 0) - (1.0 - 2.0 / 150.0)).abs() < 1e-15);
        assert!((p.get(0, 1) - 1.0 / 150.0).abs() < 1e-15);
        assert!((p.get(0, 4) - 1.0 / 150.0).abs() < 1e-15);
        assert_eq!(p.get(0, 2), 0.0);
        p.check_doubly_stochastic(1e-12).unwrap();
    }

    #[test]
    fn ring5_unit_weight_is_unstable() {
        let g = generate(GraphKind::Ring, 5, None).unwrap();
        match consensus_matrix(&g, 2.0, DivisorMode::Dmax) {
            Err(Error::UnstableStepSize { min_eigenvalue }) => {
                // 1 - (2 - 2 cos(4 pi / 5)) = -2.618...
                let expected = 1.0 - (2.0 - 2.0 * (4.0 * std::f64::consts::PI / 5.0).cos());
                assert!((min_eigenvalue - expected).abs() < 1e-9, "{min_eigenvalue}");
            }
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn bipartite_graph_at_full_dmax_weight_hits_minus_one() {
        // Path graphs are bipartite; weight 1/d_max = 1 on path(2) gives eigenvalue -1.
        let g = generate(GraphKind::Path, 2, None).unwrap();
        assert!(matches!(
            consensus_matrix(&g, 1.0, DivisorMode::Dmax),
            Err(Error::UnstableStepSize { .. })
        ));
    }

    #[test]
    fn nonpositive_kappa_rejected() {
        let g = generate(GraphKind::Path, 3, None).unwrap();
        assert!(matches!(
            consensus_matrix(&g, 0.0, DivisorMode::Dmax),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn dmax_ratio_gives_max_degree_weight_in_both_modes() {
        let g = generate(GraphKind::FourAgent, 4, None).unwrap();
        for mode in [DivisorMode::Dmax, DivisorMode::DmaxPlusOne] {
            let kappa = KappaSpec::DmaxRatio.resolve(&g, mode);
            let p = consensus_matrix(&g, kappa, mode).unwrap();
            assert!((p.weight() - 0.25).abs() < 1e-15);
        }
        assert!((KappaSpec::DmaxRatio.resolve(&g, DivisorMode::Dmax) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn single_node_is_identity() {
        let g = generate(GraphKind::Complete, 1, None).unwrap();
        let p = consensus_matrix(&g, 1.0, DivisorMode::Dmax).unwrap();
        assert_eq!(p.entries(), &[1.0]);
    }

    #[test]
    fn sparse_rows_match_dense() {
        let g = generate(GraphKind::House, 5, None).unwrap();
        let p = consensus_matrix(&g, 1.0, DivisorMode::DmaxPlusOne).unwrap();
        let (starts, cols, vals) = p.sparse_rows();
        let x = [1.0, -2.0, 0.5, 3.0, 0.25];
        let dense = p.mul_vec(&x);
        for r in 0..5 {
            let s: f64 = (starts[r]..starts[r + 1])
                .map(|k| vals[k] * x[cols[k]])
                .sum();
            assert!((s - dense[r]).abs() < 1e-15);
        }
        assert_eq!(cols.len(), 5 + 2 * 6);
    }

    #[test]
    fn from_entries_validates() {
        assert!(ConsensusMatrix::from_entries(2, vec![0.75, 0.25, 0.25, 0.75]).is_ok());
        assert!(ConsensusMatrix::from_entries(2, vec![0.7, 0.25, 0.25, 0.75]).is_err());
        assert!(ConsensusMatrix::from_entries(2, vec![1.0]).is_err());
    }
}
