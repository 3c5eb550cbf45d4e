use super::Graph;
use crate::error::{Error, Result};

pub fn degree_centrality(graph: &Graph) -> Vec<usize> {
    (0..graph.num_agents()).map(|k| graph.degree(k)).collect()
}

/// Information centrality: the reciprocal of node `k`'s total effective
/// resistance to every other node (the Stephenson–Zelen score divided by M).
///
/// With `B = (L + J)^-1` (`J` all ones), `sum_j R_kj = M B_kk + tr B - 2 sum_j B_kj`.
pub fn information_centrality(graph: &Graph) -> Result<Vec<f64>> {
    let m = graph.num_agents();
    let mut a = graph.laplacian();
    for v in a.iter_mut() {
        *v += 1.0;
    }
    let b = invert(&a, m)?;

    let mut product = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..m {
            product[r * m + c] = (0..m).map(|k| a[r * m + k] * b[k * m + c]).sum();
        }
    }
    let residual = product
        .iter()
        .enumerate()
        .map(|(i, v)| (v - if i / m == i % m { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    if residual > 1e-9 {
        return Err(Error::SingularMatrix);
    }

    let trace: f64 = (0..m).map(|k| b[k * m + k]).sum();
    Ok((0..m)
        .map(|k| {
            let row: f64 = b[k * m..(k + 1) * m].iter().sum();
            1.0 / (m as f64 * b[k * m + k] + trace - 2.0 * row)
        })
        .collect())
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert(matrix: &[f64], m: usize) -> Result<Vec<f64>> {
    let mut a = matrix.to_vec();
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x * m + col].abs().total_cmp(&a[y * m + col].abs()))
            .expect("nonempty range");
        if a[pivot * m + col].abs() < 1e-14 {
            return Err(Error::SingularMatrix);
        }
        if pivot != col {
            for k in 0..m {
                a.swap(pivot * m + k, col * m + k);
                inv.swap(pivot * m + k, col * m + k);
            }
        }
        let diag = a[col * m + col];
        for k in 0..m {
            a[col * m + k] /= diag;
            inv[col * m + k] /= diag;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = a[r * m + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                a[r * m + k] -= f * a[col * m + k];
                inv[r * m + k] -= f * inv[col * m + k];
            }
        }
    }
    Ok(inv)
}
