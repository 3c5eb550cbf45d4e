//! Spectral explore-exploit indices of a consensus matrix.
//!
//! `epsilon_n` bounds every agent's error in estimating the per-agent pull
//! count of an arm; `epsilon_c[k]` enters the concentration bound of agent
//! `k`'s mean estimate. Both are functions of the spectrum alone.

use serde::Serialize;

use super::{centrality, consensus_matrix, eigendecompose, DivisorMode, Graph, Spectrum};
use crate::error::{Error, Result};

/// `|lambda|` this close to one makes a geometric series factor diverge.
pub const DIVERGENCE_MARGIN: f64 = 1e-12;
/// Values this close to zero are round-off and are clamped to exactly zero.
const CLAMP_TOL: f64 = 1e-9;

/// Per-graph and per-node indices at a given step size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphIndices {
    pub epsilon_n: f64,
    pub epsilon_c: Vec<f64>,
    pub degree: Vec<usize>,
    pub info_centrality: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub kappa: f64,
    pub weight: f64,
}

/// Computes every index for `graph` at step size `kappa`.
pub fn graph_indices(graph: &Graph, kappa: f64, mode: DivisorMode) -> Result<GraphIndices> {
    let p = consensus_matrix(graph, kappa, mode)?;
    let spectrum = eigendecompose(&p)?;
    Ok(GraphIndices {
        epsilon_n: epsilon_n(&spectrum)?,
        epsilon_c: epsilon_c(&spectrum)?,
        degree: centrality::degree_centrality(graph),
        info_centrality: centrality::information_centrality(graph)?,
        eigenvalues: spectrum.eigenvalues().to_vec(),
        kappa,
        weight: p.weight(),
    })
}

/// Graph explore-exploit index `sqrt(M) * sum_{p>=2} |l_p| / (1 - |l_p|)`.
pub fn epsilon_n(spectrum: &Spectrum) -> Result<f64> {
    let m = spectrum.size();
    let mut sum = 0.0;
    for (p, &lam) in spectrum.eigenvalues().iter().enumerate().skip(1) {
        let mag = lam.abs();
        if mag >= 1.0 - DIVERGENCE_MARGIN {
            return Err(Error::DivergentIndex {
                index: p + 1,
                magnitude: mag,
            });
        }
        sum += mag / (1.0 - mag);
    }
    Ok((m as f64).sqrt() * sum)
}

/// Eigenvalues closer than this (relative to `max(1, |lambda|)`) share an
/// eigenspace when computing `epsilon_c`.
pub const EIGENSPACE_TOL: f64 = 1e-9;

/// Nodal explore-exploit centrality for every node:
///
/// `eps_c[k] = M * sum_{p>=1} sum_{j>=2} |l_p l_j| / (1 - |l_p l_j|) * a_pj(k)`
///
/// With `z_d = u_p[d] u_p[k] * u_j[d] u_j[k]`, the weight `a_pj(k)` is
/// `sum_d max(z_d, 0)` when `l_p l_j >= 0` and the larger of the positive and
/// (absolute) negative sums of `z_d` otherwise. Each `u_p[d] u_p[k]` is an
/// entry of the eigenprojector, so repeated eigenvalues are handled with the
/// projector onto the whole eigenspace and the result does not depend on the
/// basis the eigensolver happened to return.
pub fn epsilon_c(spectrum: &Spectrum) -> Result<Vec<f64>> {
    let m = spectrum.size();
    let lambdas = spectrum.eigenvalues();
    if let Some((p, &lam)) = lambdas
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, l)| l.abs() >= 1.0 - DIVERGENCE_MARGIN)
    {
        return Err(Error::DivergentIndex {
            index: p + 1,
            magnitude: lam.abs(),
        });
    }
    let blocks = eigenspaces(lambdas);
    let nb = blocks.len();

    // Pairs of one-dimensional eigenspaces reduce to the product-sum form,
    // which can be precomputed independently of the node.
    let mut nu_plus = vec![0.0; nb * nb];
    let mut nu_minus = vec![0.0; nb * nb];
    for a in 0..nb {
        for b in 1..nb {
            if let ([p], [j]) = (blocks[a].members.as_slice(), blocks[b].members.as_slice()) {
                let (mut plus, mut minus) = (0.0, 0.0);
                for d in 0..m {
                    let y = spectrum.component(*p, d) * spectrum.component(*j, d);
                    if y >= 0.0 {
                        plus += y;
                    } else {
                        minus += y;
                    }
                }
                nu_plus[a * nb + b] = plus;
                nu_minus[a * nb + b] = minus;
            }
        }
    }

    let mut column = vec![0.0; m];
    let mut projector_cols: Vec<Vec<f64>> = vec![Vec::new(); nb];
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        for (a, block) in blocks.iter().enumerate() {
            if block.members.len() > 1 {
                column.iter_mut().for_each(|c| *c = 0.0);
                for &p in &block.members {
                    let upk = spectrum.component(p, k);
                    for (d, c) in column.iter_mut().enumerate() {
                        *c += spectrum.component(p, d) * upk;
                    }
                }
                projector_cols[a].clone_from(&column);
            }
        }

        let mut sum = 0.0;
        for a in 0..nb {
            for b in 1..nb {
                let lam_prod = blocks[a].value * blocks[b].value;
                let mag = lam_prod.abs();
                let weight = match (blocks[a].members.as_slice(), blocks[b].members.as_slice()) {
                    ([p], [j]) => {
                        let idx = a * nb + b;
                        let x = spectrum.component(*p, k) * spectrum.component(*j, k);
                        if lam_prod >= 0.0 {
                            if x >= 0.0 {
                                nu_plus[idx] * x
                            } else {
                                nu_minus[idx] * x
                            }
                        } else {
                            nu_minus[idx].abs().max(nu_plus[idx]) * x.abs()
                        }
                    }
                    _ => {
                        let col_a = projector_entries(spectrum, &blocks[a], k, &projector_cols[a]);
                        let col_b = projector_entries(spectrum, &blocks[b], k, &projector_cols[b]);
                        let (mut pos, mut neg) = (0.0, 0.0);
                        for (za, zb) in col_a.iter().zip(&col_b) {
                            let z = za * zb;
                            if z >= 0.0 {
                                pos += z;
                            } else {
                                neg += z;
                            }
                        }
                        if lam_prod >= 0.0 {
                            pos
                        } else {
                            pos.max(-neg)
                        }
                    }
                };
                sum += mag / (1.0 - mag) * weight;
            }
        }
        let value = m as f64 * sum;
        out.push(if value.abs() < CLAMP_TOL { 0.0 } else { value });
    }
    Ok(out)
}

struct Eigenspace {
    value: f64,
    members: Vec<usize>,
}

/// Groups the (descending) eigenvalues into numerically repeated runs.
fn eigenspaces(lambdas: &[f64]) -> Vec<Eigenspace> {
    let mut blocks: Vec<Eigenspace> = Vec::new();
    for (p, &lam) in lambdas.iter().enumerate() {
        match blocks.last_mut() {
            Some(block) if (block.value - lam).abs() <= EIGENSPACE_TOL * lam.abs().max(1.0) => {
                block.members.push(p);
                let n = block.members.len() as f64;
                block.value += (lam - block.value) / n;
            }
            _ => blocks.push(Eigenspace {
                value: lam,
                members: vec![p],
            }),
        }
    }
    blocks
}

/// Column `k` of the eigenprojector of `block`.
fn projector_entries(
    spectrum: &Spectrum,
    block: &Eigenspace,
    k: usize,
    cached: &[f64],
) -> Vec<f64> {
    match block.members.as_slice() {
        [p] => {
            let upk = spectrum.component(*p, k);
            (0..spectrum.size())
                .map(|d| spectrum.component(*p, d) * upk)
                .collect()
        }
        _ => cached.to_vec(),
    }
}
