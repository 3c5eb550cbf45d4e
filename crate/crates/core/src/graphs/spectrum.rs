use super::ConsensusMatrix;
use crate::error::{Error, Result};

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius residual at which the iteration stops, relative to
/// `max(1, ||A||_F)`.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Eigenpairs of a consensus matrix, eigenvalues sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    size: usize,
    eigenvalues: Vec<f64>,
    /// Row-major; column `p` is the unit eigenvector for `eigenvalues[p]`.
    eigenvectors: Vec<f64>,
}

impl Spectrum {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Entry `node` of eigenvector `p`.
    pub fn component(&self, p: usize, node: usize) -> f64 {
        self.eigenvectors[node * self.size + p]
    }

    pub fn eigenvector(&self, p: usize) -> Vec<f64> {
        (0..self.size).map(|node| self.component(p, node)).collect()
    }

    /// `sum_p lambda_p u_p u_p^T`, row-major.
    pub fn reconstruct(&self) -> Vec<f64> {
        let m = self.size;
        let mut out = vec![0.0; m * m];
        for p in 0..m {
            let lam = self.eigenvalues[p];
            for r in 0..m {
                let ur = lam * self.component(p, r);
                for c in 0..m {
                    out[r * m + c] += ur * self.component(p, c);
                }
            }
        }
        out
    }
}

/// Full eigendecomposition of a consensus matrix.
///
/// Eigenpairs are stably sorted by descending eigenvalue, so exact ties keep
/// the solver's order. Each eigenvector is signed so its component sum is
/// positive (largest-magnitude component positive when the sum vanishes),
/// which makes `u_1 = 1/sqrt(M)` with a positive sign.
pub fn eigendecompose(p: &ConsensusMatrix) -> Result<Spectrum> {
    let m = p.size();
    let (values, vectors) = jacobi_eigen(p.entries(), m)?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut eigenvalues = Vec::with_capacity(m);
    let mut eigenvectors = vec![0.0; m * m];
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(values[src]);
        let col: Vec<f64> = (0..m).map(|r| vectors[r * m + src]).collect();
        let sum: f64 = col.iter().sum();
        let sign = if sum.abs() > 1e-9 {
            sum.signum()
        } else {
            let pivot =
                col.iter().copied().fold(
                    0.0_f64,
                    |best, v| if v.abs() > best.abs() { v } else { best },
                );
            if pivot < 0.0 {
                -1.0
            } else {
                1.0
            }
        };
        for r in 0..m {
            eigenvectors[r * m + dst] = sign * col[r];
        }
    }
    Ok(Spectrum {
        size: m,
        eigenvalues,
        eigenvectors,
    })
}

/// Cyclic Jacobi diagonalization of a dense symmetric row-major matrix.
///
/// Returns `(eigenvalues, eigenvectors)` in solver order; column `j` of the
/// row-major eigenvector matrix pairs with `eigenvalues[j]`.
pub fn jacobi_eigen(matrix: &[f64], m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    jacobi_with_cap(matrix, m, MAX_SWEEPS)
}

fn jacobi_with_cap(matrix: &[f64], m: usize, max_sweeps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if matrix.len() != m * m {
        return Err(Error::DimensionMismatch(format!(
            "{} entries for a {m}x{m} matrix",
            matrix.len()
        )));
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = OFF_DIAGONAL_TOL * frob.max(1.0);

    let mut residual = off_diagonal_norm(&a, m);
    let mut sweeps = 0;
    while residual > tol {
        if sweeps == max_sweeps {
            return Err(Error::ConvergenceFailure { sweeps, residual });
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                a[p * m + q] = 0.0;
                a[q * m + p] = 0.0;
                for k in 0..m {
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        residual = off_diagonal_norm(&a, m);
    }
    let values = (0..m).map(|i| a[i * m + i]).collect();
    Ok((values, v))
}

fn off_diagonal_norm(a: &[f64], m: usize) -> f64 {
    let mut acc = 0.0;
    for r in 0..m {
        for c in 0..m {
            if r != c {
                acc += a[r * m + c] * a[r * m + c];
            }
        }
    }
    acc.sqrt()
}
