//! Truncated singular value decomposition and the rank-s spectral
//! projection.
//!
//! The projection keeps the top-s singular triplets of a matrix, which is
//! the Frobenius-nearest matrix of rank at most s (Eckart-Young). Problem
//! sizes here are small, so the decomposition uses block power iteration:
//! the block is re-orthonormalized every sweep and a small projected SVD
//! separates the triplets inside the block, which keeps clustered singular
//! values from stalling the iteration.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::rng::substream;

const MAX_SWEEPS: usize = 1000;
/// Convergence tolerance on the singular-value change between sweeps,
/// relative to the Frobenius norm (absolute for norms at or below one).
const SIGMA_CHANGE_TOL: f64 = 1e-10;
/// Per-triplet residual tolerance: singular values converge quadratically
/// in the subspace error, so a value-only stopping rule would leave the
/// vectors an order of magnitude less accurate than the values.
const RESIDUAL_TOL: f64 = 1e-10;
/// Extra block columns. The wanted triplets converge at the gap to
/// sigma_{k+p+1}, which keeps clusters at the block boundary from stalling
/// the iteration.
const OVERSAMPLE: usize = 8;
/// Fixed seed for the deterministic start block of the power iteration.
const START_SEED: u64 = 0x5BD1_E995_u64;

/// Top-`k` singular triplets of `a`: singular values in decreasing order and
/// matrices `U` (rows x k), `V` (cols x k) with orthonormal columns such that
/// `a v_i ~= sigma_i u_i`.
pub fn truncated_svd(
    a: &DenseMatrix,
    k: usize,
) -> Result<(DenseVector, DenseMatrix, DenseMatrix)> {
    a.ensure_finite("truncated_svd input")?;
    let (rows, cols) = (a.rows(), a.cols());
    let max_rank = rows.min(cols);
    if k == 0 || k > max_rank {
        return Err(Error::Parameter(format!(
            "rank {k} out of range 1..={max_rank}"
        )));
    }

    let fro = a.frobenius_norm();
    let tol = SIGMA_CHANGE_TOL * fro.max(1.0);
    let res_tol = RESIDUAL_TOL * fro.max(1.0);
    let null_cutoff = f64::EPSILON * fro.max(1.0);
    let block_size = (k + OVERSAMPLE).min(max_rank);

    // Deterministic start block.
    let mut rng = substream(START_SEED, (rows * 31 + cols) as u64);
    let mut v_block: Vec<Vec<f64>> = (0..block_size)
        .map(|_| (0..cols).map(|_| rng.next_normal()).collect())
        .collect();
    orthonormalize_block(&mut v_block, null_cutoff);

    let mut u_block: Vec<Vec<f64>> = vec![vec![0.0; rows]; block_size];
    let mut sigmas_prev = vec![f64::INFINITY; block_size];
    let mut converged = false;

    for _ in 0..MAX_SWEEPS {
        // U <- orth(A V)
        for (u, v) in u_block.iter_mut().zip(&v_block) {
            *u = a.matvec(&DenseVector::new(v.clone())).into_vec();
        }
        orthonormalize_block(&mut u_block, null_cutoff);
        // W <- orth(A^T U)
        let mut w_block: Vec<Vec<f64>> = u_block
            .iter()
            .map(|u| a.matvec_transpose(&DenseVector::new(u.clone())).into_vec())
            .collect();
        orthonormalize_block(&mut w_block, null_cutoff);
        // Projected operator M = U^T A W, separated by its own small SVD.
        let aw: Vec<Vec<f64>> = w_block
            .iter()
            .map(|w| a.matvec(&DenseVector::new(w.clone())).into_vec())
            .collect();
        let mut m = vec![vec![0.0; block_size]; block_size]; // u_i . (A w_j)
        for (i, u) in u_block.iter().enumerate() {
            for (j, awj) in aw.iter().enumerate() {
                m[i][j] = dot_slices(u, awj);
            }
        }
        let (left, sigmas, right) = small_svd(&m);
        u_block = rotate_block(&u_block, &left);
        v_block = rotate_block(&w_block, &right);

        let delta = sigmas
            .iter()
            .take(k)
            .zip(&sigmas_prev)
            .map(|(s, p)| (s - p).abs())
            .fold(0.0f64, f64::max);
        sigmas_prev = sigmas.clone();
        if delta > tol {
            continue;
        }
        // Values settled; accept once the wanted triplets are tight.
        let worst_residual = (0..k)
            .map(|i| {
                let av = a.matvec(&DenseVector::new(v_block[i].clone()));
                (0..rows)
                    .map(|r| (av[r] - sigmas[i] * u_block[i][r]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        if worst_residual <= res_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: MAX_SWEEPS,
            context: format!("rank-{k} block power iteration"),
        });
    }
    v_block.truncate(k);

    // Finalize with exactly paired triplets: sigma_i = ||A v_i||,
    // u_i = A v_i / sigma_i; numerically null directions fall back to
    // orthonormal complements.
    let mut triplets: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::with_capacity(k);
    let mut final_us: Vec<Vec<f64>> = Vec::with_capacity(k);
    for v in &v_block {
        let av = a.matvec(&DenseVector::new(v.clone())).into_vec();
        let sigma = dot_slices(&av, &av).sqrt();
        if sigma <= null_cutoff {
            let u = complement_vector(rows, &final_us);
            final_us.push(u.clone());
            triplets.push((0.0, u, v.clone()));
        } else {
            let u: Vec<f64> = av.iter().map(|x| x / sigma).collect();
            final_us.push(u.clone());
            triplets.push((sigma, u, v.clone()));
        }
    }
    // Ritz order is already decreasing up to roundoff; enforce it.
    triplets.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut sigmas = Vec::with_capacity(k);
    let mut u_mat = DenseMatrix::zeros(rows, k);
    let mut v_mat = DenseMatrix::zeros(cols, k);
    for (j, (sigma, u, v)) in triplets.iter().enumerate() {
        sigmas.push(*sigma);
        for (r, value) in u.iter().enumerate() {
            u_mat.set(r, j, *value);
        }
        for (c, value) in v.iter().enumerate() {
            v_mat.set(c, j, *value);
        }
    }
    Ok((DenseVector::new(sigmas), u_mat, v_mat))
}

fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram-Schmidt with two passes; numerically null columns are
/// replaced by orthonormal complements so the block keeps full rank.
fn orthonormalize_block(block: &mut [Vec<f64>], null_cutoff: f64) {
    let k = block.len();
    for i in 0..k {
        for _pass in 0..2 {
            for j in 0..i {
                let (head, tail) = block.split_at_mut(i);
                let coeff = dot_slices(&tail[0], &head[j]);
                for (x, q) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= coeff * q;
                }
            }
        }
        let norm = dot_slices(&block[i], &block[i]).sqrt();
        if norm <= null_cutoff {
            let prior: Vec<Vec<f64>> = block[..i].to_vec();
            block[i] = complement_vector(block[i].len(), &prior);
        } else {
            for x in block[i].iter_mut() {
                *x /= norm;
            }
        }
    }
}

/// Rotates a block: returns `new[j] = sum_i block[i] * rot[i][j]`.
fn rotate_block(block: &[Vec<f64>], rot: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = block.len();
    let len = block[0].len();
    let mut out = vec![vec![0.0; len]; k];
    for (j, out_col) in out.iter_mut().enumerate() {
        for (i, col) in block.iter().enumerate() {
            let c = rot[i][j];
            if c == 0.0 {
                continue;
            }
            for (o, x) in out_col.iter_mut().zip(col) {
                *o += c * x;
            }
        }
    }
    out
}

/// Dense SVD of a small square matrix by one-sided Jacobi rotations:
/// returns `(left, sigmas, right)` with `m = left * diag(sigmas) * right^T`,
/// singular values in decreasing order.
fn small_svd(m: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let k = m.len();
    // Columns of the working copy; right accumulates the rotations.
    let mut w: Vec<Vec<f64>> = (0..k).map(|c| (0..k).map(|r| m[r][c]).collect()).collect();
    let mut right: Vec<Vec<f64>> = (0..k)
        .map(|r| (0..k).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = dot_slices(&w[p], &w[p]);
                let beta = dot_slices(&w[q], &w[q]);
                let gamma = dot_slices(&w[p], &w[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt().max(f64::MIN_POSITIVE) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..k {
                    let xp = w[p][r];
                    let xq = w[q][r];
                    w[p][r] = c * xp - s * xq;
                    w[q][r] = s * xp + c * xq;
                    let rp = right[r][p];
                    let rq = right[r][q];
                    right[r][p] = c * rp - s * rq;
                    right[r][q] = s * rp + c * rq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<f64> = w.iter().map(|col| dot_slices(col, col).sqrt()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let mut left = vec![vec![0.0; k]; k];
    let mut sigmas = Vec::with_capacity(k);
    let mut right_sorted = vec![vec![0.0; k]; k];
    for (j, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        sigmas.push(sigma);
        for r in 0..k {
            // Null columns keep an identity fallback so the rotation stays
            // well defined; the caller's finalize pass re-derives them.
            left[r][j] = if sigma > 0.0 {
                w[src][r] / sigma
            } else if r == j {
                1.0
            } else {
                0.0
            };
            right_sorted[r][j] = right[r][src];
        }
    }
    (left, sigmas, right_sorted)
}

/// First canonical basis vector with a nonzero residual against `basis`,
/// orthonormalized.
fn complement_vector(len: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    for i in 0..len {
        let mut v = vec![0.0; len];
        v[i] = 1.0;
        for _ in 0..2 {
            for q in basis {
                let coeff = dot_slices(&v, q);
                for (x, qx) in v.iter_mut().zip(q) {
                    *x -= coeff * qx;
                }
            }
        }
        let norm = dot_slices(&v, &v).sqrt();
        if norm > 1e-8 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            return v;
        }
    }
    // Unreachable while basis.len() < len, which the rank bound guarantees.
    let mut v = vec![0.0; len];
    v[0] = 1.0;
    v
}

/// Frobenius-nearest matrix of rank at most `s`: the sum of the top-`s`
/// singular triplets of `a`.
pub fn rank_project(a: &DenseMatrix, s: usize) -> Result<DenseMatrix> {
    let (sigmas, u, v) = truncated_svd(a, s.min(a.rows().min(a.cols())))?;
    let mut out = DenseMatrix::zeros(a.rows(), a.cols());
    for j in 0..sigmas.len() {
        let sigma = sigmas[j];
        if sigma == 0.0 {
            continue;
        }
        for r in 0..a.rows() {
            let scale = sigma * u.get(r, j);
            let row = out.row_mut(r);
            for (c, cell) in row.iter_mut().enumerate() {
                *cell += scale * v.get(c, j);
            }
        }
    }
    Ok(out)
}

/// `sum_{i<=k} sigma_i^2` of `a`: the squared Frobenius norm of the rank-k
/// projection, used by the restricted step-size denominators in matrix mode.
pub fn top_k_singular_energy(a: &DenseMatrix, k: usize) -> Result<f64> {
    let k = k.min(a.rows().min(a.cols()));
    let (sigmas, _, _) = truncated_svd(a, k)?;
    Ok(sigmas.iter().map(|s| s * s).sum())
}
