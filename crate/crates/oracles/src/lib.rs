//! Brute-force and high-accuracy oracles used to check the main library in
//! tests. Everything here is deliberately independent of the implementation
//! paths it verifies: the SVD is a one-sided Jacobi, sparse projections are
//! found by exhaustive support enumeration, and gradients come from central
//! finite differences.
//!
//! This crate is test support only; it is a dev-dependency of the others
//! and ships nothing at runtime.

use iht_core::linalg::{DenseMatrix, DenseVector};
use iht_core::objective::{self, ProblemInstance};

/// All singular values of `a` in decreasing order, via one-sided Jacobi
/// rotations on the columns. Converges to high accuracy on the small
/// matrices used in tests.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_singular_values(a: &DenseMatrix) -> Vec<f64> {
    let (rows, cols) = (a.rows(), a.cols());
    // Work on the transpose when needed so columns are the short axis.
    if rows < cols {
        return jacobi_singular_values(&a.transpose());
    }
    // Column-major working copy.
    let mut w: Vec<Vec<f64>> = (0..cols)
        .map(|c| (0..rows).map(|r| a.get(r, c)).collect())
        .collect();

    let tol = 1e-14;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: f64 = w[p].iter().map(|x| x * x).sum();
                let beta: f64 = w[q].iter().map(|x| x * x).sum();
                let gamma: f64 = w[p].iter().zip(&w[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= tol * (alpha * beta).sqrt().max(f64::MIN_POSITIVE) {
                    continue;
                }
                off = off.max(gamma.abs());
                // Rotation angle that zeroes the (p, q) inner product.
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let xp = w[p][r];
                    let xq = w[q][r];
                    w[p][r] = c * xp - s * xq;
                    w[q][r] = s * xp + c * xq;
                }
            }
        }
        if off == 0.0 {
            break;
        }
    }
    let mut sigmas: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sigmas.sort_by(|a, b| b.total_cmp(a));
    sigmas
}

/// Minimum squared distance from `x` to any `s`-sparse vector, by
/// exhaustive enumeration of all supports: restricting `x` to a support is
/// the best vector on that support, so the distance is the energy left
/// outside it. Returns the minimum distance and every support attaining it
/// within `tie_tol`.
pub fn best_sparse_approximation(
    x: &DenseVector,
    s: usize,
    tie_tol: f64,
) -> (f64, Vec<Vec<usize>>) {
    let d = x.len();
    assert!(s <= d, "sparsity exceeds dimension");
    let mut best = f64::INFINITY;
    let mut supports: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut current = Vec::with_capacity(s);
    enumerate_supports(d, s, 0, &mut current, &mut |support| {
        let dist: f64 = (0..d)
            .filter(|i| !support.contains(i))
            .map(|i| x[i] * x[i])
            .sum();
        if dist < best {
            best = dist;
        }
        supports.push((dist, support.to_vec()));
    });
    let argmin: Vec<Vec<usize>> = supports
        .into_iter()
        .filter(|(dist, _)| *dist <= best + tie_tol)
        .map(|(_, sup)| sup)
        .collect();
    (best, argmin)
}

fn enumerate_supports(
    d: usize,
    s: usize,
    start: usize,
    current: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if current.len() == s {
        visit(current);
        return;
    }
    let needed = s - current.len();
    for i in start..=(d - needed) {
        current.push(i);
        enumerate_supports(d, s, i + 1, current, visit);
        current.pop();
    }
}

/// Central finite-difference gradient of the objective at `theta`.
pub fn finite_difference_gradient(
    p: &ProblemInstance,
    theta: &DenseVector,
    h: f64,
) -> DenseVector {
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        plus[i] += h;
        let mut minus = theta.clone();
        minus[i] -= h;
        let fp = objective::value(p, &plus).expect("finite value");
        let fm = objective::value(p, &minus).expect("finite value");
        grad.push((fp - fm) / (2.0 * h));
    }
    DenseVector::new(grad)
}

/// Kahan-compensated `||a - b||^2`.
pub fn kahan_squared_distance(a: &DenseVector, b: &DenseVector) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        let term = (x - y) * (x - y) - carry;
        let next = sum + term;
        carry = (next - sum) - term;
        sum = next;
    }
    sum
}
