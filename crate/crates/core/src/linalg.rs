//! Dense vector/matrix containers, the hard-thresholding projection and
//! support extraction.
//!
//! `hard_threshold` is the Euclidean projection onto the set of vectors with
//! at most `s` nonzeros: it keeps the `s` largest-magnitude entries verbatim
//! and zeroes the rest. Magnitude ties are broken lexicographically (the
//! lower coordinate index wins), which makes the operator a deterministic
//! function of its input.

use crate::error::{Error, Result};

/// A dense vector of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    pub fn new(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Errors with `context` if any entry is NaN or infinite.
    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Input(format!("{context}: non-finite entry")))
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        dot(&self.data, &other.data)
    }

    /// Returns `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &DenseVector) -> DenseVector {
        debug_assert_eq!(self.len(), other.len());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + scale * b)
            .collect();
        DenseVector::new(data)
    }

    /// Number of bitwise-nonzero entries.
    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(data: Vec<f64>) -> Self {
        Self::new(data)
    }
}

/// A dense row-major matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl DenseMatrix {
    /// Builds a matrix from row-major storage; `data.len()` must equal
    /// `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Parameter(format!(
                "matrix storage length {} does not match shape {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { data, rows, cols })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Input(format!("{context}: non-finite entry")))
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// `self * x` for a vector of length `cols`.
    pub fn matvec(&self, x: &DenseVector) -> DenseVector {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            out.push(dot(self.row(r), x.as_slice()));
        }
        DenseVector::new(out)
    }

    /// `self^T * x` for a vector of length `rows`, accumulated row by row so
    /// memory access stays sequential.
    pub fn matvec_transpose(&self, x: &DenseVector) -> DenseVector {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let scale = x[r];
            if scale == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o += scale * v;
            }
        }
        DenseVector::new(out)
    }
}

/// Unrolled dot product; the four independent accumulators let the compiler
/// vectorize without reassociating a single serial chain.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in chunks * 4..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// A sorted set of coordinate indices: the support of a sparse vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Builds a support set; indices must be strictly increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter(
                "support indices must be strictly increasing".into(),
            ));
        }
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// True when every index of `other` also lies in `self`.
    pub fn is_superset_of(&self, other: &SupportSet) -> bool {
        other.indices.iter().all(|i| self.contains(*i))
    }

    /// Number of indices shared with `other`.
    pub fn intersection_size(&self, other: &SupportSet) -> usize {
        let (mut a, mut b, mut count) = (0, 0, 0);
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    a += 1;
                    b += 1;
                }
            }
        }
        count
    }
}

/// Indices of the bitwise-nonzero entries of `x`, in increasing order.
///
/// The test is exact (`x_i != 0.0`), not an epsilon: hard thresholding
/// writes literal zeros, and an epsilon test would corrupt support metrics.
pub fn support(x: &DenseVector) -> SupportSet {
    SupportSet {
        indices: (0..x.len()).filter(|&i| x[i] != 0.0).collect(),
    }
}

/// Keeps the `s` largest-magnitude entries of `x` verbatim, zeroing the rest.
///
/// Among equal magnitudes the lower index wins, so the output is the unique
/// lexicographic Euclidean projection of `x` onto `{v : ||v||_0 <= s}`.
pub fn hard_threshold(x: &DenseVector, s: usize) -> Result<DenseVector> {
    let d = x.len();
    if s > d {
        return Err(Error::Parameter(format!(
            "sparsity level {s} exceeds dimension {d}"
        )));
    }
    if s == 0 {
        return Ok(DenseVector::zeros(d));
    }
    if s == d {
        return Ok(x.clone());
    }
    let mut order: Vec<u32> = (0..d as u32).collect();
    // Total order: larger magnitude first, index breaks ties. Quickselect
    // then costs O(d) on average and the selected set is unique.
    order.select_nth_unstable_by(s - 1, |&a, &b| {
        x[b as usize]
            .abs()
            .total_cmp(&x[a as usize].abs())
            .then(a.cmp(&b))
    });
    let mut out = DenseVector::zeros(d);
    for &i in &order[..s] {
        out[i as usize] = x[i as usize];
    }
    Ok(out)
}

/// Squared norm of the `k` largest-magnitude entries of `x`, i.e.
/// `||hard_threshold(x, k)||^2` without materializing the projection.
pub fn top_k_norm_sq(x: &DenseVector, k: usize) -> f64 {
    let d = x.len();
    if k == 0 {
        return 0.0;
    }
    if k >= d {
        return x.norm_sq();
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v * v).collect();
    mags.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    mags[..k].iter().sum()
}
