//! Small dense symmetric matrices and their eigen-decomposition.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 8;
const MAX_PACKED: usize = MAX_DIM * (MAX_DIM + 1) / 2;

const JACOBI_MAX_SWEEPS: usize = 30;
const JACOBI_REL_THRESHOLD: f64 = 1e-14;

#[inline]
fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    r * dim - r * (r + 1) / 2 + c
}

/// Symmetric `dim x dim` matrix stored as its upper triangle, row-major.
///
/// Only one triangle exists, so symmetry holds by construction.
#[derive(Clone, Copy, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    packed: [f64; MAX_PACKED],
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range 1..=8");
        SymMatrix {
            dim,
            packed: [0.0; MAX_PACKED],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, a: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, a);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from its upper triangle in row-major order
    /// (`n(n+1)/2` entries).
    pub fn from_upper(dim: usize, upper: &[f64]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidInput(format!(
                "matrix dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        let expected = dim * (dim + 1) / 2;
        if upper.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} upper-triangle entries, got {}",
                upper.len()
            )));
        }
        if let Some((k, &v)) = upper.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("packed entry {k}"),
                value: v,
            });
        }
        let mut m = Self::zeros(dim);
        m.packed[..expected].copy_from_slice(upper);
        Ok(m)
    }

    /// Builds a matrix by evaluating `f(i, j)` for `i <= j`.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(dim: usize, mut f: F) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Rank-one matrix `v v^T`.
    pub fn outer(v: &[f64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(self.dim, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = packed_index(self.dim, i, j);
        self.packed[k] = value;
    }

    /// Upper-triangle entries in storage order.
    pub fn upper(&self) -> &[f64] {
        &self.packed[..self.dim * (self.dim + 1) / 2]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(self * other)`, i.e. the Frobenius inner product.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.get(i, i) * other.get(i, i);
            for j in i + 1..self.dim {
                s += 2.0 * self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.upper().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.get(i, i).powi(2);
            for j in i + 1..self.dim {
                s += 2.0 * self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.upper().iter().all(|v| v.is_finite())
    }

    pub fn to_dense(&self) -> [[f64; MAX_DIM]; MAX_DIM] {
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in a.iter_mut().enumerate().take(self.dim) {
            for (j, cell) in row.iter_mut().enumerate().take(self.dim) {
                *cell = self.get(i, j);
            }
        }
        a
    }

    /// `x^T M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.get(i, i) * x[i] * x[i];
            for j in i + 1..self.dim {
                s += 2.0 * self.get(i, j) * x[i] * x[j];
            }
        }
        s
    }

    /// `Q^T M Q` for a dense square `q` given by columns.
    pub fn congruence(&self, columns: &[[f64; MAX_DIM]]) -> SymMatrix {
        let n = self.dim;
        let mut out = SymMatrix::zeros(n);
        for a in 0..n {
            for b in a..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += columns[a][i] * self.get(i, j) * columns[b][j];
                    }
                }
                out.set(a, b, s);
            }
        }
        out
    }

    fn zip_with(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> SymMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = *self;
        for (o, b) in out.packed.iter_mut().zip(other.packed.iter()) {
            *o = f(*o, *b);
        }
        out
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<f64>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect();
        f.debug_struct("SymMatrix").field("rows", &rows).finish()
    }
}

impl Add for SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: SymMatrix) -> SymMatrix {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: SymMatrix) -> SymMatrix {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl Mul<f64> for SymMatrix {
    type Output = SymMatrix;
    fn mul(mut self, rhs: f64) -> SymMatrix {
        for v in self.packed.iter_mut() {
            *v *= rhs;
        }
        self
    }
}

impl Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self * -1.0
    }
}

/// Eigen-decomposition `X = Q diag(e) Q^T`.
///
/// Eigenvalues are sorted in descending order. Each eigenvector is
/// sign-normalized so that its largest-magnitude entry (first one on ties)
/// is positive, and equal eigenvalues are ordered by descending
/// lexicographic comparison of their eigenvectors. With these rules the
/// identity matrix decomposes with the identity frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    dim: usize,
    values: [f64; MAX_DIM],
    vectors: [[f64; MAX_DIM]; MAX_DIM],
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    /// The `k`-th unit eigenvector.
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k][..self.dim]
    }

    pub fn vectors(&self) -> &[[f64; MAX_DIM]] {
        &self.vectors[..self.dim]
    }

    /// `sum_k g(e_k) q_k q_k^T`.
    pub fn map_eigenvalues<F: Fn(f64) -> f64>(&self, g: F) -> SymMatrix {
        let n = self.dim;
        let mut out = SymMatrix::zeros(n);
        for k in 0..n {
            let w = g(self.values[k]);
            if w == 0.0 {
                continue;
            }
            let q = &self.vectors[k];
            for i in 0..n {
                for j in i..n {
                    let v = out.get(i, j) + w * q[i] * q[j];
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map_eigenvalues(|e| e)
    }

    /// `max |Q^T Q - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|i| self.vectors[a][i] * self.vectors[b][i]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Sum of absolute eigenvalues, written `|X|`.
    pub fn abs_sum(&self) -> f64 {
        self.eigenvalues().iter().map(|e| e.abs()).sum()
    }

    /// `(Tr X^+, Tr X^-)`, each summed in increasing magnitude so that the
    /// parts of `-X` are bit-for-bit those of `X` swapped.
    pub fn trace_parts(&self) -> (f64, f64) {
        let ev = self.eigenvalues();
        let pos = ev.iter().rev().filter(|e| **e > 0.0).sum();
        let neg = ev.iter().filter(|e| **e < 0.0).map(|e| -e).sum();
        (pos, neg)
    }
}

/// Positive part, negative part and eigenvalue absolute sum of a matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixParts {
    pub positive: SymMatrix,
    pub negative: SymMatrix,
    pub abs_sum: f64,
}

/// Cyclic Jacobi eigen-decomposition with a fixed sweep order.
///
/// Rejects matrices with non-finite entries.
pub fn spectral_decompose(x: &SymMatrix) -> Result<Spectrum> {
    if let Some((k, &v)) = x.upper().iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: format!("matrix packed entry {k}"),
            value: v,
        });
    }
    Ok(jacobi(x))
}

/// Decomposition without the finiteness check; non-finite input yields
/// non-finite output rather than an error.
pub(crate) fn jacobi(x: &SymMatrix) -> Spectrum {
    let n = x.dim();
    let mut a = x.to_dense();
    let mut v = [[0.0; MAX_DIM]; MAX_DIM];
    for (i, row) in v.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    let threshold = JACOBI_REL_THRESHOLD * x.frobenius();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += 2.0 * a[p][q] * a[p][q];
            }
        }
        if !(off.sqrt() > threshold) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut().take(n) {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut().take(n) {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, [f64; MAX_DIM])> = (0..n)
        .map(|k| {
            let mut col = [0.0; MAX_DIM];
            for i in 0..n {
                col[i] = v[i][k];
            }
            normalize_sign(&mut col[..n]);
            (a[k][k], col)
        })
        .collect();
    pairs.sort_by(|(ea, qa), (eb, qb)| {
        eb.total_cmp(ea).then_with(|| {
            for i in 0..n {
                let o = qb[i].total_cmp(&qa[i]);
                if o != std::cmp::Ordering::Equal {
                    return o;
                }
            }
            std::cmp::Ordering::Equal
        })
    });

    let mut values = [0.0; MAX_DIM];
    let mut vectors = [[0.0; MAX_DIM]; MAX_DIM];
    for (k, (e, q)) in pairs.into_iter().enumerate() {
        values[k] = e;
        vectors[k] = q;
    }
    Spectrum {
        dim: n,
        values,
        vectors,
    }
}

/// Flips `q` so that its largest-magnitude entry is positive. Magnitudes
/// within a relative 1e-12 of the maximum count as tied and the first such
/// entry decides.
fn normalize_sign(q: &mut [f64]) {
    let max = q.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return;
    }
    if let Some(pivot) = q.iter().find(|v| v.abs() >= max * (1.0 - 1e-12)) {
        if *pivot < 0.0 {
            q.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Splits a decomposed matrix into `X^+`, `X^-` and `|X|`.
pub fn matrix_parts(spectrum: &Spectrum) -> MatrixParts {
    MatrixParts {
        positive: spectrum.map_eigenvalues(|e| e.max(0.0)),
        negative: spectrum.map_eigenvalues(|e| (-e).max(0.0)),
        abs_sum: spectrum.abs_sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn packed_layout_is_row_major_upper() {
        let m = SymMatrix::from_upper(3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(2, 0), 3.0);
        assert_eq!(m.get(1, 1), 4.0);
        assert_eq!(m.get(2, 1), 5.0);
        assert_eq!(m.get(2, 2), 6.0);
        assert_eq!(m.trace(), 11.0);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(SymMatrix::from_upper(2, &[1.0, 2.0]).is_err());
        assert!(SymMatrix::from_upper(9, &[0.0; 45]).is_err());
        assert!(SymMatrix::from_upper(2, &[1.0, f64::NAN, 0.0]).is_err());
        let mut m = SymMatrix::zeros(2);
        m.set(0, 1, f64::INFINITY);
        assert!(spectral_decompose(&m).is_err());
    }

    #[test]
    fn diagonal_input() {
        let s = spectral_decompose(&SymMatrix::diag(&[1.0, -1.0])).unwrap();
        assert_eq!(s.eigenvalues(), &[1.0, -1.0]);
        assert_eq!(s.vector(0), &[1.0, 0.0]);
        assert_eq!(s.vector(1), &[0.0, 1.0]);
    }

    #[test]
    fn identity_has_identity_frame() {
        let s = spectral_decompose(&SymMatrix::identity(3)).unwrap();
        assert_eq!(s.eigenvalues(), &[1.0, 1.0, 1.0]);
        for k in 0..3 {
            for i in 0..3 {
                assert_eq!(s.vector(k)[i], if i == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn swap_matrix() {
        let x = SymMatrix::from_upper(2, &[0.0, 1.0, 0.0]).unwrap();
        let s = spectral_decompose(&x).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.eigenvalues()[0], 1.0, 1e-15));
        assert!(close(s.eigenvalues()[1], -1.0, 1e-15));
        assert!(close(s.vector(0)[0], r, 1e-15) && close(s.vector(0)[1], r, 1e-15));
        assert!(close(s.vector(1)[0], r, 1e-15) && close(s.vector(1)[1], -r, 1e-15));
        let err = (s.reconstruct() - x).max_abs();
        assert!(err <= 1e-12 * (1.0 + x.max_abs()));
    }

    #[test]
    fn parts_of_diagonal() {
        let p = matrix_parts(&spectral_decompose(&SymMatrix::diag(&[1.0, -1.0])).unwrap());
        assert_eq!(p.positive, SymMatrix::diag(&[1.0, 0.0]));
        assert_eq!(p.negative, SymMatrix::diag(&[0.0, 1.0]));
        assert_eq!(p.abs_sum, 2.0);
        let q = matrix_parts(&spectral_decompose(&SymMatrix::diag(&[3.0, -2.0])).unwrap());
        assert_eq!(q.abs_sum, 5.0);
    }

    #[test]
    fn zero_matrix() {
        let s = spectral_decompose(&SymMatrix::zeros(4)).unwrap();
        assert!(s.eigenvalues().iter().all(|&e| e == 0.0));
        assert_eq!(s.orthogonality_defect(), 0.0);
    }

    #[test]
    fn one_by_one() {
        let s = spectral_decompose(&SymMatrix::diag(&[-2.5])).unwrap();
        assert_eq!(s.eigenvalues(), &[-2.5]);
        assert_eq!(s.vector(0), &[1.0]);
    }

    #[test]
    fn decomposition_is_deterministic_and_accurate_at_max_dim() {
        let x = SymMatrix::from_fn(8, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * (i * j) as f64);
        let a = spectral_decompose(&x).unwrap();
        let b = spectral_decompose(&x).unwrap();
        assert_eq!(a, b);
        assert!((a.reconstruct() - x).max_abs() <= 1e-12 * (1.0 + x.max_abs()));
        assert!(a.orthogonality_defect() <= 1e-12);
        assert!(a.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }
}
