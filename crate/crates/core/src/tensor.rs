//! Dense complex linear algebra: kets, square operators, Kronecker products,
//! partial traces and factor permutations.
//!
//! Flattened indices follow the usual ket convention: the leftmost tensor
//! factor is the most significant digit.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default max-abs-entry tolerance for Hermiticity and idempotence checks.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A finite-dimensional complex vector.
#[derive(Clone, PartialEq)]
pub struct ComplexVector(DVector<Complex64>);

/// A square complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexOperator(DMatrix<Complex64>);

/// Kronecker product, with the left operand's indices most significant.
pub trait TensorProduct {
    fn tensor(&self, other: &Self) -> Self;
}

pub fn tensor_product<T: TensorProduct>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// Tensor product of a non-empty list of factors, left to right.
pub fn tensor_all<T: TensorProduct + Clone>(factors: &[T]) -> Option<T> {
    let (first, rest) = factors.split_first()?;
    Some(rest.iter().fold(first.clone(), |acc, f| acc.tensor(f)))
}

impl ComplexVector {
    pub fn from_vec(entries: Vec<Complex64>) -> Self {
        assert!(!entries.is_empty(), "vectors must have positive dimension");
        Self(DVector::from_vec(entries))
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Self::from_vec(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::from_element(dim, ZERO))
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        self.0.as_mut_slice()
    }

    pub fn as_dvector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero vector".into()));
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(&self.0 * s)
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.0.dotc(&other.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl TensorProduct for ComplexVector {
    fn tensor(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in self.0.iter() {
            for b in other.0.iter() {
                out.push(a * b);
            }
        }
        Self::from_vec(out)
    }
}

impl Add for &ComplexVector {
    type Output = ComplexVector;
    fn add(self, rhs: Self) -> ComplexVector {
        ComplexVector(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexVector {
    type Output = ComplexVector;
    fn sub(self, rhs: Self) -> ComplexVector {
        ComplexVector(&self.0 - &rhs.0)
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Rank-1 projector onto the ray of `v`. The vector is normalized first.
pub fn projector(v: &ComplexVector) -> Result<ComplexOperator> {
    let u = v.normalized()?;
    Ok(outer(&u, &u))
}

/// `|a⟩⟨b|`.
pub fn outer(a: &ComplexVector, b: &ComplexVector) -> ComplexOperator {
    ComplexOperator(&a.0 * b.0.adjoint())
}

impl ComplexOperator {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        assert!(m.is_square(), "operators must be square");
        assert!(m.nrows() > 0, "operators must have positive dimension");
        Self(m)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self::from_matrix(DMatrix::from_fn(dim, dim, f))
    }

    /// Row-major real entries.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        Self::from_fn(dim, |i, j| Complex64::new(rows[i * dim + j], 0.0))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::from_element(dim, dim, ZERO))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m.0[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.0[(row, col)] = value;
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * Complex64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self(&self.0 * s)
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), v.dim(), "operator/vector dimension mismatch");
        ComplexVector(&self.0 * &v.0)
    }

    /// `⟨v|self|v⟩`.
    pub fn expectation(&self, v: &ComplexVector) -> Complex64 {
        v.inner(&self.apply(v))
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim());
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.0[(i, j)] * other.0[(j, i)];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_idempotent(&self, tol: f64) -> bool {
        (self * self).max_abs_diff(self) <= tol
    }

    /// Largest off-diagonal magnitude.
    pub fn off_diagonal_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.0[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Eigen-decomposition of the Hermitian part. Eigenvalues are returned in
    /// ascending order with matching eigenvector columns.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, Vec<ComplexVector>) {
        let sym = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| ComplexVector(eig.eigenvectors.column(k).into_owned()))
            .collect();
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        sym.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let sym = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        sym.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl TensorProduct for ComplexOperator {
    fn tensor(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }
}

impl Add for &ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: Self) -> ComplexOperator {
        ComplexOperator(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: Self) -> ComplexOperator {
        ComplexOperator(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: Self) -> ComplexOperator {
        ComplexOperator(&self.0 * &rhs.0)
    }
}

impl fmt::Debug for ComplexOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Row-major strides for a factor layout.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Decompose a flattened index into per-factor digits.
pub fn unflatten(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        digits[k] = index % dims[k];
        index /= dims[k];
    }
    digits
}

pub fn flatten(digits: &[usize], dims: &[usize]) -> usize {
    digits
        .iter()
        .zip(dims)
        .fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Flattened offsets of every multi-index over the given factor subset,
/// enumerated with the subset's own most-significant-first order.
fn subset_offsets(dims: &[usize], subset: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let sub_dims: Vec<usize> = subset.iter().map(|&k| dims[k]).collect();
    let total: usize = sub_dims.iter().product();
    (0..total)
        .map(|idx| {
            unflatten(idx, &sub_dims)
                .iter()
                .zip(subset)
                .map(|(&x, &k)| x * st[k])
                .sum()
        })
        .collect()
}

fn check_layout(dim: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Shape(format!("invalid factor layout {dims:?}")));
    }
    let prod: usize = dims.iter().product();
    if prod != dim {
        return Err(Error::Shape(format!(
            "factor dims {dims:?} multiply to {prod}, operand has dimension {dim}"
        )));
    }
    Ok(())
}

/// Trace out every factor not listed in `keep`. The kept factors stay in
/// ascending order.
pub fn partial_trace(op: &ComplexOperator, dims: &[usize], keep: &[usize]) -> Result<ComplexOperator> {
    check_layout(op.dim(), dims)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Shape(format!(
            "keep set {keep:?} out of range for {} factors",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let keep_off = subset_offsets(dims, &kept);
    let trace_off = subset_offsets(dims, &traced);
    let n = keep_off.len();
    let m = op.as_matrix();
    Ok(ComplexOperator::from_fn(n, |r, c| {
        trace_off
            .iter()
            .map(|&t| m[(keep_off[r] + t, keep_off[c] + t)])
            .sum()
    }))
}

/// Index map of a factor permutation: `perm[i]` is the destination position
/// of source factor `i`. Returns (destination dims, map from source flat index
/// to destination flat index).
pub fn factor_permutation_map(dims: &[usize], perm: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if perm.len() != dims.len() {
        return Err(Error::Shape(format!(
            "permutation of length {} for {} factors",
            perm.len(),
            dims.len()
        )));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::Domain(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let mut new_dims = vec![0; dims.len()];
    for (i, &p) in perm.iter().enumerate() {
        new_dims[p] = dims[i];
    }
    let dst_strides = strides(&new_dims);
    let total: usize = dims.iter().product();
    let map = (0..total)
        .map(|idx| {
            unflatten(idx, dims)
                .iter()
                .enumerate()
                .map(|(i, &x)| x * dst_strides[perm[i]])
                .sum()
        })
        .collect();
    Ok((new_dims, map))
}

/// Unitary that moves tensor factor `i` to position `perm[i]`.
pub fn permutation_operator(dims: &[usize], perm: &[usize]) -> Result<ComplexOperator> {
    let (_, map) = factor_permutation_map(dims, perm)?;
    let mut u = ComplexOperator::zeros(map.len());
    for (src, &dst) in map.iter().enumerate() {
        u.set(dst, src, ONE);
    }
    Ok(u)
}

pub fn permute_vector(v: &ComplexVector, dims: &[usize], perm: &[usize]) -> Result<ComplexVector> {
    check_layout(v.dim(), dims)?;
    let (_, map) = factor_permutation_map(dims, perm)?;
    let mut out = ComplexVector::zeros(v.dim());
    for (src, &dst) in map.iter().enumerate() {
        out.entries_mut()[dst] = v.entries()[src];
    }
    Ok(out)
}

/// `P op P†` for the factor permutation `P`, computed by reindexing.
pub fn permute_operator(op: &ComplexOperator, dims: &[usize], perm: &[usize]) -> Result<ComplexOperator> {
    check_layout(op.dim(), dims)?;
    let (_, map) = factor_permutation_map(dims, perm)?;
    let mut out = ComplexOperator::zeros(op.dim());
    for (i, &pi) in map.iter().enumerate() {
        for (j, &pj) in map.iter().enumerate() {
            out.set(pi, pj, op.get(i, j));
        }
    }
    Ok(out)
}

/// Inverse of a permutation given in destination form.
pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// `op` acting on the listed factors, identity on the rest.
pub fn embed_operator(op: &ComplexOperator, dims: &[usize], targets: &[usize]) -> Result<ComplexOperator> {
    let total: usize = dims.iter().product();
    let target_dim: usize = targets.iter().map(|&k| dims[k]).product();
    if op.dim() != target_dim {
        return Err(Error::Shape(format!(
            "operator of dimension {} does not act on factors {targets:?} of {dims:?}",
            op.dim()
        )));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
    let rest_dim: usize = rest.iter().map(|&k| dims[k]).product();
    // Layout targets ++ rest, then move every factor back where it belongs.
    let grouped = op.tensor(&ComplexOperator::identity(rest_dim));
    let grouped_dims: Vec<usize> = targets.iter().chain(&rest).map(|&k| dims[k]).collect();
    let perm: Vec<usize> = targets.iter().chain(&rest).copied().collect();
    debug_assert_eq!(grouped.dim(), total);
    permute_operator(&grouped, &grouped_dims, &perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> ComplexOperator {
        ComplexOperator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0])
    }

    #[test]
    fn basis_tensor_bookkeeping() {
        let v = tensor_product(&ComplexVector::basis(2, 0), &ComplexVector::basis(2, 1));
        assert_eq!(v, ComplexVector::basis(4, 1));
    }

    #[test]
    fn identity_tensor_identity() {
        let i4 = tensor_product(&ComplexOperator::identity(2), &ComplexOperator::identity(2));
        assert_eq!(i4, ComplexOperator::identity(4));
    }

    #[test]
    fn x_tensor_x_flips_both() {
        let xx = tensor_product(&pauli_x(), &pauli_x());
        assert_eq!(xx.apply(&ComplexVector::basis(4, 0)), ComplexVector::basis(4, 3));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let s = 0.5f64.sqrt();
        let phi = ComplexVector::from_real(&[s, 0.0, 0.0, s]);
        let rho = projector(&phi).unwrap();
        let red = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!(red.max_abs_diff(&ComplexOperator::diagonal(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn uneven_superposition_marginal() {
        let psi = ComplexVector::from_real(&[0.3f64.sqrt(), 0.0, 0.0, 0.7f64.sqrt()]);
        let rho = projector(&psi).unwrap();
        let a = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        let b = partial_trace(&rho, &[2, 2], &[1]).unwrap();
        let expected = ComplexOperator::diagonal(&[0.3, 0.7]);
        assert!(a.max_abs_diff(&expected) < 1e-15);
        assert!(b.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let rho = ComplexOperator::from_real_rows(2, &[0.25, 0.1, 0.1, 0.75]);
        let sigma = ComplexOperator::diagonal(&[0.2, 0.3, 0.5]).scale(2.0);
        let out = partial_trace(&rho.tensor(&sigma), &[2, 3], &[0]).unwrap();
        assert!(out.max_abs_diff(&rho.scale(2.0)) < 1e-14);
    }

    #[test]
    fn partial_trace_shape_errors() {
        let op = ComplexOperator::identity(4);
        assert!(matches!(partial_trace(&op, &[2, 3], &[0]), Err(Error::Shape(_))));
        assert!(matches!(partial_trace(&op, &[2, 2], &[5]), Err(Error::Shape(_))));
    }

    #[test]
    fn projector_examples() {
        assert_eq!(
            projector(&ComplexVector::basis(2, 0)).unwrap(),
            ComplexOperator::diagonal(&[1.0, 0.0])
        );
        let s = 0.5f64.sqrt();
        let plus = projector(&ComplexVector::from_real(&[s, s])).unwrap();
        assert!(plus.max_abs_diff(&ComplexOperator::from_real_rows(2, &[0.5; 4])) < 1e-15);
        let scaled = projector(&ComplexVector::from_real(&[2.0, 0.0])).unwrap();
        assert_eq!(scaled, ComplexOperator::diagonal(&[1.0, 0.0]));
        assert!(matches!(
            projector(&ComplexVector::zeros(3)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn permutation_moves_factors() {
        // |0 1 2⟩ in dims (2,2,3) with factor 0 -> 2, 1 -> 0, 2 -> 1.
        let dims = [2, 2, 3];
        let v = ComplexVector::basis(12, flatten(&[0, 1, 2], &dims));
        let out = permute_vector(&v, &dims, &[2, 0, 1]).unwrap();
        assert_eq!(out, ComplexVector::basis(12, flatten(&[1, 2, 0], &[2, 3, 2])));
        let u = permutation_operator(&dims, &[2, 0, 1]).unwrap();
        assert_eq!(u.apply(&v), out);
    }

    #[test]
    fn embed_matches_kron_on_leading_factor() {
        let e = embed_operator(&pauli_x(), &[2, 3], &[0]).unwrap();
        assert_eq!(e, pauli_x().tensor(&ComplexOperator::identity(3)));
        let e = embed_operator(&pauli_x(), &[3, 2], &[1]).unwrap();
        assert_eq!(e, ComplexOperator::identity(3).tensor(&pauli_x()));
    }
}
