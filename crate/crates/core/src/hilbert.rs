//! Finite-dimensional Hilbert-space scaffolding.
//!
//! Vectors and operators carry the identifier of the basis they are
//! expressed in; mixing bases is rejected. Operators have three storage
//! forms: dense, diagonal, and monomial (each column has at most one
//! nonzero entry). Koopman steps and every conjugated evolution built from
//! them are monomial, so the monomial form keeps the large baker windows
//! out of dense storage.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex;
use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Identifier of the basis a vector or operator is expressed in.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisId(Arc<str>);

impl BasisId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(Arc::from(name.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BasisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn check_basis(a: &BasisId, b: &BasisId) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Basis { left: a.to_string(), right: b.to_string() })
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// Coefficient vector over a labeled orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct HVector<S> {
    basis: BasisId,
    coeffs: Vec<S>,
}

impl<S: Scalar> HVector<S> {
    pub fn new(basis: BasisId, coeffs: Vec<S>) -> Self {
        Self { basis, coeffs }
    }

    pub fn zeros(basis: BasisId, dim: usize) -> Self {
        Self::new(basis, vec![S::zero(); dim])
    }

    /// Basis vector `e_index`.
    pub fn unit(basis: BasisId, dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(basis, dim);
        v.coeffs[index] = S::one();
        v
    }

    pub fn basis(&self) -> &BasisId {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [S] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    /// Indices of nonzero coefficients.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, _)| i)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        check_basis(&self.basis, &other.basis)?;
        check_dim(self.dim(), other.dim())
    }

    pub fn inner(&self, other: &Self) -> Result<S> {
        inner(self, other)
    }

    /// Euclidean norm, scaled so that tiny or huge coefficients do not
    /// underflow or overflow when squared.
    pub fn norm(&self) -> S {
        scaled_norm(&self.coeffs)
    }

    pub fn scale(&self, factor: S) -> Self {
        Self::new(self.basis.clone(), self.coeffs.iter().map(|&c| c * factor).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b).collect();
        Ok(Self::new(self.basis.clone(), coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a - b).collect();
        Ok(Self::new(self.basis.clone(), coeffs))
    }
}

/// `Σ_k u_k v_k` over a shared basis.
pub fn inner<S: Scalar>(u: &HVector<S>, v: &HVector<S>) -> Result<S> {
    u.check_compatible(v)?;
    Ok(u.coeffs.iter().zip(&v.coeffs).map(|(&a, &b)| a * b).sum())
}

pub(crate) fn scaled_norm<S: Scalar>(values: &[S]) -> S {
    let scale = values.iter().fold(S::zero(), |m, &c| m.max(c.abs()));
    if scale.is_zero() || !scale.is_finite() {
        return scale;
    }
    let sum: S = values.iter().map(|&c| (c / scale) * (c / scale)).sum();
    scale * sum.sqrt()
}

#[derive(Clone, Debug, PartialEq)]
enum Repr<S> {
    /// Row-major `dim × dim`.
    Dense(Vec<S>),
    Diagonal(Vec<S>),
    /// Column `j` is `weight[j] · e_{target[j]}`, or zero when `target[j]` is `None`.
    Monomial { target: Vec<Option<usize>>, weight: Vec<S> },
}

/// Square real operator over a labeled basis.
#[derive(Clone, Debug, PartialEq)]
pub struct HOperator<S> {
    basis: BasisId,
    dim: usize,
    repr: Repr<S>,
}

impl<S: Scalar> HOperator<S> {
    pub fn dense(basis: BasisId, dim: usize, row_major: Vec<S>) -> Result<Self> {
        check_dim(dim * dim, row_major.len())?;
        Ok(Self { basis, dim, repr: Repr::Dense(row_major) })
    }

    pub fn diagonal(basis: BasisId, entries: Vec<S>) -> Self {
        Self { basis, dim: entries.len(), repr: Repr::Diagonal(entries) }
    }

    pub fn identity(basis: BasisId, dim: usize) -> Self {
        Self::diagonal(basis, vec![S::one(); dim])
    }

    pub fn monomial(basis: BasisId, target: Vec<Option<usize>>, weight: Vec<S>) -> Result<Self> {
        let dim = target.len();
        check_dim(dim, weight.len())?;
        if let Some(&bad) = target.iter().flatten().find(|&&t| t >= dim) {
            return Err(Error::Dimension { expected: dim, got: bad + 1 });
        }
        Ok(Self { basis, dim, repr: Repr::Monomial { target, weight } })
    }

    pub fn basis(&self) -> &BasisId {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalue per basis index when the operator is stored as diagonal.
    pub fn diagonal_entries(&self) -> Option<&[S]> {
        match &self.repr {
            Repr::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal(_))
    }

    /// `(target, weight)` columns when stored in monomial form.
    pub fn monomial_columns(&self) -> Option<(&[Option<usize>], &[S])> {
        match &self.repr {
            Repr::Monomial { target, weight } => Some((target, weight)),
            _ => None,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> S {
        match &self.repr {
            Repr::Dense(m) => m[row * self.dim + col],
            Repr::Diagonal(d) => {
                if row == col {
                    d[row]
                } else {
                    S::zero()
                }
            }
            Repr::Monomial { target, weight } => {
                if target[col] == Some(row) {
                    weight[col]
                } else {
                    S::zero()
                }
            }
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<S> {
        let n = self.dim;
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            _ => {
                let mut out = vec![S::zero(); n * n];
                match &self.repr {
                    Repr::Diagonal(d) => {
                        for (i, &x) in d.iter().enumerate() {
                            out[i * n + i] = x;
                        }
                    }
                    Repr::Monomial { target, weight } => {
                        for (j, (t, &w)) in target.iter().zip(weight).enumerate() {
                            if let Some(i) = t {
                                out[i * n + j] = w;
                            }
                        }
                    }
                    Repr::Dense(_) => unreachable!(),
                }
                out
            }
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        self.to_dense().chunks(self.dim.max(1)).map(<[S]>::to_vec).collect()
    }

    pub fn apply(&self, v: &HVector<S>) -> Result<HVector<S>> {
        check_basis(&self.basis, v.basis())?;
        check_dim(self.dim, v.dim())?;
        let x = v.coeffs();
        let coeffs = match &self.repr {
            Repr::Dense(m) => m
                .chunks(self.dim)
                .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
                .collect(),
            Repr::Diagonal(d) => d.iter().zip(x).map(|(&a, &b)| a * b).collect(),
            Repr::Monomial { target, weight } => {
                let mut out = vec![S::zero(); self.dim];
                for (j, t) in target.iter().enumerate() {
                    if let Some(i) = *t {
                        out[i] = out[i] + weight[j] * x[j];
                    }
                }
                out
            }
        };
        Ok(HVector::new(self.basis.clone(), coeffs))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_basis(&self.basis, &other.basis)?;
        check_dim(self.dim, other.dim)?;
        let basis = self.basis.clone();
        let repr = match (&self.repr, &other.repr) {
            (Repr::Diagonal(a), Repr::Diagonal(b)) => {
                Repr::Diagonal(a.iter().zip(b).map(|(&x, &y)| x * y).collect())
            }
            (Repr::Diagonal(a), Repr::Monomial { target, weight }) => Repr::Monomial {
                target: target.clone(),
                weight: target
                    .iter()
                    .zip(weight)
                    .map(|(t, &w)| t.map_or(S::zero(), |i| a[i] * w))
                    .collect(),
            },
            (Repr::Monomial { target, weight }, Repr::Diagonal(b)) => Repr::Monomial {
                target: target.clone(),
                weight: weight.iter().zip(b).map(|(&w, &x)| w * x).collect(),
            },
            (
                Repr::Monomial { target: ta, weight: wa },
                Repr::Monomial { target: tb, weight: wb },
            ) => {
                let target: Vec<Option<usize>> =
                    tb.iter().map(|t| t.and_then(|k| ta[k])).collect();
                let weight = tb
                    .iter()
                    .zip(wb)
                    .map(|(t, &w)| t.map_or(S::zero(), |k| wa[k] * w))
                    .collect();
                Repr::Monomial { target, weight }
            }
            _ => {
                let n = self.dim;
                let a = self.to_dense();
                let b = other.to_dense();
                let mut out = vec![S::zero(); n * n];
                for i in 0..n {
                    for k in 0..n {
                        let aik = a[i * n + k];
                        if aik.is_zero() {
                            continue;
                        }
                        for j in 0..n {
                            out[i * n + j] = out[i * n + j] + aik * b[k * n + j];
                        }
                    }
                }
                Repr::Dense(out)
            }
        };
        Ok(Self { basis, dim: self.dim, repr })
    }

    /// `self^power` by repeated composition.
    pub fn power(&self, power: u32) -> Result<Self> {
        let mut acc = Self::identity(self.basis.clone(), self.dim);
        for _ in 0..power {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    /// Real transpose. Monomial operators with injective targets stay monomial.
    pub fn adjoint(&self) -> Self {
        let basis = self.basis.clone();
        let n = self.dim;
        let repr = match &self.repr {
            Repr::Diagonal(d) => Repr::Diagonal(d.clone()),
            Repr::Dense(m) => {
                let mut out = vec![S::zero(); n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[j * n + i] = m[i * n + j];
                    }
                }
                Repr::Dense(out)
            }
            Repr::Monomial { target, weight } => {
                let mut new_target = vec![None; n];
                let mut new_weight = vec![S::zero(); n];
                let mut injective = true;
                for (j, t) in target.iter().enumerate() {
                    if let Some(i) = *t {
                        if new_target[i].is_some() {
                            injective = false;
                            break;
                        }
                        new_target[i] = Some(j);
                        new_weight[i] = weight[j];
                    }
                }
                if injective {
                    Repr::Monomial { target: new_target, weight: new_weight }
                } else {
                    let dense = Self { basis: basis.clone(), dim: n, repr: self.repr.clone() };
                    return dense.to_dense_operator().adjoint();
                }
            }
        };
        Self { basis, dim: n, repr }
    }

    fn to_dense_operator(&self) -> Self {
        Self { basis: self.basis.clone(), dim: self.dim, repr: Repr::Dense(self.to_dense()) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        check_basis(&self.basis, &other.basis)?;
        check_dim(self.dim, other.dim)?;
        if let (Repr::Diagonal(a), Repr::Diagonal(b)) = (&self.repr, &other.repr) {
            let d = a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect();
            return Ok(Self::diagonal(self.basis.clone(), d));
        }
        let a = self.to_dense();
        let b = other.to_dense();
        let m = a.iter().zip(&b).map(|(&x, &y)| f(x, y)).collect();
        Self::dense(self.basis.clone(), self.dim, m)
    }

    pub fn scale(&self, factor: S) -> Self {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m.iter().map(|&x| x * factor).collect()),
            Repr::Diagonal(d) => Repr::Diagonal(d.iter().map(|&x| x * factor).collect()),
            Repr::Monomial { target, weight } => Repr::Monomial {
                target: target.clone(),
                weight: weight.iter().map(|&x| x * factor).collect(),
            },
        };
        Self { basis: self.basis.clone(), dim: self.dim, repr }
    }

    /// Largest absolute entry of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<S> {
        let d = self.sub(other)?;
        Ok(d.to_dense().into_iter().fold(S::zero(), |m, x| m.max(x.abs())))
    }

    /// Eigenvalue multiset.
    ///
    /// Diagonal and monomial operators are handled exactly: a monomial
    /// matrix is a weighted functional graph, whose nilpotent chains give
    /// zeros and whose cycles of length `L` and weight product `P` give the
    /// `L` complex roots of `P`. Dense operators go through a real Schur
    /// decomposition in `f64`.
    pub fn spectrum(&self) -> Vec<Complex<S>> {
        match &self.repr {
            Repr::Diagonal(d) => d.iter().map(|&x| Complex::new(x, S::zero())).collect(),
            Repr::Monomial { target, weight } => monomial_spectrum(target, weight),
            Repr::Dense(m) => {
                let n = self.dim;
                let mat = DMatrix::from_fn(n, n, |i, j| m[i * n + j].as_f64());
                mat.complex_eigenvalues()
                    .iter()
                    .map(|z| Complex::new(S::lit(z.re), S::lit(z.im)))
                    .collect()
            }
        }
    }
}

fn monomial_spectrum<S: Scalar>(target: &[Option<usize>], weight: &[S]) -> Vec<Complex<S>> {
    let n = target.len();
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut state = vec![0u8; n];
    let mut eig = Vec::with_capacity(n);
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut node = Some(start);
        while let Some(j) = node {
            match state[j] {
                0 => {
                    state[j] = 1;
                    path.push(j);
                    // a zero weight cuts the edge
                    node = target[j].filter(|_| !weight[j].is_zero());
                }
                1 => {
                    let pos = path.iter().position(|&p| p == j).expect("node on path");
                    let cycle = &path[pos..];
                    let len = cycle.len();
                    let product = cycle.iter().fold(S::one(), |acc, &k| acc * weight[k]);
                    let radius = product.abs().powf(S::one() / S::from_int(len as i64));
                    let phase0 = if product < S::zero() { S::PI() } else { S::zero() };
                    for k in 0..len {
                        let theta = (phase0 + S::lit(2.0) * S::PI() * S::from_int(k as i64))
                            / S::from_int(len as i64);
                        eig.push(Complex::from_polar(radius, theta));
                    }
                    for _ in 0..(path.len() - len) {
                        eig.push(Complex::new(S::zero(), S::zero()));
                    }
                    break;
                }
                _ => {
                    eig.extend(path.iter().map(|_| Complex::new(S::zero(), S::zero())));
                    break;
                }
            }
        }
        if node.is_none() {
            eig.extend(path.iter().map(|_| Complex::new(S::zero(), S::zero())));
        }
        for &p in &path {
            state[p] = 2;
        }
    }
    eig
}

/// Greedy nearest matching distance between two eigenvalue multisets.
/// Returns `None` when the sizes differ.
pub fn spectrum_distance<S: Scalar>(a: &[Complex<S>], b: &[Complex<S>]) -> Option<S> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = S::zero();
    for x in a {
        let (best, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .fold((usize::MAX, S::infinity()), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        used[best] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

/// Applies `f` to every eigenvalue of a diagonal operator. A non-finite
/// result is a domain error naming the eigenvalue.
pub fn apply_diag_function<S: Scalar>(
    f: impl Fn(S) -> S,
    op: &HOperator<S>,
) -> Result<HOperator<S>> {
    let d = op.diagonal_entries().ok_or_else(|| Error::NotDiagonal(op.basis.to_string()))?;
    let mut out = Vec::with_capacity(d.len());
    for &x in d {
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::Domain { eigenvalue: x.as_f64() });
        }
        out.push(y);
    }
    Ok(HOperator::diagonal(op.basis.clone(), out))
}

/// `A^n` for a positive diagonal `A` and rational `n ≥ 0`, evaluated as
/// `exp(n · ln a)`.
pub fn fractional_power<S: Scalar>(op: &HOperator<S>, n: Rational64) -> Result<HOperator<S>> {
    let d = op.diagonal_entries().ok_or_else(|| Error::NotDiagonal(op.basis.to_string()))?;
    if n < Rational64::from_integer(0) {
        return Err(Error::Invalid(format!("fractional power {n} is negative")));
    }
    if let Some(&bad) = d.iter().find(|&&x| !(x > S::zero())) {
        return Err(Error::Domain { eigenvalue: bad.as_f64() });
    }
    if n == Rational64::from_integer(0) {
        return Ok(HOperator::identity(op.basis.clone(), op.dim));
    }
    if n == Rational64::from_integer(1) {
        return Ok(op.clone());
    }
    let exponent = S::from_ratio(n);
    apply_diag_function(|x| (exponent * x.ln()).exp(), op)
}
