//! Dense complex matrices, singular values, Schatten norms, Kronecker
//! products, and the two trace pairings.
//!
//! Everything downstream reduces to the operations in this module. All
//! values are immutable after construction and finite by construction;
//! the singular value decomposition is deterministic for a fixed input.

use std::fmt;
use std::ops::{Index, Mul};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

// ── ComplexMatrix ───────────────────────────────────────────────────

/// Dense rectangular matrix of complex values, row-major.
///
/// Invariants: `entries.len() == rows * cols`, `rows, cols ≥ 1`, and all
/// entries are finite. Constructors and deserialization enforce these.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from a row-major entry list.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let m = Self { rows, cols, entries };
        if !m.is_finite() {
            return Err(Error::NonFinite("matrix entries must be finite".into()));
        }
        Ok(m)
    }

    /// Builds a matrix entry by entry; `f(i, j)` must return finite values.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        })
    }

    /// Square diagonal matrix with the given real diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty());
        Self::from_fn(diag.len(), diag.len(), |i, j| {
            Complex64::new(if i == j { diag[i] } else { 0.0 }, 0.0)
        })
    }

    /// Builds a matrix from real entries, row-major.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entrywise map.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| c * z)
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "matrix addition shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_re(-1.0))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Matrix product; errors on inner-dimension mismatch.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &mut entries[i * other.cols..(i + 1) * other.cols];
                for (j, e) in row.iter_mut().enumerate() {
                    *e += aik * other[(k, j)];
                }
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            entries,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> Result<f64> {
        Ok(self.svd_values()?.first().copied().unwrap_or(0.0))
    }

    /// Singular values, sorted descending. Length is `min(rows, cols)`.
    pub fn svd_values(&self) -> Result<Vec<f64>> {
        Ok(self.svd_parts()?.sigma)
    }

    /// Schatten p-norm: `(Σ σ_i^p)^(1/p)` for finite p, `max σ_i` at p = ∞.
    pub fn schatten_norm(&self, p: PExponent) -> Result<f64> {
        Ok(schatten_from_singular_values(&self.svd_values()?, p))
    }

    pub(crate) fn svd_parts(&self) -> Result<Svd> {
        if !self.is_finite() {
            return Err(Error::NonFinite("cannot decompose a non-finite matrix".into()));
        }
        let m = self.to_nalgebra();
        let svd = m
            .try_svd(true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
        let u = svd.u.as_ref().expect("U requested");
        let v_t = svd.v_t.as_ref().expect("V^H requested");
        let k = svd.singular_values.len();
        // Sort descending; ties broken by original index so the
        // decomposition is deterministic.
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let u_sorted = ComplexMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
        let v_t_sorted = ComplexMatrix::from_fn(k, v_t.ncols(), |i, j| v_t[(order[i], j)]);
        Ok(Svd {
            u: u_sorted,
            sigma,
            v_t: v_t_sorted,
        })
    }

    /// Kronecker product, shape `(a.rows·b.rows, a.cols·b.cols)`.
    pub fn kron(&self, other: &Self) -> Self {
        let (ar, ac) = self.shape();
        let (br, bc) = other.shape();
        Self::from_fn(ar * br, ac * bc, |i, j| {
            self[(i / br, j / bc)] * other[(i % br, j % bc)]
        })
    }

    fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on inner-dimension mismatch; use [`ComplexMatrix::matmul`]
    /// for a fallible product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = self[(i, j)];
                if j > 0 {
                    write!(f, "  ")?;
                }
                write!(f, "{:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Thin SVD with singular values sorted descending.
pub(crate) struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    /// This is `V^H`, not `V`.
    pub v_t: ComplexMatrix,
}

/// Folds precomputed singular values into a Schatten p-norm.
pub fn schatten_from_singular_values(sigma: &[f64], p: PExponent) -> f64 {
    match p {
        PExponent::Infinity => sigma.iter().copied().fold(0.0, f64::max),
        PExponent::Finite(p) if p == 1.0 => sigma.iter().sum(),
        PExponent::Finite(p) if p == 2.0 => sigma.iter().map(|s| s * s).sum::<f64>().sqrt(),
        PExponent::Finite(p) => {
            let sum: f64 = sigma.iter().map(|s| s.powf(p)).sum();
            if sum == 0.0 {
                0.0
            } else {
                sum.powf(1.0 / p)
            }
        }
    }
}

/// Bilinear trace pairing `⟨u, v⟩ = trace(uv)`.
///
/// Requires `u.cols == v.rows` and `u.rows == v.cols` so the product is
/// square.
pub fn trace_pairing(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<Complex64> {
    if u.cols != v.rows || u.rows != v.cols {
        return Err(Error::ShapeMismatch(format!(
            "trace pairing needs {}x{} against {}x{} transposed shapes",
            u.rows, u.cols, v.rows, v.cols
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..u.rows {
        for k in 0..u.cols {
            acc += u[(i, k)] * v[(k, i)];
        }
    }
    Ok(acc)
}

/// Hilbert-Schmidt inner product `⟨u, v⟩ = trace(u v*)`, sesquilinear in
/// the second argument. Requires equal shapes.
pub fn hs_inner(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<Complex64> {
    if u.shape() != v.shape() {
        return Err(Error::ShapeMismatch(format!(
            "inner product needs equal shapes, got {}x{} and {}x{}",
            u.rows, u.cols, v.rows, v.cols
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in u.entries.iter().zip(&v.entries) {
        acc += a * b.conj();
    }
    Ok(acc)
}

// ── Serialization: {rows, cols, re, im} ─────────────────────────────

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            re: self.entries.iter().map(|z| z.re).collect(),
            im: self.entries.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        if repr.im.len() != repr.re.len() {
            return Err(D::Error::custom("re and im must have equal length"));
        }
        let entries = repr
            .re
            .iter()
            .zip(&repr.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        ComplexMatrix::new(repr.rows, repr.cols, entries).map_err(D::Error::custom)
    }
}

// ── PExponent ───────────────────────────────────────────────────────

/// A Schatten exponent `p ∈ [1, ∞]`, with `∞` as a distinguished state
/// rather than a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PExponent {
    Finite(f64),
    Infinity,
}

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(format!(
                "Schatten exponent must satisfy p >= 1, got {p}"
            )));
        }
        if p.is_infinite() {
            Ok(Self::Infinity)
        } else {
            Ok(Self::Finite(p))
        }
    }

    pub fn infinity() -> Self {
        Self::Infinity
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinity)
    }

    /// Numeric value; `f64::INFINITY` for the distinguished state.
    pub fn value(&self) -> f64 {
        match self {
            Self::Finite(p) => *p,
            Self::Infinity => f64::INFINITY,
        }
    }

    /// Conjugate exponent `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(&self) -> Self {
        match self {
            Self::Infinity => Self::Finite(1.0),
            Self::Finite(p) if *p == 1.0 => Self::Infinity,
            Self::Finite(p) => Self::Finite(p / (p - 1.0)),
        }
    }

    /// Interpolation parameter θ ∈ [0, 1].
    ///
    /// For p ≥ 2 this solves `1/p = θ/2` (endpoints ∞ and 2); for p ≤ 2 it
    /// solves `1/p = (1-θ) + θ/2` (endpoints 1 and 2). Both give θ = 1 at
    /// p = 2.
    pub fn theta(&self) -> f64 {
        match self {
            Self::Infinity => 0.0,
            Self::Finite(p) if *p >= 2.0 => 2.0 / p,
            Self::Finite(p) => 2.0 - 2.0 / p,
        }
    }
}

impl fmt::Display for PExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{p}"),
            Self::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for PExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") || t == "∞" {
            return Ok(Self::Infinity);
        }
        let p: f64 = t
            .parse()
            .map_err(|_| Error::InvalidExponent(format!("cannot parse exponent '{s}'")))?;
        Self::new(p)
    }
}

impl Serialize for PExponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(p) => serializer.serialize_f64(*p),
            Self::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PExponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(p) => PExponent::new(p).map_err(D::Error::custom),
            Repr::Str(s) => s.parse().map_err(D::Error::custom),
        }
    }
}
