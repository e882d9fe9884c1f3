//! Exact rational scalars, row vectors and dense square matrices.
//!
//! Everything here is exact: entries are arbitrary-precision rationals kept
//! in lowest terms, so structural equality is mathematical equality.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational in lowest terms with a positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("direct sum of an empty list")]
    EmptyDirectSum,
    #[error("entry map is not a bijection on index pairs")]
    NotBijective,
    #[error("ragged or non-square matrix: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("matrix dimension must be positive")]
    ZeroDimension,
    #[error("cannot parse rational {0:?}")]
    Parse(String),
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`.
pub fn parse_rational(text: &str) -> Result<Rational, ArithError> {
    let t = text.trim();
    let bad = || ArithError::Parse(text.to_string());
    if t.is_empty() {
        return Err(bad());
    }
    let r = match t.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Rational::new(p, q)
        }
        None => Rational::from_integer(BigInt::from_str(t).map_err(|_| bad())?),
    };
    Ok(r)
}

/// Canonical textual form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Row vector of rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QVector {
    entries: Vec<Rational>,
}

impl QVector {
    pub fn new(entries: Vec<Rational>) -> Self {
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn norm_sq(&self) -> Rational {
        self.entries.iter().map(|x| x * x).sum()
    }

    /// Row vector times matrix.
    pub fn mul_matrix(&self, m: &QMatrix) -> Result<QVector, ArithError> {
        if self.dim() != m.dim() {
            return Err(ArithError::DimensionMismatch { left: self.dim(), right: m.dim() });
        }
        let n = m.dim();
        let entries = (0..n)
            .map(|c| (0..n).map(|r| &self.entries[r] * m.get(r, c)).sum())
            .collect();
        Ok(QVector { entries })
    }
}

/// Dense `n x n` rational matrix, row-major, zero-based indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QMatrix {
    dim: usize,
    entries: Vec<Rational>,
}

impl QMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![Rational::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == c { Rational::one() } else { Rational::zero() })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push(f(r, c));
            }
        }
        Self { dim, entries }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, ArithError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(ArithError::ZeroDimension);
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(ArithError::NotSquare { row, len: r.len(), expected: dim });
            }
            entries.extend(r);
        }
        Ok(Self { dim, entries })
    }

    /// Convenience constructor from `(numerator, denominator)` pairs.
    pub fn from_ratios(rows: &[&[(i64, i64)]]) -> Self {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&(p, q)| rat(p, q)).collect())
            .collect();
        Self::from_rows(rows).expect("square literal")
    }

    pub fn from_ints(rows: &[&[i64]]) -> Self {
        let rows = rows.iter().map(|r| r.iter().map(|&p| int(p)).collect()).collect();
        Self::from_rows(rows).expect("square literal")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.entries[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.entries[r * self.dim + c] = v;
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.entries.chunks(self.dim).map(|c| c.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).clone())
    }

    pub fn is_identity(&self) -> bool {
        (0..self.dim).all(|r| {
            (0..self.dim).all(|c| {
                let v = self.get(r, c);
                if r == c { v.is_one() } else { v.is_zero() }
            })
        })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    /// `true` iff `A * A^T = I` exactly.
    pub fn is_orthogonal(&self) -> bool {
        let n = self.dim;
        for r in 0..n {
            for c in r..n {
                let dot: Rational = (0..n).map(|t| self.get(r, t) * self.get(c, t)).sum();
                let ok = if r == c { dot.is_one() } else { dot.is_zero() };
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|r| (0..r).all(|c| self.get(r, c) == self.get(c, r)))
    }

    pub fn checked_mul(&self, other: &QMatrix) -> Result<QMatrix, ArithError> {
        if self.dim != other.dim {
            return Err(ArithError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        let n = self.dim;
        let mut out = QMatrix::zeros(n);
        for r in 0..n {
            for t in 0..n {
                let a = self.get(r, t);
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let b = other.get(t, c);
                    if !b.is_zero() {
                        out.entries[r * n + c] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, mut e: u32) -> QMatrix {
        let mut base = self.clone();
        let mut acc = QMatrix::identity(self.dim);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Splits a block-diagonal matrix into diagonal blocks of the given sizes.
    /// Returns `None` if an off-block entry is nonzero or sizes do not add up.
    pub fn split_blocks(&self, shape: &[usize]) -> Option<Vec<QMatrix>> {
        if shape.iter().sum::<usize>() != self.dim {
            return None;
        }
        let mut offsets = Vec::with_capacity(shape.len());
        let mut o = 0;
        for &d in shape {
            offsets.push(o);
            o += d;
        }
        let block_of = |i: usize| offsets.iter().rposition(|&s| s <= i).unwrap();
        for r in 0..self.dim {
            for c in 0..self.dim {
                if block_of(r) != block_of(c) && !self.get(r, c).is_zero() {
                    return None;
                }
            }
        }
        Some(
            shape
                .iter()
                .zip(&offsets)
                .map(|(&d, &o)| QMatrix::from_fn(d, |r, c| self.get(o + r, o + c).clone()))
                .collect(),
        )
    }
}

impl Mul<&QMatrix> for &QMatrix {
    type Output = QMatrix;

    /// Panics on dimension mismatch; use [`mat_mul`] for a checked product.
    fn mul(self, rhs: &QMatrix) -> QMatrix {
        self.checked_mul(rhs).expect("matrix dimensions agree")
    }
}

impl fmt::Display for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.dim {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for c in 0..self.dim {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

pub fn mat_mul(a: &QMatrix, b: &QMatrix) -> Result<QMatrix, ArithError> {
    a.checked_mul(b)
}

/// Block-diagonal assembly `M1 ⊕ ... ⊕ Mk`.
pub fn direct_sum(blocks: &[QMatrix]) -> Result<QMatrix, ArithError> {
    if blocks.is_empty() {
        return Err(ArithError::EmptyDirectSum);
    }
    let n: usize = blocks.iter().map(QMatrix::dim).sum();
    let mut out = QMatrix::zeros(n);
    let mut o = 0;
    for b in blocks {
        for r in 0..b.dim() {
            for c in 0..b.dim() {
                out.set(o + r, o + c, b.get(r, c).clone());
            }
        }
        o += b.dim();
    }
    Ok(out)
}

/// Bijection on the index pairs of an `n x n` matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryPermutation {
    dim: usize,
    // image[r * dim + c] = pi(r, c)
    image: Vec<(usize, usize)>,
}

impl EntryPermutation {
    pub fn new(dim: usize, f: impl Fn(usize, usize) -> (usize, usize)) -> Result<Self, ArithError> {
        let mut image = Vec::with_capacity(dim * dim);
        let mut seen = vec![false; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let (i, j) = f(r, c);
                if i >= dim || j >= dim || seen[i * dim + j] {
                    return Err(ArithError::NotBijective);
                }
                seen[i * dim + j] = true;
                image.push((i, j));
            }
        }
        Ok(Self { dim, image })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, |r, c| (r, c)).unwrap()
    }

    pub fn transpose(dim: usize) -> Self {
        Self::new(dim, |r, c| (c, r)).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, r: usize, c: usize) -> (usize, usize) {
        self.image[r * self.dim + c]
    }

    pub fn inverse(&self) -> Self {
        let mut image = vec![(0, 0); self.image.len()];
        for r in 0..self.dim {
            for c in 0..self.dim {
                let (i, j) = self.apply(r, c);
                image[i * self.dim + j] = (r, c);
            }
        }
        Self { dim: self.dim, image }
    }
}

/// `pi(A)_{i,j} = A_{pi(i,j)}`.
pub fn entry_rename(pi: &EntryPermutation, a: &QMatrix) -> Result<QMatrix, ArithError> {
    if pi.dim() != a.dim() {
        return Err(ArithError::DimensionMismatch { left: pi.dim(), right: a.dim() });
    }
    Ok(QMatrix::from_fn(a.dim(), |r, c| {
        let (i, j) = pi.apply(r, c);
        a.get(i, j).clone()
    }))
}

/// A tuple of square matrices standing for their direct sum.
///
/// The closure constructions work on block-diagonal groups; keeping the
/// blocks apart avoids carrying the structurally zero off-block entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockMatrix {
    blocks: Vec<QMatrix>,
}

impl BlockMatrix {
    pub fn new(blocks: Vec<QMatrix>) -> Self {
        Self { blocks }
    }

    pub fn identity(shape: &[usize]) -> Self {
        Self { blocks: shape.iter().map(|&d| QMatrix::identity(d)).collect() }
    }

    pub fn blocks(&self) -> &[QMatrix] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<QMatrix> {
        self.blocks
    }

    pub fn shape(&self) -> Vec<usize> {
        self.blocks.iter().map(QMatrix::dim).collect()
    }

    pub fn transpose(&self) -> Self {
        Self { blocks: self.blocks.iter().map(QMatrix::transpose).collect() }
    }

    pub fn is_identity(&self) -> bool {
        self.blocks.iter().all(QMatrix::is_identity)
    }

    pub fn is_orthogonal(&self) -> bool {
        self.blocks.iter().all(QMatrix::is_orthogonal)
    }

    pub fn to_dense(&self) -> QMatrix {
        direct_sum(&self.blocks).expect("nonempty block tuple")
    }

    /// Entries of all blocks, block after block, each row-major.
    pub fn flat_entries(&self) -> Vec<Rational> {
        self.blocks.iter().flat_map(|b| b.entries().iter().cloned()).collect()
    }

    pub fn checked_mul(&self, other: &BlockMatrix) -> Result<BlockMatrix, ArithError> {
        if self.shape() != other.shape() {
            return Err(ArithError::DimensionMismatch {
                left: self.blocks.len(),
                right: other.blocks.len(),
            });
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.checked_mul(b))
            .collect::<Result<_, _>>()?;
        Ok(BlockMatrix { blocks })
    }
}

impl Mul<&BlockMatrix> for &BlockMatrix {
    type Output = BlockMatrix;

    fn mul(self, rhs: &BlockMatrix) -> BlockMatrix {
        self.checked_mul(rhs).expect("block shapes agree")
    }
}

pub fn is_nonnegative(r: &Rational) -> bool {
    !r.is_negative()
}
