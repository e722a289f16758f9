//! The four normed division algebras ℝ, ℂ, ℍ and 𝕆.
//!
//! Every algebra is obtained from the one below it by Cayley–Dickson doubling:
//! a pair `(a, b)` stands for `a + b·ℓ` and
//!
//! ```text
//! (a, b)(c, d) = (ac − d̄b, da + bc̄)
//! ```
//!
//! Coefficients are stored densely in the basis `1, e₁, …, e₇`, where the
//! lower half of each doubling is the previous algebra. For ℍ this gives
//! `e₁ = i`, `e₂ = j`, `e₃ = k` with `ij = k`; for 𝕆 the extra unit is
//! `e₄ = ℓ` and `e₅ = iℓ`, `e₆ = jℓ`, `e₇ = kℓ`.
//!
//! The resulting octonion table (row · column):
//!
//! ```text
//!        e1   e2   e3   e4   e5   e6   e7
//!  e1    -1   e3  -e2   e5  -e4  -e7   e6
//!  e2   -e3   -1   e1   e6   e7  -e4  -e5
//!  e3    e2  -e1   -1   e7  -e6   e5  -e4
//!  e4   -e5  -e6  -e7   -1   e1   e2   e3
//!  e5    e4  -e7   e6  -e1   -1  -e3   e2
//!  e6    e7   e4  -e5  -e2   e3   -1  -e1
//!  e7   -e6   e5   e4  -e3  -e2   e1   -1
//! ```
//!
//! The table is pinned by a unit test.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algebra {
    Real,
    Complex,
    Quaternion,
    Octonion,
}

impl Algebra {
    pub const fn dim(self) -> usize {
        match self {
            Algebra::Real => 1,
            Algebra::Complex => 2,
            Algebra::Quaternion => 4,
            Algebra::Octonion => 8,
        }
    }

    pub fn from_dim(dim: usize) -> Option<Self> {
        match dim {
            1 => Some(Algebra::Real),
            2 => Some(Algebra::Complex),
            4 => Some(Algebra::Quaternion),
            8 => Some(Algebra::Octonion),
            _ => None,
        }
    }
}

/// An element of ℝ, ℂ, ℍ or 𝕆 as a dense real coefficient vector.
///
/// Coefficients beyond `algebra.dim()` are always zero.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CompositionElement {
    algebra: Algebra,
    coeffs: [f64; 8],
}

impl CompositionElement {
    pub fn new(algebra: Algebra, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != algebra.dim() {
            return Err(Error::DimensionMismatch {
                expected: algebra.dim(),
                found: coeffs.len(),
            });
        }
        let mut c = [0.0; 8];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(Self { algebra, coeffs: c })
    }

    pub fn zero(algebra: Algebra) -> Self {
        Self {
            algebra,
            coeffs: [0.0; 8],
        }
    }

    pub fn one(algebra: Algebra) -> Self {
        Self::basis(algebra, 0)
    }

    pub fn real(algebra: Algebra, value: f64) -> Self {
        let mut e = Self::zero(algebra);
        e.coeffs[0] = value;
        e
    }

    /// The basis unit `e_index` (`e_0 = 1`).
    ///
    /// Panics if `index >= algebra.dim()`.
    pub fn basis(algebra: Algebra, index: usize) -> Self {
        assert!(index < algebra.dim(), "basis index out of range");
        let mut e = Self::zero(algebra);
        e.coeffs[index] = 1.0;
        e
    }

    pub fn algebra(&self) -> Algebra {
        self.algebra
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..self.algebra.dim()]
    }

    pub fn re(&self) -> f64 {
        self.coeffs[0]
    }

    /// Imaginary part, same algebra.
    pub fn im(&self) -> Self {
        let mut e = *self;
        e.coeffs[0] = 0.0;
        e
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs().iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Euclidean inner product of coefficient vectors.
    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs()
            .iter()
            .zip(other.coeffs())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut e = *self;
        e.coeffs.iter_mut().for_each(|c| *c *= s);
        e
    }

    pub fn conjugate(&self) -> Self {
        let mut e = *self;
        e.coeffs[1..].iter_mut().for_each(|c| *c = -*c);
        e
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.algebra != other.algebra {
            return Err(Error::MixedAlgebra {
                left: self.algebra,
                right: other.algebra,
            });
        }
        let mut out = [0.0; 8];
        let n = self.algebra.dim();
        cayley_dickson(&self.coeffs[..n], &other.coeffs[..n], &mut out[..n]);
        Ok(Self {
            algebra: self.algebra,
            coeffs: out,
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.conjugate().scale(1.0 / n2))
    }
}

fn conj_into(a: &[f64], out: &mut [f64]) {
    out[0] = a[0];
    for (o, x) in out[1..].iter_mut().zip(&a[1..]) {
        *o = -x;
    }
}

/// `out = a·b` for coefficient slices of length 1, 2, 4 or 8.
fn cayley_dickson(a: &[f64], b: &[f64], out: &mut [f64]) {
    let n = a.len();
    if n == 1 {
        out[0] = a[0] * b[0];
        return;
    }
    let h = n / 2;
    let (a0, a1) = a.split_at(h);
    let (b0, b1) = b.split_at(h);
    let mut t1 = [0.0; 4];
    let mut t2 = [0.0; 4];
    let mut conj = [0.0; 4];
    let (lo, hi) = out.split_at_mut(h);

    // lo = a0 b0 − conj(b1) a1
    cayley_dickson(a0, b0, &mut t1[..h]);
    conj_into(b1, &mut conj[..h]);
    cayley_dickson(&conj[..h], a1, &mut t2[..h]);
    for i in 0..h {
        lo[i] = t1[i] - t2[i];
    }

    // hi = b1 a0 + a1 conj(b0)
    cayley_dickson(b1, a0, &mut t1[..h]);
    conj_into(b0, &mut conj[..h]);
    cayley_dickson(a1, &conj[..h], &mut t2[..h]);
    for i in 0..h {
        hi[i] = t1[i] + t2[i];
    }
}

impl Add for CompositionElement {
    type Output = CompositionElement;

    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.algebra, rhs.algebra, "mixed-algebra addition");
        let mut e = self;
        for (a, b) in e.coeffs.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
        e
    }
}

impl Sub for CompositionElement {
    type Output = CompositionElement;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for CompositionElement {
    type Output = CompositionElement;

    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// Panicking product for same-algebra operands; use [`CompositionElement::multiply`]
/// when the algebras are not known to agree.
impl Mul for CompositionElement {
    type Output = CompositionElement;

    fn mul(self, rhs: Self) -> Self {
        self.multiply(&rhs).expect("mixed-algebra product")
    }
}

impl fmt::Display for CompositionElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs().iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if i == 0 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}e{i}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Left multiplication by `a` as a real `dim × dim` matrix (row-major).
pub fn left_multiplication_matrix(a: &CompositionElement) -> Vec<Vec<f64>> {
    let n = a.algebra().dim();
    let mut m = vec![vec![0.0; n]; n];
    for col in 0..n {
        let e = CompositionElement::basis(a.algebra(), col);
        let prod = *a * e;
        for (row, v) in prod.coeffs().iter().enumerate() {
            m[row][col] = *v;
        }
    }
    m
}

/// Right multiplication by `a` as a real `dim × dim` matrix (row-major).
pub fn right_multiplication_matrix(a: &CompositionElement) -> Vec<Vec<f64>> {
    let n = a.algebra().dim();
    let mut m = vec![vec![0.0; n]; n];
    for col in 0..n {
        let e = CompositionElement::basis(a.algebra(), col);
        let prod = e * *a;
        for (row, v) in prod.coeffs().iter().enumerate() {
            m[row][col] = *v;
        }
    }
    m
}
