//! The Pfaffian of the Levi contraction as a homogeneous polynomial in θ.
//!
//! `P(θ) = Pf(Σ θ_k B^{(k)})` has degree `d = q/2` in `p` variables. It is
//! recovered by dehomogenizing at `θ₁ = 1` and interpolating on a tensor grid
//! of `d + 1` nodes per remaining variable. Integral brackets use integer
//! nodes, modular Pfaffians and integer interpolation; everything else uses
//! Chebyshev nodes in floating point.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{pfaffian, pfaffian_integer};
use crate::nilpotent::TwoStepAlgebra;

/// Interpolation is refused when it would need more Pfaffian evaluations.
pub const MAX_EVALUATIONS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PfaffianPoly {
    p: usize,
    degree: usize,
    /// Exponent multi-index (length `p`, summing to `degree`) and coefficient,
    /// in lexicographic order of the exponents; zero coefficients omitted.
    terms: Vec<(Vec<u32>, f64)>,
    exact: bool,
}

impl PfaffianPoly {
    pub fn from_terms(p: usize, degree: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        for (alpha, _) in &terms {
            if alpha.len() != p || alpha.iter().sum::<u32>() as usize != degree {
                return Err(Error::InvalidArgument(format!(
                    "monomial {alpha:?} is not homogeneous of degree {degree} in {p} variables"
                )));
            }
        }
        let mut map = BTreeMap::new();
        for (alpha, c) in terms {
            *map.entry(alpha).or_insert(0.0) += c;
        }
        Ok(Self {
            p,
            degree,
            terms: map.into_iter().filter(|(_, c)| *c != 0.0).collect(),
            exact: false,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    /// Whether the coefficients came out of exact rational interpolation.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn coefficient(&self, alpha: &[u32]) -> f64 {
        self.terms
            .iter()
            .find(|(a, _)| a.as_slice() == alpha)
            .map_or(0.0, |(_, c)| *c)
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        assert_eq!(theta.len(), self.p, "wrong number of variables");
        let powers: Vec<Vec<f64>> = theta
            .iter()
            .map(|&t| {
                let mut v = vec![1.0; self.degree + 1];
                for e in 1..=self.degree {
                    v[e] = v[e - 1] * t;
                }
                v
            })
            .collect();
        self.terms
            .iter()
            .map(|(alpha, c)| {
                alpha
                    .iter()
                    .enumerate()
                    .fold(*c, |acc, (k, &e)| acc * powers[k][e as usize])
            })
            .sum()
    }

    /// `Σ |c_α|`.
    pub fn coefficient_l1(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs()).sum()
    }

    /// A bound on `‖∇P‖₂` over the cube `[−1, 1]^p`:
    /// `|∂_k P| ≤ Σ_α |c_α| α_k` there.
    pub fn gradient_bound(&self) -> f64 {
        (0..self.p)
            .map(|k| {
                self.terms
                    .iter()
                    .map(|(alpha, c)| c.abs() * alpha[k] as f64)
                    .sum::<f64>()
                    .powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Interpolates `Pf(A(θ))` from evaluations of the Levi contraction.
pub fn pfaffian_polynomial(alg: &TwoStepAlgebra) -> Result<PfaffianPoly> {
    let q = alg.q();
    if q % 2 == 1 {
        return Err(Error::OddDimension(q));
    }
    let p = alg.p();
    let d = q / 2;
    let free = p - 1;
    let count = (d + 1)
        .checked_pow(free as u32)
        .filter(|&c| c <= MAX_EVALUATIONS)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "interpolating degree {d} in {p} variables needs more than {MAX_EVALUATIONS} evaluations"
            ))
        })?;

    let integral = alg
        .brackets()
        .iter()
        .all(|b| b.iter().all(|x| x.fract() == 0.0 && x.abs() < 1e15));
    let grid: Vec<Vec<usize>> = (0..count).map(|i| digits(i, d + 1, free)).collect();

    let coeffs: Vec<f64> = if integral {
        let nodes: Vec<i64> = (0..=d as i64).map(|k| k - (d as i64) / 2).collect();
        let ints: Vec<DMatrix<i64>> = alg.brackets().iter().map(|b| b.map(|x| x as i64)).collect();
        let values: Vec<BigInt> = grid
            .par_iter()
            .map(|idx| {
                let mut a = &ints[0] * 1;
                for (k, &i) in idx.iter().enumerate() {
                    a += &ints[k + 1] * nodes[i];
                }
                pfaffian_integer(&a)
            })
            .collect();
        let rat_nodes: Vec<BigRational> = nodes.iter().map(|&n| BigRational::from_integer(n.into())).collect();
        let inv = vandermonde_inverse_exact(&rat_nodes);
        // Clear denominators so the sweep runs over integers.
        let mut denom = BigInt::one();
        for x in inv.iter().flatten() {
            if !(&denom % x.denom()).is_zero() {
                denom *= x.denom();
            }
        }
        let inv_int: Vec<Vec<BigInt>> = inv
            .iter()
            .map(|row| row.iter().map(|x| (x * BigRational::from_integer(denom.clone())).to_integer()).collect())
            .collect();
        let solved = apply_axes(values, &inv_int, d + 1, free, BigInt::zero);
        let total = BigRational::from_integer(denom.pow(free as u32));
        solved
            .into_iter()
            .map(|c| (BigRational::from_integer(c) / &total).to_f64().unwrap_or(f64::NAN))
            .collect()
    } else {
        let nodes: Vec<f64> = (0..=d)
            .map(|k| {
                if d == 0 {
                    0.0
                } else {
                    (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * (d + 1)) as f64).cos()
                }
            })
            .collect();
        let values: Vec<f64> = grid
            .par_iter()
            .map(|idx| {
                let mut a = alg.brackets()[0].clone();
                for (k, &i) in idx.iter().enumerate() {
                    a += &alg.brackets()[k + 1] * nodes[i];
                }
                pfaffian(&a)
            })
            .collect();
        let v = DMatrix::from_fn(d + 1, d + 1, |i, j| nodes[i].powi(j as i32));
        let inv = v
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular Vandermonde system".into()))?;
        let inv_rows: Vec<Vec<f64>> = (0..=d).map(|i| (0..=d).map(|j| inv[(i, j)]).collect()).collect();
        apply_axes(values, &inv_rows, d + 1, free, || 0.0)
    };

    let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut terms = Vec::new();
    for (i, &c) in coeffs.iter().enumerate() {
        let beta = digits(i, d + 1, free);
        let total: usize = beta.iter().sum();
        if total > d {
            // Exact interpolation leaves these at zero; floating point leaves noise.
            debug_assert!(!integral || c == 0.0);
            continue;
        }
        if c == 0.0 || (!integral && c.abs() <= 1e-13 * scale) {
            continue;
        }
        let mut alpha = Vec::with_capacity(p);
        alpha.push((d - total) as u32);
        alpha.extend(beta.iter().map(|&b| b as u32));
        terms.push((alpha, c));
    }
    let mut poly = PfaffianPoly::from_terms(p, d, terms)?;
    poly.exact = integral;
    Ok(poly)
}

/// Mixed-radix digits of `i`, least significant first.
fn digits(mut i: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut() {
        *slot = i % base;
        i /= base;
    }
    out
}

/// Applies the 1D inverse Vandermonde matrix along every axis of the
/// `base^axes` tensor of values (axis `k` has stride `base^k`).
fn apply_axes<T>(mut values: Vec<T>, inv: &[Vec<T>], base: usize, axes: usize, zero: impl Fn() -> T) -> Vec<T>
where
    T: Clone + std::ops::AddAssign,
    for<'a> &'a T: std::ops::Mul<&'a T, Output = T>,
{
    let mut stride = 1;
    for _ in 0..axes {
        let mut next: Vec<T> = (0..values.len()).map(|_| zero()).collect();
        for start in 0..values.len() {
            if (start / stride) % base != 0 {
                continue;
            }
            for (j, row) in inv.iter().enumerate() {
                let mut acc = zero();
                for (i, w) in row.iter().enumerate() {
                    acc += w * &values[start + i * stride];
                }
                next[start + j * stride] = acc;
            }
        }
        values = next;
        stride *= base;
    }
    values
}

/// Inverse of `V_{ij} = x_i^j` by Gauss–Jordan over the rationals.
fn vandermonde_inverse_exact(nodes: &[BigRational]) -> Vec<Vec<BigRational>> {
    let n = nodes.len();
    let mut a: Vec<Vec<BigRational>> = nodes
        .iter()
        .map(|x| {
            let mut row = Vec::with_capacity(2 * n);
            let mut power = BigRational::one();
            for _ in 0..n {
                row.push(power.clone());
                power *= x;
            }
            row
        })
        .collect();
    for (i, row) in a.iter_mut().enumerate() {
        for j in 0..n {
            row.push(if i == j { BigRational::one() } else { BigRational::zero() });
        }
    }
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).expect("distinct nodes");
        a.swap(col, pivot);
        let inv = BigRational::one() / &a[col][col];
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}
