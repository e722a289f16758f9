//! Representations of the Clifford algebra `Cl(ℝᵖ)` by anticommuting
//! orthogonal complex structures.
//!
//! Generators are integer signed-permutation matrices, so every relation can
//! be checked exactly. The irreducible blocks come from left multiplication
//! in ℂ, ℍ and 𝕆 for `p ≤ 7`, one doubling step for `p = 8`, and the
//! periodicity `Cl(ℝ^{p+8}) ≅ Cl(ℝᵖ) ⊗ ℝ(16)` above that.

use nalgebra::DMatrix;

use crate::composition::{left_multiplication_matrix, Algebra, CompositionElement};
use crate::error::{Error, Result};

/// Dimension of an irreducible representation of `Cl(ℝᵖ)`: the smallest
/// `2^{4s+t}`, `t ∈ {0,1,2,3}`, with `p < 8s + 2^t`.
pub fn min_rep_dim(p: usize) -> Result<usize> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    let mut s = 0usize;
    loop {
        for t in 0..4u32 {
            if p < 8 * s + (1usize << t) {
                let exp = 4 * s as u32 + t;
                return 1usize
                    .checked_shl(exp)
                    .filter(|_| exp < usize::BITS)
                    .ok_or_else(|| Error::InvalidArgument(format!("p = {p} is too large")));
            }
        }
        s += 1;
    }
}

/// `p` anticommuting orthogonal complex structures on `ℝ^{m·n}`, built as `n`
/// block-diagonal copies of one irreducible representation on `ℝᵐ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordRep {
    p: usize,
    m: usize,
    n: usize,
    generators: Vec<DMatrix<i32>>,
}

impl CliffordRep {
    pub fn p(&self) -> usize {
        self.p
    }

    /// Irreducible block dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of isotypical copies.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m * self.n
    }

    pub fn generators(&self) -> &[DMatrix<i32>] {
        &self.generators
    }

    pub fn generator_f64(&self, k: usize) -> DMatrix<f64> {
        self.generators[k].map(|x| x as f64)
    }

    /// `J_c = Σ c_k J_k`.
    pub fn combination(&self, c: &[f64]) -> Result<DMatrix<f64>> {
        if c.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: c.len(),
            });
        }
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (ck, jk) in c.iter().zip(&self.generators) {
            out += jk.map(|x| x as f64) * *ck;
        }
        Ok(out)
    }

    /// Checks `J_k² = −I`, `J_kᵀ = −J_k` and `J_kJ_l = −J_lJ_k` in integer arithmetic.
    pub fn relations_hold(&self) -> bool {
        clifford_relations_hold(&self.generators)
    }
}

pub(crate) fn clifford_relations_hold(gens: &[DMatrix<i32>]) -> bool {
    let Some(first) = gens.first() else {
        return true;
    };
    let d = first.nrows();
    let neg_id = -DMatrix::<i32>::identity(d, d);
    let zero = DMatrix::<i32>::zeros(d, d);
    for (k, a) in gens.iter().enumerate() {
        if a.shape() != (d, d) || a.transpose() != -a || a * a != neg_id {
            return false;
        }
        for b in &gens[k + 1..] {
            if a * b + b * a != zero {
                return false;
            }
        }
    }
    true
}

/// Builds `Cl(ℝᵖ)` acting isotypically on `ℝ^{m·n}`, `m = min_rep_dim(p)`.
pub fn build_clifford_rep(p: usize, n: usize) -> Result<CliffordRep> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let m = min_rep_dim(p)?;
    let block = irreducible(p);
    debug_assert!(block.iter().all(|g| g.nrows() == m));
    let generators = block.iter().map(|g| block_diagonal(g, n)).collect();
    Ok(CliffordRep {
        p,
        m,
        n,
        generators,
    })
}

fn irreducible(p: usize) -> Vec<DMatrix<i32>> {
    match p {
        1 => left_units(Algebra::Complex, 1),
        2 | 3 => left_units(Algebra::Quaternion, p),
        4..=7 => left_units(Algebra::Octonion, p),
        8 => double(&left_units(Algebra::Octonion, 7)),
        _ => {
            let base = irreducible(p - 8);
            let e8 = irreducible(8);
            periodicity(&e8, &base)
        }
    }
}

fn to_int(m: &[Vec<f64>]) -> DMatrix<i32> {
    let n = m.len();
    DMatrix::from_fn(n, n, |r, c| {
        let v = m[r][c];
        debug_assert_eq!(v, v.round());
        v as i32
    })
}

/// Left multiplication by the first `count` imaginary units.
fn left_units(alg: Algebra, count: usize) -> Vec<DMatrix<i32>> {
    (1..=count)
        .map(|i| to_int(&left_multiplication_matrix(&CompositionElement::basis(alg, i))))
        .collect()
}

/// From `p` generators on `ℝᵐ` to `p + 1` on `ℝ^{2m}`:
/// `J_k ↦ diag(J_k, −J_k)` plus `[[0, −I], [I, 0]]`.
fn double(gens: &[DMatrix<i32>]) -> Vec<DMatrix<i32>> {
    let m = gens[0].nrows();
    let mut out: Vec<DMatrix<i32>> = gens
        .iter()
        .map(|g| {
            let mut d = DMatrix::zeros(2 * m, 2 * m);
            d.view_mut((0, 0), (m, m)).copy_from(g);
            d.view_mut((m, m), (m, m)).copy_from(&(-g));
            d
        })
        .collect();
    let mut extra = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        extra[(i, m + i)] = -1;
        extra[(m + i, i)] = 1;
    }
    out.push(extra);
    out
}

/// `E_a ⊗ I` together with `Ω ⊗ J_k`, where `Ω = E_1⋯E_8` is a symmetric
/// involution anticommuting with every `E_a`.
fn periodicity(e8: &[DMatrix<i32>], base: &[DMatrix<i32>]) -> Vec<DMatrix<i32>> {
    let m = base[0].nrows();
    let id_m = DMatrix::<i32>::identity(m, m);
    let omega = e8
        .iter()
        .fold(DMatrix::<i32>::identity(16, 16), |acc, e| acc * e);
    let mut out: Vec<DMatrix<i32>> = e8.iter().map(|e| e.kronecker(&id_m)).collect();
    out.extend(base.iter().map(|j| omega.kronecker(j)));
    out
}

fn block_diagonal(g: &DMatrix<i32>, copies: usize) -> DMatrix<i32> {
    let m = g.nrows();
    let mut out = DMatrix::zeros(m * copies, m * copies);
    for c in 0..copies {
        out.view_mut((c * m, c * m), (m, m)).copy_from(g);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn min_dims() {
        let expected = [(1, 2), (2, 4), (3, 4), (4, 8), (5, 8), (6, 8), (7, 8), (8, 16), (9, 32)];
        for (p, m) in expected {
            assert_eq!(min_rep_dim(p).unwrap(), m, "p = {p}");
        }
        assert!(min_rep_dim(0).is_err());
        // Bott periodicity of the formula.
        for p in 1..40 {
            assert_eq!(min_rep_dim(p + 8).unwrap(), 16 * min_rep_dim(p).unwrap());
        }
    }

    /// Enumerates every `(s, t)` with `2^{4s+t}` below the answer and checks
    /// none of them satisfy the inequality.
    #[test]
    fn min_dim_is_minimal_by_enumeration() {
        for p in 1..30usize {
            let m = min_rep_dim(p).unwrap();
            let mut best = usize::MAX;
            for s in 0..8usize {
                for t in 0..4usize {
                    if p < 8 * s + (1 << t) {
                        best = best.min(1 << (4 * s + t));
                    }
                }
            }
            assert_eq!(m, best);
        }
    }

    #[test]
    fn heisenberg_generator() {
        let rep = build_clifford_rep(1, 1).unwrap();
        assert_eq!(rep.generators()[0], DMatrix::from_row_slice(2, 2, &[0, -1, 1, 0]));
    }

    #[test]
    fn quaternion_generators_are_left_multiplication() {
        let rep = build_clifford_rep(3, 1).unwrap();
        for (k, g) in rep.generators().iter().enumerate() {
            let unit = CompositionElement::basis(Algebra::Quaternion, k + 1);
            for col in 0..4 {
                let image = unit * CompositionElement::basis(Algebra::Quaternion, col);
                for row in 0..4 {
                    assert_eq!(g[(row, col)] as f64, image.coeffs()[row]);
                }
            }
        }
    }

    #[test]
    fn relations_for_small_p() {
        for p in 1..=9 {
            for n in 1..=3 {
                let rep = build_clifford_rep(p, n).unwrap();
                assert_eq!(rep.dim(), min_rep_dim(p).unwrap() * n);
                assert_eq!(rep.generators().len(), p);
                assert!(rep.relations_hold(), "p = {p}, n = {n}");
                for g in rep.generators() {
                    assert!(g.iter().all(|x| (-1..=1).contains(x)));
                }
            }
        }
    }

    #[test]
    fn relations_above_first_period() {
        for p in [10, 12, 15, 16, 17] {
            let rep = build_clifford_rep(p, 1).unwrap();
            assert_eq!(rep.dim(), min_rep_dim(p).unwrap());
            assert!(rep.relations_hold(), "p = {p}");
        }
    }

    #[test]
    fn broken_relations_are_detected() {
        let rep = build_clifford_rep(2, 1).unwrap();
        let mut gens = rep.generators().to_vec();
        gens[1] = gens[0].clone();
        assert!(!clifford_relations_hold(&gens));
    }

    #[test]
    fn unit_combinations_square_to_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in [2, 3, 5, 8, 9] {
            let rep = build_clifford_rep(p, 1).unwrap();
            let d = rep.dim();
            for _ in 0..100 {
                let mut c: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                c.iter_mut().for_each(|x| *x /= norm);
                let j = rep.combination(&c).unwrap();
                let err = (&j * &j + DMatrix::<f64>::identity(d, d)).amax();
                assert!(err <= 1e-12, "p = {p}: {err}");
            }
        }
    }

    #[test]
    fn zero_copies_rejected() {
        assert!(build_clifford_rep(3, 0).is_err());
        assert!(build_clifford_rep(0, 1).is_err());
    }
}
