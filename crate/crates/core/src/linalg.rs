//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, SymmetricEigen};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// `max |A + Aᵀ|`.
pub fn skew_deviation(a: &DMatrix<f64>) -> f64 {
    (a + a.transpose()).amax()
}

/// `(A − Aᵀ) / 2`.
pub fn skew_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

pub fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Pfaffian of a skew-symmetric matrix by skew Gaussian elimination with
/// partial pivoting (the `LTLᵀ` reduction of Parlett and Reid).
pub fn pfaffian(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "pfaffian of a non-square matrix");
    if n % 2 == 1 {
        return 0.0;
    }
    let mut a = a.clone();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        let mut best = a[(k + 1, k)].abs();
        for i in k + 2..n {
            if a[(i, k)].abs() > best {
                best = a[(i, k)].abs();
                kp = i;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let pivot = a[(k, k + 1)];
        if pivot == 0.0 {
            return 0.0;
        }
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| a[(k, j)] / pivot).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    pf
}

/// Exact Pfaffian over the rationals; same elimination, first nonzero pivot.
pub fn pfaffian_exact(a: &[Vec<BigRational>]) -> BigRational {
    let n = a.len();
    if n % 2 == 1 {
        return BigRational::zero();
    }
    let mut a: Vec<Vec<BigRational>> = a.to_vec();
    let mut pf = BigRational::from_integer(1.into());
    let mut k = 0;
    while k + 1 < n {
        let Some(kp) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
            return BigRational::zero();
        };
        if kp != k + 1 {
            a.swap(k + 1, kp);
            for row in a.iter_mut() {
                row.swap(k + 1, kp);
            }
            pf = -pf;
        }
        let pivot = a[k][k + 1].clone();
        pf *= &pivot;
        if k + 2 < n {
            let tau: Vec<BigRational> = (k + 2..n).map(|j| &a[k][j] / &pivot).collect();
            let col: Vec<BigRational> = (k + 2..n).map(|i| a[i][k + 1].clone()).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    let delta = &tau[ii] * &col[jj] - &col[ii] * &tau[jj];
                    if !delta.is_zero() {
                        a[i][j] += delta;
                    }
                }
            }
        }
        k += 2;
    }
    pf
}

/// Exact Pfaffian of an integer skew matrix: elimination modulo enough
/// 31-bit primes to exceed twice the Hadamard bound, then Chinese remaindering.
pub fn pfaffian_integer(a: &DMatrix<i64>) -> BigInt {
    let n = a.nrows();
    if n % 2 == 1 {
        return BigInt::zero();
    }
    let mut log2_bound = 0.0;
    for r in 0..n {
        let norm2: f64 = (0..n).map(|c| (a[(r, c)] as f64).powi(2)).sum();
        if norm2 == 0.0 {
            return BigInt::zero();
        }
        log2_bound += 0.25 * norm2.log2();
    }
    let needed = log2_bound + 4.0;
    let mut value = BigInt::zero();
    let mut modulus = BigInt::one();
    let mut bits = 0.0;
    for &prime in modular_primes() {
        if bits > needed {
            break;
        }
        let residue = pfaffian_mod(a, prime);
        // Garner step: value ← value + modulus · ((residue − value) / modulus mod prime).
        let current = (&value % prime).to_u64().expect("reduced below prime");
        let m_mod = (&modulus % prime).to_u64().expect("reduced below prime");
        let diff = (residue + prime - current) % prime;
        let t = mul_mod(diff, pow_mod(m_mod, prime - 2, prime), prime);
        value += &modulus * t;
        modulus *= prime;
        bits += (prime as f64).log2();
    }
    assert!(bits > needed, "prime table too short for a {n}x{n} Pfaffian");
    if &value * 2 > modulus {
        value - modulus
    } else {
        value
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a * b) % m
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for b in BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for b in BASES {
        let mut x = pow_mod(b, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The 256 largest primes below `2^31`.
fn modular_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut out = Vec::with_capacity(256);
        let mut c = (1u64 << 31) - 1;
        while out.len() < 256 {
            if is_prime(c) {
                out.push(c);
            }
            c -= 2;
        }
        out
    })
}

fn pfaffian_mod(a: &DMatrix<i64>, p: u64) -> u64 {
    let n = a.nrows();
    let mut m: Vec<Vec<u64>> = (0..n)
        .map(|r| (0..n).map(|c| a[(r, c)].rem_euclid(p as i64) as u64).collect())
        .collect();
    let mut pf = 1u64;
    let mut k = 0;
    while k + 1 < n {
        let Some(kp) = (k + 1..n).find(|&i| m[i][k] != 0) else {
            return 0;
        };
        if kp != k + 1 {
            m.swap(k + 1, kp);
            for row in m.iter_mut() {
                row.swap(k + 1, kp);
            }
            pf = (p - pf) % p;
        }
        let pivot = m[k][k + 1];
        pf = mul_mod(pf, pivot, p);
        let inv = pow_mod(pivot, p - 2, p);
        let tau: Vec<u64> = (k + 2..n).map(|j| mul_mod(m[k][j], inv, p)).collect();
        let col: Vec<u64> = (k + 2..n).map(|i| m[i][k + 1]).collect();
        for (ii, i) in (k + 2..n).enumerate() {
            for (jj, j) in (k + 2..n).enumerate() {
                let plus = mul_mod(tau[ii], col[jj], p);
                let minus = mul_mod(col[ii], tau[jj], p);
                m[i][j] = (m[i][j] + plus + p - minus) % p;
            }
        }
        k += 2;
    }
    pf
}

pub fn rational_abs_max(v: &[BigRational]) -> BigRational {
    v.iter()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(BigRational::zero)
}

/// Eigen-decomposition of the symmetric part of `a`, eigenvalues ascending.
pub fn sorted_symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetric_part(a));
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `f(M)` for symmetric `M` applied through its spectrum.
pub fn symmetric_function(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, vectors) = sorted_symmetric_eigen(a);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| f(x)),
    ));
    &vectors * d * vectors.transpose()
}

/// Checks positive definiteness of a symmetric matrix (relative threshold).
pub fn require_positive_definite(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DegenerateMetric);
    }
    if (m - m.transpose()).amax() > 1e-9 * m.amax().max(1.0) {
        return Err(Error::DegenerateMetric);
    }
    let (values, _) = sorted_symmetric_eigen(m);
    let top = values.last().copied().unwrap_or(0.0);
    if !(values[0] > 1e-12 * top.abs()) || top <= 0.0 {
        return Err(Error::DegenerateMetric);
    }
    Ok(())
}

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Determinant by LU; used only as an independent check against Pfaffians.
pub fn determinant(a: &DMatrix<f64>) -> f64 {
    a.clone().lu().determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_skew(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &m - m.transpose()
    }

    /// Pfaffian by expansion along the first row, exponential but independent.
    fn pfaffian_expansion(a: &DMatrix<f64>, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return 1.0;
        }
        let i = idx[0];
        let mut total = 0.0;
        for (pos, &j) in idx.iter().enumerate().skip(1) {
            let rest: Vec<usize> = idx.iter().copied().filter(|&k| k != i && k != j).collect();
            let sign = if pos % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * a[(i, j)] * pfaffian_expansion(a, &rest);
        }
        total
    }

    #[test]
    fn small_pfaffians() {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, -3.0, 0.0]);
        assert_eq!(pfaffian(&j), 3.0);
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 2.0, 3.0, -1.0, 0.0, 4.0, 5.0, -2.0, -4.0, 0.0, 6.0, -3.0, -5.0, -6.0,
                0.0,
            ],
        );
        // a12 a34 − a13 a24 + a14 a23
        assert!((pfaffian(&a) - (6.0 - 10.0 + 12.0)).abs() < 1e-12);
        assert_eq!(pfaffian(&DMatrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn pfaffian_matches_expansion_and_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2, 4, 6, 8] {
            for _ in 0..20 {
                let a = random_skew(n, &mut rng);
                let idx: Vec<usize> = (0..n).collect();
                let pf = pfaffian(&a);
                assert!((pf - pfaffian_expansion(&a, &idx)).abs() <= 1e-10 * (1.0 + pf.abs()));
                let det = determinant(&a);
                assert!((pf * pf - det).abs() <= 1e-9 * (1.0 + det.abs()));
            }
        }
    }

    #[test]
    fn exact_pfaffian_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 4, 6] {
            let ints = DMatrix::from_fn(n, n, |_, _| rng.random_range(-3i64..=3));
            let skew = &ints - ints.transpose();
            let rat: Vec<Vec<BigRational>> = (0..n)
                .map(|r| {
                    (0..n)
                        .map(|c| BigRational::from_integer(BigInt::from(skew[(r, c)])))
                        .collect()
                })
                .collect();
            let exact = pfaffian_exact(&rat);
            let float = pfaffian(&skew.map(|x| x as f64));
            assert!(exact.is_integer());
            let e: f64 = exact.to_integer().to_string().parse().unwrap();
            assert!((e - float).abs() < 1e-9);
        }
    }

    #[test]
    fn modular_pfaffian_matches_rational() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, span) in [(2, 5i64), (4, 3), (6, 1_000_000_000), (10, 1_000_000_000), (12, 2)] {
            for _ in 0..5 {
                let ints = DMatrix::from_fn(n, n, |_, _| rng.random_range(-span..=span));
                let skew = &ints - ints.transpose();
                let rat: Vec<Vec<BigRational>> = (0..n)
                    .map(|r| (0..n).map(|c| BigRational::from_integer(BigInt::from(skew[(r, c)]))).collect())
                    .collect();
                assert_eq!(BigRational::from_integer(pfaffian_integer(&skew)), pfaffian_exact(&rat));
            }
        }
        let mut singular = DMatrix::<i64>::zeros(4, 4);
        singular[(0, 1)] = 7;
        singular[(1, 0)] = -7;
        assert_eq!(pfaffian_integer(&singular), BigInt::zero());
    }
}
