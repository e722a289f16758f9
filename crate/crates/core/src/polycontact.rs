//! Certified checks of the polycontact condition and related invariants.
//!
//! A bracket is polycontact when `A(θ) = Σ θ_k B^{(k)}` is nondegenerate for
//! every `θ` on the unit sphere, i.e. when the Pfaffian polynomial has no zero
//! there. Three routes lead to a verdict, tried in order: the H-type identity
//! `J(θ)² = −|θ|²`, a single determinant when `p = 1`, and a subdivision of
//! the sphere with a Lipschitz bound on the Pfaffian.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{determinant, pfaffian, require_positive_definite, singular_values, sorted_symmetric_eigen};
use crate::nilpotent::TwoStepAlgebra;
use crate::pfaffian::{pfaffian_polynomial, PfaffianPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Certified,
    Refuted,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    HTypeIdentity,
    Corank1Determinant,
    PfaffianSubdivision,
    /// Every skew form on an odd-dimensional space is degenerate.
    OddDimension,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolycontactCertificate {
    pub verdict: Verdict,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    pub cells_used: u64,
}

impl PolycontactCertificate {
    fn certified(method: Method, lower_bound: f64, cells_used: u64) -> Self {
        Self {
            verdict: Verdict::Certified,
            method,
            witness: None,
            lower_bound: Some(lower_bound),
            cells_used,
        }
    }

    fn refuted(method: Method, witness: Vec<f64>, cells_used: u64) -> Self {
        Self {
            verdict: Verdict::Refuted,
            method,
            witness: Some(witness),
            lower_bound: None,
            cells_used,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TolConfig {
    /// Maximum number of sphere cells examined before giving up.
    pub budget: u64,
    /// `A(θ)` counts as degenerate when `|det A(θ)| ≤ det_tolerance · ‖A(θ)‖_F^q`.
    pub det_tolerance: f64,
    /// Relative tolerance for the Clifford identities in the H-type test.
    pub htype_tolerance: f64,
}

impl Default for TolConfig {
    fn default() -> Self {
        Self {
            budget: 1_000_000,
            det_tolerance: 1e-9,
            htype_tolerance: 1e-9,
        }
    }
}

/// Whether `A(θ)` is degenerate in the relative sense of `TolConfig`.
pub fn is_degenerate(alg: &TwoStepAlgebra, theta: &[f64], tol: &TolConfig) -> Result<bool> {
    let a = alg.levi_contraction(theta)?.into_matrix();
    let scale = a.norm().powi(alg.q() as i32);
    Ok(scale == 0.0 || determinant(&a).abs() <= tol.det_tolerance * scale)
}

/// Result of the H-type test: the normalized-trace Gram matrix
/// `G_kl = −tr(J_k J_l) / q` and whether `J_k J_l + J_l J_k = −2 G_kl` holds.
#[derive(Clone, Debug)]
pub struct HTypeReport {
    pub is_htype: bool,
    pub gram: DMatrix<f64>,
}

/// The structure maps `J_k` with `⟨J_k v, w⟩_g = B^{(k)}(v, w)`, i.e. `J_k = −M⁻¹ B^{(k)}`.
pub fn structure_maps(alg: &TwoStepAlgebra) -> Result<Vec<DMatrix<f64>>> {
    let m = alg.metric();
    require_positive_definite(&m)?;
    let m_inv = m.try_inverse().ok_or(Error::DegenerateMetric)?;
    Ok(alg.brackets().iter().map(|b| -(&m_inv * b)).collect())
}

pub fn is_htype_with_metric(alg: &TwoStepAlgebra) -> Result<HTypeReport> {
    is_htype_with_tolerance(alg, TolConfig::default().htype_tolerance)
}

fn is_htype_with_tolerance(alg: &TwoStepAlgebra, tol: f64) -> Result<HTypeReport> {
    let js = structure_maps(alg)?;
    let q = alg.q();
    let p = alg.p();
    let gram = DMatrix::from_fn(p, p, |k, l| -(&js[k] * &js[l]).trace() / q as f64);
    let scale = js.iter().map(|j| j.norm_squared()).fold(0.0, f64::max) / q as f64;
    if scale == 0.0 {
        return Ok(HTypeReport { is_htype: false, gram });
    }
    let id = DMatrix::<f64>::identity(q, q);
    let mut identities = true;
    'outer: for k in 0..p {
        for l in k..p {
            let anti = &js[k] * &js[l] + &js[l] * &js[k] + &id * (2.0 * gram[(k, l)]);
            if anti.amax() > tol * scale.max(1e-300) * q as f64 {
                identities = false;
                break 'outer;
            }
        }
    }
    let (eigs, _) = sorted_symmetric_eigen(&gram);
    let definite = eigs[0] > tol * eigs[p - 1].abs();
    Ok(HTypeReport {
        is_htype: identities && definite,
        gram,
    })
}

pub fn certify_polycontact(alg: &TwoStepAlgebra, tol: &TolConfig) -> Result<PolycontactCertificate> {
    let q = alg.q();
    let p = alg.p();
    let mut e1 = vec![0.0; p];
    e1[0] = 1.0;
    if q % 2 == 1 {
        return Ok(PolycontactCertificate::refuted(Method::OddDimension, e1, 0));
    }

    let report = is_htype_with_tolerance(alg, tol.htype_tolerance)?;
    if report.is_htype {
        // det A(θ) = det M · (θᵀGθ)^{q/2} for H-type brackets.
        let (eigs, _) = sorted_symmetric_eigen(&report.gram);
        let bound = determinant(&alg.metric()).sqrt() * eigs[0].powf(q as f64 / 4.0);
        return Ok(PolycontactCertificate::certified(Method::HTypeIdentity, bound, 0));
    }

    if p == 1 {
        if is_degenerate(alg, &e1, tol)? {
            return Ok(PolycontactCertificate::refuted(Method::Corank1Determinant, e1, 1));
        }
        let pf = pfaffian(&alg.brackets()[0]);
        return Ok(PolycontactCertificate::certified(Method::Corank1Determinant, pf.abs(), 1));
    }

    let poly = pfaffian_polynomial(alg)?;
    Ok(subdivide(alg, &poly, tol))
}

/// A box on one face of the cube `[−1, 1]^p`; the fixed coordinate is
/// `axis = sign`, the others range over `centre ± half`.
#[derive(Clone, Debug)]
struct Cell {
    axis: usize,
    sign: f64,
    centre: Vec<f64>,
    half: f64,
}

impl Cell {
    fn point(&self, offset: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.centre.len() + 1);
        let mut free = self.centre.iter().zip(offset);
        for k in 0..=self.centre.len() {
            if k == self.axis {
                x.push(self.sign);
            } else {
                let (c, o) = free.next().expect("cell coordinate");
                x.push(c + o);
            }
        }
        x
    }

    fn children(&self) -> Vec<Cell> {
        let n = self.centre.len();
        let h = self.half / 2.0;
        (0..1usize << n)
            .map(|mask| Cell {
                axis: self.axis,
                sign: self.sign,
                centre: (0..n)
                    .map(|i| self.centre[i] + if mask >> i & 1 == 1 { h } else { -h })
                    .collect(),
                half: h,
            })
            .collect()
    }
}

enum CellOutcome {
    Certified(f64),
    Degenerate(Vec<f64>),
    Split { value: f64, point: Vec<f64> },
}

fn normalize(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter().map(|v| v / n).collect()
}

fn subdivide(alg: &TwoStepAlgebra, poly: &PfaffianPoly, tol: &TolConfig) -> PolycontactCertificate {
    let p = alg.p();
    let d = poly.degree();
    let lip = poly.gradient_bound();
    let margin = 64.0 * f64::EPSILON * (d + p) as f64 * poly.coefficient_l1();

    let mut cells: Vec<Cell> = (0..p)
        .flat_map(|axis| {
            [1.0, -1.0].map(|sign| Cell {
                axis,
                sign,
                centre: vec![0.0; p - 1],
                half: 1.0,
            })
        })
        .collect();
    let mut used: u64 = 0;
    let mut positive: Option<Vec<f64>> = None;
    let mut negative: Option<Vec<f64>> = None;
    let mut lower = f64::INFINITY;

    while !cells.is_empty() {
        if used + cells.len() as u64 > tol.budget {
            return PolycontactCertificate {
                verdict: Verdict::Undetermined,
                method: Method::PfaffianSubdivision,
                witness: None,
                lower_bound: None,
                cells_used: used,
            };
        }
        used += cells.len() as u64;
        let outcomes: Vec<CellOutcome> = cells
            .par_iter()
            .map(|cell| {
                let x = cell.point(&vec![0.0; p - 1]);
                let theta = normalize(&x);
                if is_degenerate(alg, &theta, tol).unwrap_or(true) {
                    return CellOutcome::Degenerate(theta);
                }
                let value = poly.eval(&x);
                let radius = cell.half * ((p - 1) as f64).sqrt();
                let slack = value.abs() - lip * radius - margin;
                if slack > 0.0 {
                    let far: f64 = 1.0
                        + cell
                            .centre
                            .iter()
                            .map(|c| (c.abs() + cell.half).min(1.0).powi(2))
                            .sum::<f64>();
                    CellOutcome::Certified(slack / far.powf(d as f64 / 2.0))
                } else {
                    CellOutcome::Split { value, point: theta }
                }
            })
            .collect();

        let mut next = Vec::new();
        for (cell, outcome) in cells.iter().zip(outcomes) {
            match outcome {
                CellOutcome::Degenerate(theta) => {
                    return PolycontactCertificate::refuted(Method::PfaffianSubdivision, theta, used);
                }
                CellOutcome::Certified(bound) => lower = lower.min(bound),
                CellOutcome::Split { value, point } => {
                    if value > 0.0 && positive.is_none() {
                        positive = Some(point);
                    } else if value < 0.0 && negative.is_none() {
                        negative = Some(point);
                    }
                    next.extend(cell.children());
                }
            }
        }
        // Any sign change on the connected sphere forces a zero in between.
        if let (Some(a), Some(b)) = (&positive, &negative) {
            let root = bisect_sign_change(alg, a, b);
            return PolycontactCertificate::refuted(Method::PfaffianSubdivision, root, used);
        }
        cells = next;
    }
    PolycontactCertificate::certified(Method::PfaffianSubdivision, lower, used)
}

/// Locates a zero of `θ ↦ Pf A(θ)` on a sphere arc from `a` (positive) to `b` (negative).
fn bisect_sign_change(alg: &TwoStepAlgebra, a: &[f64], b: &[f64]) -> Vec<f64> {
    let pf = |t: &[f64]| pfaffian(alg.levi_contraction(t).expect("dimensions").matrix());
    let (mut lo, mut hi) = (a.to_vec(), b.to_vec());
    let dot: f64 = lo.iter().zip(&hi).map(|(x, y)| x * y).sum();
    if dot < -1.0 + 1e-12 {
        // Antipodal ends: go through a vector orthogonal to both.
        let k = (0..lo.len())
            .min_by(|&i, &j| lo[i].abs().total_cmp(&lo[j].abs()))
            .expect("nonempty");
        let mut w: Vec<f64> = vec![0.0; lo.len()];
        w[k] = 1.0;
        let c = lo[k];
        let w = normalize(&w.iter().zip(&lo).map(|(wi, li)| wi - c * li).collect::<Vec<_>>());
        if pf(&w) > 0.0 {
            lo = w;
        } else {
            hi = w;
        }
    }
    for _ in 0..200 {
        let mid = normalize(&lo.iter().zip(&hi).map(|(x, y)| x + y).collect::<Vec<_>>());
        let v = pf(&mid);
        if v == 0.0 {
            return mid;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if lo.iter().zip(&hi).all(|(x, y)| (x - y).abs() <= 1e-16) {
            break;
        }
    }
    if pf(&lo).abs() <= pf(&hi).abs() {
        lo
    } else {
        hi
    }
}

/// Re-derives a certificate's verdict: for `Refuted`, the contraction at the
/// witness must be degenerate; for `Certified`, certification must be
/// reproduced and the bound must not exceed sampled values of `|Pf|`.
pub fn recheck(alg: &TwoStepAlgebra, cert: &PolycontactCertificate, tol: &TolConfig) -> Result<bool> {
    match cert.verdict {
        Verdict::Refuted => {
            let Some(w) = &cert.witness else {
                return Ok(false);
            };
            if w.len() != alg.p() {
                return Ok(false);
            }
            if cert.method == Method::OddDimension {
                return Ok(alg.q() % 2 == 1);
            }
            is_degenerate(alg, &normalize(w), tol)
        }
        Verdict::Certified => {
            let Some(bound) = cert.lower_bound else {
                return Ok(false);
            };
            let fresh = certify_polycontact(alg, tol)?;
            if fresh.verdict != Verdict::Certified || !(bound > 0.0) {
                return Ok(false);
            }
            let p = alg.p();
            let samples = sample_sphere(p, 256);
            let min_pf = samples
                .iter()
                .map(|t| pfaffian(alg.levi_contraction(t).expect("dimensions").matrix()).abs())
                .fold(f64::INFINITY, f64::min);
            Ok(bound <= min_pf * (1.0 + 1e-9))
        }
        Verdict::Undetermined => Ok(certify_polycontact(alg, tol)?.verdict == Verdict::Undetermined),
    }
}

/// The signed coordinate axes followed by seeded Gaussian directions.
fn sample_sphere(p: usize, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count + 2 * p);
    for k in 0..p {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; p];
            e[k] = s;
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..count {
        let x: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        out.push(normalize(&x));
    }
    out
}

/// Hörmander condition: `[V, V] = W`, i.e. the `p × (q choose 2)` matrix of
/// bracket components has full row rank.
pub fn bracket_generating(alg: &TwoStepAlgebra) -> bool {
    let q = alg.q();
    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|i| (i + 1..q).map(move |j| (i, j))).collect();
    if pairs.len() < alg.p() {
        return false;
    }
    let m = DMatrix::from_fn(alg.p(), pairs.len(), |k, c| alg.brackets()[k][pairs[c]]);
    let s = singular_values(&m);
    let top = s.first().copied().unwrap_or(0.0);
    top > 0.0 && s.len() >= alg.p() && s[alg.p() - 1] > 1e-10 * top
}

/// `J` is a complex structure to within `1e−10`.
pub fn check_complex_structure(j: &DMatrix<f64>) -> Result<()> {
    let q = j.nrows();
    if j.ncols() != q {
        return Err(Error::InvalidArgument("complex structure must be square".into()));
    }
    let err = (j * j + DMatrix::<f64>::identity(q, q)).amax();
    if err > 1e-10 {
        return Err(Error::NotComplexStructure(err));
    }
    Ok(())
}

/// Signature `(n₊, n₋)` of the hermitian Levi form `h_θ(v, w) = A(v, Jw) + iA(v, w)`
/// on `(ℝ^q, J) ≅ ℂ^{q/2}`.
///
/// `A(θ)` must be `J`-invariant, which makes `A J` symmetric; each complex
/// dimension contributes a pair of equal real eigenvalues.
pub fn cr_levi_signature(alg: &TwoStepAlgebra, j: &DMatrix<f64>, theta: &[f64]) -> Result<(usize, usize)> {
    check_complex_structure(j)?;
    let a = alg.levi_contraction(theta)?.into_matrix();
    if j.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: j.nrows(),
        });
    }
    let s = &a * j;
    let scale = a.amax();
    if scale == 0.0 || determinant(&a).abs() <= 1e-9 * a.norm().powi(a.nrows() as i32) {
        return Err(Error::DegenerateForm);
    }
    let invariance = (j.transpose() * &a * j - &a).amax();
    if invariance > 1e-9 * scale {
        return Err(Error::IncompatibleStructure(format!(
            "|JᵀAJ − A| = {invariance:.3e}"
        )));
    }
    let (eigs, _) = sorted_symmetric_eigen(&s);
    let pos = eigs.iter().filter(|&&e| e > 0.0).count();
    let neg = eigs.len() - pos;
    Ok((pos / 2, neg / 2))
}

/// Right multiplication by `i` on each `ℍ` block of `ℍⁿ = ℝ^{4n}`. It
/// commutes with the left multiplications defining `𝒞(2, n)` and `𝒞(3, n)`.
pub fn quaternionic_right_i(n: usize) -> DMatrix<f64> {
    use crate::composition::{right_multiplication_matrix, Algebra, CompositionElement};
    let r = right_multiplication_matrix(&CompositionElement::basis(Algebra::Quaternion, 1));
    let mut out = DMatrix::zeros(4 * n, 4 * n);
    for b in 0..n {
        for i in 0..4 {
            for k in 0..4 {
                out[(4 * b + i, 4 * b + k)] = r[i][k];
            }
        }
    }
    out
}

/// Fat connections: the curvature, read as bilinear forms on the horizontal
/// space, must contract nondegenerately with every nonzero dual vector.
pub fn fatness_check(curvature: &[DMatrix<f64>], tol: &TolConfig) -> Result<PolycontactCertificate> {
    let alg = TwoStepAlgebra::from_skew_parts(curvature, None)?;
    certify_polycontact(&alg, tol)
}

/// `|Pf A(θ)|` along a direction, for sampling lower bounds.
pub fn pfaffian_at(alg: &TwoStepAlgebra, theta: &[f64]) -> Result<f64> {
    Ok(pfaffian(alg.levi_contraction(theta)?.matrix()))
}

/// Determinant of `A(θ)` relative to `‖A(θ)‖_F^q`.
pub fn relative_determinant(alg: &TwoStepAlgebra, theta: &[f64]) -> Result<f64> {
    let a = alg.levi_contraction(theta)?.into_matrix();
    let scale = a.norm().powi(alg.q() as i32);
    Ok(if scale == 0.0 { 0.0 } else { determinant(&a).abs() / scale })
}
