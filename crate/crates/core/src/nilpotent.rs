//! Two-step nilpotent groups `G = V × W` given by a bracket `B: V × V → W`.
//!
//! A bracket is stored as `p` skew `q × q` matrices with
//! `B^{(k)}_{ij} = k-th component of [e_i, e_j]`, so
//! `B(u, v)_k = uᵀ B^{(k)} v`. The Heisenberg model has `B(e₁, e₂) = +1`.
//! The exterior derivative of a defining form sees the opposite sign,
//! `dθ(X, Y) = −θ([X, Y])`; nothing here depends on that choice.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::clifford::build_clifford_rep;
use crate::error::{Error, Result};
use crate::linalg::{
    pfaffian, require_positive_definite, singular_values, skew_deviation, skew_part, sorted_symmetric_eigen,
    symmetric_function,
};

/// Files whose bracket matrices deviate from skewness by at least this are rejected.
pub const SKEW_TOLERANCE: f64 = 1e-9;

/// Relative singular-value threshold below which a direction counts as radical.
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct TwoStepAlgebra {
    q: usize,
    p: usize,
    brackets: Vec<DMatrix<f64>>,
    metric: Option<DMatrix<f64>>,
}

impl TwoStepAlgebra {
    /// Validates skewness of every bracket matrix and positivity of the metric.
    pub fn new(brackets: Vec<DMatrix<f64>>, metric: Option<DMatrix<f64>>) -> Result<Self> {
        let p = brackets.len();
        if p == 0 {
            return Err(Error::InvalidArgument("center dimension p must be at least 1".into()));
        }
        let q = brackets[0].nrows();
        if q == 0 {
            return Err(Error::InvalidArgument("layer dimension q must be at least 1".into()));
        }
        for (index, b) in brackets.iter().enumerate() {
            if b.shape() != (q, q) {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    found: if b.nrows() != q { b.nrows() } else { b.ncols() },
                });
            }
            let deviation = skew_deviation(b);
            if deviation >= SKEW_TOLERANCE {
                return Err(Error::NotSkew { index, deviation });
            }
        }
        if let Some(m) = &metric {
            if m.shape() != (q, q) {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    found: m.nrows(),
                });
            }
            require_positive_definite(m)?;
        }
        Ok(Self {
            q,
            p,
            brackets,
            metric,
        })
    }

    /// Replaces each matrix by its skew part before validating; for brackets
    /// assembled from noisy numerical data.
    pub fn from_skew_parts(brackets: &[DMatrix<f64>], metric: Option<DMatrix<f64>>) -> Result<Self> {
        Self::new(brackets.iter().map(skew_part).collect(), metric)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn brackets(&self) -> &[DMatrix<f64>] {
        &self.brackets
    }

    /// The metric on `V`, identity when none was given.
    pub fn metric(&self) -> DMatrix<f64> {
        self.metric
            .clone()
            .unwrap_or_else(|| DMatrix::identity(self.q, self.q))
    }

    pub fn has_explicit_metric(&self) -> bool {
        self.metric.is_some()
    }

    pub fn with_metric(&self, metric: DMatrix<f64>) -> Result<Self> {
        Self::new(self.brackets.clone(), Some(metric))
    }

    /// `B(u, v) ∈ ℝᵖ`.
    pub fn bracket(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len(u.len(), self.q)?;
        check_len(v.len(), self.q)?;
        let u = DVector::from_column_slice(u);
        let v = DVector::from_column_slice(v);
        Ok(self.brackets.iter().map(|b| u.dot(&(b * &v))).collect())
    }

    /// `A(θ) = Σ θ_k B^{(k)}`.
    pub fn levi_contraction(&self, theta: &[f64]) -> Result<SkewForm> {
        check_len(theta.len(), self.p)?;
        let mut a = DMatrix::zeros(self.q, self.q);
        for (t, b) in theta.iter().zip(&self.brackets) {
            a += b * *t;
        }
        Ok(SkewForm(a))
    }

    /// The bracket after the linear change `u ↦ g u` on `V` and
    /// `w ↦ C w` on the center: `B'(u, v) = C · B(gu, gv)`.
    pub fn transformed(&self, g: &DMatrix<f64>, center: &DMatrix<f64>) -> Result<Self> {
        if g.shape() != (self.q, self.q) || center.ncols() != self.p {
            return Err(Error::InvalidArgument("transform has the wrong shape".into()));
        }
        let pulled: Vec<DMatrix<f64>> = self.brackets.iter().map(|b| g.transpose() * b * g).collect();
        let out = (0..center.nrows())
            .map(|k| {
                let mut acc = DMatrix::zeros(self.q, self.q);
                for (l, b) in pulled.iter().enumerate() {
                    acc += b * center[(k, l)];
                }
                skew_part(&acc)
            })
            .collect();
        Self::new(out, None)
    }

    pub fn identity_element(&self) -> GroupElement {
        GroupElement {
            h: vec![0.0; self.q],
            n: vec![0.0; self.p],
        }
    }

    /// `(h, n)(h', n') = (h + h', n + n' + ½ B(h, h'))`.
    pub fn group_multiply(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check_element(x)?;
        self.check_element(y)?;
        let b = self.bracket(&x.h, &y.h)?;
        let h = x.h.iter().zip(&y.h).map(|(a, b)| a + b).collect();
        let n = x
            .n
            .iter()
            .zip(&y.n)
            .zip(&b)
            .map(|((a, c), bb)| a + c + 0.5 * bb)
            .collect();
        Ok(GroupElement { h, n })
    }

    pub fn group_inverse(&self, x: &GroupElement) -> Result<GroupElement> {
        self.check_element(x)?;
        Ok(GroupElement {
            h: x.h.iter().map(|v| -v).collect(),
            n: x.n.iter().map(|v| -v).collect(),
        })
    }

    fn check_element(&self, x: &GroupElement) -> Result<()> {
        check_len(x.h.len(), self.q)?;
        check_len(x.n.len(), self.p)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(AlgebraFile::from(self)).expect("algebra serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let file: AlgebraFile = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidArgument(format!("malformed bracket file: {e}")))?;
        file.try_into()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s)
            .map_err(|e| Error::InvalidArgument(format!("malformed JSON: {e}")))?;
        Self::from_json(&value)
    }
}

fn check_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// On-disk form: `{"q", "p", "B": p row-major q×q matrices, "metric"?}`.
#[derive(Serialize, Deserialize)]
struct AlgebraFile {
    q: usize,
    p: usize,
    #[serde(rename = "B")]
    brackets: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<Vec<Vec<f64>>>,
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument(format!("expected a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

impl From<&TwoStepAlgebra> for AlgebraFile {
    fn from(a: &TwoStepAlgebra) -> Self {
        Self {
            q: a.q,
            p: a.p,
            brackets: a.brackets.iter().map(matrix_to_rows).collect(),
            metric: a.metric.as_ref().map(matrix_to_rows),
        }
    }
}

impl TryFrom<AlgebraFile> for TwoStepAlgebra {
    type Error = Error;

    fn try_from(f: AlgebraFile) -> Result<Self> {
        if f.brackets.len() != f.p {
            return Err(Error::DimensionMismatch {
                expected: f.p,
                found: f.brackets.len(),
            });
        }
        let brackets = f
            .brackets
            .iter()
            .map(|b| rows_to_matrix(b, f.q))
            .collect::<Result<Vec<_>>>()?;
        let metric = f.metric.as_ref().map(|m| rows_to_matrix(m, f.q)).transpose()?;
        TwoStepAlgebra::new(brackets, metric)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub h: Vec<f64>,
    pub n: Vec<f64>,
}

impl GroupElement {
    pub fn new(h: Vec<f64>, n: Vec<f64>) -> Self {
        Self { h, n }
    }
}

/// A skew-symmetric bilinear form on `V`, `A(u, v) = uᵀ A v`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewForm(DMatrix<f64>);

impl SkewForm {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidArgument("skew form must be square".into()));
        }
        let deviation = skew_deviation(&a);
        if deviation >= SKEW_TOLERANCE * a.amax().max(1.0) {
            return Err(Error::NotSkew { index: 0, deviation });
        }
        Ok(Self(a))
    }

    /// `Σ_{i<r} e_i ∧ e_{r+i}`-type standard form `[[0, I], [−I, 0]]` on `ℝ^{2r}`.
    pub fn standard(r: usize) -> Self {
        Self(canonical_form(2 * r, r))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        let u = DVector::from_column_slice(u);
        let v = DVector::from_column_slice(v);
        u.dot(&(&self.0 * v))
    }

    pub fn pfaffian(&self) -> f64 {
        pfaffian(&self.0)
    }

    pub fn radical(&self) -> DMatrix<f64> {
        radical(self, DEFAULT_RANK_THRESHOLD)
    }
}

/// The block form `[[0, I_r, 0], [−I_r, 0, 0], [0, 0, 0]]` on `ℝ^q`.
pub fn canonical_form(q: usize, r: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(q, q);
    for i in 0..r {
        m[(i, r + i)] = 1.0;
        m[(r + i, i)] = -1.0;
    }
    m
}

/// Orthonormal basis (as columns) of `ker A`. Singular values at or below
/// `threshold · σ_max` count as zero; `A = 0` has the whole space as kernel.
pub fn radical(form: &SkewForm, threshold: f64) -> DMatrix<f64> {
    let a = form.matrix();
    let q = a.nrows();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let top = svd.singular_values.max();
    let mut kernel: Vec<usize> = (0..q)
        .filter(|&i| top == 0.0 || svd.singular_values[i] <= threshold * top)
        .collect();
    kernel.sort_unstable();
    DMatrix::from_fn(q, kernel.len(), |r, c| v_t[(kernel[c], r)])
}

fn numerical_rank(a: &DMatrix<f64>, threshold: f64) -> usize {
    let s = singular_values(a);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| top > 0.0 && x > threshold * top).count()
}

/// A change of basis `T` with `TᵀAT = canonical_form(q, r)`.
///
/// Columns are `u₁…u_r, v₁…v_r` (a symplectic basis of a complement `W′`,
/// `A(u_i, v_j) = δ_ij`) followed by an orthonormal basis of the radical.
#[derive(Clone, Debug)]
pub struct DarbouxBasis {
    pub transform: DMatrix<f64>,
    /// Half the rank of `A`.
    pub r: usize,
}

impl DarbouxBasis {
    pub fn rank(&self) -> usize {
        2 * self.r
    }
}

pub fn darboux_basis(form: &SkewForm, threshold: f64) -> DarbouxBasis {
    let a = form.matrix();
    let q = a.nrows();
    let s = a.transpose() * a;
    let (values, vectors) = sorted_symmetric_eigen(&s);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let floor = q - numerical_rank(a, threshold);

    let mut us: Vec<DVector<f64>> = Vec::new();
    let mut vs: Vec<DVector<f64>> = Vec::new();
    let mut taken: Vec<DVector<f64>> = Vec::new();
    // Eigenvalues of AᵀA come in pairs. Within each cluster of equal
    // eigenvalues (largest first), u is the best-aligned coordinate direction
    // and v = Aᵀu / σ is its partner, so aligned inputs give T = I.
    let mut end = q;
    while end > floor {
        let lead = values[end - 1];
        let mut start = end - 1;
        while start > floor && (values[start - 1] - lead).abs() <= 1e-9 * top {
            start -= 1;
        }
        let cluster = vectors.columns(start, end - start).into_owned();
        let projector = &cluster * cluster.transpose();
        loop {
            let mut best: Option<(f64, DVector<f64>)> = None;
            for i in 0..q {
                let mut u = projector.column(i).into_owned();
                for t in &taken {
                    let c = t.dot(&u);
                    u -= t * c;
                }
                let n = u.norm();
                if n > 1e-6 && best.as_ref().is_none_or(|(b, _)| n > b + 1e-12) {
                    best = Some((n, u));
                }
            }
            let Some((n, u)) = best else { break };
            if 2 * us.len() + 2 > q - floor {
                break;
            }
            let u = u / n;
            let sigma = u.dot(&(&s * &u)).sqrt();
            let v = a.transpose() * &u / sigma;
            taken.push(u.clone());
            taken.push(v.clone());
            let scale = sigma.sqrt();
            us.push(u / scale);
            vs.push(v / scale);
        }
        end = start;
    }
    let r = us.len();
    let kernel = radical(form, threshold);
    let mut t = DMatrix::zeros(q, q);
    for (i, u) in us.iter().enumerate() {
        t.set_column(i, u);
    }
    for (i, v) in vs.iter().enumerate() {
        t.set_column(r + i, v);
    }
    for c in 0..kernel.ncols().min(q - 2 * r) {
        t.set_column(2 * r + c, &kernel.column(c));
    }
    DarbouxBasis { transform: t, r }
}

/// `𝒞(p, n)`: `B^{(k)}_{ij} = ⟨J_k e_i, e_j⟩`, i.e. `B^{(k)} = J_kᵀ = −J_k`.
pub fn build_htype(p: usize, n: usize) -> Result<TwoStepAlgebra> {
    let rep = build_clifford_rep(p, n)?;
    let brackets = (0..p).map(|k| rep.generator_f64(k).transpose()).collect();
    TwoStepAlgebra::new(brackets, None)
}

/// The real 4-form `ω ∧ ω′` on `ℝ⁴` divided by `2 e₁∧e₂∧e₃∧e₄`, so that
/// `wedge_pairing(ω, ω) = Pf(ω)`.
pub fn wedge_pairing(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    0.5 * (a[(0, 1)] * b[(2, 3)] - a[(0, 2)] * b[(1, 3)]
        + a[(0, 3)] * b[(1, 2)]
        + a[(1, 2)] * b[(0, 3)]
        - a[(1, 3)] * b[(0, 2)]
        + a[(2, 3)] * b[(0, 1)])
}

/// Result of bringing a 3-polycontact bracket on `ℝ⁴` to `𝒞(3, 1)`.
#[derive(Clone, Debug)]
pub struct Dim7Normalization {
    /// `g` with `|det g| = 1`; `det g = −1` only for negative wedge-definite input.
    pub g: Matrix4<f64>,
    /// Center recoordinatization `C`, so `C · B(g·, g·)` is the target bracket.
    pub center: Matrix3<f64>,
    pub target: TwoStepAlgebra,
    /// Largest Frobenius distance between a transformed matrix and `𝒞(3, 1)`.
    pub residual: f64,
}

/// Finds `g` and `C` with `C · B(g·, g·) = B_{𝒞(3,1)}`.
///
/// The wedge pairing restricted to the span of the three bracket matrices is
/// diagonalized to an orthonormal triple `ω_k`. For such a triple the maps
/// `K₁ = −ω₂⁻¹ω₃`, `K₂ = −ω₃⁻¹ω₁`, `K₃ = −ω₁⁻¹ω₂` satisfy the quaternion
/// relations, and `g = [v, K₁v, K₂v, K₃v]` intertwines them with left
/// multiplication by `i, j, k`. After that the span coincides with the
/// quaternionic one and a 3×3 least-squares fit recovers the center change.
pub fn normalize_dim7(alg: &TwoStepAlgebra) -> Result<Dim7Normalization> {
    if alg.q() != 4 || alg.p() != 3 {
        return Err(Error::InvalidArgument(format!(
            "dimension-7 normalization needs q = 4, p = 3 (got q = {}, p = {})",
            alg.q(),
            alg.p()
        )));
    }
    let cert = crate::polycontact::certify_polycontact(alg, &Default::default())?;
    if cert.verdict != crate::polycontact::Verdict::Certified {
        return Err(Error::NotPolycontact);
    }

    let b = alg.brackets();
    let gram = DMatrix::from_fn(3, 3, |k, l| wedge_pairing(&b[k], &b[l]));
    let (eigs, _) = sorted_symmetric_eigen(&gram);
    let eigs3 = [eigs[0], eigs[1], eigs[2]];
    let scale = eigs.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let positive = eigs.iter().all(|&e| e > 1e-12 * scale);
    let negative = eigs.iter().all(|&e| e < -1e-12 * scale);
    if !positive && !negative {
        return Err(Error::IndefiniteWedge(eigs3));
    }

    // Orientation reversal turns a negative-definite span into a positive one.
    let reflect = if negative {
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]))
    } else {
        DMatrix::identity(4, 4)
    };
    let pulled: Vec<DMatrix<f64>> = b.iter().map(|m| &reflect * m * &reflect).collect();
    let gram = DMatrix::from_fn(3, 3, |k, l| wedge_pairing(&pulled[k], &pulled[l]));
    let c1 = symmetric_function(&gram, |x| 1.0 / x.sqrt());
    let mut omega: Vec<DMatrix<f64>> = (0..3)
        .map(|k| {
            let mut acc = DMatrix::zeros(4, 4);
            for (l, m) in pulled.iter().enumerate() {
                acc += m * c1[(k, l)];
            }
            acc
        })
        .collect();
    let mut c1 = c1;

    let inv = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        m.clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular bracket matrix".into()))
    };
    let structures = |omega: &[DMatrix<f64>]| -> Result<[DMatrix<f64>; 3]> {
        Ok([
            -(inv(&omega[1])? * &omega[2]),
            -(inv(&omega[2])? * &omega[0]),
            -(inv(&omega[0])? * &omega[1]),
        ])
    };
    let mut ks = structures(&omega)?;
    // Positive triples come with either orientation of the quaternion
    // relation; swapping two forms flips it.
    if (&ks[0] * &ks[1] - &ks[2]).amax() > (&ks[0] * &ks[1] + &ks[2]).amax() {
        omega.swap(0, 1);
        c1.swap_rows(0, 1);
        ks = structures(&omega)?;
    }

    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for i in 0..4 {
        let v = DVector::from_fn(4, |r, _| if r == i { 1.0 } else { 0.0 });
        let mut g = DMatrix::zeros(4, 4);
        g.set_column(0, &v);
        for (c, k) in ks.iter().enumerate() {
            g.set_column(c + 1, &(k * &v));
        }
        let det = g.determinant();
        if best.as_ref().is_none_or(|(d, _)| det.abs() > d.abs()) {
            best = Some((det, g));
        }
    }
    let (det, g) = best.expect("four candidates");
    if det.abs() < 1e-300 {
        return Err(Error::Numerical("degenerate intertwiner".into()));
    }

    let target = build_htype(3, 1)?;
    let q_mats = target.brackets();
    let pushed: Vec<DMatrix<f64>> = omega.iter().map(|w| g.transpose() * w * &g).collect();
    let c2 = DMatrix::from_fn(3, 3, |k, l| {
        pushed[k].dot(&q_mats[l]) / q_mats[l].norm_squared()
    });
    let c2_inv = c2
        .try_inverse()
        .ok_or_else(|| Error::Numerical("center fit is singular".into()))?;
    let mut center = c2_inv * c1;

    let g_total = &reflect * g;
    let det_total = g_total.determinant();
    let s = det_total.abs().powf(0.25);
    let g_total = g_total / s;
    center *= s * s;

    let transformed = alg.transformed(&g_total, &center)?;
    let residual = transformed
        .brackets()
        .iter()
        .zip(q_mats)
        .map(|(a, t)| (a - t).norm())
        .fold(0.0, f64::max);

    Ok(Dim7Normalization {
        g: Matrix4::from_fn(|r, c| g_total[(r, c)]),
        center: Matrix3::from_fn(|r, c| center[(r, c)]),
        target: transformed,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn heisenberg() -> TwoStepAlgebra {
        build_htype(1, 1).unwrap()
    }

    #[test]
    fn heisenberg_bracket_convention() {
        let h = heisenberg();
        assert_eq!((h.q(), h.p()), (2, 1));
        assert_eq!(h.brackets()[0], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    }

    #[test]
    fn htype_dimensions_and_skewness() {
        let c31 = build_htype(3, 1).unwrap();
        assert_eq!((c31.q(), c31.p()), (4, 3));
        for b in c31.brackets() {
            assert_eq!(skew_deviation(b), 0.0);
        }
        let c21 = build_htype(2, 1).unwrap();
        assert_eq!((c21.q(), c21.p()), (4, 2));
        let c92 = build_htype(9, 2).unwrap();
        assert_eq!((c92.q(), c92.p()), (64, 9));
    }

    #[test]
    fn group_law_examples() {
        let h = heisenberg();
        let x = GroupElement::new(vec![1.5, -2.0], vec![0.25]);
        assert_eq!(h.group_multiply(&x, &h.identity_element()).unwrap(), x);
        let hh = GroupElement::new(vec![1.5, -2.0], vec![0.0]);
        assert_eq!(
            h.group_multiply(&hh, &hh).unwrap(),
            GroupElement::new(vec![3.0, -4.0], vec![0.0])
        );
        let e1 = GroupElement::new(vec![1.0, 0.0], vec![0.0]);
        let e2 = GroupElement::new(vec![0.0, 1.0], vec![0.0]);
        assert_eq!(
            h.group_multiply(&e1, &e2).unwrap(),
            GroupElement::new(vec![1.0, 1.0], vec![0.5])
        );
        let bad = GroupElement::new(vec![1.0], vec![0.0]);
        assert!(matches!(
            h.group_multiply(&bad, &e1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn group_law_is_associative_exactly_on_integers() {
        let g = build_htype(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rand_el = |rng: &mut ChaCha8Rng| {
            GroupElement::new(
                (0..g.q()).map(|_| rng.random_range(-5..=5) as f64).collect(),
                (0..g.p()).map(|_| rng.random_range(-5..=5) as f64).collect(),
            )
        };
        for _ in 0..500 {
            let (x, y, z) = (rand_el(&mut rng), rand_el(&mut rng), rand_el(&mut rng));
            let left = g.group_multiply(&g.group_multiply(&x, &y).unwrap(), &z).unwrap();
            let right = g.group_multiply(&x, &g.group_multiply(&y, &z).unwrap()).unwrap();
            assert_eq!(left, right);
            let inv = g.group_inverse(&x).unwrap();
            assert_eq!(g.group_multiply(&x, &inv).unwrap(), g.identity_element());
        }
    }

    #[test]
    fn contraction_examples() {
        let h = heisenberg();
        assert_eq!(h.levi_contraction(&[1.0]).unwrap(), SkewForm::standard(1));
        assert_eq!(h.levi_contraction(&[0.0]).unwrap().matrix().amax(), 0.0);
        let c31 = build_htype(3, 1).unwrap();
        let rep = build_clifford_rep(3, 1).unwrap();
        let a = c31.levi_contraction(&[1.0, 0.0, 0.0]).unwrap();
        let direct = DMatrix::from_fn(4, 4, |i, j| {
            let ei = DVector::from_fn(4, |r, _| if r == i { 1.0 } else { 0.0 });
            let ej = DVector::from_fn(4, |r, _| if r == j { 1.0 } else { 0.0 });
            (rep.generator_f64(0) * ei).dot(&ej)
        });
        assert_eq!(*a.matrix(), direct);
    }

    #[test]
    fn radical_examples() {
        assert_eq!(radical(&SkewForm::new(DMatrix::zeros(3, 3)).unwrap(), 1e-10).ncols(), 3);
        assert_eq!(SkewForm::standard(1).radical().ncols(), 0);
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = -1.0;
        let w = SkewForm::new(a).unwrap().radical();
        assert_eq!(w.ncols(), 2);
        // span(e3, e4): no weight on the first two coordinates.
        assert!(w.rows(0, 2).amax() < 1e-12);
        assert!(((w.transpose() * &w) - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn darboux_examples() {
        let std = SkewForm::standard(1);
        let d = darboux_basis(&std, 1e-10);
        assert_eq!(d.r, 1);
        assert!((d.transform.abs() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);

        let twice = SkewForm::new(std.matrix() * 2.0).unwrap();
        let d = darboux_basis(&twice, 1e-10);
        let canon = d.transform.transpose() * twice.matrix() * &d.transform;
        assert!((canon - canonical_form(2, 1)).amax() < 1e-12);
        assert!((d.transform.abs() - DMatrix::<f64>::identity(2, 2) / 2f64.sqrt()).amax() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let a = &x * y.transpose() - &y * x.transpose();
        let form = SkewForm::new(a).unwrap();
        let d = darboux_basis(&form, 1e-10);
        assert_eq!(d.r, 1);
        let canon = d.transform.transpose() * form.matrix() * &d.transform;
        assert!((canon - canonical_form(4, 1)).amax() < 1e-12);
        assert_eq!(radical(&form, 1e-10).ncols(), 2);
        let s = singular_values(form.matrix());
        assert!(s[2] < 1e-12 * s[0]);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let c = build_htype(2, 1).unwrap().with_metric(DMatrix::identity(4, 4) * 2.0).unwrap();
        let back = TwoStepAlgebra::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);

        let bad = r#"{"q": 2, "p": 1, "B": [[[0.0, 1.0], [-0.999, 0.0]]]}"#;
        assert!(matches!(
            TwoStepAlgebra::from_json_str(bad),
            Err(Error::NotSkew { .. })
        ));
        let wrong_p = r#"{"q": 2, "p": 2, "B": [[[0.0, 1.0], [-1.0, 0.0]]]}"#;
        assert!(TwoStepAlgebra::from_json_str(wrong_p).is_err());
        let bad_metric = r#"{"q": 2, "p": 1, "B": [[[0.0, 1.0], [-1.0, 0.0]]], "metric": [[1.0, 0.0], [0.0, -1.0]]}"#;
        assert!(matches!(
            TwoStepAlgebra::from_json_str(bad_metric),
            Err(Error::DegenerateMetric)
        ));
    }

    #[test]
    fn wedge_pairing_is_pfaffian_on_the_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let a = &m - m.transpose();
            assert!((wedge_pairing(&a, &a) - pfaffian(&a)).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_identity_case() {
        let c31 = build_htype(3, 1).unwrap();
        let n = normalize_dim7(&c31).unwrap();
        assert!(n.residual < 1e-12);
        assert!((n.g.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_permuted_center() {
        let c31 = build_htype(3, 1).unwrap();
        let b = c31.brackets();
        let permuted = TwoStepAlgebra::new(vec![b[1].clone(), b[2].clone(), b[0].clone()], None).unwrap();
        let n = normalize_dim7(&permuted).unwrap();
        assert!(n.residual <= 1e-8, "{}", n.residual);
    }

    #[test]
    fn normalize_negative_orientation() {
        // Right multiplication gives the other orientation of the wedge form.
        use crate::composition::{right_multiplication_matrix, Algebra, CompositionElement};
        let brackets = (1..4)
            .map(|i| {
                let r = right_multiplication_matrix(&CompositionElement::basis(Algebra::Quaternion, i));
                DMatrix::from_fn(4, 4, |a, b| r[a][b])
            })
            .collect();
        let alg = TwoStepAlgebra::new(brackets, None).unwrap();
        let n = normalize_dim7(&alg).unwrap();
        assert!(n.residual <= 1e-8, "{}", n.residual);
        assert!((n.g.determinant() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn normalize_rejects_non_polycontact() {
        let mut b1 = DMatrix::zeros(4, 4);
        b1[(0, 1)] = 1.0;
        b1[(1, 0)] = -1.0;
        let alg = TwoStepAlgebra::new(vec![b1.clone(), b1.clone() * 0.0, b1 * 0.0], None).unwrap();
        assert!(matches!(normalize_dim7(&alg), Err(Error::NotPolycontact)));
        assert!(normalize_dim7(&heisenberg()).is_err());
    }
}
