//! Quaternionic examples: the `I, J, K`-invariant distribution on
//! `S^{4m+3} ⊂ ℍ^{m+1}`, the Cayley map onto the quaternionic Heisenberg
//! group, and tangent-group brackets of hypersurfaces in `ℍ^{m+1}`.
//!
//! Points of `ℍ^{m+1}` are flat real vectors of length `4m + 4`, one
//! quaternion `(re, i, j, k)` per slot, ordered `(p₁, …, p_m, q)`.
//! `I, J, K` act slotwise by left multiplication.

use nalgebra::{DMatrix, DVector};

use crate::composition::{Algebra, CompositionElement};
use crate::error::{Error, Result};
use crate::nilpotent::TwoStepAlgebra;

/// Default guard on `|1 + q|` for the Cayley map.
pub const CAYLEY_EPSILON: f64 = 1e-8;
/// Central-difference step for the Cayley differential and for Lie brackets.
pub const FD_STEP: f64 = 1e-5;

fn quat(slice: &[f64]) -> CompositionElement {
    CompositionElement::new(Algebra::Quaternion, slice).expect("four coefficients")
}

/// `E ∈ {I, J, K}` applied slotwise.
pub fn apply_unit(unit: usize, v: &[f64]) -> Vec<f64> {
    let e = CompositionElement::basis(Algebra::Quaternion, unit);
    v.chunks(4).flat_map(|c| (e * quat(c)).coeffs().to_vec()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 8 || coords.len() % 4 != 0 {
            return Err(Error::InvalidArgument(format!(
                "a point of ℍ^(m+1), m ≥ 1, needs 4m + 4 coordinates (got {})",
                coords.len()
            )));
        }
        let defect = dot(&coords, &coords) - 1.0;
        if defect.abs() > 1e-12 {
            return Err(Error::OffSphere(defect));
        }
        Ok(Self { coords })
    }

    /// Rescales a nonzero vector onto the sphere.
    pub fn normalized(coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        Self::new(coords.iter().map(|x| x / n).collect())
    }

    pub fn m(&self) -> usize {
        self.coords.len() / 4 - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn p(&self, i: usize) -> CompositionElement {
        quat(&self.coords[4 * i..4 * i + 4])
    }

    pub fn q(&self) -> CompositionElement {
        let m = self.m();
        quat(&self.coords[4 * m..])
    }
}

/// Orthogonal projection onto the complement of `{n, In, Jn, Kn}`, which
/// are mutually orthogonal and of equal length.
fn invariant_complement_projector(n: &[f64]) -> DMatrix<f64> {
    let d = n.len();
    let n2 = dot(n, n);
    let mut p = DMatrix::<f64>::identity(d, d);
    let mut dirs = vec![n.to_vec()];
    dirs.extend((1..4).map(|u| apply_unit(u, n)));
    for e in &dirs {
        let v = DVector::from_column_slice(e);
        p -= &v * v.transpose() / n2;
    }
    p
}

/// Pivoted Gram–Schmidt on the projected coordinate directions.
fn orthonormal_image(projector: &DMatrix<f64>, want: usize) -> Result<Vec<DVector<f64>>> {
    let d = projector.nrows();
    let mut candidates: Vec<DVector<f64>> = (0..d).map(|c| projector.column(c).into_owned()).collect();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(want);
    while basis.len() < want {
        let (best, size) = candidates
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold((usize::MAX, 0.0), |acc, (i, n)| if n > acc.1 + 1e-12 { (i, n) } else { acc });
        if best == usize::MAX || size < 1e-8 {
            return Err(Error::FrameBreakdown(basis.len(), want));
        }
        let v = candidates[best].clone() / size;
        for c in candidates.iter_mut() {
            let coef = c.dot(&v);
            *c -= &v * coef;
        }
        basis.push(v);
    }
    Ok(basis)
}

/// Orthonormal basis of `H_a = {a, Ia, Ja, Ka}^⊥`, `4m` vectors.
pub fn sphere_distribution(a: &SpherePoint) -> Result<Vec<Vec<f64>>> {
    let projector = invariant_complement_projector(a.coords());
    Ok(orthonormal_image(&projector, 4 * a.m())?
        .into_iter()
        .map(|v| v.iter().copied().collect())
        .collect())
}

/// A point `(x, t)` of `ℍ^m × Im ℍ`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergPoint {
    pub x: Vec<CompositionElement>,
    pub t: [f64; 3],
}

impl HeisenbergPoint {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.x.iter().flat_map(|e| e.coeffs().to_vec()).collect();
        out.extend(self.t);
        out
    }
}

/// `f(p, q) = ((1 + q)⁻¹ p, Im (1 + q)⁻¹)`.
pub fn cayley_map(a: &SpherePoint) -> Result<HeisenbergPoint> {
    cayley_map_with(a, CAYLEY_EPSILON)
}

pub fn cayley_map_with(a: &SpherePoint, epsilon: f64) -> Result<HeisenbergPoint> {
    cayley_raw(a.coords(), epsilon)
}

fn cayley_raw(coords: &[f64], epsilon: f64) -> Result<HeisenbergPoint> {
    let m = coords.len() / 4 - 1;
    let z = CompositionElement::one(Algebra::Quaternion) + quat(&coords[4 * m..]);
    let size = z.norm();
    if size < epsilon {
        return Err(Error::CayleySingular(size));
    }
    let w = z.inverse()?;
    let x = (0..m).map(|i| w * quat(&coords[4 * i..4 * i + 4])).collect();
    let c = w.coeffs();
    Ok(HeisenbergPoint {
        x,
        t: [c[1], c[2], c[3]],
    })
}

/// Closed-form inverse: `w = ½(1 + |x|²) + t` equals `(1 + q)⁻¹`, so
/// `q = w⁻¹ − 1` and `p = w⁻¹ x`.
pub fn cayley_inverse(point: &HeisenbergPoint) -> Result<SpherePoint> {
    let x2: f64 = point.x.iter().map(|e| e.norm_sqr()).sum();
    let w = quat(&[0.5 * (1.0 + x2), point.t[0], point.t[1], point.t[2]]);
    let z = w.inverse()?;
    let mut coords: Vec<f64> = point.x.iter().flat_map(|e| (z * *e).coeffs().to_vec()).collect();
    coords.extend_from_slice((z - CompositionElement::one(Algebra::Quaternion)).coeffs());
    let defect = dot(&coords, &coords) - 1.0;
    if defect.abs() > 1e-9 {
        return Err(Error::OffSphere(defect));
    }
    SpherePoint::normalized(coords)
}

/// Distance of a tangent vector `(u, w)` at `x` from the horizontal space
/// `w = −Im Σ xᵢ ūᵢ`, relative to `|(u, w)|`.
///
/// In these coordinates the group law is
/// `(x, t)(x′, t′) = (x + x′, t + t′ − Im Σ xᵢ x̄′ᵢ)`.
pub fn horizontal_defect(x: &[CompositionElement], u: &[CompositionElement], w: [f64; 3]) -> f64 {
    let mut s = CompositionElement::zero(Algebra::Quaternion);
    for (xi, ui) in x.iter().zip(u) {
        s = s + *xi * ui.conjugate();
    }
    let target = [-s.coeffs()[1], -s.coeffs()[2], -s.coeffs()[3]];
    let diff: f64 = w.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let size = (u.iter().map(|e| e.norm_sqr()).sum::<f64>() + w.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if size == 0.0 {
        0.0
    } else {
        diff / size
    }
}

/// Largest horizontality defect of `df_a(v)` over the basis of `H_a`, with
/// `df_a(v)` from central differences along the great circles through `±v`.
pub fn cayley_horizontality_residual(a: &SpherePoint) -> Result<f64> {
    let image = cayley_map(a)?;
    let m = a.m();
    let eps = FD_STEP;
    let mut worst: f64 = 0.0;
    for v in sphere_distribution(a)? {
        let curve = |s: f64| -> Vec<f64> {
            a.coords().iter().zip(&v).map(|(x, d)| x * s.cos() + d * s.sin()).collect()
        };
        let plus = cayley_raw(&curve(eps), CAYLEY_EPSILON)?.flatten();
        let minus = cayley_raw(&curve(-eps), CAYLEY_EPSILON)?.flatten();
        let diff: Vec<f64> = plus.iter().zip(&minus).map(|(p, q)| (p - q) / (2.0 * eps)).collect();
        let u: Vec<CompositionElement> = (0..m).map(|i| quat(&diff[4 * i..4 * i + 4])).collect();
        let w = [diff[4 * m], diff[4 * m + 1], diff[4 * m + 2]];
        worst = worst.max(horizontal_defect(&image.x, &u, w));
    }
    Ok(worst)
}

/// A defining function `ρ` on `ℍ^{m+1} = ℝ^{4m+4}`.
pub trait DefiningFunction: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Central differences unless overridden.
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|k| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[k] += h;
                b[k] -= h;
                (self.value(&a) - self.value(&b)) / (2.0 * h)
            })
            .collect()
    }
}

/// `|x|² − 1`.
#[derive(Clone, Debug)]
pub struct Sphere {
    pub m: usize,
}

impl DefiningFunction for Sphere {
    fn dim(&self) -> usize {
        4 * self.m + 4
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(x, x) - 1.0
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| 2.0 * v).collect()
    }
}

/// `Σ λᵢ |pᵢ|² + λ |q|² − 1`, one weight per quaternion slot.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    pub lambdas: Vec<f64>,
}

impl DefiningFunction for Ellipsoid {
    fn dim(&self) -> usize {
        4 * self.lambdas.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.chunks(4).zip(&self.lambdas).map(|(c, l)| l * dot(c, c)).sum::<f64>() - 1.0
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.chunks(4)
            .zip(&self.lambdas)
            .flat_map(|(c, l)| c.iter().map(move |v| 2.0 * l * v))
            .collect()
    }
}

/// `|x|² − 1 + ε Σ w_k x_k⁴`; breaks the quaternionic symmetry of the sphere.
#[derive(Clone, Debug)]
pub struct PerturbedSphere {
    pub epsilon: f64,
    pub weights: Vec<f64>,
}

impl DefiningFunction for PerturbedSphere {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(x, x) - 1.0 + self.epsilon * x.iter().zip(&self.weights).map(|(v, w)| w * v.powi(4)).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.weights)
            .map(|(v, w)| 2.0 * v + 4.0 * self.epsilon * w * v.powi(3))
            .collect()
    }
}

/// Wraps a closure; gradients by finite differences.
pub struct FnDefining<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> DefiningFunction for FnDefining<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// The point `t·d`, `t > 0`, where `ρ` vanishes, for `ρ(0) < 0` and `ρ`
/// eventually positive along the ray.
pub fn project_radially(rho: &dyn DefiningFunction, direction: &[f64]) -> Result<Vec<f64>> {
    if direction.len() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: direction.len(),
        });
    }
    let n = norm(direction);
    if n == 0.0 {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let d: Vec<f64> = direction.iter().map(|v| v / n).collect();
    let at = |t: f64| -> Vec<f64> { d.iter().map(|v| v * t).collect() };
    if rho.value(&at(0.0)) >= 0.0 {
        return Err(Error::InvalidArgument("the origin must lie inside the hypersurface".into()));
    }
    let mut hi = 1.0;
    while rho.value(&at(hi)) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidArgument("ray never leaves the hypersurface interior".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rho.value(&at(mid)) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    let t = if rho.value(&at(lo)).abs() <= rho.value(&at(hi)).abs() { lo } else { hi };
    Ok(at(t))
}

/// Unsymmetrized bracket matrices `B^{(a)}_{ij} = ⟨[X_i, X_j], E_a n̂⟩`.
///
/// `X_k(x) = P(x) c_k`, where `P(x)` projects away `∇ρ(x)` and its `I, J, K`
/// images and `c_k` is an orthonormal basis of `H` at the base point. The
/// fields are tangent to the `I, J, K`-invariant distribution of every level
/// set, and at the base point `[X_i, X_j] = DX_j[c_i] − DX_i[c_j]`.
pub fn hypersurface_bracket_raw(rho: &dyn DefiningFunction, point: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let dim = rho.dim();
    if point.len() != dim || dim < 8 || dim % 4 != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: point.len(),
        });
    }
    let value = rho.value(point);
    if value.abs() > 1e-10 {
        return Err(Error::OffHypersurface(value));
    }
    let n = rho.gradient(point);
    let n_norm = norm(&n);
    if !(n_norm > 1e-12) {
        return Err(Error::DegenerateGradient);
    }
    let q = dim - 4;
    let frame = orthonormal_image(&invariant_complement_projector(&n), q)?;

    let field = |x: &[f64], c: &DVector<f64>| -> Result<DVector<f64>> {
        let g = rho.gradient(x);
        if !(norm(&g) > 1e-12) {
            return Err(Error::DegenerateGradient);
        }
        Ok(invariant_complement_projector(&g) * c)
    };
    let h = FD_STEP;
    let shifted = |c: &DVector<f64>, s: f64| -> Vec<f64> { point.iter().zip(c.iter()).map(|(x, v)| x + s * v).collect() };
    // derivative[i][j] = DX_j[c_i].
    let mut derivative: Vec<Vec<DVector<f64>>> = Vec::with_capacity(q);
    for ci in &frame {
        let plus = shifted(ci, h);
        let minus = shifted(ci, -h);
        let row = frame
            .iter()
            .map(|cj| Ok((field(&plus, cj)? - field(&minus, cj)?) / (2.0 * h)))
            .collect::<Result<Vec<_>>>()?;
        derivative.push(row);
    }
    let normals: Vec<DVector<f64>> = (1..4)
        .map(|u| DVector::from_vec(apply_unit(u, &n)) / n_norm)
        .collect();
    Ok(normals
        .iter()
        .map(|e| {
            DMatrix::from_fn(q, q, |i, j| {
                if i == j {
                    0.0
                } else {
                    (&derivative[i][j] - &derivative[j][i]).dot(e)
                }
            })
        })
        .collect())
}

/// The tangent-group bracket at a point of `{ρ = 0}` as a `(q = 4m, p = 3)` algebra.
pub fn hypersurface_bracket(rho: &dyn DefiningFunction, point: &[f64]) -> Result<TwoStepAlgebra> {
    TwoStepAlgebra::from_skew_parts(&hypersurface_bracket_raw(rho, point)?, None)
}
