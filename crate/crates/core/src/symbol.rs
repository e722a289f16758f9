//! Symbol calculus at a fixed covector: twisted convolution on lattices and
//! the Gaussian Szegő symbol.
//!
//! For a nondegenerate `A = A(θ)` and a compatible complex structure `J`,
//! put `G = AJ` (symmetric positive definite). The space-side symbol
//!
//! ```text
//! σ₀^∨(h) = |Pf A| (2π)^{−n} exp(−¼ hᵀ G h),   q = 2n,
//! ```
//!
//! is idempotent for the twisted product
//! `(f ∗ g)(x) = ∫ exp(−½ i xᵀAy) f(x − y) g(y) dy` with Lebesgue measure,
//! and its Fourier transform `∫ e^{−i⟨h, ξ⟩} σ₀^∨(h) dh` is
//! `2ⁿ exp(−ξᵀ G⁻¹ ξ)`. For H-type data and `|θ| = 1` the prefactor
//! `|Pf A| = √det G` equals one.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pfaffian, singular_values, sorted_symmetric_eigen, symmetric_function};
use crate::nilpotent::{SkewForm, TwoStepAlgebra};

/// A complex-valued function sampled on `{−R, −R + h, …, R}^q`, row-major
/// with the first coordinate varying slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolGrid {
    q: usize,
    half_extent: f64,
    spacing: f64,
    steps: usize,
    values: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn zeros(q: usize, half_extent: f64, spacing: f64) -> Result<Self> {
        let steps = lattice_steps(q, half_extent, spacing)?;
        let len = (2 * steps + 1).pow(q as u32);
        Ok(Self {
            q,
            half_extent,
            spacing,
            steps,
            values: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    pub fn from_fn(q: usize, half_extent: f64, spacing: f64, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<Self> {
        let mut grid = Self::zeros(q, half_extent, spacing)?;
        let values: Vec<Complex64> = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        grid.values = values;
        Ok(grid)
    }

    pub fn from_values(q: usize, half_extent: f64, spacing: f64, values: Vec<Complex64>) -> Result<Self> {
        let mut grid = Self::zeros(q, half_extent, spacing)?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        grid.values = values;
        Ok(grid)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Points per axis, `2R/h + 1`.
    pub fn side(&self) -> usize {
        2 * self.steps + 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Lattice indices of a flat position, each in `0..side`.
    pub fn indices(&self, mut flat: usize) -> Vec<usize> {
        let side = self.side();
        let mut idx = vec![0; self.q];
        for slot in idx.iter_mut().rev() {
            *slot = flat % side;
            flat /= side;
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.indices(flat)
            .into_iter()
            .map(|i| (i as f64 - self.steps as f64) * self.spacing)
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.side() + i)
    }

    /// Value at `x`, which must be a lattice point.
    pub fn value_at(&self, x: &[f64]) -> Option<Complex64> {
        if x.len() != self.q {
            return None;
        }
        let mut idx = Vec::with_capacity(self.q);
        for &c in x {
            let k = c / self.spacing + self.steps as f64;
            let r = k.round();
            if (k - r).abs() > 1e-9 || r < 0.0 || r as usize >= self.side() {
                return None;
            }
            idx.push(r as usize);
        }
        Some(self.values[self.flat_index(&idx)])
    }

    pub fn same_lattice(&self, other: &SymbolGrid) -> bool {
        self.q == other.q
            && self.steps == other.steps
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
    }

    fn require_same_lattice(&self, other: &SymbolGrid) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch(format!(
                "(q={}, R={}, h={}) vs (q={}, R={}, h={})",
                self.q, self.half_extent, self.spacing, other.q, other.half_extent, other.spacing
            )))
        }
    }

    /// `Σ f · h^q`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.spacing.powi(self.q as i32)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SymbolGrid {
        SymbolGrid {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = GridFile {
            q: self.q,
            half_extent: self.half_extent,
            spacing: self.spacing,
            values: self.values.iter().flat_map(|v| [v.re, v.im]).collect(),
        };
        serde_json::to_value(file).expect("grid serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let file: GridFile = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidArgument(format!("malformed grid file: {e}")))?;
        if file.values.len() % 2 == 1 {
            return Err(Error::InvalidArgument("interleaved values need even length".into()));
        }
        let values = file.values.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        Self::from_values(file.q, file.half_extent, file.spacing, values)
    }
}

#[derive(Serialize, Deserialize)]
struct GridFile {
    q: usize,
    half_extent: f64,
    spacing: f64,
    values: Vec<f64>,
}

fn lattice_steps(q: usize, half_extent: f64, spacing: f64) -> Result<usize> {
    if q == 0 {
        return Err(Error::InvalidArgument("grid dimension must be positive".into()));
    }
    if !(half_extent > 0.0 && spacing > 0.0) || !half_extent.is_finite() {
        return Err(Error::InvalidArgument("extent and spacing must be positive".into()));
    }
    let ratio = half_extent / spacing;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) || steps < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "half extent {half_extent} is not an integer multiple of spacing {spacing}"
        )));
    }
    let side = 2.0 * steps + 1.0;
    if side.powi(q as i32) > 1e9 {
        return Err(Error::InvalidArgument("grid is too large".into()));
    }
    Ok(steps as usize)
}

pub fn symbol_sup_distance(f: &SymbolGrid, g: &SymbolGrid) -> Result<f64> {
    f.require_same_lattice(g)?;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexStructure(DMatrix<f64>);

impl ComplexStructure {
    pub fn new(j: DMatrix<f64>) -> Result<Self> {
        crate::polycontact::check_complex_structure(&j)?;
        Ok(Self(j))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// The metric-skew complex structure taming `A`, from the polar part of
/// `M^{−½} A M^{−½}`: `J = −M^{−½} Ã (−Ã²)^{−½} M^{½}`.
///
/// The sign makes `A(v, Jv) > 0` for `v ≠ 0`.
pub fn compatible_complex_structure(a: &SkewForm, metric: &DMatrix<f64>) -> Result<ComplexStructure> {
    let q = a.dim();
    if metric.shape() != (q, q) {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: metric.nrows(),
        });
    }
    crate::linalg::require_positive_definite(metric)?;
    let s = singular_values(a.matrix());
    if q % 2 == 1 || s.is_empty() || s[q - 1] <= 1e-10 * s[0] {
        return Err(Error::DegenerateForm);
    }
    let root = symmetric_function(metric, f64::sqrt);
    let inv_root = symmetric_function(metric, |x| 1.0 / x.sqrt());
    let at = &inv_root * a.matrix() * &inv_root;
    let polar = symmetric_function(&(-(&at * &at)), |x| 1.0 / x.sqrt());
    let jt = -(&at * polar);
    ComplexStructure::new(&inv_root * jt * root)
}

/// `G = A J` after checking that `J` is a complex structure preserving `A`
/// with `A(v, Jv) > 0`.
pub fn szego_gram(a: &SkewForm, j: &ComplexStructure) -> Result<DMatrix<f64>> {
    let a = a.matrix();
    let j = j.matrix();
    if a.shape() != j.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: j.nrows(),
        });
    }
    let scale = a.amax();
    let invariance = (j.transpose() * a * j - a).amax();
    if scale == 0.0 || invariance > 1e-9 * scale {
        return Err(Error::IncompatibleStructure(format!("|JᵀAJ − A| = {invariance:.3e}")));
    }
    let g = crate::linalg::symmetric_part(&(a * j));
    let (eigs, _) = sorted_symmetric_eigen(&g);
    if !(eigs[0] > 1e-12 * eigs[eigs.len() - 1]) {
        return Err(Error::IncompatibleStructure(format!(
            "A(v, Jv) is not positive (smallest eigenvalue {:.3e})",
            eigs[0]
        )));
    }
    Ok(g)
}

/// Samples `σ₀^∨` on the lattice `{−R, …, R}^q` with spacing `h`.
pub fn szego_symbol_space(
    alg: &TwoStepAlgebra,
    theta: &[f64],
    j: &ComplexStructure,
    half_extent: f64,
    spacing: f64,
) -> Result<SymbolGrid> {
    let a = alg.levi_contraction(theta)?;
    let g = szego_gram(&a, j)?;
    let q = alg.q();
    let n = q / 2;
    let prefactor = pfaffian(a.matrix()).abs() / (2.0 * std::f64::consts::PI).powi(n as i32);
    SymbolGrid::from_fn(q, half_extent, spacing, |h| {
        let v = DVector::from_column_slice(h);
        Complex64::new(prefactor * (-0.25 * v.dot(&(&g * &v))).exp(), 0.0)
    })
}

/// The frequency-side symbol `2ⁿ exp(−ξᵀ G⁻¹ ξ)`.
pub fn szego_symbol_frequency(gram: &DMatrix<f64>, xi: &[f64]) -> Result<f64> {
    let q = gram.nrows();
    if xi.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: xi.len(),
        });
    }
    let inv = gram.clone().try_inverse().ok_or(Error::DegenerateForm)?;
    let v = DVector::from_column_slice(xi);
    Ok(2f64.powi((q / 2) as i32) * (-v.dot(&(inv * &v))).exp())
}

/// The closed form `σ₀(ξ, θ)` for `θ` in the open ray where `J` is
/// compatible; `G(tθ) = t G(θ)` for `t > 0`.
pub fn szego_symbol_closed_form(alg: &TwoStepAlgebra, j: &ComplexStructure, theta: &[f64], xi: &[f64]) -> Result<f64> {
    let g = szego_gram(&alg.levi_contraction(theta)?, j)?;
    szego_symbol_frequency(&g, xi)
}

/// The conformal case `2ⁿ exp(−|ξ|² / |θ|)`.
pub fn conformal_symbol(q: usize, theta_norm: f64, xi: &[f64]) -> f64 {
    let r2: f64 = xi.iter().map(|x| x * x).sum();
    2f64.powi((q / 2) as i32) * (-r2 / theta_norm).exp()
}

/// Direct lattice quadrature of `∫ exp(−½ i xᵀAy) f(x − y) g(y) dy` with
/// weight `h^q` per point; `f` is zero off the lattice.
///
/// The last two axes form an inner block that is swept against every block
/// of `g` at once, which keeps the working set in cache. Blocks of output
/// points run in parallel and each output sums in a fixed order, so results
/// do not depend on the number of workers.
pub fn twisted_convolve(f: &SymbolGrid, g: &SymbolGrid, a: &SkewForm) -> Result<SymbolGrid> {
    f.require_same_lattice(g)?;
    let q = f.q;
    if a.dim() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: a.dim(),
        });
    }
    if q < 2 {
        return Err(Error::InvalidArgument("twisted convolution needs q ≥ 2".into()));
    }
    let side = f.side();
    let steps = f.steps;
    let block = side * side;
    let outer_axes = q - 2;
    let outer_count = side.pow(outer_axes as u32);
    let coords: Vec<f64> = (0..side).map(|i| (i as f64 - steps as f64) * f.spacing).collect();
    let at = a.matrix().transpose();

    // fr(z) = f(−z), so f(x − y) = fr(y − x) and fr's index of y − x is iy − ix + steps.
    let fr: Vec<Complex64> = (0..f.len()).map(|i| f.values[f.len() - 1 - i]).collect();
    let buf = Buffers {
        fr_re: fr.iter().map(|v| v.re).collect(),
        fr_im: fr.iter().map(|v| v.im).collect(),
        g_re: g.values.iter().map(|v| v.re).collect(),
        g_im: g.values.iter().map(|v| v.im).collect(),
        real: f.values.iter().chain(&g.values).all(|v| v.im == 0.0),
    };
    let range = |i: usize| (i.saturating_sub(steps), (i + steps).min(side - 1));
    let outer_indices = |mut o: usize| -> Vec<usize> {
        let mut idx = vec![0; outer_axes];
        for slot in idx.iter_mut().rev() {
            *slot = o % side;
            o /= side;
        }
        idx
    };
    let weight = f.spacing.powi(q as i32);

    let blocks: Vec<Vec<Complex64>> = (0..outer_count)
        .into_par_iter()
        .map(|ox| {
            let xo = outer_indices(ox);
            // Per inner output point: Aᵀx and the phase tables of the two inner axes.
            let mut a_x: Vec<DVector<f64>> = Vec::with_capacity(block);
            let mut tables: [(Vec<f64>, Vec<f64>); 2] = [(Vec::new(), Vec::new()), (Vec::new(), Vec::new())];
            for xx in 0..block {
                let mut x: Vec<f64> = xo.iter().map(|&i| coords[i]).collect();
                x.push(coords[xx / side]);
                x.push(coords[xx % side]);
                let ax = &at * DVector::from_vec(x);
                for (t, table) in tables.iter_mut().enumerate() {
                    for &c in &coords {
                        let phase = -0.5 * ax[outer_axes + t] * c;
                        table.0.push(phase.cos());
                        table.1.push(phase.sin());
                    }
                }
                a_x.push(ax);
            }
            let mut acc = vec![Complex64::new(0.0, 0.0); block];
            let ranges: Vec<(usize, usize)> = xo.iter().map(|&i| range(i)).collect();
            let mut yo: Vec<usize> = ranges.iter().map(|r| r.0).collect();
            loop {
                let g_base = yo.iter().fold(0, |acc, &i| acc * side + i) * block;
                let f_base = yo
                    .iter()
                    .zip(&xo)
                    .fold(0, |acc, (&iy, &ix)| acc * side + iy + steps - ix)
                    * block;
                let y_outer: Vec<f64> = yo.iter().map(|&i| coords[i]).collect();
                for (xx, slot) in acc.iter_mut().enumerate() {
                    let (x3, x4) = (xx / side, xx % side);
                    let t: f64 = -0.5 * y_outer.iter().enumerate().map(|(k, y)| a_x[xx][k] * y).sum::<f64>();
                    let outer_phase = Complex64::from_polar(1.0, t);
                    let (lo3, hi3) = range(x3);
                    let (lo4, hi4) = range(x4);
                    let row = xx * side;
                    let (c3, s3) = (&tables[0].0[row..row + side], &tables[0].1[row..row + side]);
                    let (c4, s4) = (&tables[1].0[row + lo4..=row + hi4], &tables[1].1[row + lo4..=row + hi4]);
                    let mut inner = Complex64::new(0.0, 0.0);
                    for y3 in lo3..=hi3 {
                        let gs = g_base + y3 * side + lo4;
                        let fs = f_base + (y3 + steps - x3) * side + lo4 + steps - x4;
                        let len = hi4 - lo4 + 1;
                        let (re, im) = if buf.real {
                            inner_real(&buf.fr_re[fs..fs + len], &buf.g_re[gs..gs + len], c4, s4)
                        } else {
                            inner_complex(
                                &buf.fr_re[fs..fs + len],
                                &buf.fr_im[fs..fs + len],
                                &buf.g_re[gs..gs + len],
                                &buf.g_im[gs..gs + len],
                                c4,
                                s4,
                            )
                        };
                        inner += Complex64::new(c3[y3], s3[y3]) * Complex64::new(re, im);
                    }
                    *slot += outer_phase * inner;
                }
                // Odometer over the valid outer y indices.
                let mut k = outer_axes;
                loop {
                    if k == 0 {
                        return acc.into_iter().map(|v| v * weight).collect();
                    }
                    k -= 1;
                    if yo[k] < ranges[k].1 {
                        yo[k] += 1;
                        break;
                    }
                    yo[k] = ranges[k].0;
                }
            }
        })
        .collect();
    Ok(SymbolGrid {
        values: blocks.into_iter().flatten().collect(),
        ..f.clone()
    })
}

struct Buffers {
    fr_re: Vec<f64>,
    fr_im: Vec<f64>,
    g_re: Vec<f64>,
    g_im: Vec<f64>,
    real: bool,
}

const LANES: usize = 4;

/// `Σ (c + i s) · f · g` for real `f`, `g`, in four interleaved partial sums.
fn inner_real(f: &[f64], g: &[f64], cos: &[f64], sin: &[f64]) -> (f64, f64) {
    let mut re = [0.0; LANES];
    let mut im = [0.0; LANES];
    let n = f.len() / LANES * LANES;
    for (((fc, gc), cc), sc) in f[..n]
        .chunks_exact(LANES)
        .zip(g[..n].chunks_exact(LANES))
        .zip(cos[..n].chunks_exact(LANES))
        .zip(sin[..n].chunks_exact(LANES))
    {
        for l in 0..LANES {
            let r = fc[l] * gc[l];
            re[l] += cc[l] * r;
            im[l] += sc[l] * r;
        }
    }
    let (mut sr, mut si) = (re.iter().sum::<f64>(), im.iter().sum::<f64>());
    for t in n..f.len() {
        let r = f[t] * g[t];
        sr += cos[t] * r;
        si += sin[t] * r;
    }
    (sr, si)
}

fn inner_complex(fr: &[f64], fi: &[f64], gr: &[f64], gi: &[f64], cos: &[f64], sin: &[f64]) -> (f64, f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    for t in 0..fr.len() {
        let pr = fr[t] * gr[t] - fi[t] * gi[t];
        let pi = fr[t] * gi[t] + fi[t] * gr[t];
        re += cos[t] * pr - sin[t] * pi;
        im += cos[t] * pi + sin[t] * pr;
    }
    (re, im)
}

/// `F(ξ) = Σ_h e^{−i⟨h, ξ⟩} f(h) h^q` on the lattice `{−R′, …, R′}^q`
/// with spacing `h′`, computed one axis at a time.
pub fn fourier_symbol_on(f: &SymbolGrid, half_extent: f64, spacing: f64) -> Result<SymbolGrid> {
    let q = f.q;
    let mut out = SymbolGrid::zeros(q, half_extent, spacing)?;
    let n_in = f.side();
    let n_out = out.side();
    let xs: Vec<f64> = (0..n_in).map(|i| (i as f64 - f.steps as f64) * f.spacing).collect();
    let ks: Vec<f64> = (0..n_out).map(|i| (i as f64 - out.steps as f64) * spacing).collect();
    let kernel: Vec<Complex64> = ks
        .iter()
        .flat_map(|&k| xs.iter().map(move |&x| Complex64::from_polar(f.spacing, -k * x)))
        .collect();

    // Transform axis k of a tensor with shape `dims`.
    let mut data = f.values.clone();
    let mut dims = vec![n_in; q];
    for axis in 0..q {
        let outer: usize = dims[..axis].iter().product();
        let inner: usize = dims[axis + 1..].iter().product();
        let mut next = vec![Complex64::new(0.0, 0.0); outer * n_out * inner];
        next.par_chunks_mut(n_out * inner).enumerate().for_each(|(o, block)| {
            for (ko, row) in kernel.chunks(n_in).enumerate() {
                for i in 0..inner {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (xi, w) in row.iter().enumerate() {
                        acc += w * data[(o * n_in + xi) * inner + i];
                    }
                    block[ko * inner + i] = acc;
                }
            }
        });
        data = next;
        dims[axis] = n_out;
    }
    out.values = data;
    Ok(out)
}

/// Forward transform onto the input lattice.
pub fn fourier_symbol(f: &SymbolGrid) -> Result<SymbolGrid> {
    fourier_symbol_on(f, f.half_extent, f.spacing)
}

/// Report of one idempotency run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdempotencyReport {
    pub sup_error: f64,
    pub lattice: LatticeSpec,
    pub theta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub q: usize,
    pub half_extent: f64,
    pub spacing: f64,
}

/// Builds `σ₀^∨` with the compatible structure for the algebra's metric and
/// measures `‖σ₀^∨ ∗ σ₀^∨ − σ₀^∨‖_sup`.
pub fn szego_idempotency(alg: &TwoStepAlgebra, theta: &[f64], half_extent: f64, spacing: f64) -> Result<IdempotencyReport> {
    let a = alg.levi_contraction(theta)?;
    let j = compatible_complex_structure(&a, &alg.metric())?;
    let sigma = szego_symbol_space(alg, theta, &j, half_extent, spacing)?;
    let square = twisted_convolve(&sigma, &sigma, &a)?;
    Ok(IdempotencyReport {
        sup_error: symbol_sup_distance(&square, &sigma)?,
        lattice: LatticeSpec {
            q: alg.q(),
            half_extent,
            spacing,
        },
        theta: theta.to_vec(),
    })
}
