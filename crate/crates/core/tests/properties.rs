use nalgebra::DMatrix;
use polycontact::linalg::pfaffian;
use polycontact::nilpotent::canonical_form;
use polycontact::polycontact::Method;
use polycontact::prelude::*;
use proptest::prelude::*;

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, len)
}

fn algebra_of(dim: usize) -> Algebra {
    Algebra::from_dim(dim).unwrap()
}

fn mixed_pair() -> TwoStepAlgebra {
    let mut b1 = DMatrix::zeros(4, 4);
    b1[(0, 1)] = 1.0;
    b1[(2, 3)] = 1.0;
    let mut b2 = DMatrix::zeros(4, 4);
    b2[(0, 2)] = 1.0;
    b2[(1, 3)] = -2.0;
    TwoStepAlgebra::from_skew_parts(&[&b1 - b1.transpose(), &b2 - b2.transpose()], None).unwrap()
}

fn skew(q: usize, entries: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_row_slice(q, q, &entries[..q * q]);
    &m - m.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_norm_is_multiplicative(dim in prop::sample::select(vec![1usize, 2, 4, 8]), a in coeffs(8), b in coeffs(8)) {
        let alg = algebra_of(dim);
        let x = CompositionElement::new(alg, &a[..dim]).unwrap();
        let y = CompositionElement::new(alg, &b[..dim]).unwrap();
        let xy = x.multiply(&y).unwrap();
        prop_assert!((xy.norm() - x.norm() * y.norm()).abs() <= 1e-12 * (1.0 + x.norm() * y.norm()));
        // Conjugation is an anti-automorphism.
        let lhs = xy.conjugate();
        let rhs = y.conjugate() * x.conjugate();
        for (u, v) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn octonions_are_alternative(a in coeffs(8), b in coeffs(8)) {
        let x = CompositionElement::new(Algebra::Octonion, &a).unwrap();
        let y = CompositionElement::new(Algebra::Octonion, &b).unwrap();
        let lhs = (x * x) * y;
        let rhs = x * (x * y);
        for (u, v) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!((u - v).abs() <= 1e-11);
        }
    }

    #[test]
    fn clifford_combinations_square_to_minus_norm(p in 1usize..=9, c in coeffs(9)) {
        let rep = build_clifford_rep(p, 1).unwrap();
        let j = rep.combination(&c[..p]).unwrap();
        let norm2: f64 = c[..p].iter().map(|x| x * x).sum();
        let target = DMatrix::<f64>::identity(rep.dim(), rep.dim()) * -norm2;
        prop_assert!((&j * &j - target).amax() <= 1e-12 * (1.0 + norm2));
    }

    #[test]
    fn group_law_is_associative(
        (p, n) in prop::sample::select(vec![(1usize, 1usize), (2, 1), (3, 1), (3, 2)]),
        v in coeffs(3 * 8 + 3 * 3),
    ) {
        let alg = build_htype(p, n).unwrap();
        let (q, pp) = (alg.q(), alg.p());
        let el = |k: usize| GroupElement::new(v[k * q..(k + 1) * q].to_vec(), v[3 * q + k * pp..3 * q + (k + 1) * pp].to_vec());
        let (x, y, z) = (el(0), el(1), el(2));
        let left = alg.group_multiply(&alg.group_multiply(&x, &y).unwrap(), &z).unwrap();
        let right = alg.group_multiply(&x, &alg.group_multiply(&y, &z).unwrap()).unwrap();
        for (a, b) in left.n.iter().zip(&right.n).chain(left.h.iter().zip(&right.h)) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let inv = alg.group_inverse(&x).unwrap();
        let id = alg.group_multiply(&x, &inv).unwrap();
        prop_assert!(id.h.iter().chain(&id.n).all(|c| c.abs() <= 1e-15));
    }

    #[test]
    fn bracket_is_skew_and_contraction_linear(theta in coeffs(3), phi in coeffs(3), s in -3.0..3.0f64, u in coeffs(4), w in coeffs(4)) {
        let alg = build_htype(3, 1).unwrap();
        let uv = alg.bracket(&u, &w).unwrap();
        let vu = alg.bracket(&w, &u).unwrap();
        prop_assert!(uv.iter().zip(&vu).all(|(a, b)| (a + b).abs() <= 1e-14));
        let combo: Vec<f64> = theta.iter().zip(&phi).map(|(a, b)| a + s * b).collect();
        let lhs = alg.levi_contraction(&combo).unwrap().into_matrix();
        let rhs = alg.levi_contraction(&theta).unwrap().into_matrix() + alg.levi_contraction(&phi).unwrap().into_matrix() * s;
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }

    #[test]
    fn certification_is_scale_invariant(scale in 0.05..20.0f64) {
        let tol = TolConfig::default();
        for alg in [build_htype(3, 1).unwrap(), mixed_pair()] {
            let base = certify_polycontact(&alg, &tol).unwrap();
            let scaled_alg = TwoStepAlgebra::new(alg.brackets().iter().map(|b| b * scale).collect(), None).unwrap();
            let scaled = certify_polycontact(&scaled_alg, &tol).unwrap();
            prop_assert_eq!(base.verdict, scaled.verdict);
            prop_assert_eq!(base.method, scaled.method);
        }
        let mut b1 = DMatrix::zeros(4, 4);
        b1[(0, 1)] = scale;
        b1[(1, 0)] = -scale;
        let mut b2 = DMatrix::zeros(4, 4);
        b2[(2, 3)] = scale;
        b2[(3, 2)] = -scale;
        let pair = TwoStepAlgebra::new(vec![b1, b2], None).unwrap();
        prop_assert_eq!(certify_polycontact(&pair, &tol).unwrap().verdict, Verdict::Refuted);
    }

    #[test]
    fn pfaffian_polynomial_matches_direct_evaluation(entries in coeffs(2 * 36), theta in coeffs(2)) {
        let alg = TwoStepAlgebra::new(vec![skew(6, &entries[..36]), skew(6, &entries[36..])], None).unwrap();
        let poly = pfaffian_polynomial(&alg).unwrap();
        let direct = pfaffian(alg.levi_contraction(&theta).unwrap().matrix());
        prop_assert!((poly.eval(&theta) - direct).abs() <= 1e-9 * (1.0 + direct.abs()).max(poly.coefficient_l1()));
    }

    #[test]
    fn darboux_and_radical_are_consistent(q in 1usize..=8, entries in coeffs(64), cut in 0usize..4) {
        // Compose a random form with a coordinate projection to force a radical.
        let a = skew(q, &entries);
        let keep = q.saturating_sub(cut.min(q));
        let proj = DMatrix::from_fn(q, q, |i, j| if i == j && i < keep { 1.0 } else { 0.0 });
        let form = SkewForm::new(&proj * a * &proj).unwrap();
        let d = darboux_basis(&form, 1e-10);
        let w = radical(&form, 1e-10);
        prop_assert_eq!(w.ncols() + 2 * d.r, q);
        let err = (d.transform.transpose() * form.matrix() * &d.transform - canonical_form(q, d.r)).amax();
        prop_assert!(err <= 1e-8, "err {}", err);
        prop_assert!((form.matrix() * w).amax() <= 1e-9 * (1.0 + form.matrix().amax()));
    }

    #[test]
    fn cayley_round_trip(coords in coeffs(8)) {
        let norm: f64 = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 0.1);
        let a = SpherePoint::normalized(coords).unwrap();
        let q = a.q();
        prop_assume!((q + CompositionElement::one(Algebra::Quaternion)).norm() > 1e-3);
        let back = cayley_inverse(&cayley_map(&a).unwrap()).unwrap();
        let err = a.coords().iter().zip(back.coords()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-8, "err {}", err);
    }
}

#[test]
fn htype_path_covers_the_clifford_family() {
    for p in 1..=4 {
        for n in 1..=3 {
            let cert = certify_polycontact(&build_htype(p, n).unwrap(), &TolConfig::default()).unwrap();
            assert_eq!((cert.verdict, cert.method), (Verdict::Certified, Method::HTypeIdentity));
        }
    }
}
