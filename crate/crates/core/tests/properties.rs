use std::f64::consts::PI;

use proptest::prelude::*;

use dichotomy::bifurcation::{locate_zeros_on_path, sign_map_2d};
use dichotomy::dichotomy::matrix_sign_projector;
use dichotomy::index::{circle_holonomy, evans_of_pair, Bundle};
use dichotomy::linalg::{expm, orthonormalize, principal_angle, svd, sym_eig, Frame, Matrix};
use dichotomy::model::{
    load_config, AngleMap, CoefficientFamily, MatrixMap, Numerics, Param, ParameterSpace,
    ScalarProfile,
};
use dichotomy::propagation::{transition, transport_frame};
use dichotomy::subspaces::{
    frame_field, stable_frame_at, stable_frame_at_zero, subspace_pair, transversality,
    unstable_frame_at, unstable_frame_at_zero,
};

fn matrix(d: usize, range: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-range..range, d * d).prop_map(move |v| Matrix::from_row_slice(d, d, &v))
}

fn square(max_d: usize, range: f64) -> impl Strategy<Value = Matrix> {
    (1..=max_d).prop_flat_map(move |d| matrix(d, range))
}

fn symmetric(max_d: usize) -> impl Strategy<Value = Matrix> {
    square(max_d, 3.0).prop_map(|m| (&m + m.transpose()) * 0.5)
}

fn bc(angle: AngleMap) -> CoefficientFamily {
    CoefficientFamily::PiecewiseScalar {
        profile: ScalarProfile::default(),
        b: MatrixMap::ConjugateReflection,
        c: MatrixMap::Reflection,
        angle,
    }
}

fn ex_bc() -> CoefficientFamily {
    CoefficientFamily::PiecewiseScalar {
        profile: ScalarProfile::default(),
        b: MatrixMap::Constant(Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0])),
        c: MatrixMap::Reflection,
        angle: AngleMap::identity(),
    }
}

fn poschl_teller() -> CoefficientFamily {
    load_config(
        r#"{ "family": { "kind": "builtin", "name": "poschl-teller" },
             "space": { "topology": "interval", "range": [0.5, 1.5], "nodes": 3, "lambda0": [0.5] },
             "numerics": { "T": 12, "ode_tol": 1e-10, "reortho_interval": 1, "zero_tol": 1e-8 } }"#,
    )
    .unwrap()
    .family
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expm_inverse(m in square(5, 2.0)) {
        let d = m.nrows();
        let e = expm(&m).unwrap() * expm(&(-&m)).unwrap();
        prop_assert!((e - Matrix::identity(d, d)).amax() <= 1e-10);
    }

    #[test]
    fn sym_eig_reconstructs(m in symmetric(6)) {
        let e = sym_eig(&m).unwrap();
        let q = e.basis.matrix();
        let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(e.eigenvalues.clone()));
        prop_assert!((q * d * q.transpose() - &m).amax() <= 1e-10 * m.amax().max(1.0));
        prop_assert!(e.basis.orthonormality_defect() <= 1e-12);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn svd_reconstructs(m in (1..6usize, 1..6usize).prop_flat_map(|(r, c)| prop::collection::vec(-2.0..2.0f64, r * c).prop_map(move |v| Matrix::from_row_slice(r, c, &v)))) {
        let d = svd(&m);
        let k = m.nrows().min(m.ncols());
        let sigma = Matrix::from_diagonal(&nalgebra::DVector::from_vec(d.singular_values.clone()));
        prop_assert!((&d.u * sigma * d.v.transpose() - &m).amax() <= 1e-13 * m.amax().max(1.0));
        prop_assert!((d.u.transpose() * &d.u - Matrix::identity(k, k)).amax() <= 1e-13);
        prop_assert!((d.v.transpose() * &d.v - Matrix::identity(k, k)).amax() <= 1e-13);
        prop_assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn orthonormalize_is_qr(m in matrix(5, 1.0).prop_map(|m| m.columns(0, 3).into_owned())) {
        prop_assume!(dichotomy::linalg::smallest_singular_value(&m) > 1e-3);
        let (q, r) = orthonormalize(&Frame::new(m.clone())).unwrap();
        prop_assert!(q.orthonormality_defect() <= 1e-12);
        prop_assert!((q.matrix() * &r - &m).amax() <= 1e-12);
        prop_assert!((0..3).all(|i| r[(i, i)] > 0.0));
    }

    #[test]
    fn profile_constraints(a_plus in 0.05..2.0f64, ratio in 1.05..4.0f64, t0 in 0.2..3.0f64, t in -20.0..20.0f64) {
        let p = ScalarProfile::new(a_plus, a_plus * ratio, t0).unwrap();
        prop_assert_eq!(p.value(0.0), 0.0);
        prop_assert!(p.value(t) <= 0.0);
        prop_assert!((p.value(t0) + a_plus).abs() <= 1e-12 * a_plus.max(1.0));
        if t.abs() >= t0 {
            prop_assert!(p.value(t) <= -a_plus * (1.0 - 1e-12));
            prop_assert!(p.value(t) >= -a_plus * ratio);
        }
    }

    #[test]
    fn projector_properties(m in square(5, 2.0)) {
        let Ok(split) = matrix_sign_projector(&m, 1e-8) else { return Ok(()) };
        prop_assume!(split.gap > 1e-2);
        let p = &split.projector;
        let d = m.nrows();
        prop_assert!((p * p - p).amax() <= 1e-9);
        prop_assert!((p * &m - &m * p).amax() <= 1e-9 * m.norm().max(1.0));
        prop_assert_eq!(split.stable.rank() + split.unstable.rank(), d);
    }

    #[test]
    fn projector_matches_symmetric_spectrum(m in symmetric(5)) {
        let e = sym_eig(&m).unwrap();
        prop_assume!(e.smallest_magnitude() > 1e-2);
        let split = matrix_sign_projector(&m, 1e-8).unwrap();
        prop_assert_eq!(split.unstable.rank(), m.nrows() - e.stable_count);
        if split.unstable.rank() > 0 {
            prop_assert!(principal_angle(&split.unstable, &e.positive_frame()).unwrap() <= 1e-8);
        }
        if split.stable.rank() > 0 {
            prop_assert!(principal_angle(&split.stable, &e.negative_frame()).unwrap() <= 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn second_order_residual(lambda in 0.5..1.5f64, t in -4.0..4.0f64) {
        // Central differences of the first solution component against -q u.
        let fam = poschl_teller();
        let p = Param::Scalar(lambda);
        let h = 1e-3;
        let phi = |s: f64| transition(&fam, &p, s, 0.0, 1e-12).unwrap();
        let (a, b, c) = (phi(t - h), phi(t), phi(t + h));
        let q = 2.0 / t.cosh().powi(2) - lambda * lambda;
        for j in 0..2 {
            let upp = (c[(0, j)] - 2.0 * b[(0, j)] + a[(0, j)]) / (h * h);
            prop_assert!((upp + q * b[(0, j)]).abs() <= 1e-4 * (1.0 + b[(0, j)].abs()));
            prop_assert!(((c[(0, j)] - a[(0, j)]) / (2.0 * h) - b[(1, j)]).abs() <= 1e-5 * (1.0 + b[(1, j)].abs()));
        }
    }

    #[test]
    fn liouville_identity(diag in prop::collection::vec(-2.0..2.0f64, 3), off in -1.0..1.0f64, s in -3.0..3.0f64, t in -3.0..3.0f64) {
        let b = Matrix::from_row_slice(3, 3, &[diag[0], off, 0.0, off, diag[1], 0.0, 0.0, 0.0, diag[2]]);
        let c = Matrix::from_row_slice(3, 3, &[diag[2], 0.0, 0.0, 0.0, diag[0], off, 0.0, off, diag[1]]);
        let profile = ScalarProfile::default();
        let fam = CoefficientFamily::PiecewiseScalar {
            profile,
            b: MatrixMap::Constant(b.clone()),
            c: MatrixMap::Constant(c.clone()),
            angle: AngleMap::identity(),
        };
        let phi = transition(&fam, &Param::Scalar(0.0), t, s, 1e-12).unwrap();
        let (lo, hi) = (s.min(t), s.max(t));
        let neg = profile.integral(lo.min(0.0), hi.min(0.0)) * b.trace();
        let pos = profile.integral(lo.max(0.0), hi.max(0.0)) * c.trace();
        let expected = ((neg + pos) * (t - s).signum()).exp();
        prop_assert!((phi.determinant() - expected).abs() <= 1e-8 * expected.max(1.0));
    }

    #[test]
    fn flow_invariance(theta in 0.0..(2.0 * PI)) {
        let num = Numerics::default();
        let fam = bc(AngleMap::identity());
        let p = Param::Scalar(theta);
        let s0 = stable_frame_at_zero(&fam, &p, &num).unwrap();
        let moved = transport_frame(&fam, &p, &s0, 0.0, 5.0, 1.0, 1e-11).unwrap().frame;
        let (direct, _) = stable_frame_at(&fam, &p, 5.0, &num).unwrap();
        prop_assert!(principal_angle(&moved, &direct).unwrap() <= 1e-6);
    }

    #[test]
    fn subspace_transport_consistency(theta in 0.0..(2.0 * PI), tau in -5.0..0.0f64) {
        let num = Numerics::default();
        let fam = ex_bc();
        let p = Param::Scalar(theta);
        let (u, _) = unstable_frame_at(&fam, &p, tau, &num).unwrap();
        let moved = transport_frame(&fam, &p, &u, tau, 0.0, 1.0, 1e-11).unwrap().frame;
        let direct = unstable_frame_at_zero(&fam, &p, &num).unwrap();
        prop_assert!(principal_angle(&moved, &direct).unwrap() <= 1e-6);
    }

    #[test]
    fn flip_covariance_and_hadamard(theta in 0.0..(2.0 * PI)) {
        let pair = subspace_pair(&bc(AngleMap::identity()), &Param::Scalar(theta), &Numerics::default()).unwrap();
        let v = evans_of_pair(&pair).unwrap();
        prop_assert!(v.abs() <= 1.0 + 1e-12);
        let mut flipped = pair.clone();
        flipped.unstable = pair.unstable.negated();
        prop_assert!((evans_of_pair(&flipped).unwrap() + v).abs() <= 1e-14);
        let mut both = flipped.clone();
        both.stable = pair.stable.negated();
        prop_assert!((evans_of_pair(&both).unwrap() - v).abs() <= 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn config_roundtrip(t in 2.0..30.0f64, tol_exp in 6..12i32, nodes in 2..200usize, hi in 0.5..6.0f64, name in prop::sample::select(vec!["paper-sec4-BC", "paper-sec4-exBC", "constant-hyperbolic"])) {
        let text = format!(
            r#"{{ "family": {{ "kind": "builtin", "name": "{name}" }},
                 "space": {{ "topology": "interval", "range": [0.0, {hi}], "nodes": {nodes}, "lambda0": [0.0, {hi}] }},
                 "numerics": {{ "T": {t}, "ode_tol": 1e-{tol_exp}, "reortho_interval": 0.5, "zero_tol": 1e-8 }} }}"#
        );
        let once = load_config(&text).unwrap().to_config_string();
        let twice = load_config(&once).unwrap().to_config_string();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn alignment_is_idempotent(n in 40..90usize) {
        let space = ParameterSpace::circle(n, &[0.0]).unwrap();
        let field = frame_field(&ex_bc(), &space, &Numerics::default()).unwrap();
        let again = field.realigned();
        for (a, b) in field.pairs.iter().zip(&again.pairs) {
            prop_assert!((a.unstable.matrix() - b.unstable.matrix()).amax() <= 1e-12);
            prop_assert!((a.stable.matrix() - b.stable.matrix()).amax() <= 1e-12);
        }
    }

    #[test]
    fn holonomy_resolution_stability(n in 40..120usize) {
        let num = Numerics::default();
        let coarse = frame_field(&ex_bc(), &ParameterSpace::circle(n, &[0.0]).unwrap(), &num).unwrap();
        let fine = frame_field(&ex_bc(), &ParameterSpace::circle(2 * n, &[0.0]).unwrap(), &num).unwrap();
        for which in [Bundle::Stable, Bundle::Unstable] {
            prop_assert_eq!(circle_holonomy(&coarse, which).unwrap(), circle_holonomy(&fine, which).unwrap());
        }
    }

    #[test]
    fn bisection_halves(offset in -0.4..0.4f64) {
        let num = Numerics::default();
        let fam = bc(AngleMap::Linear { offset, scale: 1.0 });
        let space = ParameterSpace::interval(0.5, 2.5, 21, &[0.5, 2.5]).unwrap();
        let field = frame_field(&fam, &space, &num).unwrap();
        let found = locate_zeros_on_path(&fam, &field, &num).unwrap();
        prop_assert_eq!(found.zeros.len(), 1);
        let z = &found.zeros[0];
        prop_assert!((z.lambda + offset - PI / 2.0).abs() <= 1e-6);
        for w in z.widths.windows(2) {
            prop_assert!((w[1] - 0.5 * w[0]).abs() <= 1e-15 * w[0].max(1.0));
        }
        prop_assert!(z.bracket.0 <= z.lambda && z.lambda <= z.bracket.1);
        prop_assert!(z.margin <= 10.0 * num.zero_tol);
        for node in [z.nodes.0, z.nodes.1] {
            let (_, margin) = transversality(&field.pairs[node], num.zero_tol).unwrap();
            prop_assert!(margin > 10.0 * num.zero_tol);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2))]

    #[test]
    fn grid_refinement(r in 16..21usize) {
        let num = Numerics::default();
        let fam = bc(AngleMap::RadialBump);
        let count = |res: usize| {
            let space = ParameterSpace::disc(res, &[(0.0, 0.0)]).unwrap();
            let field = frame_field(&fam, &space, &num).unwrap();
            sign_map_2d(&field, &num).unwrap().sign_components()
        };
        let coarse = 2 * r + 1;
        prop_assert_eq!(count(coarse), 2);
        prop_assert_eq!(count(2 * coarse - 1), 2);
    }
}
