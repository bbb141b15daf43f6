use proptest::prelude::*;
use rkhs_transform::kernel::{check_pd, gram, induced_metric};
use rkhs_transform::rkhs::{interpolate, FrameExpansion, FunctionalCoeffs, DEFAULT_RANK_CUTOFF};
use rkhs_transform::{Kernel, RkhsElement};

fn kernel_and_points(n: usize) -> impl Strategy<Value = (Kernel, Vec<f64>)> {
    prop_oneof![
        prop::collection::vec(-5.0..5.0f64, 1..n).prop_map(|p| (Kernel::OrnsteinUhlenbeck, p)),
        prop::collection::vec(0.0..1.0f64, 1..n).prop_map(|p| (Kernel::BrownianMin, p)),
        prop::collection::vec(-0.95..0.95f64, 1..n).prop_map(|p| (Kernel::Szego, p)),
        (0.1..4.0f64, prop::collection::vec(-3.0..3.0f64, 1..n))
            .prop_map(|(tau, p)| (Kernel::gaussian(tau).unwrap(), p)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_is_symmetric_and_pd((k, pts) in kernel_and_points(12)) {
        let g = gram(&k, &pts).unwrap();
        prop_assert_eq!(g.entries.clone(), g.entries.transpose());
        let r = check_pd(&g.entries, 1e-8);
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn quadratic_forms_are_nonnegative(
        (k, pts) in kernel_and_points(10),
        seed in prop::collection::vec(-3.0..3.0f64, 10),
    ) {
        let g = gram(&k, &pts).unwrap();
        let c = &seed[..pts.len()];
        let mut q = 0.0;
        let mut scale = 0.0;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                q += c[i] * c[j] * g.entries[(i, j)];
                scale += (c[i] * c[j] * g.entries[(i, j)]).abs();
            }
        }
        prop_assert!(q >= -1e-10 * scale.max(1.0));
    }

    #[test]
    fn induced_metric_triangle(a in -4.0..4.0f64, b in -4.0..4.0f64, c in -4.0..4.0f64) {
        let k = Kernel::OrnsteinUhlenbeck;
        let d = |x, y| induced_metric(&k, x, y).unwrap();
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
        prop_assert!((d(a, b) - d(b, a)).abs() == 0.0);
    }

    #[test]
    fn szego_truncation_tail(s in -0.9..0.9f64, t in -0.9..0.9f64, n in 0usize..60) {
        let fe = FrameExpansion::new(n);
        let x = s * t;
        let exact = Kernel::Szego.eval(s, t).unwrap();
        let tail = x.abs().powi(n as i32 + 1) / (1.0 - x.abs());
        prop_assert!((exact - fe.truncated_kernel(s, t)).abs() <= tail + 1e-14);
    }

    #[test]
    fn reproducing_property(
        (k, pts) in kernel_and_points(8),
        coeffs in prop::collection::vec(-2.0..2.0f64, 8),
        pick in 0usize..8,
    ) {
        let f = RkhsElement::new(k, pts.clone(), coeffs[..pts.len()].to_vec()).unwrap();
        let t = pts[pick % pts.len()];
        let kt = RkhsElement::section(k, t).unwrap();
        let lhs = f.inner(&kt).unwrap();
        let rhs = f.evaluate(t).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn cauchy_schwarz_point_bound(
        (k, pts) in kernel_and_points(8),
        coeffs in prop::collection::vec(-2.0..2.0f64, 8),
        t in 0.0..0.9f64,
    ) {
        let f = RkhsElement::new(k, pts.clone(), coeffs[..pts.len()].to_vec()).unwrap();
        let ktt = k.eval(t, t).unwrap();
        prop_assert!(f.evaluate(t).unwrap().abs() <= f.norm() * ktt.sqrt() + 1e-9);
    }

    #[test]
    fn interpolant_reproduces_data_and_has_minimum_norm(
        pts in prop::collection::btree_set(-400i32..400, 2..8),
        vals in prop::collection::vec(-2.0..2.0f64, 8),
        extra in -3.0..3.0f64,
    ) {
        let k = Kernel::OrnsteinUhlenbeck;
        let pts: Vec<f64> = pts.into_iter().map(|p| p as f64 / 100.0).collect();
        let vals = &vals[..pts.len()];
        let f = interpolate(k, &pts, vals, DEFAULT_RANK_CUTOFF).unwrap();
        for (p, v) in pts.iter().zip(vals) {
            prop_assert!((f.evaluate(*p).unwrap() - v).abs() < 1e-8);
        }
        // any other interpolant differs by something vanishing on the data
        let far = RkhsElement::section(k, 9.0).unwrap();
        let g = interpolate(k, &pts, &pts.iter().map(|p| far.evaluate(*p).unwrap()).collect::<Vec<_>>(), DEFAULT_RANK_CUTOFF).unwrap();
        let null = far.sub(&g).unwrap();
        let other = f.add(&null.scale(extra)).unwrap();
        prop_assert!(f.norm_sq() <= other.norm_sq() + 1e-9);
    }

    #[test]
    fn functional_bound(x0 in -0.9..0.9f64, coeffs in prop::collection::vec(-2.0..2.0f64, 1..15)) {
        let g = RkhsElement::from_basis(Kernel::Szego, coeffs.clone()).unwrap();
        let l = FunctionalCoeffs::point_evaluation(x0, coeffs.len() - 1).unwrap();
        prop_assert!(l.apply(&g).unwrap().abs() <= l.norm() * g.norm() + 1e-12);
    }

    #[test]
    fn parseval_of_sections(s in -0.9..0.9f64) {
        let fe = FrameExpansion::new(400);
        let f = RkhsElement::section(Kernel::Szego, s).unwrap();
        let exact = 1.0 / (1.0 - s * s);
        prop_assert!((fe.parseval_norm(&f).unwrap() - exact).abs() <= 1e-9 * exact);
        prop_assert!((f.norm_sq() - exact).abs() <= 1e-12 * exact);
    }
}

#[test]
fn rkhs_record_survives_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = RkhsElement::new(Kernel::gaussian(0.7).unwrap(), vec![0.1, -2.0], vec![1.0 / 3.0, 2.5]).unwrap();
    let path = dir.path().join("f.txt");
    std::fs::write(&path, f.to_record()).unwrap();
    let back = RkhsElement::from_record(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, f);
    let json = serde_json::to_string(&f).unwrap();
    let back: RkhsElement = serde_json::from_str(&json).unwrap();
    assert_eq!(back, f);
}
