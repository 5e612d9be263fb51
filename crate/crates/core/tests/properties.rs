use proptest::prelude::*;

use num_complex::Complex64 as C;
use num_traits::Zero;

use cat1_boundary::boundary;
use cat1_boundary::disk::{disk_distance, CircleMap, CirclePoint, DiskPoint, Moebius};
use cat1_boundary::rational::{int, Rational};
use cat1_boundary::sample;
use cat1_boundary::schwarzian::{integrated_schwarzian, schwarzian_chordal, CircleDiffeo, Term};

fn angle() -> impl Strategy<Value = f64> {
    0.0..std::f64::consts::TAU
}

fn moebius() -> impl Strategy<Value = Moebius> {
    (-0.7f64..0.7, -0.7f64..0.7, angle()).prop_map(|(x, y, r)| {
        let p = DiskPoint::new(C::new(x, y)).unwrap();
        Moebius::translation_to(&p).compose(&Moebius::rotation(r))
    })
}

fn diffeo() -> impl Strategy<Value = CircleDiffeo> {
    prop::collection::vec((1u32..4, -0.1f64..0.1, angle()), 1..3).prop_map(|t| {
        CircleDiffeo::new(t.into_iter().map(|(k, a, phi)| Term { k, a, phi }).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_distance_is_a_metric(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let t = sample::random_tree(&mut rng, 4, 7);
        let [a, b, c] = [0; 3].map(|_| sample::random_tree_point(&mut rng, &t));
        let (ab, bc, ac) = (t.distance(&a, &b).unwrap(), t.distance(&b, &c).unwrap(), t.distance(&a, &c).unwrap());
        prop_assert!(ac <= &ab + &bc);
        prop_assert_eq!(ab.clone(), t.distance(&b, &a).unwrap());
        prop_assert_eq!(ab.is_zero(), a == b);
    }

    #[test]
    fn tree_embedding_is_isometric(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let t = sample::random_tree(&mut rng, 4, 8);
        let (x, y) = (sample::random_tree_point(&mut rng, &t), sample::random_tree_point(&mut rng, &t));
        let (rx, ry) = (t.visual_log_metric(&x).unwrap(), t.visual_log_metric(&y).unwrap());
        prop_assert_eq!(boundary::dm(&rx, &ry).unwrap(), t.distance(&x, &y).unwrap());
        // Diameter one and antipodal.
        for i in 0..t.rays().len() {
            let row = (0..t.rays().len()).filter(|&j| j != i).map(|j| rx.get(i, j).clone()).max().unwrap();
            prop_assert!(row.is_zero());
        }
    }

    #[test]
    fn cross_ratios_are_basepoint_free(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let t = sample::random_tree(&mut rng, 4, 8);
        let (x, y) = (sample::random_tree_point(&mut rng, &t), sample::random_tree_point(&mut rng, &t));
        let (rx, ry) = (t.visual_log_metric(&x).unwrap(), t.visual_log_metric(&y).unwrap());
        prop_assert!(boundary::cross_ratio_witness(&rx, &ry).is_none());
        prop_assert_eq!(rx.cross_ratio_log([0, 1, 2, 3]).unwrap(), -ry.cross_ratio_log([0, 1, 3, 2]).unwrap());
    }

    #[test]
    fn derivative_max_times_min_is_one(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let t = sample::random_tree(&mut rng, 4, 8);
        let r1 = t.visual_log_metric(&sample::random_tree_point(&mut rng, &t)).unwrap();
        let (r2, _) = sample::random_tree_member(&mut rng, &t);
        let ld = boundary::log_derivative(&r2, &r1).unwrap();
        prop_assert_eq!(ld.max() + ld.min(), Rational::zero());
        prop_assert!(ld.max() >= int(0));
    }

    #[test]
    fn moebius_preserves_distance(m in moebius(), x in -0.9f64..0.9, y in -0.9f64..0.9, r in 0.0f64..0.4) {
        let p = DiskPoint::new(C::new(x, y) * 0.7).unwrap();
        let q = DiskPoint::new(C::new(r, -r)).unwrap();
        let before = disk_distance(&p, &q);
        let after = disk_distance(&m.apply_point(&p), &m.apply_point(&q));
        prop_assert!((before - after).abs() < 1e-10 * (1.0 + before));
    }

    #[test]
    fn moebius_circle_action_is_consistent(m in moebius(), t in angle()) {
        let back = CircleMap::apply_inverse(&m, CircleMap::apply(&m, t));
        prop_assert!((CirclePoint::new(back).z() - CirclePoint::new(t).z()).norm() < 1e-10);
        let h = 1e-6;
        let dq = (CircleMap::apply(&m, t + h) - CircleMap::apply(&m, t - h)) / (2.0 * h);
        prop_assert!((dq - CircleMap::derivative(&m, t)).abs() < 1e-6 * (1.0 + dq));
    }

    #[test]
    fn schwarzian_is_symmetric_and_matches_chordal(f in diffeo(), a in angle(), d in 0.1f64..6.0) {
        let (xi, eta) = (CirclePoint::new(a), CirclePoint::new(a + d));
        let s = integrated_schwarzian(&f, &xi, &eta).unwrap();
        prop_assert!((s - integrated_schwarzian(&f, &eta, &xi).unwrap()).abs() < 1e-12);
        prop_assert!((s - schwarzian_chordal(&f, &xi, &eta)).abs() < 1e-9);
    }

    #[test]
    fn diffeo_inverse_round_trips(f in diffeo(), t in -10.0f64..10.0) {
        prop_assert!((f.apply_inverse(f.apply(t)) - t).abs() < 1e-12);
        prop_assert!(f.derivative(t) > 0.0);
    }
}
