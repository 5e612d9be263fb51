use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use num_complex::Complex64 as C;

use cat1_boundary::disk::{
    busemann_poisson, classify_by_trace, derivative_from_angle, disk_distance, visual_dm, visual_log_metric, visual_metric,
    CircleMap, CirclePoint, DiskPoint, GeodesicState, HalfPlaneMatrix, Moebius, MoebiusKind,
};
use cat1_boundary::sample;
use cat1_boundary::schwarzian::{
    asymptotic_terms, cocycle_residual, conf_gmvt_check, conformal_derivative, conjugate_geodesic, distance_diff_profile,
    distortion, flip_deviation, forward_asymptotic_decay, integrated_schwarzian, schwarzian_sup, AsymptoticStep,
    CircleDiffeo, Inverse,
};

const WOBBLE: &str = include_str!("../../../data/wobble.txt");

fn wobble() -> CircleDiffeo {
    CircleDiffeo::parse(WOBBLE).unwrap()
}

fn p(r: f64) -> DiskPoint {
    DiskPoint::new(C::new(r, 0.0)).unwrap()
}

#[test]
fn radial_distance_and_busemann() {
    let r: f64 = 0.6;
    let d = ((1.0 + r) / (1.0 - r)).ln();
    let o = DiskPoint::origin();
    assert!((disk_distance(&o, &p(r)) - d).abs() < 1e-12);
    assert_eq!(disk_distance(&p(r), &p(r)), 0.0);
    assert!((busemann_poisson(&CirclePoint::new(0.0), &o, &p(r)) - d).abs() < 1e-12);
    assert!((busemann_poisson(&CirclePoint::new(PI), &o, &p(r)) + d).abs() < 1e-12);
}

#[test]
fn triangle_inequality_on_samples() {
    let mut rng = sample::rng(5);
    for _ in 0..200 {
        let [a, b, c] = [0; 3].map(|_| sample::random_disk_point(&mut rng, 4.0));
        assert!(disk_distance(&a, &c) <= disk_distance(&a, &b) + disk_distance(&b, &c) + 1e-12);
    }
}

#[test]
fn visual_metric_values() {
    let o = DiskPoint::origin();
    let (one, minus, i) = (CirclePoint::new(0.0), CirclePoint::new(PI), CirclePoint::new(FRAC_PI_2));
    assert!((visual_metric(&o, &one, &minus).unwrap() - 1.0).abs() < 1e-15);
    assert!((visual_metric(&o, &one, &i).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    assert!(visual_metric(&o, &one, &one).is_err());
    // Geometric mean value theorem through the Busemann function.
    let y = p(0.4);
    for (a, b) in [(0.3, 2.0), (1.0, 5.0)] {
        let (xi, eta) = (CirclePoint::new(a), CirclePoint::new(b));
        let lhs = 2.0 * (visual_log_metric(&y, &xi, &eta).unwrap() - visual_log_metric(&o, &xi, &eta).unwrap());
        let rhs = busemann_poisson(&xi, &o, &y) + busemann_poisson(&eta, &o, &y);
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn derivative_from_angle_values() {
    let t = 0.9;
    assert!((derivative_from_angle(t, 0.0) - t.exp()).abs() < 1e-12);
    assert!((derivative_from_angle(t, PI) - (-t).exp()).abs() < 1e-12);
    assert!((derivative_from_angle(LN_2, FRAC_PI_2) - 0.8).abs() < 1e-12);
    let y = DiskPoint::polar(LN_2, 0.0).unwrap();
    let b = busemann_poisson(&CirclePoint::new(FRAC_PI_2), &DiskPoint::origin(), &y);
    assert!((b.exp() - 0.8).abs() < 1e-12);
}

#[test]
fn geodesic_parametrization() {
    let g = GeodesicState::nearest_origin(CirclePoint::new(PI), CirclePoint::new(0.0)).unwrap();
    for t in [0.0, 0.5, 3.0, -2.0] {
        assert!((g.point_at(t).z() - C::new((t / 2.0).tanh(), 0.0)).norm() < 1e-14);
        assert!((g.flip().point_at(-t).z() - g.point_at(t).z()).norm() < 1e-14);
    }
}

#[test]
fn moebius_actions() {
    let rot = Moebius::rotation(0.7);
    assert!((CircleMap::apply(&rot, 1.0) - 1.7).abs() < 1e-14);
    let id = Moebius::identity();
    assert_eq!(id.apply(C::new(0.2, 0.3)), C::new(0.2, 0.3));
    let a = PI / 5.0;
    let ell = HalfPlaneMatrix::new(a.cos(), -a.sin(), a.sin(), a.cos()).unwrap();
    assert_eq!(classify_by_trace(&ell), MoebiusKind::Elliptic);
    assert_eq!(classify_by_trace(&HalfPlaneMatrix::new(1.0, 1.0, 0.0, 1.0).unwrap()), MoebiusKind::Parabolic);
    let hyp = HalfPlaneMatrix::new(0.5f64.exp(), 0.0, 0.0, (-0.5f64).exp()).unwrap();
    assert_eq!(classify_by_trace(&hyp), MoebiusKind::Hyperbolic);
    // The disk form moves the origin by the translation length.
    assert!((disk_distance(&DiskPoint::origin(), &hyp.to_disk().apply_point(&DiskPoint::origin())) - 1.0).abs() < 1e-12);
}

#[test]
fn visual_sup_matches_distance() {
    let x = DiskPoint::polar(1.5, 0.4).unwrap();
    let y = DiskPoint::polar(2.5, 2.9).unwrap();
    assert!((visual_dm(&x, &y, 4096) - disk_distance(&x, &y)).abs() < 1e-6);
}

#[test]
fn conformal_derivative_values() {
    let id = CircleDiffeo::identity();
    let r: f64 = 0.35;
    let xi = CirclePoint::new(0.0);
    assert!((conformal_derivative(&id, &p(r), &p(r), &xi) - 1.0).abs() < 1e-14);
    let v = conformal_derivative(&id, &DiskPoint::origin(), &p(r), &xi);
    assert!((v - (1.0 + r) / (1.0 - r)).abs() < 1e-12);
    // A Moebius map with y = m(0): derivatives at the ends of a diameter multiply to one.
    let m = Moebius::new(C::new(1.2, -0.3), C::new(0.4, 0.5)).unwrap();
    let y = m.apply_point(&DiskPoint::origin());
    for a in [0.2, 1.7, 4.0] {
        let prod = conformal_derivative(&m, &DiskPoint::origin(), &y, &CirclePoint::new(a))
            * conformal_derivative(&m, &DiskPoint::origin(), &y, &CirclePoint::new(a + PI));
        assert!((prod - 1.0).abs() < 1e-12);
    }
}

/// `log φ'` from symmetric difference quotients of `φ` alone.
fn dq_log_derivative(f: &dyn CircleMap, t: f64) -> f64 {
    let h = 1e-5;
    ((f.apply(t + h) - f.apply(t - h)) / (2.0 * h)).ln()
}

#[test]
fn schwarzian_against_difference_quotients() {
    let f = wobble();
    let (a, b) = (0.0, PI);
    let chord = |x: f64, y: f64| (C::from_polar(1.0, x) - C::from_polar(1.0, y)).norm().ln();
    let oracle = 2.0 * (chord(f.apply(a), f.apply(b)) - chord(a, b)) - dq_log_derivative(&f, a) - dq_log_derivative(&f, b);
    let s = integrated_schwarzian(&f, &CirclePoint::new(a), &CirclePoint::new(b)).unwrap();
    assert!((s - oracle).abs() < 1e-6, "{s} vs {oracle}");
    assert!(integrated_schwarzian(&CircleDiffeo::identity(), &CirclePoint::new(a), &CirclePoint::new(b)).unwrap().abs() < 1e-15);
}

#[test]
fn moebius_schwarzian_vanishes() {
    let mut rng = sample::rng(8);
    for _ in 0..50 {
        let m = sample::random_moebius(&mut rng, 2.5);
        let (a, b) = sample::random_pair(&mut rng, 0.1);
        assert!(integrated_schwarzian(&m, &CirclePoint::new(a), &CirclePoint::new(b)).unwrap().abs() < 1e-9);
    }
}

#[test]
fn conjugacy_examples() {
    let g = GeodesicState::nearest_origin(CirclePoint::new(0.5), CirclePoint::new(3.5)).unwrap().flow(0.8);
    let id = CircleDiffeo::identity();
    assert!(disk_distance(&conjugate_geodesic(&id, &g).unwrap().base, &g.base) < 1e-12);
    let m = Moebius::new(C::new(0.9, 0.4), C::new(-0.2, 0.6)).unwrap();
    let c = conjugate_geodesic(&m, &g).unwrap();
    assert!(disk_distance(&c.base, &m.apply_point(&g.base)) < 1e-9);
    let f = wobble();
    let mut rng = sample::rng(9);
    for _ in 0..20 {
        let (a, b) = sample::random_pair(&mut rng, 0.2);
        let g = GeodesicState::nearest_origin(CirclePoint::new(a), CirclePoint::new(b)).unwrap();
        let t = 1.3;
        let lhs = conjugate_geodesic(&f, &g.flow(t)).unwrap().base;
        let rhs = conjugate_geodesic(&f, &g).unwrap().flow(t).base;
        assert!(disk_distance(&lhs, &rhs) < 1e-9);
        assert!(flip_deviation(&f, &g).unwrap() < 1e-6);
        assert!(flip_deviation(&id, &g).unwrap() < 1e-12);
    }
}

#[test]
fn distortion_examples() {
    let q = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2].map(CirclePoint::new);
    let d = distortion(&wobble(), q).unwrap();
    assert!(d.residual() <= 1e-6);
    let m = Moebius::new(C::new(1.1, 0.2), C::new(0.3, -0.4)).unwrap();
    let dm = distortion(&m, q).unwrap();
    assert!(dm.lhs.abs() <= 1e-9 && dm.rhs.abs() <= 1e-9);
    let di = distortion(&CircleDiffeo::identity(), q).unwrap();
    assert_eq!((di.lhs, di.rhs), (0.0, 0.0));
}

#[test]
fn gmvt_examples() {
    let f = wobble();
    let s = schwarzian_sup(&f, 96).unwrap();
    let mut rng = sample::rng(10);
    for _ in 0..200 {
        let (x, y) = (sample::random_disk_point(&mut rng, 3.0), sample::random_disk_point(&mut rng, 3.0));
        let (a, b) = sample::random_pair(&mut rng, 0.05);
        assert!(conf_gmvt_check(&f, &x, &y, &CirclePoint::new(a), &CirclePoint::new(b), s).unwrap().holds);
    }
    let m = Moebius::new(C::new(1.3, 0.1), C::new(0.2, 0.7)).unwrap();
    let v = conf_gmvt_check(&m, &p(0.2), &p(-0.5), &CirclePoint::new(1.0), &CirclePoint::new(2.0), 0.0).unwrap();
    assert!(v.log_ratio.abs() < 1e-8);
}

#[test]
fn cocycle_examples() {
    let f = wobble();
    let g = CircleDiffeo::simple(2, 0.1).unwrap();
    let inv = Inverse(&f);
    let m1 = Moebius::new(C::new(1.3, 0.1), C::new(0.2, 0.7)).unwrap();
    let m2 = Moebius::new(C::new(0.8, -0.5), C::new(0.1, 0.2)).unwrap();
    let mut rng = sample::rng(11);
    for _ in 0..30 {
        let (a, b) = sample::random_pair(&mut rng, 0.1);
        let (xi, eta) = (CirclePoint::new(a), CirclePoint::new(b));
        assert!(cocycle_residual(&f, &g, &xi, &eta).unwrap() <= 1e-7);
        assert!(cocycle_residual(&f, &inv, &xi, &eta).unwrap() <= 1e-7);
        assert!(cocycle_residual(&m1, &m2, &xi, &eta).unwrap() <= 1e-9);
    }
}

#[test]
fn distance_difference_profile() {
    let f = wobble();
    let (xi, eta) = (CirclePoint::new(0.0), CirclePoint::new(PI));
    let o = DiskPoint::origin();
    let s = integrated_schwarzian(&f, &xi, &eta).unwrap();
    let prof = distance_diff_profile(&f, &o, &xi, &eta, &[15.0]).unwrap();
    assert!((prof[0] - s).abs() <= 1e-4);
    let id = CircleDiffeo::identity();
    assert!(distance_diff_profile(&id, &o, &xi, &eta, &[0.0, 5.0, 15.0]).unwrap().iter().all(|v| v.abs() < 1e-9));
    let m = Moebius::new(C::new(1.3, 0.1), C::new(0.2, 0.7)).unwrap();
    let pm = distance_diff_profile(&m, &p(0.3), &xi, &eta, &[2.0, 10.0, 15.0]).unwrap();
    assert!(pm.iter().all(|v| v.abs() < 1e-6), "{pm:?}");
}

#[test]
fn asymptotic_examples() {
    let g = GeodesicState::nearest_origin(CirclePoint::new(2.0), CirclePoint::new(0.3)).unwrap();
    let f = wobble();
    let same: Vec<AsymptoticStep> = [1.0, 4.0].iter().map(|&t| AsymptoticStep { t, tail: g.tail }).collect();
    assert!(asymptotic_terms(&f, &g, &same).unwrap().iter().all(|&(a, b)| a < 1e-9 && b < 1e-9));
    let schedule: Vec<(f64, f64)> = (1..=8).map(|n| (1.5 * n as f64, 10f64.powf(-(n as f64) / 2.0))).collect();
    let id = forward_asymptotic_decay(&CircleDiffeo::identity(), &g, &schedule).unwrap();
    assert!(id.windows(2).all(|w| w[1] < w[0]));
    let terms = forward_asymptotic_decay(&f, &g, &schedule).unwrap();
    assert!(*terms.last().unwrap() <= 1e-3, "{terms:?}");
}

#[test]
fn backward_term_follows_the_schwarzian_change() {
    let f = wobble();
    let g = GeodesicState::nearest_origin(CirclePoint::new(2.0), CirclePoint::new(0.3)).unwrap();
    for n in 6..=8 {
        let (t, eps) = (1.5 * n as f64, 10f64.powf(-(n as f64) / 2.0));
        let step = AsymptoticStep { t, tail: CirclePoint::new(g.tail.theta() + eps) };
        let (_, bwd) = asymptotic_terms(&f, &g, &[step]).unwrap()[0];
        let level = (integrated_schwarzian(&f, &step.tail, &g.head).unwrap()
            - integrated_schwarzian(&f, &g.tail, &g.head).unwrap())
        .abs();
        assert!((bwd / level - 1.0).abs() < 0.05, "{bwd} vs {level}");
    }
}
