//! Elliptic, parabolic and hyperbolic Moebius self-maps, told apart by the
//! orbit of a basepoint under the induced isometries.

use num_complex::Complex64 as C;

use crate::disk::{cayley, cayley_inverse, golden_max, wrap, CircleMap, HalfPlaneMatrix, Moebius, MoebiusKind};
use crate::error::{domain, Error, Result};
use crate::tree::{TreePoint, TreeSpace};

/// Half-plane distance.
pub fn halfplane_distance(w1: C, w2: C) -> f64 {
    2.0 * ((w1 - w2).norm() / (2.0 * (w1.im * w2.im).sqrt())).asinh()
}

#[derive(Clone, Debug)]
pub enum OrbitPoints {
    HalfPlane(Vec<C>),
    Tree(Vec<TreePoint>),
}

/// `F_n(x)` for `n = −N ..= N` with the derived summaries.
#[derive(Clone, Debug)]
pub struct OrbitRecord {
    pub horizon: usize,
    pub points: OrbitPoints,
    /// `d(x, F_n x)`, indexed by `n + N`.
    pub displacements: Vec<f64>,
    pub diameter: f64,
    /// Largest `d(F_{n+1} x, F_1(F_n x))`.
    pub step_defect: f64,
    /// Boundary direction of each orbit point seen from `x`, as an angle in
    /// the disk frame centered at `x` (half-plane orbits only).
    pub directions: Option<Vec<f64>>,
    /// The map written in the disk frame centered at `x`.
    pub frame_map: Option<Moebius>,
}

impl OrbitRecord {
    pub fn point_count(&self) -> usize {
        2 * self.horizon + 1
    }
}

/// Real affine isometry of the half-plane taking `x` to `i`, as a matrix.
fn normalizer(x: C) -> HalfPlaneMatrix {
    let s = x.im.sqrt();
    HalfPlaneMatrix { a: 1.0 / s, b: -x.re / s, c: 0.0, d: s }
}

/// Orbit of the half-plane point `x` under the powers of `m`.
pub fn orbit_halfplane(m: &HalfPlaneMatrix, x: C, horizon: usize) -> Result<OrbitRecord> {
    if !(x.im > 0.0) {
        return domain("basepoint must lie in the upper half-plane");
    }
    let n = horizon;
    let inv = m.inverse();
    let mut pts = vec![x; 2 * n + 1];
    for k in 1..=n {
        pts[n + k] = m.apply(pts[n + k - 1]);
        pts[n - k] = inv.apply(pts[n - k + 1]);
    }
    let displacements: Vec<f64> = pts.iter().map(|p| halfplane_distance(x, *p)).collect();
    let mut diameter: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            diameter = diameter.max(halfplane_distance(pts[i], pts[j]));
        }
    }
    let step_defect = (0..pts.len() - 1)
        .map(|k| halfplane_distance(pts[k + 1], m.apply(pts[k])))
        .fold(0.0, f64::max);
    let a = normalizer(x);
    let directions = pts
        .iter()
        .map(|p| {
            let z = cayley(a.apply(*p));
            if z.norm() == 0.0 {
                0.0
            } else {
                z.arg()
            }
        })
        .collect();
    let frame_map = a.compose(m).compose(&a.inverse()).to_disk();
    Ok(OrbitRecord {
        horizon: n,
        points: OrbitPoints::HalfPlane(pts),
        displacements,
        diameter,
        step_defect,
        directions: Some(directions),
        frame_map: Some(frame_map),
    })
}

fn compose_perm(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&i| a[i]).collect()
}

/// Orbit of `x` under the isometries induced by the powers of an end permutation.
pub fn orbit_tree(t: &TreeSpace, perm: &[usize], x: &TreePoint, horizon: usize) -> Result<OrbitRecord> {
    let ext = t.moebius_extend(t, perm)?;
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let n = horizon;
    let mut pts = vec![x.clone(); 2 * n + 1];
    let (mut fwd, mut bwd): (Vec<usize>, Vec<usize>) = ((0..perm.len()).collect(), (0..perm.len()).collect());
    for k in 1..=n {
        fwd = compose_perm(perm, &fwd);
        bwd = compose_perm(&inv, &bwd);
        pts[n + k] = t.moebius_extend(t, &fwd)?.apply(x)?;
        pts[n - k] = t.moebius_extend(t, &bwd)?.apply(x)?;
    }
    let d = |a: &TreePoint, b: &TreePoint| t.distance(a, b).map(|r| crate::rational::to_f64(&r));
    let displacements = pts.iter().map(|p| d(x, p)).collect::<Result<Vec<_>>>()?;
    let mut diameter: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            diameter = diameter.max(d(&pts[i], &pts[j])?);
        }
    }
    let mut step_defect: f64 = 0.0;
    for k in 0..pts.len() - 1 {
        step_defect = step_defect.max(d(&pts[k + 1], &ext.apply(&pts[k])?)?);
    }
    Ok(OrbitRecord {
        horizon: n,
        points: OrbitPoints::Tree(pts),
        displacements,
        diameter,
        step_defect,
        directions: None,
        frame_map: None,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyParams {
    pub radius_threshold: f64,
    pub cluster_tol: f64,
    /// Largest `max_{|n|≤N} sinh(d_n/2) / max_{|n|≤N/2} sinh(d_n/2)` still read as bounded.
    pub bounded_ratio: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams { radius_threshold: 10.0, cluster_tol: 0.05, bounded_ratio: 1.7 }
    }
}

/// Boundary fixed points are angles in the disk frame centered at the basepoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Classification {
    Elliptic,
    Parabolic { fixed: f64 },
    Hyperbolic { attracting: f64, repelling: f64 },
}

impl Classification {
    pub fn kind(&self) -> MoebiusKind {
        match self {
            Classification::Elliptic => MoebiusKind::Elliptic,
            Classification::Parabolic { .. } => MoebiusKind::Parabolic,
            Classification::Hyperbolic { .. } => MoebiusKind::Hyperbolic,
        }
    }
}

/// Visual distance from the basepoint between two directions.
fn visual(a: f64, b: f64) -> f64 {
    (wrap(a - b) / 2.0).sin().abs()
}

/// Refines a cluster direction to a nearby fixed point of `f`.
pub fn refine_fixed_point(f: &dyn CircleMap, guess: f64, radius: f64) -> f64 {
    let g = |t: f64| -wrap(f.apply(t) - t).abs();
    golden_max(&g, guess - radius, guess + radius).0
}

pub fn classify(record: &OrbitRecord, params: &ClassifyParams) -> Result<Classification> {
    let n = record.horizon;
    if n < 2 {
        return domain("horizon must be at least 2");
    }
    let s: Vec<f64> = record.displacements.iter().map(|d| (d / 2.0).sinh()).collect();
    let half = n / 2;
    let s_half = (n - half..=n + half).map(|k| s[k]).fold(0.0, f64::max);
    let s_full = s.iter().copied().fold(0.0, f64::max);
    let bounded = s_full == 0.0 || (s_half > 0.0 && s_full / s_half <= params.bounded_ratio);
    if record.diameter < params.radius_threshold && bounded {
        return Ok(Classification::Elliptic);
    }
    let dirs = match &record.directions {
        Some(d) => d,
        None => return Err(Error::Ambiguous("unbounded orbit without boundary directions; raise N".into())),
    };
    let (fwd, fwd_half, bwd, bwd_half) = (dirs[2 * n], dirs[n + half], dirs[0], dirs[n - half]);
    if visual(fwd, fwd_half) > params.cluster_tol || visual(bwd, bwd_half) > params.cluster_tol {
        return Err(Error::Ambiguous("boundary directions have not settled; raise N".into()));
    }
    let (plus, minus) = match &record.frame_map {
        Some(m) => {
            let sep = visual(fwd, bwd);
            let r = (sep / 2.0).clamp(1e-3, 0.3);
            (refine_fixed_point(m, fwd, r), refine_fixed_point(m, bwd, r))
        }
        None => (fwd, bwd),
    };
    let sep = visual(plus, minus);
    if sep <= params.cluster_tol {
        Ok(Classification::Parabolic { fixed: crate::disk::normalize_angle(plus + 0.5 * wrap(minus - plus)) })
    } else if sep > 2.0 * params.cluster_tol {
        Ok(Classification::Hyperbolic {
            attracting: crate::disk::normalize_angle(plus),
            repelling: crate::disk::normalize_angle(minus),
        })
    } else {
        Err(Error::Ambiguous(format!("cluster separation {sep} between one and two clusters; raise N")))
    }
}

/// Result of classifying a half-plane matrix from its orbit.
#[derive(Clone, Debug)]
pub struct MatrixReport {
    pub classification: Classification,
    pub record: OrbitRecord,
    /// Largest `|f(ξ) − ξ|` over the reported boundary fixed points.
    pub fixed_point_residual: f64,
}

/// Width of the trace band around `±2` that is routed to "undecided".
pub const PARABOLIC_BAND: f64 = 1e-3;

/// Classifies `m` from the orbit of `x`; near-parabolic matrices whose trace
/// is not exactly `±2` are reported as undecided.
pub fn classify_matrix(m: &HalfPlaneMatrix, x: C, horizon: usize, params: &ClassifyParams) -> Result<MatrixReport> {
    let t = m.trace().abs();
    if (t - 2.0).abs() <= PARABOLIC_BAND && t != 2.0 {
        return Err(Error::Ambiguous(format!("trace {} is within {PARABOLIC_BAND} of 2", m.trace())));
    }
    let record = orbit_halfplane(m, x, horizon)?;
    let classification = classify(&record, params)?;
    let fm = record.frame_map.unwrap_or_else(Moebius::identity);
    let res = |a: f64| wrap(CircleMap::apply(&fm, a) - a).abs();
    let fixed_point_residual = match classification {
        Classification::Elliptic => 0.0,
        Classification::Parabolic { fixed } => res(fixed),
        Classification::Hyperbolic { attracting, repelling } => res(attracting).max(res(repelling)),
    };
    Ok(MatrixReport { classification, record, fixed_point_residual })
}

/// A frame angle converted back to the half-plane boundary (`None` for `∞`).
pub fn frame_angle_to_halfplane(x: C, theta: f64) -> Option<f64> {
    let z = C::from_polar(1.0, theta);
    if (z - C::new(1.0, 0.0)).norm() < 1e-15 {
        return None;
    }
    let w = normalizer(x).inverse().apply(cayley_inverse(z));
    Some(w.re)
}

/// `f^n(θ)` iterated on the circle.
pub fn boundary_iterate(f: &dyn CircleMap, theta: f64, n: i64) -> f64 {
    let mut t = theta;
    for _ in 0..n.unsigned_abs() {
        t = if n > 0 { f.apply(t) } else { f.apply_inverse(t) };
    }
    crate::disk::normalize_angle(t)
}

/// `max_{n, pairs} |log(ρ_x(fⁿξ, fⁿη) / ρ_x(ξ, η))|` for the frame map.
pub fn elliptic_distortion(record: &OrbitRecord, samples: &[(f64, f64)]) -> f64 {
    let fm = match record.frame_map {
        Some(m) => m,
        None => return 0.0,
    };
    let mut worst: f64 = 0.0;
    for &(a, b) in samples {
        let (mut fa, mut fb) = (a, b);
        let base = visual(a, b).ln();
        for _ in 0..record.horizon {
            fa = CircleMap::apply(&fm, fa);
            fb = CircleMap::apply(&fm, fb);
            worst = worst.max((visual(fa, fb).ln() - base).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn run(a: f64, b: f64, c: f64, d: f64) -> MatrixReport {
        let m = HalfPlaneMatrix::new(a, b, c, d).unwrap();
        classify_matrix(&m, C::new(0.0, 1.0), 50, &ClassifyParams::default()).unwrap()
    }

    #[test]
    fn rotation_is_elliptic() {
        let a = PI / 10.0;
        let r = run(a.cos(), -a.sin(), a.sin(), a.cos());
        assert_eq!(r.classification, Classification::Elliptic);
        assert!(r.record.diameter < 1e-12);
    }

    #[test]
    fn translation_is_parabolic() {
        let r = run(1.0, 1.0, 0.0, 1.0);
        match r.classification {
            Classification::Parabolic { fixed } => {
                assert!(wrap(fixed).abs() < 1e-6);
                assert_eq!(frame_angle_to_halfplane(C::new(0.0, 1.0), fixed), None);
            }
            other => panic!("{other:?}"),
        }
        assert!(r.fixed_point_residual < 1e-6);
    }

    #[test]
    fn diagonal_is_hyperbolic() {
        let r = run(0.5f64.exp(), 0.0, 0.0, (-0.5f64).exp());
        match r.classification {
            Classification::Hyperbolic { attracting, repelling } => {
                // Expanding toward ∞ (angle 0) and contracting toward 0 (angle π).
                assert!(wrap(attracting).abs() < 1e-6);
                assert!(wrap(repelling - PI).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        for (k, d) in r.record.displacements.iter().enumerate() {
            assert!((d - (k as f64 - 50.0).abs()).abs() < 1e-6);
        }
    }

    #[test]
    fn near_parabolic_band_is_undecided() {
        let m = HalfPlaneMatrix::new(1.0005, 0.0, 0.0, 1.0 / 1.0005).unwrap();
        assert!(matches!(
            classify_matrix(&m, C::new(0.0, 1.0), 50, &ClassifyParams::default()),
            Err(Error::Ambiguous(_))
        ));
    }

    #[test]
    fn tree_permutation_orbit_is_bounded() {
        let t = TreeSpace::parse("tree v1\nVERTEX c\nEND a AT c\nEND b AT c\nEND d AT c\nEND e AT c\n").unwrap();
        let x = t.ray_point(0, crate::rational::int(2)).unwrap();
        let rec = orbit_tree(&t, &[1, 2, 0, 3], &x, 12).unwrap();
        assert_eq!(classify(&rec, &ClassifyParams::default()).unwrap(), Classification::Elliptic);
        assert_eq!(rec.diameter, 4.0);
        assert_eq!(rec.step_defect, 0.0);
    }
}
