//! Seeded generators for trees, boundary metrics, circle maps and matrices.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::{self, LogMetric};
use crate::disk::{DiskPoint, HalfPlaneMatrix, Moebius, MoebiusKind};
use crate::disk_metric::{antipodal_correction, spot_check, DiskMetric, TrigSeries};
use crate::error::{Error, Result};
use crate::rational::{ratio, Rational};
use crate::schwarzian::{CircleDiffeo, Term};
use crate::tree::{Segment, TreePoint, TreeSpace};

/// The generator used by every suite.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree with between `min_ends` and `max_ends` ends (more if the core needs them).
pub fn random_tree(rng: &mut impl Rng, min_ends: usize, max_ends: usize) -> TreeSpace {
    let m = rng.gen_range(1..=4usize);
    let vertices: Vec<String> = (0..m).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    let mut degree = vec![0usize; m];
    for i in 1..m {
        let p = rng.gen_range(0..i);
        let q = rng.gen_range(1..=4i64);
        edges.push((p, i, ratio(rng.gen_range(1..=3 * q), q)));
        degree[p] += 1;
        degree[i] += 1;
    }
    let mut attach = Vec::new();
    for (v, d) in degree.iter().enumerate() {
        for _ in *d..2 {
            attach.push(v);
        }
    }
    let target = rng.gen_range(min_ends..=max_ends.max(min_ends)).max(4);
    while attach.len() < target {
        attach.push(rng.gen_range(0..m));
    }
    let ends = attach.into_iter().enumerate().map(|(k, v)| (v, format!("e{}", k + 1))).collect();
    TreeSpace::new(vertices, edges, ends).expect("generated tree is valid")
}

/// Random point with small rational offsets.
pub fn random_tree_point(rng: &mut impl Rng, t: &TreeSpace) -> TreePoint {
    let ne = t.edges().len();
    let k = rng.gen_range(0..ne + t.rays().len());
    let q = rng.gen_range(1..=4i64);
    if k < ne {
        let p = rng.gen_range(0..=q);
        let off = ratio(p, q) * &t.edges()[k].length;
        t.point(Segment::Edge(k), off).expect("offset within edge")
    } else {
        let p = rng.gen_range(0..=4 * q);
        t.point(Segment::Ray(k - ne), ratio(p, q)).expect("offset on ray")
    }
}

/// How an isometric copy relabels a tree: vertex `v` becomes `vertex[v]`,
/// edge `e` keeps its index and is reversed when `flipped[e]`, end `k` becomes `ends[k]`.
#[derive(Clone, Debug)]
pub struct Relabeling {
    pub vertex: Vec<usize>,
    pub flipped: Vec<bool>,
    pub ends: Vec<usize>,
}

/// An isometric copy of `t` with shuffled vertices, ends and edge orientations.
pub fn isometric_copy(rng: &mut impl Rng, t: &TreeSpace) -> (TreeSpace, Relabeling) {
    let nv = t.vertices().len();
    let mut vertex: Vec<usize> = (0..nv).collect();
    vertex.shuffle(rng);
    let mut names = vec![String::new(); nv];
    for v in 0..nv {
        names[vertex[v]] = format!("w{v}");
    }
    let flipped: Vec<bool> = t.edges().iter().map(|_| rng.gen_bool(0.5)).collect();
    let edges = t
        .edges()
        .iter()
        .zip(&flipped)
        .map(|(e, &fl)| {
            let (u, v) = if fl { (e.v, e.u) } else { (e.u, e.v) };
            (vertex[u], vertex[v], e.length.clone())
        })
        .collect();
    let n = t.rays().len();
    let mut ends: Vec<usize> = (0..n).collect();
    ends.shuffle(rng);
    let mut rays = vec![(0, String::new()); n];
    for k in 0..n {
        rays[ends[k]] = (vertex[t.rays()[k].attach], format!("z{k}"));
    }
    let copy = TreeSpace::new(names, edges, rays).expect("copy of a valid tree");
    (copy, Relabeling { vertex, flipped, ends })
}

/// A metric in the visual class of `t`, built as a conformal scaling of the
/// base visual metric and validated; returns it with the number of rejected candidates.
pub fn random_tree_member(rng: &mut impl Rng, t: &TreeSpace) -> (LogMetric, usize) {
    let x0 = t.base_point();
    let base = t.visual_log_metric(&x0).expect("valid base point");
    let mut rejected = 0;
    loop {
        let y = random_tree_point(rng, t);
        let mut logf: Vec<Rational> =
            (0..t.rays().len()).map(|k| t.busemann(k, &x0, &y).expect("valid end")).collect();
        if rng.gen_bool(0.5) {
            let k = rng.gen_range(0..logf.len());
            logf[k] += ratio(rng.gen_range(-2..=2), rng.gen_range(1..=3));
        }
        let cand = base.conformal_scale(&logf).expect("length matches");
        match boundary::validate_membership_auto(&cand, &base, boundary::DEFAULT_PRECISION) {
            Ok(m) if m.is_member() => return (cand, rejected),
            _ => rejected += 1,
        }
    }
}

/// Diffeo with up to four harmonics and `Σ k|a_k| ≤ max_sum`.
pub fn random_diffeo(rng: &mut impl Rng, max_sum: f64) -> CircleDiffeo {
    let count = rng.gen_range(1..=4usize);
    let mut terms: Vec<Term> = (0..count)
        .map(|_| Term { k: rng.gen_range(1..=4), a: rng.gen_range(-1.0..1.0), phi: rng.gen_range(0.0..TAU) })
        .collect();
    let s: f64 = terms.iter().map(|t| t.k as f64 * t.a.abs()).sum();
    let scale = rng.gen_range(0.3..1.0) * max_sum / s.max(1e-12);
    for t in &mut terms {
        t.a *= scale;
    }
    CircleDiffeo::new(terms).expect("coefficients within bound")
}

/// Five fixed diffeos with `Σ k|a_k| ≤ 0.3`.
pub fn test_diffeos() -> Vec<CircleDiffeo> {
    let t = |k, a, phi| Term { k, a, phi };
    [
        vec![t(1, 0.3, 0.0)],
        vec![t(2, 0.15, 1.0)],
        vec![t(3, 0.1, -0.5)],
        vec![t(1, 0.1, 0.3), t(2, 0.05, 2.0), t(4, 0.025, -1.2)],
        vec![t(1, -0.2, 2.5), t(3, 0.03, 0.7)],
    ]
    .into_iter()
    .map(|terms| CircleDiffeo::new(terms).expect("coefficients within bound"))
    .collect()
}

/// Point at hyperbolic distance at most `max_radius` from the origin.
pub fn random_disk_point(rng: &mut impl Rng, max_radius: f64) -> DiskPoint {
    let r = max_radius * rng.gen::<f64>().sqrt();
    DiskPoint::polar(r, rng.gen_range(0.0..TAU)).expect("radius is finite")
}

/// Rotation followed by a translation of length at most `max_shift`.
pub fn random_moebius(rng: &mut impl Rng, max_shift: f64) -> Moebius {
    let p = random_disk_point(rng, max_shift);
    Moebius::translation_to(&p).compose(&Moebius::rotation(rng.gen_range(0.0..TAU)))
}

/// Boundary angle.
pub fn random_angle(rng: &mut impl Rng) -> f64 {
    rng.gen_range(0.0..TAU)
}

/// Elliptic or hyperbolic matrix in half-plane form: a rotation by at least
/// `0.25` or a translation of length at least `0.25`, conjugated by an
/// isometry moving `i` by at most `1.5`, with a random overall sign.
pub fn random_matrix(rng: &mut impl Rng) -> (HalfPlaneMatrix, MoebiusKind) {
    let kind = if rng.gen_bool(0.5) { MoebiusKind::Elliptic } else { MoebiusKind::Hyperbolic };
    let core = match kind {
        MoebiusKind::Elliptic => {
            let a: f64 = rng.gen_range(0.25..TAU - 0.25) / 2.0;
            HalfPlaneMatrix { a: a.cos(), b: -a.sin(), c: a.sin(), d: a.cos() }
        }
        _ => {
            let l: f64 = rng.gen_range(0.25..3.0) / 2.0;
            HalfPlaneMatrix { a: l.exp(), b: 0.0, c: 0.0, d: (-l).exp() }
        }
    };
    let g = random_moebius(rng, 1.5).to_halfplane();
    let mut m = g.compose(&core).compose(&g.inverse());
    if rng.gen_bool(0.5) {
        m = HalfPlaneMatrix { a: -m.a, b: -m.b, c: -m.c, d: -m.d };
    }
    (m, kind)
}

/// Exactly parabolic integer matrices (trace `±2`).
pub fn parabolic_instances() -> Vec<HalfPlaneMatrix> {
    [
        (1.0, 1.0, 0.0, 1.0),
        (1.0, -2.0, 0.0, 1.0),
        (1.0, 0.0, 1.0, 1.0),
        (1.0, 0.0, -3.0, 1.0),
        (-1.0, 1.0, 0.0, -1.0),
        (2.0, -1.0, 1.0, 0.0),
        (0.0, 1.0, -1.0, 2.0),
        (3.0, -4.0, 1.0, -1.0),
    ]
    .into_iter()
    .map(|(a, b, c, d)| HalfPlaneMatrix { a, b, c, d })
    .collect()
}

/// Outcome of sampling an admissible disk metric.
#[derive(Clone, Debug)]
pub struct AdmissibleSample {
    pub metric: DiskMetric,
    /// Candidates drawn, including the accepted one.
    pub attempts: usize,
    pub antipodal_residual: f64,
    pub triangle_residual: f64,
}

/// Draws an antipodally odd perturbation of the chordal log-factor, corrects
/// it toward a fixed point of the antipodal transform on a grid of `grid`
/// points, interpolates, moves it by a random Moebius map, and accepts it if
/// the spot checks pass.
pub fn random_admissible_disk_metric(rng: &mut impl Rng, grid: usize, max_shift: f64) -> Result<AdmissibleSample> {
    for attempt in 1..=50 {
        // Keeping Σ k²|a_k| below 1/2 keeps the corrected factor smooth.
        let (a1, p1): (f64, f64) = (rng.gen_range(-0.3..0.3), rng.gen_range(0.0..TAU));
        let b3 = (0.45 - a1.abs()) / 9.0;
        let (a3, p3): (f64, f64) = (rng.gen_range(-b3..b3), rng.gen_range(0.0..TAU));
        let b5 = (0.45 - a1.abs() - 9.0 * a3.abs()) / 25.0;
        let (a5, p5): (f64, f64) = (rng.gen_range(-b5..=b5), rng.gen_range(0.0..TAU));
        let values: Vec<f64> = (0..grid)
            .map(|j| {
                let t = TAU * j as f64 / grid as f64;
                a1 * (t + p1).cos() + a3 * (3.0 * t + p3).cos() + a5 * (5.0 * t + p5).cos()
            })
            .collect();
        let (l, err) = antipodal_correction(&values, 2000, 1e-12);
        if err > 1e-6 {
            continue;
        }
        let mut metric = DiskMetric::Sampled(Arc::new(TrigSeries::interpolate(&l)?));
        if max_shift > 0.0 {
            metric = metric.pushforward(Arc::new(random_moebius(rng, max_shift)));
        }
        let rows: Vec<f64> = (0..16).map(|_| random_angle(rng)).collect();
        let pts: Vec<f64> = (0..9).map(|_| random_angle(rng)).collect();
        let check = spot_check(&metric, &rows, &pts, 2048);
        if check.passes(1e-6, 1e-8) {
            return Ok(AdmissibleSample {
                metric,
                attempts: attempt,
                antipodal_residual: check.antipodal,
                triangle_residual: check.triangle,
            });
        }
    }
    Err(Error::NotConverged("no admissible metric accepted in 50 attempts".into()))
}

/// Well-conditioned quadruple: pairwise chordal distances at least `0.05`.
pub fn random_quad(rng: &mut impl Rng) -> [f64; 4] {
    loop {
        let q = [0; 4].map(|_| random_angle(rng));
        let ok = (0..4).all(|i| (i + 1..4).all(|j| (2.0 * ((q[i] - q[j]) / 2.0).sin()).abs() >= 0.05));
        if ok {
            return q;
        }
    }
}

/// Pair of boundary angles at angular distance at least `min_sep`.
pub fn random_pair(rng: &mut impl Rng, min_sep: f64) -> (f64, f64) {
    let a = random_angle(rng);
    let b = a + rng.gen_range(min_sep..TAU - min_sep);
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_trees_are_valid() {
        let mut rng = rng(1);
        for _ in 0..30 {
            let t = random_tree(&mut rng, 4, 8);
            assert!(t.rays().len() >= 4);
            let back = TreeSpace::parse(&t.to_text()).unwrap();
            assert_eq!(back.to_text(), t.to_text());
        }
    }

    #[test]
    fn matrices_stay_outside_band() {
        let mut rng = rng(2);
        for _ in 0..200 {
            let (m, kind) = random_matrix(&mut rng);
            assert!(((m.trace().abs()) - 2.0).abs() > 1e-3);
            assert_eq!(crate::disk::classify_by_trace(&m), kind);
        }
    }

    #[test]
    fn admissible_sample_accepts() {
        let mut rng = rng(3);
        let s = random_admissible_disk_metric(&mut rng, 4096, 2.0).unwrap();
        assert!(s.antipodal_residual <= 1e-6);
    }
}
