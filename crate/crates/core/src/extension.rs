//! The embedding `x ↦ ρ_x`, pushforward of boundary metrics, nearest-point
//! projection back to the space, and the induced extension `F = π ∘ f̂ ∘ i`.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64 as C;
use num_traits::Zero;

use crate::boundary::{self, LogMetric};
use crate::disk::{self, circle_sup, disk_distance, poisson, ray_endpoint, CircleMap, CirclePoint, DiskPoint, GeodesicState, Moebius};
use crate::disk_metric::{moebius_witness, probe_quads, DiskMetric};
use crate::error::{domain, Error, Result};
use crate::rational::Rational;
use crate::tree::{Segment, TreePoint, TreeSpace};

/// Which model space a point or metric belongs to.
#[derive(Clone, Copy)]
pub enum Model<'a> {
    Tree(&'a TreeSpace),
    Disk,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelPoint {
    Tree(TreePoint),
    Disk(DiskPoint),
}

#[derive(Clone, Debug)]
pub enum MetricPointRepr {
    Tree(LogMetric),
    Disk(DiskMetric),
}

/// A boundary map: a bijection of tree ends or a circle map.
#[derive(Clone)]
pub enum BoundaryMap {
    Ends(Vec<usize>),
    Circle(Arc<dyn CircleMap + Send + Sync>),
}

/// `i_X(x) = ρ_x`.
pub fn embed_point(model: Model<'_>, x: &ModelPoint) -> Result<MetricPointRepr> {
    match (model, x) {
        (Model::Tree(t), ModelPoint::Tree(p)) => Ok(MetricPointRepr::Tree(t.visual_log_metric(p)?)),
        (Model::Disk, ModelPoint::Disk(p)) => Ok(MetricPointRepr::Disk(DiskMetric::Visual(*p))),
        _ => domain("point does not belong to the model"),
    }
}

/// `f̂ρ`, after checking that `f` preserves cross-ratios.
pub fn pushforward(target: Model<'_>, f: &BoundaryMap, rho: &MetricPointRepr) -> Result<MetricPointRepr> {
    match (target, f, rho) {
        (Model::Tree(t), BoundaryMap::Ends(perm), MetricPointRepr::Tree(r)) => {
            let pushed = r.pushforward(t.boundary().clone(), perm)?;
            let reference = t.visual_log_metric(&t.base_point())?;
            if let Some(q) = boundary::cross_ratio_witness(&pushed, &reference) {
                return Err(Error::NotMoebius {
                    witness: q.iter().map(|&i| t.boundary().label(i).to_string()).collect(),
                    detail: "end map does not preserve cross-ratios".into(),
                });
            }
            Ok(MetricPointRepr::Tree(pushed))
        }
        (Model::Disk, BoundaryMap::Circle(m), MetricPointRepr::Disk(r)) => {
            if let Some(q) = moebius_witness(m.as_ref(), &probe_quads(24), 1e-9) {
                return Err(Error::NotMoebius {
                    witness: q.iter().map(|t| format!("{t}")).collect(),
                    detail: "circle map does not preserve cross-ratios".into(),
                });
            }
            Ok(MetricPointRepr::Disk(r.clone().pushforward(m.clone())))
        }
        _ => domain("boundary map does not match the model"),
    }
}

/// Nearest point and gap. Trees are exact; the disk uses minimax descent.
pub fn project(model: Model<'_>, rho: &MetricPointRepr) -> Result<(ModelPoint, f64)> {
    match (model, rho) {
        (Model::Tree(t), MetricPointRepr::Tree(r)) => {
            let (p, gap) = t.project_metric(r, boundary::DEFAULT_PRECISION)?;
            Ok((ModelPoint::Tree(p), crate::rational::to_f64(&gap)))
        }
        (Model::Disk, MetricPointRepr::Disk(r)) => {
            let p = project_disk(r, Objective::OneSided, &DescentOptions::default())?;
            Ok((ModelPoint::Disk(p.point), p.gap))
        }
        _ => domain("metric does not belong to the model"),
    }
}

/// What the disk projection minimizes over `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// `sup (ℓ − log P(y, ·))`, which is `d_M(ρ_y, ρ)` for members of `M`.
    OneSided,
    /// `sup |ℓ − log P(y, ·)|`, the conformal distance.
    Absolute,
}

#[derive(Clone, Copy, Debug)]
pub struct DescentOptions {
    /// Frame-uniform samples used by the inner search.
    pub samples: usize,
    /// Grid size of the final sup evaluation.
    pub sup_samples: usize,
    pub min_step: f64,
    pub max_outer: usize,
    /// Outer loop stops once an outer step improves the objective by less than this.
    pub improvement_tol: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions { samples: 1024, sup_samples: 4096, min_step: 1e-10, max_outer: 60, improvement_tol: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DiskProjection {
    pub point: DiskPoint,
    pub gap: f64,
    pub outer_iterations: usize,
}

fn objective_value(rho: &DiskMetric, y: &DiskPoint, obj: Objective, samples: usize) -> f64 {
    let frame = Moebius::translation_to(y);
    let f = |t: f64| rho.log_factor(t) - poisson(y, C::from_polar(1.0, t)).ln();
    match obj {
        Objective::OneSided => circle_sup(f, &frame, samples).1,
        Objective::Absolute => circle_sup(|t| f(t).abs(), &frame, samples).1,
    }
}

/// Minimizes the objective over the disk. Each outer step recenters at the
/// current point, freezes the samples of `ℓ`, and runs a pattern search on
/// the sampled max.
pub fn project_disk(rho: &DiskMetric, obj: Objective, opts: &DescentOptions) -> Result<DiskProjection> {
    let n = opts.samples.max(64);
    let mut c = rho.peak_point();
    let mut last = f64::INFINITY;
    for outer in 1..=opts.max_outer {
        let m = Moebius::translation_to(&c);
        let zeta: Vec<C> = (0..n).map(|j| C::from_polar(1.0, TAU * j as f64 / n as f64)).collect();
        let g: Vec<f64> = (0..n)
            .map(|j| {
                let phi = TAU * j as f64 / n as f64;
                rho.log_factor(CircleMap::apply(&m, phi)) + CircleMap::derivative(&m, phi).ln()
            })
            .collect();
        let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = g.iter().map(|v| (v - gmax).exp()).collect();
        let psi = |w: C| -> (f64, usize) {
            let (mut hi, mut lo, mut arg) = (0.0f64, f64::INFINITY, 0);
            for j in 0..n {
                let v = e[j] * (w - zeta[j]).norm_sqr();
                if v > hi {
                    hi = v;
                    arg = j;
                }
                lo = lo.min(v);
            }
            let l = (1.0 - w.norm_sqr()).ln();
            let up = gmax + hi.ln() - l;
            match obj {
                Objective::OneSided => (up, arg),
                Objective::Absolute => (up.max(-(gmax + lo.ln() - l)), arg),
            }
        };
        let (mut w, mut best) = (C::new(0.0, 0.0), psi(C::new(0.0, 0.0)));
        let start = best.0;
        let mut step = 0.25;
        let base_dirs: Vec<C> = (0..24).map(|k| C::from_polar(1.0, TAU * k as f64 / 24.0)).collect();
        while step > opts.min_step {
            let toward = zeta[best.1] - w;
            let mut dirs = base_dirs.clone();
            if toward.norm() > 0.0 {
                let t = toward / toward.norm();
                dirs.extend([t, -t, t * C::new(0.0, 1.0), t * C::new(0.0, -1.0)]);
            }
            let mut moved = None;
            for d in dirs {
                let cand = w + d * step;
                if cand.norm() >= 1.0 - 1e-9 {
                    continue;
                }
                let v = psi(cand);
                if v.0 < best.0 && moved.as_ref().map_or(true, |(_, b): &(C, (f64, usize))| v.0 < b.0) {
                    moved = Some((cand, v));
                }
            }
            match moved {
                Some((cand, v)) => {
                    w = cand;
                    best = v;
                    step = (step * 2.0).min(0.5);
                }
                None => step *= 0.5,
            }
        }
        c = m.apply_point(&DiskPoint::unchecked(w));
        if c.z().norm() >= 1.0 - disk::INTERIOR_MARGIN {
            return Err(Error::NotConverged(format!("descent left the disk after {outer} outer steps")));
        }
        let improvement = start - best.0;
        if w.norm() < 1e-9 || improvement < opts.improvement_tol && (last - best.0).abs() < opts.improvement_tol {
            let gap = objective_value(rho, &c, obj, opts.sup_samples);
            return Ok(DiskProjection { point: c, gap, outer_iterations: outer });
        }
        last = best.0;
    }
    Err(Error::NotConverged(format!(
        "no convergence after {} outer steps; last point {} with sampled value {last}",
        opts.max_outer,
        c.z()
    )))
}

/// `F(x) = π(f̂ ρ_x)` on the disk.
#[derive(Clone)]
pub struct DiskExtension {
    map: Arc<dyn CircleMap + Send + Sync>,
    objective: Objective,
    pub options: DescentOptions,
}

impl DiskExtension {
    /// Extension of a Moebius circle map; rejects maps that move cross-ratios.
    pub fn moebius(map: Arc<dyn CircleMap + Send + Sync>) -> Result<Self> {
        if let Some(q) = moebius_witness(map.as_ref(), &probe_quads(24), 1e-9) {
            return Err(Error::NotMoebius {
                witness: q.iter().map(|t| format!("{t}")).collect(),
                detail: "circle map does not preserve cross-ratios".into(),
            });
        }
        Ok(DiskExtension { map, objective: Objective::OneSided, options: DescentOptions::default() })
    }

    /// Extension of a conformal map through the conformal distance.
    pub fn conformal(map: Arc<dyn CircleMap + Send + Sync>) -> Self {
        DiskExtension { map, objective: Objective::Absolute, options: DescentOptions::default() }
    }

    pub fn map(&self) -> &Arc<dyn CircleMap + Send + Sync> {
        &self.map
    }

    pub fn apply(&self, x: &DiskPoint) -> Result<DiskProjection> {
        let rho = DiskMetric::Visual(*x).pushforward(self.map.clone());
        project_disk(&rho, self.objective, &self.options)
    }

    /// Visual distances `ρ_{F(x)}(e_t, f(ξ))`, where `e_t` is the endpoint of
    /// the ray from `F(x)` through `F(a_t)` and `a_t` is at distance `t` from
    /// `x` toward `ξ`.
    pub fn boundary_coherence(&self, x: &DiskPoint, xi: &CirclePoint, offsets: &[f64]) -> Result<Vec<f64>> {
        let fx = self.apply(x)?.point;
        let target = self.map.map_point(xi);
        let ray = GeodesicState::ray(x, xi);
        offsets
            .iter()
            .map(|&t| {
                let fa = self.apply(&ray.point_at(t))?.point;
                let e = ray_endpoint(&fx, &fa);
                if e == target {
                    return Ok(0.0);
                }
                disk::visual_metric(&fx, &e, &target)
            })
            .collect()
    }
}

/// `max |d(F x, F x') − d(x, x')|` over index pairs into `xs` and their images.
pub fn qi_defect(xs: &[DiskPoint], images: &[DiskPoint], pairs: &[(usize, usize)]) -> f64 {
    pairs
        .iter()
        .map(|&(i, j)| (disk_distance(&images[i], &images[j]) - disk_distance(&xs[i], &xs[j])).abs())
        .fold(0.0, f64::max)
}

/// `d(F(G(y)), y)` where `G` extends the inverse map; bounded by `log 2` when `f` is Moebius.
pub fn density_probe(forward: &DiskExtension, backward: &DiskExtension, y: &DiskPoint) -> Result<f64> {
    let x = backward.apply(y)?.point;
    Ok(disk_distance(&forward.apply(&x)?.point, y))
}

/// Tree boundary coherence: `F(a)` for `a` on the ray to `ξ` lies on the ray
/// to `f(ξ)` and its offset grows with the offset of `a`. Returns the image offsets.
pub fn tree_boundary_coherence(
    ext: &crate::tree::TreeExtension<'_>,
    xi: usize,
    offsets: &[Rational],
) -> Result<Option<Vec<Rational>>> {
    let mut out = Vec::new();
    for t in offsets {
        let a = ext.source.ray_point(xi, t.clone())?;
        let fa = ext.apply(&a)?;
        if fa.segment != Segment::Ray(ext.f[xi]) || fa.offset.is_zero() {
            return Ok(None);
        }
        out.push(fa.offset);
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schwarzian::CircleDiffeo;

    #[test]
    fn visual_metric_projects_to_its_point() {
        let x = DiskPoint::new(C::new(-0.4, 0.6)).unwrap();
        let p = project_disk(&DiskMetric::Visual(x), Objective::OneSided, &DescentOptions::default()).unwrap();
        assert!(disk_distance(&p.point, &x) < 1e-6, "{:?}", p);
        assert!(p.gap < 1e-6);
    }

    #[test]
    fn moebius_extension_matches_matrix() {
        let m = Moebius::new(C::new(1.3, 0.4), C::new(-0.2, 0.7)).unwrap();
        let ext = DiskExtension::moebius(Arc::new(m)).unwrap();
        for z in [C::new(0.0, 0.0), C::new(0.5, 0.1), C::new(-0.2, -0.7)] {
            let x = DiskPoint::new(z).unwrap();
            let fx = ext.apply(&x).unwrap();
            assert!(disk_distance(&fx.point, &m.apply_point(&x)) < 1e-4);
        }
    }

    #[test]
    fn diffeo_is_not_moebius() {
        let f = CircleDiffeo::simple(1, 0.2).unwrap();
        assert!(matches!(DiskExtension::moebius(Arc::new(f)), Err(Error::NotMoebius { .. })));
    }

    #[test]
    fn tree_embedding_of_spider_center() {
        let t = TreeSpace::parse("tree v1\nVERTEX c\nEND a AT c\nEND b AT c\nEND d AT c\nEND e AT c\n").unwrap();
        let r = embed_point(Model::Tree(&t), &ModelPoint::Tree(t.vertex_point(0))).unwrap();
        match r {
            MetricPointRepr::Tree(m) => assert!(m.max_entry().is_zero() && m.get(0, 1).is_zero()),
            _ => panic!(),
        }
    }
}
