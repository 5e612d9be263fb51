//! Conformal circle maps, their derivatives with respect to visual metrics,
//! the integrated Schwarzian and the induced geodesic conjugacy.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::disk::{
    disk_distance, nearest_point, poisson, visual_log_metric, CircleMap, CirclePoint, DiskPoint, GeodesicState,
};
use crate::error::{domain, parse_err, Error, Result};

/// Largest allowed `Σ k |a_k|`; keeps `φ' ≥ 0.1`.
pub const MAX_COEFF_SUM: f64 = 0.9;

/// One harmonic `a sin(kθ + φ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub k: u32,
    pub a: f64,
    pub phi: f64,
}

/// `θ ↦ θ + Σ a_k sin(kθ + φ_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleDiffeo {
    terms: Vec<Term>,
}

impl CircleDiffeo {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.iter().any(|t| t.k == 0 || !t.a.is_finite() || !t.phi.is_finite()) {
            return domain("terms need k >= 1 and finite coefficients");
        }
        let s: f64 = terms.iter().map(|t| t.k as f64 * t.a.abs()).sum();
        if s > MAX_COEFF_SUM + 1e-12 {
            return domain(format!("sum of k|a_k| is {s}, above {MAX_COEFF_SUM}"));
        }
        Ok(CircleDiffeo { terms })
    }

    pub fn identity() -> Self {
        CircleDiffeo { terms: Vec::new() }
    }

    /// `θ ↦ θ + a sin(kθ)`.
    pub fn simple(k: u32, a: f64) -> Result<Self> {
        CircleDiffeo::new(vec![Term { k, a, phi: 0.0 }])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn coeff_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.k as f64 * t.a.abs()).sum()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut header = false;
        let mut terms = Vec::new();
        let mut last = 1;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            last = line_no;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !header {
                if toks != ["diffeo", "v1"] {
                    return parse_err(line_no, "expected header `diffeo v1`");
                }
                header = true;
                continue;
            }
            if toks.len() != 4 || toks[0] != "TERM" {
                return parse_err(line_no, "expected `TERM <k> <a> <phi>`");
            }
            let k: u32 = match toks[1].parse() {
                Ok(k) if k >= 1 => k,
                _ => return parse_err(line_no, format!("bad harmonic `{}`", toks[1])),
            };
            let (a, phi): (f64, f64) = match (toks[2].parse(), toks[3].parse()) {
                (Ok(a), Ok(p)) => (a, p),
                _ => return parse_err(line_no, "bad coefficient"),
            };
            terms.push(Term { k, a, phi });
        }
        if !header {
            return parse_err(1, "expected header `diffeo v1`");
        }
        CircleDiffeo::new(terms).or_else(|e| parse_err(last, e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("diffeo v1\n");
        for t in &self.terms {
            let _ = writeln!(s, "TERM {} {:e} {:e}", t.k, t.a, t.phi);
        }
        s
    }
}

impl CircleMap for CircleDiffeo {
    fn apply(&self, theta: f64) -> f64 {
        theta + self.terms.iter().map(|t| t.a * (t.k as f64 * theta + t.phi).sin()).sum::<f64>()
    }

    fn derivative(&self, theta: f64) -> f64 {
        1.0 + self.terms.iter().map(|t| t.a * t.k as f64 * (t.k as f64 * theta + t.phi).cos()).sum::<f64>()
    }

    fn apply_inverse(&self, target: f64) -> f64 {
        // φ(θ) − θ is bounded by Σ|a_k|, which brackets the root.
        let spread: f64 = self.terms.iter().map(|t| t.a.abs()).sum::<f64>() + 1e-12;
        let (mut lo, mut hi) = (target - spread, target + spread);
        let mut x = target;
        for _ in 0..100 {
            let r = self.apply(x) - target;
            if r == 0.0 {
                return x;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - r / self.derivative(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() < 1e-16 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// `second ∘ first`.
pub struct Compose<'a> {
    pub first: &'a dyn CircleMap,
    pub second: &'a dyn CircleMap,
}

impl CircleMap for Compose<'_> {
    fn apply(&self, theta: f64) -> f64 {
        self.second.apply(self.first.apply(theta))
    }

    fn derivative(&self, theta: f64) -> f64 {
        self.second.derivative(self.first.apply(theta)) * self.first.derivative(theta)
    }

    fn apply_inverse(&self, theta: f64) -> f64 {
        self.first.apply_inverse(self.second.apply_inverse(theta))
    }
}

pub struct Inverse<'a>(pub &'a dyn CircleMap);

impl CircleMap for Inverse<'_> {
    fn apply(&self, theta: f64) -> f64 {
        self.0.apply_inverse(theta)
    }

    fn derivative(&self, theta: f64) -> f64 {
        1.0 / self.0.derivative(self.0.apply_inverse(theta))
    }

    fn apply_inverse(&self, theta: f64) -> f64 {
        self.0.apply(theta)
    }
}

/// `df_{ρ_x, ρ_y}(ξ) = φ'(ξ) P(y, fξ) / P(x, ξ)`.
pub fn conformal_derivative(f: &dyn CircleMap, x: &DiskPoint, y: &DiskPoint, xi: &CirclePoint) -> f64 {
    let fx = f.map_point(xi);
    f.derivative(xi.theta()) * poisson(y, fx.z()) / poisson(x, xi.z())
}

/// `log df_{ρ_x, ρ_y}(ξ)`.
pub fn log_conformal_derivative(f: &dyn CircleMap, x: &DiskPoint, y: &DiskPoint, xi: &CirclePoint) -> f64 {
    let fx = f.map_point(xi);
    f.derivative(xi.theta()).ln() + poisson(y, fx.z()).ln() - poisson(x, xi.z()).ln()
}

/// `S(f)(ξ, η)` for the given basepoints `x ∈ (ξ, η)` and `y ∈ (fξ, fη)`.
pub fn schwarzian_at(f: &dyn CircleMap, x: &DiskPoint, y: &DiskPoint, xi: &CirclePoint, eta: &CirclePoint) -> f64 {
    -(log_conformal_derivative(f, x, y, xi) + log_conformal_derivative(f, x, y, eta))
}

/// Integrated Schwarzian with basepoints nearest the origin, cross-checked
/// against two other choices of basepoints.
pub fn integrated_schwarzian(f: &dyn CircleMap, xi: &CirclePoint, eta: &CirclePoint) -> Result<f64> {
    if (xi.z() - eta.z()).norm() < 1e-15 {
        return domain("integrated Schwarzian needs two distinct points");
    }
    let (fxi, feta) = (f.map_point(xi), f.map_point(eta));
    let gx = GeodesicState::nearest_origin(*xi, *eta)?;
    let gy = GeodesicState::nearest_origin(fxi, feta)?;
    let s = schwarzian_at(f, &gx.base, &gy.base, xi, eta);
    for (tx, ty) in [(0.8, -0.6), (-1.3, 1.1)] {
        let other = schwarzian_at(f, &gx.point_at(tx), &gy.point_at(ty), xi, eta);
        if (other - s).abs() > 1e-9 * (1.0 + s.abs()) {
            return Err(Error::Inconsistent(format!(
                "Schwarzian depends on basepoints: {s} vs {other} at ({}, {})",
                xi.theta(),
                eta.theta()
            )));
        }
    }
    Ok(s)
}

/// Closed form `log(|fξ − fη|² / |ξ − η|²) − log φ'(ξ) − log φ'(η)`.
pub fn schwarzian_chordal(f: &dyn CircleMap, xi: &CirclePoint, eta: &CirclePoint) -> f64 {
    let (fxi, feta) = (f.map_point(xi), f.map_point(eta));
    2.0 * ((fxi.z() - feta.z()).norm().ln() - (xi.z() - eta.z()).norm().ln())
        - f.derivative(xi.theta()).ln()
        - f.derivative(eta.theta()).ln()
}

/// Lower estimate of `‖S(f)‖∞` from an `n × n` grid of boundary pairs.
pub fn schwarzian_sup(f: &dyn CircleMap, n: usize) -> Result<f64> {
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let xi = CirclePoint::new(TAU * i as f64 / n as f64);
            let eta = CirclePoint::new(TAU * j as f64 / n as f64);
            best = best.max(integrated_schwarzian(f, &xi, &eta)?.abs());
        }
    }
    Ok(best)
}

/// The image of `γ` under the conjugacy induced by `f`: endpoints
/// `(fξ, fη)` and basepoint `y` with `df_{ρ_x, ρ_y}(η) = 1`.
pub fn conjugate_geodesic(f: &dyn CircleMap, g: &GeodesicState) -> Result<GeodesicState> {
    let (ft, fh) = (f.map_point(&g.tail), f.map_point(&g.head));
    let y0 = nearest_point(&DiskPoint::origin(), &ft, &fh)?;
    let g0 = GeodesicState { tail: ft, head: fh, base: y0 };
    let s = -log_conformal_derivative(f, &g.base, &y0, &g.head);
    Ok(GeodesicState { base: g0.point_at(s), ..g0 })
}

/// Distance between `φ(flip γ)` and `flip(flow_{−t} φ(γ))` with `t = S(f)(ξ, η)`.
pub fn flip_deviation(f: &dyn CircleMap, g: &GeodesicState) -> Result<f64> {
    let t = integrated_schwarzian(f, &g.tail, &g.head)?;
    let a = conjugate_geodesic(f, &g.flip())?;
    let b = conjugate_geodesic(f, g)?.flow(-t).flip();
    Ok(disk_distance(&a.base, &b.base))
}

fn min_chord(points: &[CirclePoint]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            m = m.min((points[i].z() - points[j].z()).norm());
        }
    }
    m
}

/// Both sides of the cross-ratio distortion formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distortion {
    pub lhs: f64,
    pub rhs: f64,
}

impl Distortion {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// `log([fξ fξ' fη fη'] / [ξ ξ' η η'])` against `½(S(ξ,η) + S(ξ',η') − S(ξ,η') − S(ξ',η))`.
pub fn distortion(f: &dyn CircleMap, quad: [CirclePoint; 4]) -> Result<Distortion> {
    if min_chord(&quad) < 1e-4 {
        return Err(Error::IllConditioned("quadruple points are closer than 1e-4".into()));
    }
    let o = DiskPoint::origin();
    let cr = |q: &[CirclePoint; 4]| -> Result<f64> {
        let [a, a2, b, b2] = q;
        Ok(visual_log_metric(&o, a, b)? + visual_log_metric(&o, a2, b2)?
            - visual_log_metric(&o, a, b2)?
            - visual_log_metric(&o, a2, b)?)
    };
    let image = quad.map(|p| f.map_point(&p));
    let lhs = cr(&image)? - cr(&quad)?;
    let [a, a2, b, b2] = &quad;
    let s = |p: &CirclePoint, q: &CirclePoint| integrated_schwarzian(f, p, q);
    let rhs = 0.5 * (s(a, b)? + s(a2, b2)? - s(a, b2)? - s(a2, b)?);
    Ok(Distortion { lhs, rhs })
}

pub fn distortion_residual(f: &dyn CircleMap, quad: [CirclePoint; 4]) -> Result<f64> {
    Ok(distortion(f, quad)?.residual())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmvtVerdict {
    /// `log` of `(ρ_y(fξ,fη)/ρ_x(ξ,η))² / (df(ξ) df(η))`.
    pub log_ratio: f64,
    /// `4‖S‖ + slack`.
    pub bound: f64,
    pub holds: bool,
}

/// Checks `e^{−4‖S‖} ≤ (ρ_y(fξ,fη)/ρ_x(ξ,η))² / (df(ξ) df(η)) ≤ e^{4‖S‖}` with slack `1e-6`.
pub fn conf_gmvt_check(
    f: &dyn CircleMap,
    x: &DiskPoint,
    y: &DiskPoint,
    xi: &CirclePoint,
    eta: &CirclePoint,
    s_norm: f64,
) -> Result<GmvtVerdict> {
    let (fxi, feta) = (f.map_point(xi), f.map_point(eta));
    let log_ratio = 2.0 * (visual_log_metric(y, &fxi, &feta)? - visual_log_metric(x, xi, eta)?)
        - log_conformal_derivative(f, x, y, xi)
        - log_conformal_derivative(f, x, y, eta);
    let bound = 4.0 * s_norm + 1e-6;
    Ok(GmvtVerdict { log_ratio, bound, holds: log_ratio.abs() <= bound })
}

/// `|S(g∘f)(ξ,η) − S(g)(fξ,fη) − S(f)(ξ,η)|`.
pub fn cocycle_residual(f: &dyn CircleMap, g: &dyn CircleMap, xi: &CirclePoint, eta: &CirclePoint) -> Result<f64> {
    let gf = Compose { first: f, second: g };
    let whole = integrated_schwarzian(&gf, xi, eta)?;
    let outer = integrated_schwarzian(g, &f.map_point(xi), &f.map_point(eta))?;
    let inner = integrated_schwarzian(f, xi, eta)?;
    Ok((whole - outer - inner).abs())
}

/// `d_Y(πφ(v_t), πφ(w_t)) − d_X(π v_t, π w_t)` for the rays from `x` to `ξ` and `η`.
pub fn distance_diff_profile(
    f: &dyn CircleMap,
    x: &DiskPoint,
    xi: &CirclePoint,
    eta: &CirclePoint,
    ts: &[f64],
) -> Result<Vec<f64>> {
    let (v, w) = (GeodesicState::ray(x, xi), GeodesicState::ray(x, eta));
    ts.iter()
        .map(|&t| {
            if !(0.0..=30.0).contains(&t) {
                return domain(format!("time {t} outside [0, 30]"));
            }
            let (vt, wt) = (v.flow(t), w.flow(t));
            let dy = disk_distance(&conjugate_geodesic(f, &vt)?.base, &conjugate_geodesic(f, &wt)?.base);
            Ok(dy - disk_distance(&vt.base, &wt.base))
        })
        .collect()
}

/// One step of a forward asymptotic schedule: `v = γ'(t)` and `w` the
/// tangent of the geodesic `(tail, γ(+∞))` at its point nearest `γ(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticStep {
    pub t: f64,
    pub tail: CirclePoint,
}

/// Forward and backward terms `d(πφ(v), πφ(w))` and `d(πφ(−v), πφ(−w))`.
pub fn asymptotic_terms(f: &dyn CircleMap, g: &GeodesicState, schedule: &[AsymptoticStep]) -> Result<Vec<(f64, f64)>> {
    schedule
        .iter()
        .map(|s| {
            let v = g.flow(s.t);
            let base = nearest_point(&v.base, &s.tail, &g.head)?;
            let w = GeodesicState { tail: s.tail, head: g.head, base };
            let fwd = disk_distance(&conjugate_geodesic(f, &v)?.base, &conjugate_geodesic(f, &w)?.base);
            let bwd = disk_distance(
                &conjugate_geodesic(f, &v.flip())?.base,
                &conjugate_geodesic(f, &w.flip())?.base,
            );
            Ok((fwd, bwd))
        })
        .collect()
}

/// Forward terms for the schedule `(t_n, ε_n)` whose tails are `ξ + ε_n`.
pub fn forward_asymptotic_decay(f: &dyn CircleMap, g: &GeodesicState, schedule: &[(f64, f64)]) -> Result<Vec<f64>> {
    let steps: Vec<AsymptoticStep> = schedule
        .iter()
        .map(|&(t, eps)| AsymptoticStep { t, tail: CirclePoint::new(g.tail.theta() + eps) })
        .collect();
    Ok(asymptotic_terms(f, g, &steps)?.into_iter().map(|p| p.0).collect())
}
