//! The Poincare disk: points, boundary angles, Moebius transforms,
//! geodesics, Busemann functions and visual metrics.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C;

use crate::error::{domain, Result};

/// Interior margin: points must satisfy `|z| < 1 − INTERIOR_MARGIN`.
pub const INTERIOR_MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint {
    z: C,
    /// `1 − |z|²`, tracked separately so that points far out keep their accuracy.
    delta: f64,
}

impl DiskPoint {
    pub fn new(z: C) -> Result<Self> {
        if !(z.norm() < 1.0 - INTERIOR_MARGIN) {
            return domain(format!("point {z} is not inside the disk"));
        }
        Ok(DiskPoint::unchecked(z))
    }

    pub(crate) fn unchecked(z: C) -> Self {
        let r = z.norm();
        DiskPoint { z, delta: (1.0 - r) * (1.0 + r) }
    }

    /// The point `tanh(r/2) e^{iθ}`, with `1 − |z|²` taken from `r`.
    pub(crate) fn polar_unchecked(r: f64, theta: f64) -> Self {
        let c = (r / 2.0).cosh();
        DiskPoint { z: C::from_polar((r / 2.0).tanh(), theta), delta: 1.0 / (c * c) }
    }

    pub fn origin() -> Self {
        DiskPoint { z: C::new(0.0, 0.0), delta: 1.0 }
    }

    /// The point at hyperbolic distance `r` from the origin in direction `theta`.
    pub fn polar(r: f64, theta: f64) -> Result<Self> {
        DiskPoint::new(C::from_polar((r / 2.0).tanh(), theta))?;
        Ok(DiskPoint::polar_unchecked(r, theta))
    }

    pub fn z(&self) -> C {
        self.z
    }

    /// `1 − |z|²`.
    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Boundary point `e^{iθ}` with `θ ∈ [0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CirclePoint {
    theta: f64,
}

pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed angular difference in `(−π, π]`.
pub fn wrap(delta: f64) -> f64 {
    let d = delta.rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

impl CirclePoint {
    pub fn new(theta: f64) -> Self {
        CirclePoint { theta: normalize_angle(theta) }
    }

    pub fn from_complex(z: C) -> Self {
        CirclePoint::new(z.arg())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn z(&self) -> C {
        C::from_polar(1.0, self.theta)
    }
}

/// `P(x, ζ) = (1 − |x|²) / |x − ζ|²`.
pub fn poisson(x: &DiskPoint, zeta: C) -> f64 {
    x.delta / (x.z - zeta).norm_sqr()
}

/// `d(x, y) = 2 asinh(|x − y| / √((1 − |x|²)(1 − |y|²)))`.
pub fn disk_distance(x: &DiskPoint, y: &DiskPoint) -> f64 {
    2.0 * ((x.z - y.z).norm() / (x.delta * y.delta).sqrt()).asinh()
}

/// `B(ξ, x, y) = log P(y, ξ) − log P(x, ξ)`.
pub fn busemann_poisson(xi: &CirclePoint, x: &DiskPoint, y: &DiskPoint) -> f64 {
    poisson(y, xi.z()).ln() - poisson(x, xi.z()).ln()
}

/// `ρ_x(ξ, η) = (|ξ − η| / 2) (P(x, ξ) P(x, η))^{1/2}`.
pub fn visual_metric(x: &DiskPoint, xi: &CirclePoint, eta: &CirclePoint) -> Result<f64> {
    let (a, b) = (xi.z(), eta.z());
    let chord = (a - b).norm();
    if chord == 0.0 {
        return domain("visual distance needs two distinct boundary points");
    }
    Ok((0.5 * chord * (poisson(x, a) * poisson(x, b)).sqrt()).min(1.0))
}

/// `log ρ_x(ξ, η)`, accurate also when the distance underflows.
pub fn visual_log_metric(x: &DiskPoint, xi: &CirclePoint, eta: &CirclePoint) -> Result<f64> {
    let (a, b) = (xi.z(), eta.z());
    let chord = (a - b).norm();
    if chord == 0.0 {
        return domain("visual distance needs two distinct boundary points");
    }
    Ok(((0.5 * chord).ln() + 0.5 * (poisson(x, a).ln() + poisson(x, b).ln())).min(0.0))
}

/// `1 / ((e^t − e^{−t}) sin²(∠/2) + e^{−t})`.
pub fn derivative_from_angle(t: f64, angle: f64) -> f64 {
    let s = (angle / 2.0).sin();
    1.0 / ((t.exp() - (-t).exp()) * s * s + (-t).exp())
}

/// Endpoint of the geodesic ray from `x` through `y` (`y ≠ x`).
pub fn ray_endpoint(x: &DiskPoint, y: &DiskPoint) -> CirclePoint {
    let t = Moebius::translation_to(x);
    let w = t.inverse().apply(y.z);
    if w.norm() == 0.0 {
        return CirclePoint::new(0.0);
    }
    t.apply_circle(&CirclePoint::from_complex(w))
}

/// The angle at `x` between the ray to `y` and the ray to `ξ`.
pub fn comparison_angle(x: &DiskPoint, y: &DiskPoint, xi: &CirclePoint) -> f64 {
    if x == y {
        return 0.0;
    }
    let e = ray_endpoint(x, y);
    if e == *xi {
        return 0.0;
    }
    let s = visual_metric(x, &e, xi).unwrap_or(1.0);
    2.0 * s.clamp(0.0, 1.0).asin()
}

/// `f_{x,y}(ξ)` from the law of cosines at `x`.
pub fn visual_derivative_angle(x: &DiskPoint, y: &DiskPoint, xi: &CirclePoint) -> f64 {
    derivative_from_angle(disk_distance(x, y), comparison_angle(x, y, xi))
}

/// Orientation-preserving homeomorphism of the circle with a positive
/// derivative, written on angles.
pub trait CircleMap {
    fn apply(&self, theta: f64) -> f64;
    /// Angular derivative `φ'(θ)`.
    fn derivative(&self, theta: f64) -> f64;
    fn apply_inverse(&self, theta: f64) -> f64;

    fn map_point(&self, p: &CirclePoint) -> CirclePoint {
        CirclePoint::new(self.apply(p.theta()))
    }
}

/// `z ↦ (a z + b) / (b̄ z + ā)` with `|a|² − |b|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moebius {
    pub a: C,
    pub b: C,
}

/// Real `2×2` matrix of determinant one acting on the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlaneMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoebiusKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl HalfPlaneMatrix {
    /// Normalizes to determinant one; rejects nonpositive determinants.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return domain(format!("determinant {det} is not positive"));
        }
        let s = det.sqrt();
        Ok(HalfPlaneMatrix { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn apply(&self, w: C) -> C {
        (w * self.a + self.b) / (w * self.c + self.d)
    }

    pub fn compose(&self, o: &HalfPlaneMatrix) -> HalfPlaneMatrix {
        HalfPlaneMatrix {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> HalfPlaneMatrix {
        HalfPlaneMatrix { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn to_disk(&self) -> Moebius {
        Moebius {
            a: C::new((self.a + self.d) / 2.0, (self.b - self.c) / 2.0),
            b: C::new((self.a - self.d) / 2.0, -(self.b + self.c) / 2.0),
        }
    }
}

/// Classical classification by the trace of a unit-determinant matrix.
pub fn classify_by_trace(m: &HalfPlaneMatrix) -> MoebiusKind {
    let t = m.trace().abs();
    if (t - 2.0).abs() <= 1e-9 {
        MoebiusKind::Parabolic
    } else if t < 2.0 {
        MoebiusKind::Elliptic
    } else {
        MoebiusKind::Hyperbolic
    }
}

/// Cayley map from the upper half-plane to the disk.
pub fn cayley(w: C) -> C {
    (w - C::i()) / (w + C::i())
}

pub fn cayley_inverse(z: C) -> C {
    C::i() * (C::new(1.0, 0.0) + z) / (C::new(1.0, 0.0) - z)
}

impl Moebius {
    pub fn identity() -> Self {
        Moebius { a: C::new(1.0, 0.0), b: C::new(0.0, 0.0) }
    }

    /// Normalizes `(a, b)` so that `|a|² − |b|² = 1`.
    pub fn new(a: C, b: C) -> Result<Self> {
        let det = a.norm_sqr() - b.norm_sqr();
        if !(det > 0.0) || !det.is_finite() {
            return domain(format!("|a|^2 - |b|^2 = {det} is not positive"));
        }
        let s = det.sqrt();
        Ok(Moebius { a: a / s, b: b / s })
    }

    pub fn rotation(alpha: f64) -> Self {
        Moebius { a: C::from_polar(1.0, alpha / 2.0), b: C::new(0.0, 0.0) }
    }

    /// The transvection along the diameter through `p` taking `0` to `p`.
    pub fn translation_to(p: &DiskPoint) -> Self {
        let s = 1.0 / p.delta.sqrt();
        Moebius { a: C::new(s, 0.0), b: p.z * s }
    }

    pub fn apply(&self, z: C) -> C {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    pub fn apply_point(&self, p: &DiskPoint) -> DiskPoint {
        let den = self.b.conj() * p.z + self.a.conj();
        DiskPoint { z: (self.a * p.z + self.b) / den, delta: p.delta / den.norm_sqr() }
    }

    pub fn apply_circle(&self, p: &CirclePoint) -> CirclePoint {
        CirclePoint::from_complex(self.apply(p.z()))
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Moebius) -> Moebius {
        Moebius {
            a: self.a * o.a + self.b * o.b.conj(),
            b: self.a * o.b + self.b * o.a.conj(),
        }
    }

    pub fn inverse(&self) -> Moebius {
        Moebius { a: self.a.conj(), b: -self.b }
    }

    pub fn determinant(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr()
    }

    pub fn to_halfplane(&self) -> HalfPlaneMatrix {
        HalfPlaneMatrix {
            a: self.a.re + self.b.re,
            b: self.a.im - self.b.im,
            c: -self.a.im - self.b.im,
            d: self.a.re - self.b.re,
        }
    }

    /// Trace of the corresponding half-plane matrix.
    pub fn trace(&self) -> f64 {
        2.0 * self.a.re
    }
}

impl CircleMap for Moebius {
    fn apply(&self, theta: f64) -> f64 {
        let z = Moebius::apply(self, C::from_polar(1.0, theta));
        // Continuous lift: stay within π of θ plus the rotation part.
        theta + wrap(z.arg() - theta)
    }

    fn derivative(&self, theta: f64) -> f64 {
        1.0 / (self.b.conj() * C::from_polar(1.0, theta) + self.a.conj()).norm_sqr()
    }

    fn apply_inverse(&self, theta: f64) -> f64 {
        CircleMap::apply(&self.inverse(), theta)
    }
}

/// Bi-infinite unit-speed geodesic from `tail` to `head`, with `base = γ(0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicState {
    pub tail: CirclePoint,
    pub head: CirclePoint,
    pub base: DiskPoint,
}

/// Hyperbolic distance from the origin to the geodesic with endpoints `u`, `v`.
fn origin_to_geodesic(u: C, v: C) -> f64 {
    let delta = wrap(v.arg() - u.arg()).abs();
    2.0 * ((PI - delta) / 4.0).tan().atanh()
}

impl GeodesicState {
    pub fn new(tail: CirclePoint, head: CirclePoint, base: DiskPoint) -> Result<Self> {
        if (tail.z() - head.z()).norm() < 1e-15 {
            return domain("geodesic endpoints coincide");
        }
        let g = GeodesicState { tail, head, base };
        let off = g.offset_of_base();
        if off > 1e-9 {
            return domain(format!("basepoint is {off} away from the geodesic"));
        }
        Ok(g)
    }

    fn offset_of_base(&self) -> f64 {
        let t = Moebius::translation_to(&self.base).inverse();
        origin_to_geodesic(t.apply(self.tail.z()), t.apply(self.head.z()))
    }

    /// The geodesic from `tail` to `head` based at the point nearest the origin.
    pub fn nearest_origin(tail: CirclePoint, head: CirclePoint) -> Result<Self> {
        let base = nearest_point(&DiskPoint::origin(), &tail, &head)?;
        GeodesicState::new(tail, head, base)
    }

    /// The ray from `x` toward `head`, extended backward.
    pub fn ray(x: &DiskPoint, head: &CirclePoint) -> Self {
        let t = Moebius::translation_to(x);
        let u = t.inverse().apply(head.z());
        let tail = t.apply_circle(&CirclePoint::from_complex(-u));
        GeodesicState { tail, head: *head, base: *x }
    }

    /// Isometry taking `0` to the basepoint, `−1` to the tail and `1` to the head.
    pub fn frame(&self) -> Moebius {
        let t = Moebius::translation_to(&self.base);
        let h = t.inverse().apply(self.head.z());
        t.compose(&Moebius::rotation(h.arg()))
    }

    pub fn point_at(&self, t: f64) -> DiskPoint {
        self.frame().apply_point(&DiskPoint::polar_unchecked(t, 0.0))
    }

    pub fn flow(&self, t: f64) -> Self {
        GeodesicState { base: self.point_at(t), ..*self }
    }

    pub fn flip(&self) -> Self {
        GeodesicState { tail: self.head, head: self.tail, base: self.base }
    }

    pub fn apply_moebius(&self, m: &Moebius) -> Self {
        GeodesicState {
            tail: m.apply_circle(&self.tail),
            head: m.apply_circle(&self.head),
            base: m.apply_point(&self.base),
        }
    }
}

/// Point of the geodesic `(u, v)` nearest to `p`.
pub fn nearest_point(p: &DiskPoint, u: &CirclePoint, v: &CirclePoint) -> Result<DiskPoint> {
    let t = Moebius::translation_to(p);
    let ti = t.inverse();
    let (a, b) = (ti.apply(u.z()), ti.apply(v.z()));
    if (a - b).norm() < 1e-15 {
        return domain("geodesic endpoints coincide");
    }
    let mid = a + b;
    let delta = wrap(b.arg() - a.arg()).abs();
    let r = ((PI - delta) / 4.0).tan();
    let q = if mid.norm() < 1e-300 { C::new(0.0, 0.0) } else { mid / mid.norm() * r };
    Ok(t.apply_point(&DiskPoint::unchecked(q)))
}

/// Maximum of a circle function: grid of `samples` points equally spaced in
/// the frame of `m`, then golden-section refinement of the best local maxima.
pub fn circle_sup(f: impl Fn(f64) -> f64, m: &Moebius, samples: usize) -> (f64, f64) {
    let n = samples.max(8);
    let h = TAU / n as f64;
    let at = |phi: f64| CircleMap::apply(m, phi);
    let g = |phi: f64| f(at(phi));
    let vals: Vec<f64> = (0..n).map(|k| g(k as f64 * h)).collect();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&k| vals[k] >= vals[(k + n - 1) % n] && vals[k] >= vals[(k + 1) % n])
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    peaks.truncate(3);
    let mut best = (at(0.0), vals[0]);
    for &k in &peaks {
        if vals[k] > best.1 {
            best = (at(k as f64 * h), vals[k]);
        }
        let (p, v) = golden_max(&g, (k as f64 - 1.0) * h, (k as f64 + 1.0) * h);
        if v > best.1 {
            best = (at(p), v);
        }
    }
    (normalize_angle(best.0), best.1)
}

/// Golden-section search for a maximum of `g` on `[lo, hi]`.
pub fn golden_max(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 * (1.0 + lo.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = g(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `sup_θ |B(θ, x, y)|`, the distance between `ρ_x` and `ρ_y`.
pub fn visual_dm(x: &DiskPoint, y: &DiskPoint, samples: usize) -> f64 {
    let mid = Moebius::translation_to(x);
    circle_sup(|t| busemann_poisson(&CirclePoint::new(t), x, y).abs(), &mid, samples).1
}
