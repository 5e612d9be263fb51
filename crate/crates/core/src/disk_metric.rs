//! Metrics on the circle conformal to the chordal metric, written through
//! their log-factor `ℓ = log dρ/dρ₀` relative to the visual metric at the origin.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64 as C;

use crate::disk::{circle_sup, golden_max, poisson, CircleMap, DiskPoint, Moebius};
use crate::error::{domain, Result};

/// Real trigonometric polynomial fitted to equally spaced samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries {
    c0: f64,
    /// `(k, a_k, b_k)` for `a_k cos kθ + b_k sin kθ`.
    terms: Vec<(u32, f64, f64)>,
}

impl TrigSeries {
    /// Interpolates samples at `θ_j = 2πj / n`; `n` must be even.
    pub fn interpolate(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 4 || n % 2 != 0 {
            return domain("trigonometric interpolation needs an even number of samples >= 4");
        }
        let nf = n as f64;
        let c0 = samples.iter().sum::<f64>() / nf;
        let mut raw = Vec::with_capacity(n / 2);
        for k in 1..=n / 2 {
            let w = C::from_polar(1.0, -TAU * k as f64 / nf);
            let mut z = C::new(1.0, 0.0);
            let mut acc = C::new(0.0, 0.0);
            for &s in samples {
                acc += z * s;
                z *= w;
            }
            let scale = if k == n / 2 { 1.0 / nf } else { 2.0 / nf };
            raw.push((k as u32, acc.re * scale, -acc.im * scale));
        }
        let top = raw.iter().map(|t| t.1.abs().max(t.2.abs())).fold(c0.abs(), f64::max);
        let terms = raw.into_iter().filter(|t| t.1.abs().max(t.2.abs()) > 1e-17 * top.max(1e-300)).collect();
        Ok(TrigSeries { c0, terms })
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let w = C::from_polar(1.0, theta);
        let mut z = C::new(1.0, 0.0);
        let mut k = 0u32;
        let mut s = self.c0;
        for &(kk, a, b) in &self.terms {
            while k < kk {
                z *= w;
                k += 1;
            }
            s += a * z.re + b * z.im;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A point of the metric space of boundary metrics, on the disk side.
#[derive(Clone)]
pub enum DiskMetric {
    /// `ρ_x`, with `ℓ(θ) = log P(x, θ)`.
    Visual(DiskPoint),
    /// Interpolated log-factor.
    Sampled(Arc<TrigSeries>),
    /// `(f̂ρ)(ξ, η) = ρ(f⁻¹ξ, f⁻¹η)`, with `ℓ(θ) = ℓ_ρ(f⁻¹θ) − log f'(f⁻¹θ)`.
    Pushforward {
        inner: Box<DiskMetric>,
        map: Arc<dyn CircleMap + Send + Sync>,
    },
}

impl std::fmt::Debug for DiskMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DiskMetric::Visual(x) => write!(f, "Visual({:?})", x.z()),
            DiskMetric::Sampled(s) => write!(f, "Sampled({} terms)", s.len()),
            DiskMetric::Pushforward { inner, .. } => write!(f, "Pushforward({inner:?})"),
        }
    }
}

impl DiskMetric {
    pub fn pushforward(self, map: Arc<dyn CircleMap + Send + Sync>) -> DiskMetric {
        DiskMetric::Pushforward { inner: Box::new(self), map }
    }

    /// `ℓ(θ) = log dρ/dρ₀ (θ)`.
    pub fn log_factor(&self, theta: f64) -> f64 {
        match self {
            DiskMetric::Visual(x) => poisson(x, C::from_polar(1.0, theta)).ln(),
            DiskMetric::Sampled(s) => s.eval(theta),
            DiskMetric::Pushforward { inner, map } => {
                let t = map.apply_inverse(theta);
                inner.log_factor(t) - map.derivative(t).ln()
            }
        }
    }

    /// `log ρ(ξ, η)`.
    pub fn log_distance(&self, xi: f64, eta: f64) -> f64 {
        log_chordal(xi, eta) + 0.5 * (self.log_factor(xi) + self.log_factor(eta))
    }

    /// A Moebius frame in which the metric is roughly uniform: the
    /// translation to the point whose visual metric has the same peak.
    pub fn frame(&self) -> Moebius {
        match self {
            DiskMetric::Visual(x) => Moebius::translation_to(x),
            _ => Moebius::translation_to(&self.peak_point()),
        }
    }

    /// `polar(max ℓ, argmax ℓ)`; exact for visual metrics.
    pub fn peak_point(&self) -> DiskPoint {
        let (theta, top) = circle_sup(|t| self.log_factor(t), &Moebius::identity(), 4096);
        DiskPoint::polar_unchecked(top.clamp(0.0, 26.0), theta)
    }
}

/// `log(|e^{iξ} − e^{iη}| / 2)`.
pub fn log_chordal(xi: f64, eta: f64) -> f64 {
    ((xi - eta) / 2.0).sin().abs().ln()
}

/// `sup_θ |ℓ_a(θ) − ℓ_b(θ)|`, the conformal distance, sampled in `frame`.
pub fn conf_distance(a: &DiskMetric, b: &DiskMetric, frame: &Moebius, samples: usize) -> f64 {
    circle_sup(|t| (a.log_factor(t) - b.log_factor(t)).abs(), frame, samples).1
}

/// `sup_θ (ℓ_b(θ) − ℓ_a(θ))`, the distance `d_M(a, b)` for members of `M`.
pub fn dm_distance(a: &DiskMetric, b: &DiskMetric, frame: &Moebius, samples: usize) -> f64 {
    circle_sup(|t| b.log_factor(t) - a.log_factor(t), frame, samples).1
}

/// `max_η log ρ(ξ, η)`, zero for an antipodal diameter-one metric.
pub fn row_max(rho: &DiskMetric, xi: f64, samples: usize) -> f64 {
    let n = samples.max(16);
    let h = TAU / n as f64;
    let g = |t: f64| rho.log_distance(xi, t);
    let mut best = (xi + PI, g(xi + PI));
    for k in 1..n {
        let t = xi + k as f64 * h;
        let v = g(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let lo = (best.0 - h).max(xi + 1e-9);
    let hi = (best.0 + h).min(xi + TAU - 1e-9);
    let r = golden_max(&g, lo, hi);
    r.1.max(best.1)
}

/// Result of spot-checking that a disk metric is antipodal, of diameter
/// one, and satisfies the triangle inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpotCheck {
    /// Worst `|max_η log ρ(ξ, η)|` over sampled `ξ`.
    pub antipodal: f64,
    /// Worst `ρ(ξ,ζ) − ρ(ξ,η) − ρ(η,ζ)` over sampled triples (negative when all hold).
    pub triangle: f64,
}

impl SpotCheck {
    pub fn passes(&self, antipodal_tol: f64, triangle_tol: f64) -> bool {
        self.antipodal <= antipodal_tol && self.triangle <= triangle_tol
    }
}

/// Checks `rows` rows for antipodality and all triples drawn from `points`.
pub fn spot_check(rho: &DiskMetric, rows: &[f64], points: &[f64], samples: usize) -> SpotCheck {
    let antipodal = rows.iter().map(|&xi| row_max(rho, xi, samples).abs()).fold(0.0, f64::max);
    let d = |a: f64, b: f64| rho.log_distance(a, b).exp();
    let mut triangle = f64::NEG_INFINITY;
    for (i, &a) in points.iter().enumerate() {
        for (j, &b) in points.iter().enumerate() {
            for &c in &points[i + 1..] {
                if j == i || b == c {
                    continue;
                }
                triangle = triangle.max(d(a, c) - d(a, b) - d(b, c));
            }
        }
    }
    SpotCheck { antipodal, triangle }
}

/// Spot-checks that `map` preserves cross-ratios on the given quadruples;
/// returns the first quadruple where the log cross-ratio moves by more than `tol`.
pub fn moebius_witness(map: &dyn CircleMap, quads: &[[f64; 4]], tol: f64) -> Option<[f64; 4]> {
    let cr = |q: [f64; 4]| {
        log_chordal(q[0], q[2]) + log_chordal(q[1], q[3]) - log_chordal(q[0], q[3]) - log_chordal(q[1], q[2])
    };
    quads.iter().copied().find(|&q| {
        let image = q.map(|t| map.apply(t));
        (cr(image) - cr(q)).abs() > tol
    })
}

/// Evenly spread quadruples used for Moebius spot checks.
pub fn probe_quads(n: usize) -> Vec<[f64; 4]> {
    (0..n)
        .map(|k| {
            let s = k as f64 * 0.7548776662466927 * TAU;
            [s, s + 1.1 + 0.3 * (k % 3) as f64, s + 2.9, s + 4.4 + 0.2 * (k % 5) as f64]
        })
        .collect()
}

/// Antipodally corrected log-factor: iterates `ℓ ← (ℓ + ℓᶜ)/2` on the grid,
/// where `ℓᶜ(ξ) = −max_η (2 log ρ₀(ξ, η) + ℓ(η))`. Returns the final grid and
/// the last correction size.
pub fn antipodal_correction(initial: &[f64], max_iter: usize, tol: f64) -> (Vec<f64>, f64) {
    let n = initial.len();
    let kernel: Vec<f64> = (0..n)
        .map(|m| if m == 0 { f64::NEG_INFINITY } else { 2.0 * (PI * m as f64 / n as f64).sin().abs().ln() })
        .collect();
    let mut l = initial.to_vec();
    let mut err = f64::INFINITY;
    for _ in 0..max_iter {
        let lc = c_transform(&l, &kernel);
        err = l.iter().zip(&lc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err < tol {
            break;
        }
        for (a, b) in l.iter_mut().zip(&lc) {
            *a = 0.5 * (*a + b);
        }
    }
    (l, err)
}

fn c_transform(l: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = l.len();
    let f = |i: usize, j: usize| kernel[(i + n - j) % n] + l[j];
    // The first maximizer comes from a full scan; after that the maximizer
    // moves with `i`, so a local climb from the previous one finds it.
    let mut best = (1..n).max_by(|&a, &b| f(0, a).total_cmp(&f(0, b))).unwrap_or(0);
    (0..n)
        .map(|i| {
            if best == i {
                best = (i + n / 2) % n;
            }
            loop {
                let (jm, jp) = ((best + n - 1) % n, (best + 1) % n);
                let bv = f(i, best);
                if jp != i && f(i, jp) > bv {
                    best = jp;
                } else if jm != i && f(i, jm) > bv {
                    best = jm;
                } else {
                    break;
                }
            }
            let bv = f(i, best);
            let (jm, jp) = ((best + n - 1) % n, (best + 1) % n);
            let mut v = bv;
            if jm != i && jp != i {
                let (fm, fp) = (f(i, jm), f(i, jp));
                let curv = fp - 2.0 * bv + fm;
                if curv < 0.0 {
                    v = bv - (fp - fm) * (fp - fm) / (8.0 * curv);
                }
            }
            -v
        })
        .collect()
}
