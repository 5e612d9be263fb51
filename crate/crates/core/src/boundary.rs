//! Metrics on a finite boundary that are Moebius equivalent to a base
//! metric, stored as exact log-distances.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::error::{domain, parse_err, Error, Result};
use crate::interval::Interval;
use crate::rational::{self, int, Rational};

pub const DEFAULT_PRECISION: u32 = 128;
const MAX_PRECISION: u32 = 8192;

/// Ordered set of at least four distinct labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteBoundary {
    labels: Vec<String>,
}

impl FiniteBoundary {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 4 {
            return domain(format!("boundary needs at least 4 points, got {}", labels.len()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return domain(format!("duplicate boundary label {l}"));
            }
        }
        Ok(FiniteBoundary { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Symmetric table of log-distances. The diagonal is never read.
#[derive(Clone, Debug, PartialEq)]
pub struct LogMetric {
    boundary: Arc<FiniteBoundary>,
    d: Vec<Rational>,
}

impl LogMetric {
    /// Builds the table from `f(i, j)` for `i < j`. No invariants are checked.
    pub fn from_fn(boundary: Arc<FiniteBoundary>, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let n = boundary.len();
        let mut d = vec![Rational::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                d[i * n + j] = v.clone();
                d[j * n + i] = v;
            }
        }
        LogMetric { boundary, d }
    }

    pub fn boundary(&self) -> &Arc<FiniteBoundary> {
        &self.boundary
    }

    pub fn n(&self) -> usize {
        self.boundary.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.d[i * self.n() + j]
    }

    fn same_boundary(&self, other: &LogMetric) -> Result<()> {
        if Arc::ptr_eq(&self.boundary, &other.boundary) || self.boundary == other.boundary {
            Ok(())
        } else {
            Err(Error::BoundaryMismatch)
        }
    }

    /// `log [ξ ξ' η η']`.
    pub fn cross_ratio_log(&self, quad: [usize; 4]) -> Result<Rational> {
        let n = self.n();
        if quad.iter().any(|&q| q >= n) {
            return domain("quadruple index out of range");
        }
        for a in 0..4 {
            for b in a + 1..4 {
                if quad[a] == quad[b] {
                    return domain("cross-ratio needs four distinct points");
                }
            }
        }
        let [x, x2, y, y2] = quad;
        Ok(self.get(x, y) + self.get(x2, y2) - self.get(x, y2) - self.get(x2, y))
    }

    /// Candidate `base(ξ,η) + (logf(ξ) + logf(η)) / 2`.
    pub fn conformal_scale(&self, logf: &[Rational]) -> Result<LogMetric> {
        if logf.len() != self.n() {
            return domain("conformal factor length does not match boundary");
        }
        let h = rational::half();
        Ok(LogMetric::from_fn(self.boundary.clone(), |i, j| {
            self.get(i, j) + (&logf[i] + &logf[j]) * &h
        }))
    }

    /// `(f̂ρ)(f ξ, f η) = ρ(ξ, η)` where `f[i]` is the target index of point `i`.
    pub fn pushforward(&self, target: Arc<FiniteBoundary>, f: &[usize]) -> Result<LogMetric> {
        let n = self.n();
        if target.len() != n || f.len() != n {
            return domain("end bijection size mismatch");
        }
        let mut inv = vec![usize::MAX; n];
        for (i, &fi) in f.iter().enumerate() {
            if fi >= n || inv[fi] != usize::MAX {
                return domain("map is not a bijection");
            }
            inv[fi] = i;
        }
        Ok(LogMetric::from_fn(target, |i, j| self.get(inv[i], inv[j]).clone()))
    }

    pub fn max_entry(&self) -> Rational {
        let n = self.n();
        let mut m: Option<Rational> = None;
        for i in 0..n {
            for j in i + 1..n {
                let v = self.get(i, j);
                if m.as_ref().map_or(true, |m| v > m) {
                    m = Some(v.clone());
                }
            }
        }
        m.unwrap_or_else(Rational::zero)
    }

    /// Parses the `logmetric v1` text format.
    pub fn parse(text: &str) -> Result<LogMetric> {
        let mut header = false;
        let mut boundary: Option<Arc<FiniteBoundary>> = None;
        let mut entries: Vec<Option<Rational>> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !header {
                if toks != ["logmetric", "v1"] {
                    return parse_err(line_no, "expected header `logmetric v1`");
                }
                header = true;
                continue;
            }
            match toks[0] {
                "POINTS" => {
                    if boundary.is_some() {
                        return parse_err(line_no, "POINTS given twice");
                    }
                    let b = FiniteBoundary::new(toks[1..].iter().map(|s| s.to_string()).collect())
                        .or_else(|e| parse_err(line_no, e.to_string()))?;
                    entries = vec![None; b.len() * b.len()];
                    boundary = Some(Arc::new(b));
                }
                "D" => {
                    let b = match &boundary {
                        Some(b) => b,
                        None => return parse_err(line_no, "D before POINTS"),
                    };
                    if toks.len() != 4 {
                        return parse_err(line_no, "expected `D <label> <label> <p>/<q>`");
                    }
                    let i = b.index_of(toks[1]);
                    let j = b.index_of(toks[2]);
                    let (i, j) = match (i, j) {
                        (Some(i), Some(j)) if i != j => (i, j),
                        (Some(_), Some(_)) => return parse_err(line_no, "D needs two distinct points"),
                        _ => return parse_err(line_no, "unknown point label"),
                    };
                    let v = match rational::parse(toks[3]) {
                        Some(v) => v,
                        None => return parse_err(line_no, format!("bad rational `{}`", toks[3])),
                    };
                    if v.is_positive() {
                        return parse_err(line_no, "log-distance must be <= 0");
                    }
                    let n = b.len();
                    if entries[i * n + j].is_some() {
                        return parse_err(line_no, "pair given twice");
                    }
                    entries[i * n + j] = Some(v.clone());
                    entries[j * n + i] = Some(v);
                }
                other => return parse_err(line_no, format!("unknown directive `{other}`")),
            }
        }
        let boundary = match boundary {
            Some(b) => b,
            None => return parse_err(text.lines().count().max(1), "missing POINTS line"),
        };
        let n = boundary.len();
        for i in 0..n {
            for j in i + 1..n {
                if entries[i * n + j].is_none() {
                    return parse_err(
                        text.lines().count().max(1),
                        format!("missing pair {} {}", boundary.label(i), boundary.label(j)),
                    );
                }
            }
        }
        Ok(LogMetric::from_fn(boundary, |i, j| entries[i * n + j].clone().unwrap_or_default()))
    }

    pub fn to_text(&self) -> String {
        let b = &self.boundary;
        let mut s = String::from("logmetric v1\nPOINTS");
        for l in b.labels() {
            s.push(' ');
            s.push_str(l);
        }
        s.push('\n');
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                let _ = writeln!(s, "D {} {} {}", b.label(i), b.label(j), rational::format(self.get(i, j)));
            }
        }
        s
    }
}

/// `log dρ₂/dρ₁ (ξ)`, checked to be the same for every admissible pair `(η, η')`.
pub fn derivative_log(r2: &LogMetric, r1: &LogMetric, xi: usize) -> Result<Rational> {
    r2.same_boundary(r1)?;
    let n = r1.n();
    if xi >= n {
        return domain("point index out of range");
    }
    let mut value: Option<(Rational, usize, usize)> = None;
    for e in 0..n {
        for e2 in e + 1..n {
            if e == xi || e2 == xi {
                continue;
            }
            let v = r2.get(xi, e) + r2.get(xi, e2) + r1.get(e, e2)
                - r1.get(xi, e)
                - r1.get(xi, e2)
                - r2.get(e, e2);
            match &value {
                None => value = Some((v, e, e2)),
                Some((v0, a, b)) if *v0 != v => {
                    return Err(Error::NotMoebius {
                        witness: vec![
                            r1.boundary.label(xi).to_string(),
                            r1.boundary.label(*a).to_string(),
                            r1.boundary.label(*b).to_string(),
                            r1.boundary.label(e).to_string(),
                            r1.boundary.label(e2).to_string(),
                        ],
                        detail: format!(
                            "derivative at {} is {} via ({}, {}) but {} via ({}, {})",
                            r1.boundary.label(xi),
                            rational::format(v0),
                            r1.boundary.label(*a),
                            r1.boundary.label(*b),
                            rational::format(&v),
                            r1.boundary.label(e),
                            r1.boundary.label(e2)
                        ),
                    })
                }
                _ => {}
            }
        }
    }
    Ok(value.map(|v| v.0).unwrap_or_default())
}

/// The vector `log dρ₂/dρ₁` over the whole boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct LogDerivative {
    pub boundary: Arc<FiniteBoundary>,
    pub values: Vec<Rational>,
}

impl LogDerivative {
    pub fn max(&self) -> Rational {
        self.values.iter().max().cloned().unwrap_or_default()
    }

    pub fn min(&self) -> Rational {
        self.values.iter().min().cloned().unwrap_or_default()
    }
}

pub fn log_derivative(r2: &LogMetric, r1: &LogMetric) -> Result<LogDerivative> {
    let values = (0..r1.n()).map(|i| derivative_log(r2, r1, i)).collect::<Result<Vec<_>>>()?;
    Ok(LogDerivative { boundary: r1.boundary.clone(), values })
}

/// `max_ξ log dρ₂/dρ₁ (ξ)`.
pub fn dm(r1: &LogMetric, r2: &LogMetric) -> Result<Rational> {
    Ok(log_derivative(r2, r1)?.max())
}

pub fn embed_coordinates(rho: &LogMetric, base: &LogMetric) -> Result<Vec<Rational>> {
    Ok(log_derivative(rho, base)?.values)
}

pub fn sup_distance(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Largest off-diagonal log-distance is not zero.
    DiameterNotOne { max: Rational },
    /// No point at distance one from this point.
    NotAntipodal { point: String },
    /// `ρ(i,k) > ρ(i,j) + ρ(j,k)`.
    Triangle { i: String, j: String, k: String },
    /// Cross-ratio differs from the base metric.
    CrossRatio { quad: [String; 4], got: Rational, expected: Rational },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    Member,
    Violation(Vec<Violation>),
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member)
    }
}

/// Decides membership of `candidate` in the class of `base` using interval
/// enclosures at `bits` of precision for the triangle inequality.
pub fn validate_membership(candidate: &LogMetric, base: &LogMetric, bits: u32) -> Result<Membership> {
    candidate.same_boundary(base)?;
    let n = candidate.n();
    let b = &candidate.boundary;
    let mut out = Vec::new();

    let max = candidate.max_entry();
    if !max.is_zero() {
        out.push(Violation::DiameterNotOne { max });
    }
    for i in 0..n {
        if !(0..n).any(|j| j != i && candidate.get(i, j).is_zero()) {
            out.push(Violation::NotAntipodal { point: b.label(i).to_string() });
        }
    }

    let mut ex = vec![Interval::point(int(0)); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let e = Interval::exp(candidate.get(i, j), bits);
            ex[i * n + j] = e.clone();
            ex[j * n + i] = e;
        }
    }
    for i in 0..n {
        for k in i + 1..n {
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let rhs = ex[i * n + j].add(&ex[j * n + k]);
                match ex[i * n + k].certainly_le(&rhs) {
                    Some(true) => {}
                    Some(false) => out.push(Violation::Triangle {
                        i: b.label(i).to_string(),
                        j: b.label(j).to_string(),
                        k: b.label(k).to_string(),
                    }),
                    None => return Err(Error::Undecided(bits)),
                }
            }
        }
    }

    if let Some(v) = cross_ratio_mismatch(candidate, base) {
        out.push(v);
    }

    Ok(if out.is_empty() { Membership::Member } else { Membership::Violation(out) })
}

/// Runs [`validate_membership`] starting at `bits` and doubling on undecided comparisons.
pub fn validate_membership_auto(candidate: &LogMetric, base: &LogMetric, bits: u32) -> Result<Membership> {
    let mut bits = bits.max(16);
    loop {
        match validate_membership(candidate, base, bits) {
            Err(Error::Undecided(_)) if bits < MAX_PRECISION => bits *= 2,
            r => return r,
        }
    }
}

/// First quadruple whose cross-ratio differs, if any.
fn cross_ratio_mismatch(candidate: &LogMetric, base: &LogMetric) -> Option<Violation> {
    let n = candidate.n();
    let b = &candidate.boundary;
    // The cross-ratio is antisymmetric under ξ ↔ ξ' and η ↔ η', so ordered pairs suffice.
    for x in 0..n {
        for x2 in x + 1..n {
            for y in 0..n {
                if y == x || y == x2 {
                    continue;
                }
                for y2 in y + 1..n {
                    if y2 == x || y2 == x2 {
                        continue;
                    }
                    let q = [x, x2, y, y2];
                    let got = candidate.cross_ratio_log(q).ok()?;
                    let expected = base.cross_ratio_log(q).ok()?;
                    if got != expected {
                        return Some(Violation::CrossRatio {
                            quad: q.map(|i| b.label(i).to_string()),
                            got,
                            expected,
                        });
                    }
                }
            }
        }
    }
    None
}

/// Witness quadruple (as indices) where the cross-ratios of `a` and `b` differ.
pub fn cross_ratio_witness(a: &LogMetric, b: &LogMetric) -> Option<[usize; 4]> {
    let idx = |l: &str| a.boundary.index_of(l).unwrap_or(0);
    match cross_ratio_mismatch(a, b)? {
        Violation::CrossRatio { quad, .. } => Some([idx(&quad[0]), idx(&quad[1]), idx(&quad[2]), idx(&quad[3])]),
        _ => None,
    }
}

/// Certifies `|f(ξ₁) − f(ξ₂)| ≤ 2λ² ρ₁(ξ₁, ξ₂)` for every pair, with
/// `f = dρ₂/dρ₁` and `λ = max f`. Returns the number of pairs checked.
pub fn certify_lipschitz(r2: &LogMetric, r1: &LogMetric, bits: u32) -> Result<usize> {
    let ld = log_derivative(r2, r1)?;
    let lam2 = ld.max() * int(2);
    let n = r1.n();
    let mut bits = bits.max(16);
    'retry: loop {
        let f: Vec<Interval> = ld.values.iter().map(|v| Interval::exp(v, bits)).collect();
        let mut checked = 0;
        for i in 0..n {
            for j in i + 1..n {
                let lhs = f[i].sub(&f[j]).abs();
                let rhs = Interval::exp(&(&lam2 + r1.get(i, j)), bits).scale(&int(2));
                match lhs.certainly_le(&rhs) {
                    Some(true) => checked += 1,
                    Some(false) => {
                        return Err(Error::Inconsistent(format!(
                            "Lipschitz bound fails at ({}, {})",
                            r1.boundary.label(i),
                            r1.boundary.label(j)
                        )))
                    }
                    None if bits < MAX_PRECISION => {
                        bits *= 2;
                        continue 'retry;
                    }
                    None => return Err(Error::Undecided(bits)),
                }
            }
        }
        return Ok(checked);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn boundary(n: usize) -> Arc<FiniteBoundary> {
        Arc::new(FiniteBoundary::new((1..=n).map(|i| format!("e{i}")).collect()).unwrap())
    }

    fn zero_metric(n: usize) -> LogMetric {
        LogMetric::from_fn(boundary(n), |_, _| int(0))
    }

    #[test]
    fn boundary_rejects_small_or_duplicate() {
        assert!(FiniteBoundary::new(vec!["a".into(), "b".into(), "c".into()]).is_err());
        assert!(FiniteBoundary::new(vec!["a".into(), "b".into(), "c".into(), "a".into()]).is_err());
    }

    #[test]
    fn reflexive_membership() {
        let m = zero_metric(5);
        assert_eq!(validate_membership(&m, &m, 64).unwrap(), Membership::Member);
    }

    #[test]
    fn halved_metric_fails_diameter() {
        let m = zero_metric(4);
        let half = LogMetric::from_fn(m.boundary().clone(), |_, _| ratio(-7, 10));
        match validate_membership(&half, &m, 128).unwrap() {
            Membership::Violation(v) => {
                assert!(v.iter().any(|x| matches!(x, Violation::DiameterNotOne { .. })))
            }
            Membership::Member => panic!("expected violation"),
        }
    }

    #[test]
    fn spider_scaling_derivative() {
        let base = zero_metric(4);
        let t = ratio(3, 2);
        let logf = vec![t.clone(), -t.clone(), -t.clone(), -t.clone()];
        let rho = base.conformal_scale(&logf).unwrap();
        assert_eq!(validate_membership_auto(&rho, &base, 64).unwrap(), Membership::Member);
        assert_eq!(embed_coordinates(&rho, &base).unwrap(), logf);
        assert_eq!(dm(&base, &rho).unwrap(), t);
        assert_eq!(dm(&rho, &base).unwrap(), t);
    }

    #[test]
    fn positive_shift_rejected() {
        let base = zero_metric(4);
        let rho = base.conformal_scale(&[int(1), int(1), int(1), int(1)]).unwrap();
        assert!(!validate_membership(&rho, &base, 64).unwrap().is_member());
    }

    #[test]
    fn inconsistent_derivative_is_not_moebius() {
        let base = zero_metric(4);
        let other = LogMetric::from_fn(base.boundary().clone(), |i, j| if (i, j) == (0, 1) { int(-1) } else { int(0) });
        assert!(matches!(derivative_log(&other, &base, 2), Err(Error::NotMoebius { .. })));
    }

    #[test]
    fn cross_ratio_antisymmetry_and_repeats() {
        let m = LogMetric::from_fn(boundary(4), |i, j| if (i, j) == (2, 3) { int(-2) } else { int(0) });
        let a = m.cross_ratio_log([0, 2, 1, 3]).unwrap();
        let b = m.cross_ratio_log([0, 2, 3, 1]).unwrap();
        assert_eq!(a, -b);
        assert!(m.cross_ratio_log([0, 0, 1, 2]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = LogMetric::from_fn(boundary(4), |i, j| ratio(-((i + j) as i64), 3));
        let back = LogMetric::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = LogMetric::parse("logmetric v1\nPOINTS a b c d\nD a b 1/2\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 3, msg: "log-distance must be <= 0".into() });
        let e = LogMetric::parse("logmetric v1\n# c\nPOINTS a b c d\nD a x 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn lipschitz_certified_on_scaling() {
        let base = zero_metric(4);
        let rho = base.conformal_scale(&[int(2), int(-2), int(-2), int(-2)]).unwrap();
        assert_eq!(certify_lipschitz(&rho, &base, 64).unwrap(), 6);
    }
}
