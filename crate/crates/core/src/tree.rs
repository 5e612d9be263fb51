//! Finite-core metric trees with rational edge lengths. The boundary is
//! the set of ray ends.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::boundary::{self, FiniteBoundary, LogMetric, Membership};
use crate::error::{domain, parse_err, Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    Edge(usize),
    Ray(usize),
}

/// A point given by a segment and an offset from the segment's first vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreePoint {
    pub segment: Segment,
    pub offset: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ray {
    pub attach: usize,
    pub end: String,
}

#[derive(Clone, Debug)]
pub struct TreeSpace {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    rays: Vec<Ray>,
    vdist: Vec<Vec<Rational>>,
    incident: Vec<Vec<Segment>>,
    boundary: Arc<FiniteBoundary>,
}

/// Where a validation error should be reported when building from a file.
#[derive(Default)]
struct Lines {
    vertex: Vec<usize>,
    edge: Vec<usize>,
    last: usize,
}

impl TreeSpace {
    /// Builds and validates a tree. `edges` are `(u, v, length)` over vertex
    /// indices, `ends` are `(attach vertex, end label)`.
    pub fn new(vertices: Vec<String>, edges: Vec<(usize, usize, Rational)>, ends: Vec<(usize, String)>) -> Result<Self> {
        Self::build(vertices, edges, ends, None)
    }

    fn build(
        vertices: Vec<String>,
        edges: Vec<(usize, usize, Rational)>,
        ends: Vec<(usize, String)>,
        lines: Option<&Lines>,
    ) -> Result<Self> {
        let fail = |line: Option<usize>, msg: String| -> Error {
            match line {
                Some(line) => Error::Parse { line, msg },
                None => Error::Domain(msg),
            }
        };
        let nv = vertices.len();
        if nv == 0 {
            return Err(fail(lines.map(|l| l.last), "tree has no vertices".into()));
        }
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (k, (u, v, len)) in edges.iter().enumerate() {
            let line = lines.map(|l| l.edge[k]);
            if *u >= nv || *v >= nv {
                return Err(fail(line, "edge endpoint out of range".into()));
            }
            if !len.is_positive() {
                return Err(fail(line, "edge length must be positive".into()));
            }
            let (a, b) = (find(&mut parent, *u), find(&mut parent, *v));
            if a == b {
                return Err(fail(line, format!("edge {} {} closes a cycle", vertices[*u], vertices[*v])));
            }
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        for v in 0..nv {
            if find(&mut parent, v) != root {
                return Err(fail(lines.map(|l| l.vertex[v]), format!("vertex {} is disconnected", vertices[v])));
            }
        }
        let mut incident = vec![Vec::new(); nv];
        for (k, (u, v, _)) in edges.iter().enumerate() {
            incident[*u].push(Segment::Edge(k));
            incident[*v].push(Segment::Edge(k));
        }
        for (k, (a, _)) in ends.iter().enumerate() {
            if *a >= nv {
                return Err(fail(lines.map(|l| l.last), "end attached to unknown vertex".into()));
            }
            incident[*a].push(Segment::Ray(k));
        }
        for v in 0..nv {
            if incident[v].len() < 2 {
                return Err(fail(
                    lines.map(|l| l.vertex[v]),
                    format!("vertex {} has degree {} (needs at least 2)", vertices[v], incident[v].len()),
                ));
            }
            incident[v].sort();
        }
        let boundary = FiniteBoundary::new(ends.iter().map(|(_, l)| l.clone()).collect())
            .map_err(|e| fail(lines.map(|l| l.last), e.to_string()))?;

        let mut adj = vec![Vec::new(); nv];
        for (u, v, len) in &edges {
            adj[*u].push((*v, len.clone()));
            adj[*v].push((*u, len.clone()));
        }
        let mut vdist = vec![vec![Rational::zero(); nv]; nv];
        for s in 0..nv {
            let mut seen = vec![false; nv];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(x) = stack.pop() {
                for (y, len) in &adj[x] {
                    if !seen[*y] {
                        seen[*y] = true;
                        vdist[s][*y] = &vdist[s][x] + len;
                        stack.push(*y);
                    }
                }
            }
        }
        Ok(TreeSpace {
            vertices,
            edges: edges.into_iter().map(|(u, v, length)| Edge { u, v, length }).collect(),
            rays: ends.into_iter().map(|(attach, end)| Ray { attach, end }).collect(),
            vdist,
            incident,
            boundary: Arc::new(boundary),
        })
    }

    /// Parses the `tree v1` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut header = false;
        let mut vertices: Vec<String> = Vec::new();
        let mut vindex: HashMap<String, usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut ends = Vec::new();
        let mut lines = Lines::default();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            lines.last = line_no;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !header {
                if toks != ["tree", "v1"] {
                    return parse_err(line_no, "expected header `tree v1`");
                }
                header = true;
                continue;
            }
            let vertex = |name: &str| match vindex.get(name) {
                Some(&i) => Ok(i),
                None => parse_err(line_no, format!("unknown vertex `{name}`")),
            };
            match toks[0] {
                "VERTEX" if toks.len() == 2 => {
                    if vindex.contains_key(toks[1]) {
                        return parse_err(line_no, format!("duplicate vertex `{}`", toks[1]));
                    }
                    vindex.insert(toks[1].to_string(), vertices.len());
                    vertices.push(toks[1].to_string());
                    lines.vertex.push(line_no);
                }
                "EDGE" if toks.len() == 4 => {
                    let u = vertex(toks[1])?;
                    let v = vertex(toks[2])?;
                    if u == v {
                        return parse_err(line_no, "edge is a loop");
                    }
                    let len = match rational::parse(toks[3]) {
                        Some(l) => l,
                        None => return parse_err(line_no, format!("bad length `{}`", toks[3])),
                    };
                    if !len.is_positive() {
                        return parse_err(line_no, "edge length must be positive");
                    }
                    edges.push((u, v, len));
                    lines.edge.push(line_no);
                }
                "END" if toks.len() == 4 && toks[2] == "AT" => {
                    let a = vertex(toks[3])?;
                    if ends.iter().any(|(_, l): &(usize, String)| l == toks[1]) {
                        return parse_err(line_no, format!("duplicate end `{}`", toks[1]));
                    }
                    ends.push((a, toks[1].to_string()));
                }
                _ => return parse_err(line_no, format!("malformed line `{line}`")),
            }
        }
        if !header {
            return parse_err(1, "expected header `tree v1`");
        }
        if ends.len() < 4 {
            return parse_err(lines.last, format!("tree has {} ends (needs at least 4)", ends.len()));
        }
        Self::build(vertices, edges, ends, Some(&lines))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("tree v1\n");
        for v in &self.vertices {
            let _ = writeln!(s, "VERTEX {v}");
        }
        for e in &self.edges {
            let _ = writeln!(s, "EDGE {} {} {}", self.vertices[e.u], self.vertices[e.v], rational::format(&e.length));
        }
        for r in &self.rays {
            let _ = writeln!(s, "END {} AT {}", r.end, self.vertices[r.attach]);
        }
        s
    }

    pub fn boundary(&self) -> &Arc<FiniteBoundary> {
        &self.boundary
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn vertex_index(&self, label: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == label)
    }

    pub fn end_index(&self, label: &str) -> Option<usize> {
        self.boundary.index_of(label)
    }

    pub fn vertex_distance(&self, a: usize, b: usize) -> &Rational {
        &self.vdist[a][b]
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.edges.len()).map(Segment::Edge).chain((0..self.rays.len()).map(Segment::Ray))
    }

    fn check(&self, x: &TreePoint) -> Result<()> {
        match x.segment {
            Segment::Edge(e) if e < self.edges.len() => {
                if x.offset.is_negative() || x.offset > self.edges[e].length {
                    return domain("offset outside edge");
                }
            }
            Segment::Ray(r) if r < self.rays.len() => {
                if x.offset.is_negative() {
                    return domain("negative ray offset");
                }
            }
            _ => return domain("invalid segment id"),
        }
        Ok(())
    }

    /// The point at vertex `v`.
    pub fn vertex_point(&self, v: usize) -> TreePoint {
        let seg = self.incident[v][0];
        let offset = match seg {
            Segment::Edge(e) if self.edges[e].v == v => self.edges[e].length.clone(),
            _ => Rational::zero(),
        };
        TreePoint { segment: seg, offset }
    }

    /// Validates `x` and rewrites vertex points to their canonical segment.
    pub fn point(&self, segment: Segment, offset: Rational) -> Result<TreePoint> {
        let x = TreePoint { segment, offset };
        self.check(&x)?;
        Ok(self.canonical(x))
    }

    pub fn canonical(&self, x: TreePoint) -> TreePoint {
        let at = match x.segment {
            Segment::Edge(e) if x.offset.is_zero() => Some(self.edges[e].u),
            Segment::Edge(e) if x.offset == self.edges[e].length => Some(self.edges[e].v),
            Segment::Ray(r) if x.offset.is_zero() => Some(self.rays[r].attach),
            _ => None,
        };
        match at {
            Some(v) => self.vertex_point(v),
            None => x,
        }
    }

    /// `(vertex, distance)` for the ends of the segment carrying `x`.
    fn anchors(&self, x: &TreePoint) -> Vec<(usize, Rational)> {
        match x.segment {
            Segment::Edge(e) => {
                let ed = &self.edges[e];
                vec![(ed.u, x.offset.clone()), (ed.v, &ed.length - &x.offset)]
            }
            Segment::Ray(r) => vec![(self.rays[r].attach, x.offset.clone())],
        }
    }

    pub fn distance(&self, x: &TreePoint, y: &TreePoint) -> Result<Rational> {
        self.check(x)?;
        self.check(y)?;
        if x.segment == y.segment {
            return Ok((&x.offset - &y.offset).abs());
        }
        let mut best: Option<Rational> = None;
        for (a, da) in self.anchors(x) {
            for (b, db) in self.anchors(y) {
                let d = &da + &self.vdist[a][b] + db;
                if best.as_ref().map_or(true, |m| d < *m) {
                    best = Some(d);
                }
            }
        }
        Ok(best.unwrap_or_default())
    }

    /// `lim_s d(x, r_ξ(s)) − s` along the ray of end `xi`.
    fn end_height(&self, xi: usize, x: &TreePoint) -> Rational {
        if x.segment == Segment::Ray(xi) {
            return -x.offset.clone();
        }
        let a = self.rays[xi].attach;
        self.anchors(x)
            .into_iter()
            .map(|(v, d)| d + &self.vdist[v][a])
            .min()
            .unwrap_or_default()
    }

    pub fn gromov_product(&self, x: &TreePoint, xi: usize, eta: usize) -> Result<Rational> {
        self.check(x)?;
        if xi >= self.rays.len() || eta >= self.rays.len() {
            return domain("unknown end");
        }
        if xi == eta {
            return domain("Gromov product of an end with itself");
        }
        let link = &self.vdist[self.rays[xi].attach][self.rays[eta].attach];
        Ok((self.end_height(xi, x) + self.end_height(eta, x) - link) * rational::half())
    }

    /// `B(ξ, x, y) = lim d(x, a) − d(y, a)` as `a → ξ`.
    pub fn busemann(&self, xi: usize, x: &TreePoint, y: &TreePoint) -> Result<Rational> {
        self.check(x)?;
        self.check(y)?;
        if xi >= self.rays.len() {
            return domain("unknown end");
        }
        Ok(self.end_height(xi, x) - self.end_height(xi, y))
    }

    pub fn visual_log_metric(&self, x: &TreePoint) -> Result<LogMetric> {
        self.check(x)?;
        let mut err = None;
        let m = LogMetric::from_fn(self.boundary.clone(), |i, j| match self.gromov_product(x, i, j) {
            Ok(g) => -g,
            Err(e) => {
                err = Some(e);
                Rational::zero()
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(m),
        }
    }

    /// Reference point used as the base of embed coordinates.
    pub fn base_point(&self) -> TreePoint {
        self.vertex_point(0)
    }

    /// Point on the ray of end `xi` at the given offset.
    pub fn ray_point(&self, xi: usize, offset: Rational) -> Result<TreePoint> {
        self.point(Segment::Ray(xi), offset)
    }

    /// Exact minimizer of `x ↦ dM(ρ, ρ_x)` after checking `ρ` is in the class
    /// of the visual metrics.
    pub fn project_metric(&self, rho: &LogMetric, bits: u32) -> Result<(TreePoint, Rational)> {
        let base = self.visual_log_metric(&self.base_point())?;
        match boundary::validate_membership_auto(rho, &base, bits)? {
            Membership::Member => {}
            Membership::Violation(v) => return domain(format!("metric is not in the visual class: {:?}", v[0])),
        }
        self.project_member(rho)
    }

    /// As [`TreeSpace::project_metric`] for a metric already known to be a member.
    pub fn project_member(&self, rho: &LogMetric) -> Result<(TreePoint, Rational)> {
        let x0 = self.base_point();
        let base = self.visual_log_metric(&x0)?;
        let e = boundary::embed_coordinates(rho, &base)?;
        // log dρ/dρ_x (ξ) = e(ξ) − h_ξ(x0) + h_ξ(x), affine with slope ±1 on every segment.
        let c0: Vec<Rational> = (0..self.rays.len()).map(|k| &e[k] - self.end_height(k, &x0)).collect();
        let mut best: Option<(TreePoint, Rational)> = None;
        for seg in self.segments() {
            let mut up: Option<Rational> = None;
            let mut down: Option<Rational> = None;
            let push = |slot: &mut Option<Rational>, v: Rational| {
                if slot.as_ref().map_or(true, |m| v > *m) {
                    *slot = Some(v);
                }
            };
            let len = match seg {
                Segment::Edge(k) => Some(self.edges[k].length.clone()),
                Segment::Ray(_) => None,
            };
            for xi in 0..self.rays.len() {
                let a = self.rays[xi].attach;
                let c = &c0[xi];
                match seg {
                    Segment::Edge(k) => {
                        let ed = &self.edges[k];
                        if self.vdist[ed.u][a] > self.vdist[ed.v][a] {
                            push(&mut down, c + &ed.length + &self.vdist[ed.v][a]);
                        } else {
                            push(&mut up, c + &self.vdist[ed.u][a]);
                        }
                    }
                    Segment::Ray(r) if r == xi => push(&mut down, c.clone()),
                    Segment::Ray(r) => push(&mut up, c + &self.vdist[self.rays[r].attach][a]),
                }
            }
            let s = match (&up, &down) {
                (Some(a), Some(b)) => (b - a) * rational::half(),
                (Some(_), None) => Rational::zero(),
                (None, _) => len.clone().unwrap_or_default(),
            };
            let mut s = if s.is_negative() { Rational::zero() } else { s };
            if let Some(l) = &len {
                if s > *l {
                    s = l.clone();
                }
            }
            let val = [up.map(|a| a + &s), down.map(|b| b - &s)]
                .into_iter()
                .flatten()
                .max()
                .unwrap_or_default();
            if best.as_ref().map_or(true, |(_, m)| val < *m) {
                best = Some((self.canonical(TreePoint { segment: seg, offset: s }), val));
            }
        }
        let (x, val) = best.ok_or_else(|| Error::Inconsistent("tree has no segments".into()))?;
        if !val.is_zero() {
            return Err(Error::SurjectivityViolation(rational::format(&val)));
        }
        Ok((x, val))
    }

    /// Checks that the end map `f` preserves cross-ratios and returns the
    /// induced isometry.
    pub fn moebius_extend<'a>(&'a self, target: &'a TreeSpace, f: &[usize]) -> Result<TreeExtension<'a>> {
        let rho = self.visual_log_metric(&self.base_point())?;
        let pushed = rho.pushforward(target.boundary.clone(), f)?;
        let reference = target.visual_log_metric(&target.base_point())?;
        if let Some(q) = boundary::cross_ratio_witness(&pushed, &reference) {
            // Report in terms of the source ends.
            let mut inv = vec![0; f.len()];
            for (i, &fi) in f.iter().enumerate() {
                inv[fi] = i;
            }
            let src = q.map(|i| inv[i]);
            let got = rho.cross_ratio_log(src)?;
            let expected = reference.cross_ratio_log(q)?;
            return Err(Error::NotMoebius {
                witness: src.iter().map(|&i| self.boundary.label(i).to_string()).collect(),
                detail: format!(
                    "cross-ratio log {} in the source, {} in the target",
                    rational::format(&got),
                    rational::format(&expected)
                ),
            });
        }
        Ok(TreeExtension { source: self, target, f: f.to_vec() })
    }
}

/// The isometry `x ↦ π(f̂ ρ_x)` induced by a Moebius end bijection.
#[derive(Clone, Debug)]
pub struct TreeExtension<'a> {
    pub source: &'a TreeSpace,
    pub target: &'a TreeSpace,
    pub f: Vec<usize>,
}

impl TreeExtension<'_> {
    pub fn apply(&self, x: &TreePoint) -> Result<TreePoint> {
        let rho = self.source.visual_log_metric(x)?;
        let pushed = rho.pushforward(self.target.boundary.clone(), &self.f)?;
        Ok(self.target.project_member(&pushed)?.0)
    }

    /// Verifies `d(Fx, Fy) = d(x, y)` exactly.
    pub fn certify(&self, x: &TreePoint, y: &TreePoint) -> Result<bool> {
        let d1 = self.source.distance(x, y)?;
        let d2 = self.target.distance(&self.apply(x)?, &self.apply(y)?)?;
        Ok(d1 == d2)
    }
}
