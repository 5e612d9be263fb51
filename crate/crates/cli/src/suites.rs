//! Seeded property suites. Case `k` draws all of its inputs from its own
//! generator, so any single case can be rerun with `--case k`.

use std::f64::consts::{LN_2, TAU};
use std::sync::Arc;

use num_complex::Complex64 as C;
use num_traits::Zero;
use rand::Rng;
use serde_json::{json, Value};

use cat1_boundary::boundary::{self, LogMetric};
use cat1_boundary::classifier::{boundary_iterate, classify_matrix, Classification, ClassifyParams};
use cat1_boundary::disk::{
    busemann_poisson, classify_by_trace, comparison_angle, derivative_from_angle, disk_distance, visual_dm, wrap,
    CirclePoint, DiskPoint, GeodesicState, HalfPlaneMatrix, Moebius, MoebiusKind,
};
use cat1_boundary::extension::{
    density_probe, project_disk, qi_defect, tree_boundary_coherence, DescentOptions, DiskExtension, Objective,
};
use cat1_boundary::rational::{self, int, Rational};
use cat1_boundary::sample::{self, Relabeling};
use cat1_boundary::schwarzian::{
    cocycle_residual, conf_gmvt_check, distance_diff_profile, distortion_residual, flip_deviation,
    integrated_schwarzian, schwarzian_chordal, schwarzian_sup, CircleDiffeo,
};
use cat1_boundary::tree::{Segment, TreePoint, TreeSpace};

use crate::input::{disk_point, tree_point, CliResult};
use crate::report::{Report, Residual};
use crate::{with_report, Common, Suite};

const ORDER: [Suite; 6] = [Suite::Core, Suite::Tree, Suite::Disk, Suite::Schwarzian, Suite::Extension, Suite::Classify];

fn name(s: Suite) -> &'static str {
    match s {
        Suite::Core => "core",
        Suite::Tree => "tree",
        Suite::Disk => "disk",
        Suite::Schwarzian => "schwarzian",
        Suite::Extension => "extension",
        Suite::Classify => "classify",
        Suite::All => "all",
    }
}

fn default_cases(s: Suite) -> usize {
    match s {
        Suite::Core => 200,
        Suite::Tree => 50,
        Suite::Disk => 100,
        Suite::Schwarzian => 100,
        Suite::Extension => 5,
        Suite::Classify | Suite::All => 300,
    }
}

/// Per-case generator.
pub fn case_rng(seed: u64, case: u64) -> impl Rng {
    sample::rng(seed ^ case.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// The residuals of one suite, keyed by property name in first-seen order.
struct Props {
    list: Vec<Residual>,
}

impl Props {
    fn new() -> Self {
        Props { list: Vec::new() }
    }

    fn get(&mut self, property: &str, tol: f64) -> &mut Residual {
        match self.list.iter().position(|r| r.property == property) {
            Some(i) => &mut self.list[i],
            None => {
                self.list.push(Residual::new(property, tol));
                self.list.last_mut().expect("just pushed")
            }
        }
    }

    fn record(&mut self, property: &str, tol: f64, value: f64, repro: &dyn Fn() -> Value) {
        self.get(property, tol).record(value, repro);
    }

    fn check(&mut self, property: &str, ok: bool, repro: &dyn Fn() -> Value) {
        self.get(property, 0.0).check(ok, repro);
    }
}

struct Ctx<'a> {
    suite: Suite,
    common: &'a Common,
}

impl Ctx<'_> {
    fn rerun(&self, case: u64) -> String {
        let c = self.common;
        let mut cmd = format!("cat1 verify --suite {} --seed {} --case {case}", name(self.suite), c.seed);
        if let Some(t) = c.tol {
            cmd += &format!(" --tol {t:e}");
        }
        cmd + &format!(" --precision-bits {} --N {} --samples {}", c.precision_bits, c.horizon, c.samples)
    }

    /// Reproducer: the rerun command plus the case inputs.
    fn repro(&self, case: u64, inputs: Value) -> Value {
        let mut v = json!({"case": case, "rerun": self.rerun(case)});
        if let (Value::Object(dst), Value::Object(src)) = (&mut v, inputs) {
            dst.extend(src);
        }
        v
    }
}

pub fn verify(suite: Suite, cases: Option<usize>, only: Option<u64>, common: &Common) -> Report {
    with_report("verify", Some(common.seed), |rep| {
        rep.input("suite", name(suite));
        if let Some(n) = cases {
            rep.input("cases", n);
        }
        if let Some(k) = only {
            rep.input("case", k);
        }
        rep.input("precision_bits", common.precision_bits);
        rep.input("N", common.horizon);
        rep.input("samples", common.samples);
        if let Some(t) = common.tol {
            rep.input("tol", t);
        }
        let suites: Vec<Suite> = if suite == Suite::All { ORDER.to_vec() } else { vec![suite] };
        for s in suites {
            let ids: Vec<u64> = match only {
                Some(k) => vec![k],
                None => (0..cases.unwrap_or(default_cases(s)) as u64).collect(),
            };
            let ctx = Ctx { suite: s, common };
            let (mut props, mut summary) = run_suite(&ctx, &ids, only.is_none())?;
            let passed = props.list.iter().filter(|r| r.pass).count();
            summary["suite"] = json!(name(s));
            summary["cases"] = json!(ids.len());
            summary["properties_passed"] = json!(format!("{passed}/{}", props.list.len()));
            rep.results.push(summary);
            for r in &mut props.list {
                if suite == Suite::All {
                    r.property = format!("{}: {}", name(s), r.property);
                }
            }
            rep.residuals.extend(props.list);
        }
        Ok(())
    })
}

fn run_suite(ctx: &Ctx<'_>, ids: &[u64], full: bool) -> CliResult<(Props, Value)> {
    let mut props = Props::new();
    let mut summary = json!({});
    for &k in ids {
        let mut rng = case_rng(ctx.common.seed, k);
        let outcome = match ctx.suite {
            Suite::Core => core_case(ctx, k, &mut rng, &mut props),
            Suite::Tree => tree_case(ctx, k, &mut rng, &mut props),
            Suite::Disk => disk_case(ctx, k, &mut rng, &mut props),
            Suite::Schwarzian => schwarzian_case(ctx, k, &mut rng, &mut props),
            Suite::Extension => extension_case(ctx, k, &mut rng, &mut props),
            Suite::Classify => classify_case(ctx, k, &mut rng, &mut props),
            Suite::All => unreachable!("expanded by the caller"),
        };
        let err = outcome.err().map(|e| e.to_string());
        props.check("case completes without error", err.is_none(), &|| {
            ctx.repro(k, json!({"error": err.clone().unwrap_or_default()}))
        });
    }
    if ctx.suite == Suite::Classify {
        let r = props.get("agrees with trace", 0.0);
        summary["agreements"] = json!(format!("{}/{}", r.cases - r.failures, ids.len()));
        if full {
            parabolic_instances(ctx, &mut props)?;
        }
    }
    Ok((props, summary))
}

fn tree_text(t: &TreeSpace) -> Value {
    Value::from(t.to_text())
}

fn metric_text(m: &LogMetric) -> Value {
    Value::from(m.to_text())
}

fn core_case(ctx: &Ctx<'_>, k: u64, rng: &mut impl Rng, p: &mut Props) -> CliResult<()> {
    let t = sample::random_tree(rng, 4, 8);
    let (x, z) = (sample::random_tree_point(rng, &t), sample::random_tree_point(rng, &t));
    let r1 = t.visual_log_metric(&x)?;
    let (r2, _) = sample::random_tree_member(rng, &t);
    let r3 = t.visual_log_metric(&z)?;
    let repro = || {
        ctx.repro(
            k,
            json!({"tree": tree_text(&t), "metric_1": metric_text(&r1), "metric_2": metric_text(&r2), "metric_3": metric_text(&r3)}),
        )
    };
    let n = t.rays().len();
    let deriv = |a: &LogMetric, b: &LogMetric| -> cat1_boundary::Result<Vec<Rational>> {
        (0..n).map(|i| boundary::derivative_log(a, b, i)).collect()
    };
    let (l21, l32, l31) = (deriv(&r2, &r1)?, deriv(&r3, &r2)?, deriv(&r3, &r1)?);
    p.check("chain rule", (0..n).all(|i| l31[i] == &l32[i] + &l21[i]), &repro);
    let bus: Vec<Rational> = (0..n).map(|i| t.busemann(i, &x, &z)).collect::<cat1_boundary::Result<_>>()?;
    p.check("derivative equals Busemann function", l31 == bus, &repro);
    let mvt = (0..n).all(|i| (i + 1..n).all(|j| r2.get(i, j) * int(2) == &l21[i] + &l21[j] + r1.get(i, j) * int(2)));
    p.check("mean value identity", mvt, &repro);
    let ld = boundary::log_derivative(&r2, &r1)?;
    p.check("max plus min of the log derivative is zero", (ld.max() + ld.min()).is_zero(), &repro);
    let (d12, d21) = (boundary::dm(&r1, &r2)?, boundary::dm(&r2, &r1)?);
    let (d23, d13) = (boundary::dm(&r2, &r3)?, boundary::dm(&r1, &r3)?);
    let axioms = boundary::dm(&r1, &r1)?.is_zero()
        && d12 == d21
        && d13 <= &d12 + &d23
        && d12 >= Rational::zero()
        && d13.is_zero() == (x == z);
    p.check("dM is a metric", axioms, &repro);
    p.check("dM equals tree distance", d13 == t.distance(&x, &z)?, &repro);
    let base = t.visual_log_metric(&t.base_point())?;
    let (e1, e2) = (boundary::embed_coordinates(&r1, &base)?, boundary::embed_coordinates(&r2, &base)?);
    p.check("embedding is isometric", boundary::sup_distance(&e1, &e2) == d12, &repro);
    let lip = boundary::certify_lipschitz(&r2, &r1, ctx.common.precision_bits);
    p.check("Lipschitz bound certified", lip.is_ok(), &repro);
    Ok(())
}

/// Point map of the isometry described by `r`.
fn relabel_point(source: &TreeSpace, target: &TreeSpace, r: &Relabeling, x: &TreePoint) -> cat1_boundary::Result<TreePoint> {
    match x.segment {
        Segment::Edge(e) if r.flipped[e] => target.point(Segment::Edge(e), &source.edges()[e].length - &x.offset),
        Segment::Edge(e) => target.point(Segment::Edge(e), x.offset.clone()),
        Segment::Ray(i) => target.point(Segment::Ray(r.ends[i]), x.offset.clone()),
    }
}

fn tree_case(ctx: &Ctx<'_>, k: u64, rng: &mut impl Rng, p: &mut Props) -> CliResult<()> {
    let t = sample::random_tree(rng, 4, 8);
    let (rho, _) = sample::random_tree_member(rng, &t);
    let (target, relabel) = sample::isometric_copy(rng, &t);
    let ends: Vec<&str> = relabel.ends.iter().map(|&j| target.rays()[j].end.as_str()).collect();
    let files = json!({"tree": tree_text(&t), "metric": metric_text(&rho), "target": tree_text(&target), "ends": ends});
    let repro = || ctx.repro(k, files.clone());

    let (proj, gap) = t.project_metric(&rho, ctx.common.precision_bits)?;
    p.record("projection gap", 0.0, rational::to_f64(&gap), &repro);
    p.check("projection reproduces the metric", t.visual_log_metric(&proj)? == rho, &repro);

    let ext = t.moebius_extend(&target, &relabel.ends)?;
    for _ in 0..20 {
        let (x, y) = (sample::random_tree_point(rng, &t), sample::random_tree_point(rng, &t));
        let (fx, fy) = (ext.apply(&x)?, ext.apply(&y)?);
        let pair = || ctx.repro(k, json!({"files": files, "x": tree_point(&t, &x), "y": tree_point(&t, &y)}));
        let defect = rational::abs(&(target.distance(&fx, &fy)? - t.distance(&x, &y)?));
        p.record("extension preserves distances", 0.0, rational::to_f64(&defect), &pair);
        let off = target.distance(&fx, &relabel_point(&t, &target, &relabel, &x)?)?;
        p.record("extension matches the relabeling", 0.0, rational::to_f64(&off), &pair);
    }
    let offsets: Vec<Rational> = (1..=4).map(int).collect();
    for xi in 0..t.rays().len() {
        let ok = tree_boundary_coherence(&ext, xi, &offsets)?.is_some_and(|o| o.windows(2).all(|w| w[0] < w[1]));
        p.check("rays carried to image ends", ok, &repro);
    }
    Ok(())
}

fn chordal_cross_ratio(q: [C; 4]) -> f64 {
    let [a, b, c, d] = q;
    (a - c).norm() * (b - d).norm() / ((a - d).norm() * (b - c).norm())
}

fn moebius_json(m: &Moebius) -> Value {
    json!([m.a.re, m.a.im, m.b.re, m.b.im])
}

fn disk_case(ctx: &Ctx<'_>, k: u64, rng: &mut impl Rng, p: &mut Props) -> CliResult<()> {
    let c = ctx.common;
    let [x, y, w] = [0; 3].map(|_| sample::random_disk_point(rng, 4.0));
    let m = sample::random_moebius(rng, 3.0);
    let quad = sample::random_quad(rng);
    let xi = CirclePoint::new(sample::random_angle(rng));
    let repro = || {
        ctx.repro(
            k,
            json!({"x": disk_point(&x), "y": disk_point(&y), "w": disk_point(&w), "disk_matrix": moebius_json(&m),
                   "quad": quad, "xi": xi.theta()}),
        )
    };
    let d = disk_distance(&x, &y);
    p.record("visual sup equals distance", c.tol(1e-6), (visual_dm(&x, &y, c.samples) - d).abs(), &repro);
    let tri = disk_distance(&x, &w) - d - disk_distance(&y, &w);
    p.record("triangle inequality", c.tol(1e-12), tri.max(0.0), &repro);
    let q = quad.map(|t| C::from_polar(1.0, t));
    let before = chordal_cross_ratio(q);
    let after = chordal_cross_ratio(q.map(|z| m.apply(z)));
    p.record("cross-ratio invariance", c.tol(1e-10), (after - before).abs() / before, &repro);
    let law = derivative_from_angle(d, comparison_angle(&x, &y, &xi)).ln();
    p.record("Busemann function from the law of cosines", c.tol(1e-9), (busemann_poisson(&xi, &x, &y) - law).abs(), &repro);
    Ok(())
}

fn random_geodesic(rng: &mut impl Rng) -> cat1_boundary::Result<GeodesicState> {
    let (a, b) = sample::random_pair(rng, 0.2);
    Ok(GeodesicState::nearest_origin(CirclePoint::new(a), CirclePoint::new(b))?.flow(rng.gen_range(-3.0..3.0)))
}

fn schwarzian_case(ctx: &Ctx<'_>, k: u64, rng: &mut impl Rng, p: &mut Props) -> CliResult<()> {
    let c = ctx.common;
    let f = sample::random_diffeo(rng, 0.3);
    let g = sample::random_diffeo(rng, 0.3);
    let m = sample::random_moebius(rng, 2.0);
    let quad = sample::random_quad(rng);
    let (a, b) = sample::random_pair(rng, 0.3);
    let geo = random_geodesic(rng)?;
    let (x, y) = (sample::random_disk_point(rng, 3.0), sample::random_disk_point(rng, 3.0));
    let (xi, eta) = (CirclePoint::new(a), CirclePoint::new(b));
    let query = format!(
        "cat1 schwarzian --diffeo F --pair {a:e} {b:e} --quad {:e} {:e} {:e} {:e} --profile 15",
        quad[0], quad[1], quad[2], quad[3]
    );
    let repro = || {
        ctx.repro(
            k,
            json!({"diffeo": f.to_text(), "second_diffeo": g.to_text(), "disk_matrix": moebius_json(&m),
                   "query": query, "x": disk_point(&x), "y": disk_point(&y),
                   "geodesic": {"tail": geo.tail.theta(), "head": geo.head.theta(), "base": disk_point(&geo.base)}}),
        )
    };
    p.record("distortion", c.tol(1e-6), distortion_residual(&f, quad.map(CirclePoint::new))?, &repro);
    p.record("flip deviation", c.tol(1e-6), flip_deviation(&f, &geo)?, &repro);
    p.record("flip deviation of Moebius maps", c.tol(1e-9), flip_deviation(&m, &geo)?, &repro);
    let s = schwarzian_sup(&f, 96)?;
    let v = conf_gmvt_check(&f, &x, &y, &xi, &eta, s)?;
    p.check("mean value sandwich", v.holds, &repro);
    p.record("log ratio equals chordal Schwarzian", c.tol(1e-6), (v.log_ratio - schwarzian_chordal(&f, &xi, &eta)).abs(), &repro);
    p.record("cocycle", c.tol(1e-7), cocycle_residual(&f, &g, &xi, &eta)?, &repro);
    p.record("cocycle with Moebius maps", c.tol(1e-7), cocycle_residual(&f, &m, &xi, &eta)?, &repro);
    let prof = distance_diff_profile(&f, &DiskPoint::origin(), &xi, &eta, &[15.0])?[0];
    p.record("distance difference limit", c.tol(1e-4), (prof - integrated_schwarzian(&f, &xi, &eta)?).abs(), &repro);
    Ok(())
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn points(xs: &[DiskPoint]) -> Value {
    Value::from(xs.iter().map(disk_point).collect::<Vec<_>>())
}

fn extension_case(ctx: &Ctx<'_>, k: u64, rng: &mut impl Rng, p: &mut Props) -> CliResult<()> {
    let c = ctx.common;
    let m = sample::random_moebius(rng, 2.0);
    let fwd = DiskExtension::moebius(Arc::new(m))?;
    let bwd = DiskExtension::moebius(Arc::new(m.inverse()))?;
    let xs: Vec<DiskPoint> = (0..11).map(|_| sample::random_disk_point(rng, 3.0)).collect();
    let images: Vec<DiskPoint> = xs.iter().map(|x| Ok(fwd.apply(x)?.point)).collect::<cat1_boundary::Result<_>>()?;
    let repro = || ctx.repro(k, json!({"disk_matrix": moebius_json(&m), "points": points(&xs)}));
    p.record("Moebius extension quasi-isometry defect", c.tol(LN_2 + 1e-3), qi_defect(&xs, &images, &pairs(11)), &repro);
    for _ in 0..13 {
        let y = sample::random_disk_point(rng, 3.0);
        let dense = density_probe(&fwd, &bwd, &y)?;
        p.record("Moebius extension image density", c.tol(LN_2 + 1e-3), dense, &|| {
            ctx.repro(k, json!({"disk_matrix": moebius_json(&m), "point": disk_point(&y)}))
        });
    }

    let f: CircleDiffeo = sample::random_diffeo(rng, 0.3);
    let s = schwarzian_sup(&f, 96)?;
    let text = f.to_text();
    let ext = DiskExtension::conformal(Arc::new(f));
    let xs: Vec<DiskPoint> = (0..8).map(|_| sample::random_disk_point(rng, 3.0)).collect();
    let images: Vec<DiskPoint> = xs.iter().map(|x| Ok(ext.apply(x)?.point)).collect::<cat1_boundary::Result<_>>()?;
    // The bound depends on the case, so the residual is the excess over it.
    let excess = qi_defect(&xs, &images, &pairs(8)) - (LN_2 + 12.0 * s);
    p.record("conformal extension defect above log 2 + 12 sup|S|", c.tol(1e-3), excess.max(0.0), &|| {
        ctx.repro(k, json!({"diffeo": text, "points": points(&xs), "schwarzian_sup_estimate": s}))
    });

    let adm = sample::random_admissible_disk_metric(rng, c.samples, 2.0)?;
    let opts = DescentOptions { sup_samples: c.samples, ..Default::default() };
    let proj = project_disk(&adm.metric, Objective::OneSided, &opts)?;
    p.record("projection gap within half log 2", c.tol(0.5 * LN_2 + 1e-3), proj.gap, &|| {
        ctx.repro(k, json!({"candidates": adm.attempts, "point": disk_point(&proj.point)}))
    });
    Ok(())
}

fn matrix_json(m: &HalfPlaneMatrix) -> Value {
    json!([m.a, m.b, m.c, m.d])
}

fn classify_case(ctx: &Ctx<'_>, k: u64, rng: &mut impl Rng, p: &mut Props) -> CliResult<()> {
    let (m, kind) = sample::random_matrix(rng);
    let repro = || {
        ctx.repro(
            k,
            json!({"matrix": matrix_json(&m), "query": format!("cat1 classify --matrix {:e} {:e} {:e} {:e} --model halfplane --N {}", m.a, m.b, m.c, m.d, ctx.common.horizon)}),
        )
    };
    classify_one(ctx, &m, Some(kind), "agrees with trace", p, &repro)
}

fn classify_one(
    ctx: &Ctx<'_>,
    m: &HalfPlaneMatrix,
    sampled: Option<MoebiusKind>,
    property: &str,
    p: &mut Props,
    repro: &dyn Fn() -> Value,
) -> CliResult<()> {
    let oracle = classify_by_trace(m);
    let r = classify_matrix(m, C::new(0.0, 1.0), ctx.common.horizon, &ClassifyParams::default())?;
    let agrees = r.classification.kind() == oracle && sampled.map_or(true, |s| s == oracle);
    p.check(property, agrees, repro);
    p.record("fixed point residual", ctx.common.tol(1e-6), r.fixed_point_residual, repro);
    let fm = r.record.frame_map.unwrap_or_else(Moebius::identity);
    let probes: Vec<f64> = (0..6).map(|j| 0.3 + TAU * j as f64 / 6.0).collect();
    let mut worst: f64 = 0.0;
    let mut track = |t: f64, target: f64, n: i64| {
        if wrap(t - target).abs() >= 1e-3 {
            worst = worst.max(wrap(boundary_iterate(&fm, t, n) - target).abs());
        }
    };
    match r.classification {
        Classification::Hyperbolic { attracting, repelling } => {
            for &t in &probes {
                if wrap(t - repelling).abs() >= 1e-3 && wrap(t - attracting).abs() >= 1e-3 {
                    track(t, attracting, 200);
                    track(t, repelling, -200);
                }
            }
            p.record("boundary iterates reach the hyperbolic fixed points", ctx.common.tol(1e-6), worst, repro);
        }
        Classification::Parabolic { fixed } => {
            for &t in &probes {
                track(t, fixed, 100_000);
                track(t, fixed, -100_000);
            }
            p.record("boundary iterates reach the parabolic fixed point", ctx.common.tol(1e-3), worst, repro);
        }
        Classification::Elliptic => {}
    }
    Ok(())
}

fn parabolic_instances(ctx: &Ctx<'_>, p: &mut Props) -> CliResult<()> {
    for m in sample::parabolic_instances() {
        let query = format!("cat1 classify --matrix {} {} {} {} --model halfplane --N {}", m.a, m.b, m.c, m.d, ctx.common.horizon);
        let repro = || json!({"matrix": matrix_json(&m), "query": query});
        classify_one(ctx, &m, None, "exact parabolic instances", p, &repro)?;
    }
    Ok(())
}
