//! Single queries: `project`, `extend`, `classify`, `schwarzian`, `crossratio`.

use std::f64::consts::LN_2;
use std::sync::Arc;

use num_complex::Complex64 as C;
use serde_json::{json, Value};

use cat1_boundary::boundary::LogMetric;
use cat1_boundary::classifier::{
    classify as classify_orbit, classify_matrix, frame_angle_to_halfplane, orbit_tree, Classification, ClassifyParams,
};
use cat1_boundary::disk::{classify_by_trace, CirclePoint, DiskPoint, HalfPlaneMatrix, MoebiusKind};
use cat1_boundary::extension::{
    density_probe, project_disk, qi_defect, tree_boundary_coherence, DescentOptions, DiskExtension, Objective,
};
use cat1_boundary::rational::{self, int, Rational};
use cat1_boundary::sample;
use cat1_boundary::schwarzian::{
    distance_diff_profile, distortion, integrated_schwarzian, schwarzian_chordal, schwarzian_sup,
};

use crate::input::{self, rat, tree_point, usage, CliResult};
use crate::report::{Report, Residual};
use crate::{with_report, Common, ModelKind};

pub fn project(tree: Option<String>, metric: Option<String>, disk: bool, common: &Common) -> Report {
    let seed = disk.then_some(common.seed);
    with_report("project", seed, |rep| match (tree, metric, disk) {
        (Some(tree), Some(metric), false) => project_tree(rep, &tree, &metric, common),
        (None, None, true) => project_admissible(rep, common),
        _ => usage("project needs either --tree and --metric, or --disk"),
    })
}

fn project_tree(rep: &mut Report, tree: &str, metric: &str, common: &Common) -> CliResult<()> {
    rep.input("tree", tree);
    rep.input("metric", metric);
    rep.input("precision_bits", common.precision_bits);
    let t = input::tree_file(tree)?;
    let rho = input::metric_file(metric)?;
    let (p, gap) = t.project_metric(&rho, common.precision_bits)?;
    let reproduced = t.visual_log_metric(&p)? == rho;
    rep.results.push(json!({"point": tree_point(&t, &p), "gap": rat(&gap), "metric_reproduced": reproduced}));
    let mut r = Residual::new("projection gap", 0.0);
    r.record(rational::to_f64(&gap), || json!({"tree": t.to_text(), "metric": rho.to_text()}));
    rep.residuals.push(r);
    Ok(())
}

fn project_admissible(rep: &mut Report, common: &Common) -> CliResult<()> {
    rep.input("model", "disk");
    rep.input("samples", common.samples);
    let mut rng = sample::rng(common.seed);
    let s = sample::random_admissible_disk_metric(&mut rng, common.samples, 2.0)?;
    let opts = DescentOptions { sup_samples: common.samples, ..Default::default() };
    let p = project_disk(&s.metric, Objective::OneSided, &opts)?;
    rep.results.push(json!({
        "point": input::disk_point(&p.point),
        "gap": p.gap,
        "outer_iterations": p.outer_iterations,
        "candidates": s.attempts,
        "antipodal_residual": s.antipodal_residual,
        "triangle_residual": s.triangle_residual,
    }));
    let mut r = Residual::new("gap within half log 2", common.tol(0.5 * LN_2 + 1e-3));
    r.record(p.gap, || json!({"command": format!("cat1 project --disk --seed {} --samples {}", common.seed, common.samples)}));
    rep.residuals.push(r);
    Ok(())
}

pub struct ExtendArgs {
    pub tree: Option<String>,
    pub target: Option<String>,
    pub ends: Vec<String>,
    pub matrix: Vec<f64>,
    pub disk_matrix: Vec<f64>,
    pub diffeo: Option<String>,
    pub cases: Option<usize>,
}

pub fn extend(args: ExtendArgs, common: &Common) -> Report {
    with_report("extend", Some(common.seed), |rep| {
        let chosen = [args.tree.is_some(), !args.matrix.is_empty(), !args.disk_matrix.is_empty(), args.diffeo.is_some()];
        if chosen.iter().filter(|c| **c).count() != 1 {
            return usage("extend needs exactly one of --tree, --matrix, --disk-matrix, --diffeo");
        }
        if let Some(tree) = &args.tree {
            let target = args.target.as_deref().unwrap_or_default();
            return extend_tree(rep, tree, target, &args.ends, args.cases.unwrap_or(50), common);
        }
        let cases = args.cases.unwrap_or(11);
        if cases < 2 {
            return usage("extend needs at least two sample points");
        }
        if let Some(path) = &args.diffeo {
            rep.input("diffeo", path.as_str());
            let f = input::diffeo_file(path)?;
            return extend_conformal(rep, f, cases, common);
        }
        let m = if args.matrix.is_empty() {
            rep.input("disk_matrix", args.disk_matrix.clone());
            input::disk_matrix(&args.disk_matrix)?
        } else {
            rep.input("matrix", args.matrix.clone());
            input::halfplane_matrix(&args.matrix)?.to_disk()
        };
        extend_moebius(rep, m, cases, common)
    })
}

fn extend_tree(rep: &mut Report, tree: &str, target: &str, ends: &[String], cases: usize, common: &Common) -> CliResult<()> {
    rep.input("tree", tree);
    rep.input("target", target);
    rep.input("ends", ends.to_vec());
    let (s, t) = (input::tree_file(tree)?, input::tree_file(target)?);
    if ends.len() != s.rays().len() {
        return usage(format!("--ends lists {} labels for {} ends", ends.len(), s.rays().len()));
    }
    let f: Vec<usize> = ends.iter().map(|l| input::end_index(&t, l)).collect::<CliResult<_>>()?;
    let ext = s.moebius_extend(&t, &f)?;
    let images: Vec<Value> = (0..s.vertices().len())
        .map(|v| {
            let p = ext.apply(&s.vertex_point(v))?;
            Ok(json!({"vertex": s.vertices()[v], "image": tree_point(&t, &p)}))
        })
        .collect::<cat1_boundary::Result<_>>()?;
    rep.results.push(json!({"vertex_images": images}));

    let repro = |x: &Value, y: &Value| {
        json!({"tree": s.to_text(), "target": t.to_text(), "ends": ends, "x": x, "y": y})
    };
    let mut rng = sample::rng(common.seed);
    let mut dist = Residual::new("distance defect", 0.0);
    for _ in 0..cases {
        let (x, y) = (sample::random_tree_point(&mut rng, &s), sample::random_tree_point(&mut rng, &s));
        let defect = rational::abs(&(t.distance(&ext.apply(&x)?, &ext.apply(&y)?)? - s.distance(&x, &y)?));
        dist.record(rational::to_f64(&defect), || repro(&tree_point(&s, &x), &tree_point(&s, &y)));
    }
    let mut coh = Residual::new("rays carried to image ends", 0.0);
    let offsets: Vec<Rational> = (1..=4).map(int).collect();
    for k in 0..s.rays().len() {
        let ok = tree_boundary_coherence(&ext, k, &offsets)?.is_some_and(|o| o.windows(2).all(|w| w[0] < w[1]));
        coh.check(ok, || json!({"tree": s.to_text(), "target": t.to_text(), "ends": ends, "end": s.rays()[k].end}));
    }
    rep.residuals.extend([dist, coh]);
    Ok(())
}

fn sample_points(common: &Common, cases: usize) -> Vec<DiskPoint> {
    let mut rng = sample::rng(common.seed);
    (0..cases).map(|_| sample::random_disk_point(&mut rng, 3.0)).collect()
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn points_json(xs: &[DiskPoint]) -> Value {
    Value::from(xs.iter().map(input::disk_point).collect::<Vec<_>>())
}

fn extend_moebius(rep: &mut Report, m: cat1_boundary::disk::Moebius, cases: usize, common: &Common) -> CliResult<()> {
    let fwd = DiskExtension::moebius(Arc::new(m))?;
    let bwd = DiskExtension::moebius(Arc::new(m.inverse()))?;
    let xs = sample_points(common, cases);
    let images: Vec<DiskPoint> = xs.iter().map(|x| Ok(fwd.apply(x)?.point)).collect::<cat1_boundary::Result<_>>()?;
    let bound = common.tol(LN_2 + 1e-3);
    let mut qi = Residual::new("quasi-isometry defect", bound);
    qi.record(qi_defect(&xs, &images, &all_pairs(cases)), || json!({"points": points_json(&xs)}));
    let mut dense = Residual::new("image density", bound);
    for y in &xs {
        dense.record(density_probe(&fwd, &bwd, y)?, || json!({"point": input::disk_point(y)}));
    }
    // The extension of a Moebius map is the isometry itself.
    let exact = xs.iter().zip(&images).map(|(x, fx)| cat1_boundary::disk::disk_distance(fx, &m.apply_point(x)));
    let mut iso = Residual::new("distance to the isometry", common.tol(1e-4));
    for (d, x) in exact.zip(&xs) {
        iso.record(d, || json!({"point": input::disk_point(x)}));
    }
    rep.results.push(json!({"points": points_json(&xs), "images": points_json(&images)}));
    rep.residuals.extend([qi, dense, iso]);
    Ok(())
}

fn extend_conformal(
    rep: &mut Report,
    f: cat1_boundary::schwarzian::CircleDiffeo,
    cases: usize,
    common: &Common,
) -> CliResult<()> {
    let s = schwarzian_sup(&f, 96)?;
    let text = f.to_text();
    let ext = DiskExtension::conformal(Arc::new(f));
    let xs = sample_points(common, cases);
    let images: Vec<DiskPoint> = xs.iter().map(|x| Ok(ext.apply(x)?.point)).collect::<cat1_boundary::Result<_>>()?;
    let mut qi = Residual::new("quasi-isometry defect", common.tol(LN_2 + 12.0 * s + 1e-3));
    qi.record(qi_defect(&xs, &images, &all_pairs(cases)), || json!({"diffeo": text, "points": points_json(&xs)}));
    rep.results.push(json!({"schwarzian_sup_estimate": s, "points": points_json(&xs), "images": points_json(&images)}));
    rep.residuals.push(qi);
    Ok(())
}

fn kind_name(k: MoebiusKind) -> &'static str {
    match k {
        MoebiusKind::Elliptic => "elliptic",
        MoebiusKind::Parabolic => "parabolic",
        MoebiusKind::Hyperbolic => "hyperbolic",
    }
}

/// A frame angle with its half-plane boundary coordinate (`"inf"` for `∞`).
fn boundary_point(x: C, theta: f64) -> Value {
    let w = frame_angle_to_halfplane(x, theta).map_or(Value::from("inf"), Value::from);
    json!({"frame_angle": theta, "halfplane": w})
}

fn classification_json(c: &Classification, x: Option<C>) -> Value {
    let point = |t: f64| match x {
        Some(x) => boundary_point(x, t),
        None => json!({"frame_angle": t}),
    };
    match *c {
        Classification::Elliptic => json!({"class": "elliptic"}),
        Classification::Parabolic { fixed } => json!({"class": "parabolic", "fixed": point(fixed)}),
        Classification::Hyperbolic { attracting, repelling } => {
            json!({"class": "hyperbolic", "attracting": point(attracting), "repelling": point(repelling)})
        }
    }
}

pub fn classify(
    matrix: Vec<f64>,
    model: ModelKind,
    tree: Option<String>,
    ends: Vec<String>,
    basepoint: Vec<f64>,
    common: &Common,
) -> Report {
    with_report("classify", None, |rep| {
        rep.input("model", format!("{model:?}").to_lowercase());
        rep.input("N", common.horizon);
        let params = ClassifyParams::default();
        if model == ModelKind::Tree {
            let Some(path) = tree else { return usage("--model tree needs --tree") };
            rep.input("tree", path.as_str());
            rep.input("ends", ends.clone());
            let t = input::tree_file(&path)?;
            if ends.len() != t.rays().len() {
                return usage(format!("--ends lists {} labels for {} ends", ends.len(), t.rays().len()));
            }
            let perm: Vec<usize> = ends.iter().map(|l| input::end_index(&t, l)).collect::<CliResult<_>>()?;
            let r = orbit_tree(&t, &perm, &t.base_point(), common.horizon)?;
            let c = classify_orbit(&r, &params)?;
            let mut out = classification_json(&c, None);
            out["diameter"] = json!(r.diameter);
            rep.results.push(out);
            return Ok(());
        }
        rep.input("matrix", matrix.clone());
        let m: HalfPlaneMatrix = match model {
            ModelKind::Halfplane => input::halfplane_matrix(&matrix)?,
            _ => input::disk_matrix(&matrix)?.to_halfplane(),
        };
        let x = match basepoint.as_slice() {
            [] => C::new(0.0, 1.0),
            [re, im] => C::new(*re, *im),
            _ => return usage("--basepoint takes two numbers"),
        };
        rep.input("basepoint", vec![x.re, x.im]);
        let r = classify_matrix(&m, x, common.horizon, &params)?;
        let oracle = classify_by_trace(&m);
        let mut out = classification_json(&r.classification, Some(x));
        out["trace"] = json!(m.trace());
        out["trace_class"] = json!(kind_name(oracle));
        out["orbit_diameter"] = json!(r.record.diameter);
        out["step_defect"] = json!(r.record.step_defect);
        out["fixed_point_residual"] = json!(r.fixed_point_residual);
        rep.results.push(out);
        let repro = || {
            json!({"command": format!("cat1 classify --matrix {} {} {} {} --model halfplane --N {}", m.a, m.b, m.c, m.d, common.horizon)})
        };
        let mut fixed = Residual::new("fixed point residual", common.tol(1e-6));
        fixed.record(r.fixed_point_residual, repro);
        let mut agree = Residual::new("agrees with trace", 0.0);
        agree.check(r.classification.kind() == oracle, repro);
        rep.residuals.extend([fixed, agree]);
        Ok(())
    })
}

pub fn schwarzian(diffeo: String, pair: Vec<f64>, quad: Vec<f64>, profile: Vec<f64>, common: &Common) -> Report {
    with_report("schwarzian", None, |rep| {
        rep.input("diffeo", diffeo.as_str());
        rep.input("pair", pair.clone());
        let f = input::diffeo_file(&diffeo)?;
        let (xi, eta) = (CirclePoint::new(pair[0]), CirclePoint::new(pair[1]));
        let s = integrated_schwarzian(&f, &xi, &eta)?;
        rep.results.push(json!({
            "schwarzian": s,
            "chordal": schwarzian_chordal(&f, &xi, &eta),
            "sup_estimate": schwarzian_sup(&f, 96)?,
        }));
        let repro = || {
            let mut cmd = format!("cat1 schwarzian --diffeo FILE --pair {:e} {:e}", pair[0], pair[1]);
            if !quad.is_empty() {
                cmd += &format!(" --quad {:e} {:e} {:e} {:e}", quad[0], quad[1], quad[2], quad[3]);
            }
            json!({"diffeo": f.to_text(), "command": cmd})
        };
        if !quad.is_empty() {
            rep.input("quad", quad.clone());
            let q = [quad[0], quad[1], quad[2], quad[3]].map(CirclePoint::new);
            let d = distortion(&f, q)?;
            rep.results.push(json!({"distortion_lhs": d.lhs, "distortion_rhs": d.rhs}));
            let mut r = Residual::new("distortion", common.tol(1e-6));
            r.record(d.residual(), repro);
            rep.residuals.push(r);
        }
        if !profile.is_empty() {
            rep.input("profile", profile.clone());
            let values = distance_diff_profile(&f, &DiskPoint::origin(), &xi, &eta, &profile)?;
            let rows: Vec<[f64; 2]> = profile.iter().zip(&values).map(|(t, v)| [*t, *v]).collect();
            rep.results.push(json!({"columns": ["t", "distance_difference"], "rows": rows}));
            let (last_t, last_v) = (profile[profile.len() - 1], values[values.len() - 1]);
            if last_t >= 15.0 {
                let mut r = Residual::new("profile limit", common.tol(1e-4));
                r.record((last_v - s).abs(), repro);
                rep.residuals.push(r);
            }
        }
        Ok(())
    })
}

pub fn crossratio(tree: String, metric: Option<String>, quad: Vec<String>) -> Report {
    with_report("crossratio", None, |rep| {
        rep.input("tree", tree.as_str());
        rep.input("quad", quad.clone());
        let t = input::tree_file(&tree)?;
        let rho: LogMetric = match &metric {
            Some(path) => {
                rep.input("metric", path.as_str());
                input::metric_file(path)?
            }
            None => t.visual_log_metric(&t.base_point())?,
        };
        let idx: Vec<usize> = quad
            .iter()
            .map(|l| rho.boundary().index_of(l).ok_or_else(|| input::CliError::Usage(format!("unknown end `{l}`"))))
            .collect::<CliResult<_>>()?;
        let v = rho.cross_ratio_log([idx[0], idx[1], idx[2], idx[3]])?;
        rep.results.push(json!({"log_cross_ratio": rat(&v), "approx": rational::to_f64(&v)}));
        Ok(())
    })
}
