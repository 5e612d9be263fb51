use cat1_boundary::boundary::{self, LogMetric, Membership, Violation};
use cat1_boundary::rational::{int, ratio, Rational};
use cat1_boundary::tree::{Segment, TreeSpace};
use cat1_boundary::Error;
use num_traits::Zero;

const SPIDER: &str = include_str!("../../../data/spider4.txt");
const HTREE1: &str = include_str!("../../../data/htree1.txt");
const HTREE2: &str = include_str!("../../../data/htree2.txt");
const SPIDER_LEG1: &str = include_str!("../../../data/spider_leg1.txt");

fn spider() -> TreeSpace {
    TreeSpace::parse(SPIDER).unwrap()
}

fn htree(l: i64) -> TreeSpace {
    TreeSpace::parse(&HTREE1.replace("1/1", &format!("{l}/1"))).unwrap()
}

#[test]
fn spider_center_metric_is_all_zero() {
    let t = spider();
    let rho = t.visual_log_metric(&t.base_point()).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert!(rho.get(i, j).is_zero());
            }
        }
    }
    assert!(rho.cross_ratio_log([0, 1, 2, 3]).unwrap().is_zero());
}

#[test]
fn distance_through_center() {
    let t = spider();
    let x = t.ray_point(0, ratio(1, 2)).unwrap();
    let y = t.ray_point(1, ratio(1, 3)).unwrap();
    assert_eq!(t.distance(&x, &y).unwrap(), ratio(5, 6));
    assert!(t.distance(&x, &x).unwrap().is_zero());
    let h = htree(2);
    assert_eq!(h.distance(&h.vertex_point(0), &h.vertex_point(1)).unwrap(), int(2));
}

#[test]
fn gromov_products_on_spider_and_htree() {
    let t = spider();
    let s = ratio(7, 3);
    let x = t.ray_point(0, s.clone()).unwrap();
    assert_eq!(t.gromov_product(&x, 1, 2).unwrap(), s);
    let h = htree(3);
    let u = h.vertex_point(0);
    assert_eq!(h.gromov_product(&u, 2, 3).unwrap(), int(3));
    let rho = h.visual_log_metric(&u).unwrap();
    assert_eq!(*rho.get(2, 3), int(-3));
    assert!(rho.get(0, 2).is_zero() && rho.get(0, 1).is_zero());
}

#[test]
fn htree_cross_ratio_encodes_length() {
    let h2 = TreeSpace::parse(HTREE2).unwrap();
    let rho = h2.visual_log_metric(&h2.base_point()).unwrap();
    let q = ["a", "c", "b", "d"].map(|l| h2.end_index(l).unwrap());
    assert_eq!(rho.cross_ratio_log(q).unwrap(), int(-2));
    // Swapping the primed points negates the value.
    assert_eq!(rho.cross_ratio_log([q[0], q[1], q[3], q[2]]).unwrap(), int(2));
}

#[test]
fn busemann_along_rays() {
    let t = spider();
    let c = t.base_point();
    let s = ratio(5, 4);
    let y = t.ray_point(0, s.clone()).unwrap();
    assert_eq!(t.busemann(0, &c, &y).unwrap(), s);
    assert_eq!(t.busemann(0, &y, &c).unwrap(), -s.clone());
    assert_eq!(t.busemann(1, &c, &y).unwrap(), -s);
}

#[test]
fn derivative_and_dm_on_spider() {
    let t = spider();
    let c = t.visual_log_metric(&t.base_point()).unwrap();
    let s = ratio(3, 2);
    let x = t.visual_log_metric(&t.ray_point(0, s.clone()).unwrap()).unwrap();
    let ld: Vec<Rational> = (0..4).map(|k| boundary::derivative_log(&x, &c, k).unwrap()).collect();
    assert_eq!(ld, vec![s.clone(), -s.clone(), -s.clone(), -s.clone()]);
    assert_eq!(boundary::dm(&c, &x).unwrap(), s);
    assert!(boundary::dm(&x, &x).unwrap().is_zero());
    let parsed = LogMetric::parse(SPIDER_LEG1).unwrap();
    assert_eq!(parsed, x);
}

#[test]
fn conformal_scaling_and_membership() {
    let t = spider();
    let c = t.visual_log_metric(&t.base_point()).unwrap();
    let s = ratio(2, 5);
    let scaled = c.conformal_scale(&[s.clone(), -s.clone(), -s.clone(), -s.clone()]).unwrap();
    assert_eq!(scaled, t.visual_log_metric(&t.ray_point(0, s.clone()).unwrap()).unwrap());
    assert_eq!(boundary::embed_coordinates(&scaled, &c).unwrap(), vec![s.clone(), -s.clone(), -s.clone(), -s]);
    assert!(boundary::validate_membership(&scaled, &c, 128).unwrap().is_member());
    let up = c.conformal_scale(&[int(1), int(1), int(1), int(1)]).unwrap();
    match boundary::validate_membership(&up, &c, 128) {
        Ok(Membership::Violation(v)) => assert!(v.iter().any(|x| matches!(x, Violation::DiameterNotOne { .. }))),
        other => panic!("expected a violation, got {other:?}"),
    }
    // Every distance halved.
    let halved = LogMetric::from_fn(c.boundary().clone(), |_, _| Rational::zero() - ratio(693, 1000));
    match boundary::validate_membership(&halved, &c, 128) {
        Ok(Membership::Violation(_)) => {}
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn projection_examples() {
    let t = spider();
    let s = ratio(9, 4);
    let c = t.visual_log_metric(&t.base_point()).unwrap();
    let rho = c.conformal_scale(&[s.clone(), -s.clone(), -s.clone(), -s.clone()]).unwrap();
    let (p, gap) = t.project_metric(&rho, 128).unwrap();
    assert_eq!(p, t.ray_point(0, s).unwrap());
    assert!(gap.is_zero());

    let h = htree(3);
    let s = ratio(5, 4);
    let rho = LogMetric::from_fn(h.boundary().clone(), |i, j| match (i, j) {
        (0, 1) => -s.clone(),
        (2, 3) => s.clone() - int(3),
        _ => Rational::zero(),
    });
    let (p, gap) = h.project_metric(&rho, 128).unwrap();
    assert_eq!(p.segment, Segment::Edge(0));
    assert_eq!(p.offset, s);
    assert!(gap.is_zero());
}

#[test]
fn leg_swap_extends_to_isometry() {
    let t = spider();
    let ext = t.moebius_extend(&t, &[1, 0, 2, 3]).unwrap();
    assert_eq!(ext.apply(&t.base_point()).unwrap(), t.base_point());
    let x = t.ray_point(0, ratio(2, 3)).unwrap();
    assert_eq!(ext.apply(&x).unwrap(), t.ray_point(1, ratio(2, 3)).unwrap());
    let y = t.ray_point(2, int(4)).unwrap();
    assert!(ext.certify(&x, &y).unwrap());
    let id = t.moebius_extend(&t, &[0, 1, 2, 3]).unwrap();
    assert_eq!(id.apply(&y).unwrap(), y);
}

#[test]
fn htree_lengths_block_extension() {
    let (h1, h2) = (TreeSpace::parse(HTREE1).unwrap(), TreeSpace::parse(HTREE2).unwrap());
    match h1.moebius_extend(&h2, &[0, 1, 2, 3]) {
        Err(Error::NotMoebius { witness, detail }) => {
            assert_eq!(witness, vec!["a", "c", "b", "d"]);
            assert!(detail.contains("-1/1") && detail.contains("-2/1"), "{detail}");
        }
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("expected a cross-ratio witness"),
    }
}

#[test]
fn parser_reports_lines() {
    let cycle = "tree v1\nVERTEX u\nVERTEX v\nEDGE u v 1/1\nEDGE v u 2/1\nEND a AT u\nEND b AT u\nEND c AT v\nEND d AT v\n";
    assert!(matches!(TreeSpace::parse(cycle), Err(Error::Parse { line: 5, .. })));
    let leaf = "tree v1\nVERTEX u\nVERTEX v\nVERTEX w\nEDGE u v 1/1\nEDGE v w 1/1\nEND a AT u\nEND b AT u\nEND c AT v\nEND d AT u\n";
    assert!(matches!(TreeSpace::parse(leaf), Err(Error::Parse { line: 4, .. })));
    let few = "tree v1\nVERTEX c\nEND a AT c\nEND b AT c\nEND d AT c\n";
    assert!(matches!(TreeSpace::parse(few), Err(Error::Parse { line: 5, .. })));
    let zero = "tree v1\nVERTEX u\nVERTEX v\nEDGE u v 0/1\nEND a AT u\nEND b AT u\nEND c AT v\nEND d AT v\n";
    assert!(matches!(TreeSpace::parse(zero), Err(Error::Parse { line: 4, .. })));
    let positive = "logmetric v1\nPOINTS a b c d\nD a b 1/2\n";
    assert!(matches!(LogMetric::parse(positive), Err(Error::Parse { line: 3, .. })));
}

#[test]
fn text_formats_round_trip() {
    let h = TreeSpace::parse(HTREE2).unwrap();
    assert_eq!(TreeSpace::parse(&h.to_text()).unwrap().to_text(), h.to_text());
    let rho = h.visual_log_metric(&h.ray_point(2, ratio(1, 7)).unwrap()).unwrap();
    assert_eq!(LogMetric::parse(&rho.to_text()).unwrap(), rho);
}
