use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use holecap::geometry::*;
use holecap::Error;
use proptest::prelude::*;

#[test]
fn rectangle_is_centred() {
    let d = Domain::rectangle(1.0, 0.8).unwrap();
    assert!(d.contains([0.0, 0.0]));
    assert!(d.contains([0.49, 0.39]));
    assert!(!d.contains([0.5, 0.0]));
    assert!(!d.contains([0.0, -0.4]));
    assert!((d.distance_to_boundary([0.0, 0.0]) - 0.4).abs() < 1e-15);
    assert_eq!(d.bbox(), ([-0.5, -0.4], [0.5, 0.4]));
    assert!((d.area() - 0.8).abs() < 1e-15);
    assert!(d.mirror_symmetric);
}

#[test]
fn invalid_domains() {
    assert!(Domain::rectangle(0.0, 1.0).is_err());
    assert!(Domain::disk(-1.0).is_err());
    assert!(Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0]], [0.5, 0.1]).is_err());
    let outside = Domain::new(Shape::Rectangle { a: 1.0, b: 1.0 }, [2.0, 0.5], false);
    assert!(outside.is_err());
    let off_axis = Domain::new(Shape::Rectangle { a: 1.0, b: 1.0 }, [0.5, 0.3], true);
    assert!(off_axis.is_err());
}

#[test]
fn polygon_membership_and_symmetry() {
    let trap = Domain::polygon(vec![[0.0, -0.5], [1.0, -0.3], [1.0, 0.3], [0.0, 0.5]], [0.5, 0.0]).unwrap();
    assert!(trap.mirror_symmetric);
    assert!(trap.contains([0.45, 0.0]));
    assert!(!trap.contains([0.45, 0.35]));
    assert!((trap.area() - 0.8).abs() < 1e-14);

    let skew = Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.2, 1.0]], [0.4, 0.3]).unwrap();
    assert!(!skew.mirror_symmetric);
    assert!(skew.clone().with_origin([0.4, 0.2]).is_ok());
}

#[test]
fn sample_point_must_be_inside() {
    let d = Domain::disk(1.0).unwrap();
    assert!(d.clone().with_sample_point([0.2, 0.1]).is_ok());
    assert!(d.with_sample_point([2.0, 0.0]).is_err());
}

#[test]
fn boundary_fraction_on_each_shape() {
    let r = Domain::rectangle(1.0, 1.0).unwrap();
    assert!((r.boundary_fraction([0.45, 0.0], [0.55, 0.0]) - 0.5).abs() < 1e-12);
    let d = Domain::disk(1.0).unwrap();
    assert!((d.boundary_fraction([0.9, 0.0], [1.1, 0.0]) - 0.5).abs() < 1e-12);
    let tri = Domain::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]], [0.0, 0.0]).unwrap();
    assert!((tri.boundary_fraction([0.9, 0.0], [1.3, 0.0]) - 0.25).abs() < 1e-9);
}

#[test]
fn compact_set_metrics() {
    let s = CompactSet::segment([0.0, 0.0], 0.1, PI / 2.0);
    assert!((s.diameter() - 0.2).abs() < 1e-15);
    assert!((s.distance([0.3, 0.0]) - 0.3).abs() < 1e-15);
    assert!(s.contains([0.0, 0.05]));
    assert!(s.covers_node([0.004, 0.0], 0.01));
    assert!(!s.covers_node([0.006, 0.0], 0.01));

    let disk = CompactSet::disk([0.1, 0.0], 0.2);
    assert_eq!(disk.distance([0.2, 0.0]), 0.0);
    assert!((disk.radius_about_origin() - 0.3).abs() < 1e-15);

    let l = CompactSet::polyline(vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5]], 1.0);
    assert!((l.diameter() - SQRT_2).abs() < 1e-15);
    assert!((l.distance([0.0, 0.0]) - 0.5).abs() < 1e-15);
    assert_eq!(l.bbox(), ([-0.5, -0.5], [0.5, 0.5]));
    assert!((l.radius_about_origin() - FRAC_1_SQRT_2).abs() < 1e-15);
}

#[test]
fn template_diameters() {
    assert!((Template::Segment { angle: 0.3 }.diameter_factor() - 2.0).abs() < 1e-15);
    assert!((Template::Disk.diameter_factor() - 2.0).abs() < 1e-15);
    let l = Template::Polyline { points: vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5]] };
    assert!((l.diameter_factor() - SQRT_2).abs() < 1e-15);
    assert!(Template::Segment { angle: 0.0 }.is_segment());
}

#[test]
fn family_rules() {
    let d = Domain::rectangle(1.0, 0.8).unwrap();
    let f = concentrating_family(&d, &Template::Disk, &[0.16, 0.08, 0.04]).unwrap();
    assert_eq!(f.sets.len(), 3);
    assert!((f.radius_constant - 1.0).abs() < 1e-12);
    assert!(concentrating_family(&d, &Template::Disk, &[]).is_err());
    assert!(concentrating_family(&d, &Template::Disk, &[0.04, 0.08]).is_err());
    assert!(concentrating_family(&d, &Template::Disk, &[0.1, 0.1]).is_err());
    let escape = concentrating_family(&d, &Template::Disk, &[0.5, 0.1]).unwrap_err();
    assert!(matches!(escape, Error::Escapes { eps, .. } if eps == 0.5));
}

#[test]
fn pole_pairs() {
    let d = Domain::rectangle(1.0, 0.8).unwrap();
    let p = PolePair::new(&d, 0.1).unwrap();
    assert_eq!(p.minus(), [-0.1, 0.0]);
    assert_eq!(p.plus(), [0.1, 0.0]);
    assert!(p.on_segment([0.05, 0.0]));
    assert!(p.on_segment([0.1, 0.0]));
    assert!(!p.on_segment([0.05, 1e-9]));
    assert!(!p.on_segment([0.11, 0.0]));
    assert!(PolePair::new(&d, 0.0).is_err());
    assert!(PolePair::new(&d, 0.6).is_err());
}

#[test]
fn domain_serde_shape() {
    let text = r#"{"shape":{"kind":"rectangle","a":1.0,"b":0.8},"origin":[0.5,0.4]}"#;
    let d: Domain = serde_json::from_str(text).unwrap();
    assert_eq!(d.shape, Shape::Rectangle { a: 1.0, b: 0.8 });
    assert!(!d.mirror_symmetric);
    assert!(d.sampled_mirror_symmetry());
}

proptest! {
    #[test]
    fn segment_members_stay_within_radius(eps in 0.001f64..0.2, angle in -PI..PI) {
        let k = Template::Segment { angle }.instantiate(eps);
        prop_assert!((k.radius_about_origin() - eps).abs() < 1e-12);
        prop_assert!((k.diameter() - 2.0 * eps).abs() < 1e-12);
    }

    #[test]
    fn disk_membership_is_mirror_symmetric(x in -1.2f64..1.2, y in -1.2f64..1.2) {
        let d = Domain::disk(1.0).unwrap();
        prop_assert_eq!(d.contains([x, y]), d.contains([x, -y]));
        prop_assert!(d.distance_to_boundary([x, y]) >= 0.0);
    }

    #[test]
    fn boundary_fraction_lands_on_the_boundary(t in 0.0f64..PI, r in 0.3f64..0.95) {
        let d = Domain::disk(1.0).unwrap();
        let p = [r * t.cos(), r * t.sin()];
        let q = [1.3 * t.cos(), 1.3 * t.sin()];
        let theta = d.boundary_fraction(p, q);
        let hit = [p[0] + theta * (q[0] - p[0]), p[1] + theta * (q[1] - p[1])];
        prop_assert!((hit[0].hypot(hit[1]) - 1.0).abs() < 1e-12);
    }
}
