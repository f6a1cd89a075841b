use std::f64::consts::TAU;

use holecap::asymptotics::*;
use holecap::closed_form::{AsymptoticPrediction, Law, TheoremId};
use holecap::discrete::HRule;
use holecap::geometry::{Domain, Template};
use holecap::Error;
use proptest::prelude::*;

const LADDER: [f64; 4] = [0.16, 0.08, 0.04, 0.02];

fn rect() -> Domain {
    Domain::rectangle(1.0, 0.8).unwrap()
}

fn law(theorem: TheoremId, law: Law) -> AsymptoticPrediction {
    AsymptoticPrediction { theorem, law }
}

#[test]
fn power_fit_on_exact_data() {
    let data: Vec<(f64, f64)> = LADDER.iter().map(|&e| (e, 3.5 * e * e)).collect();
    let f = fit_power(&data).unwrap();
    assert!((f.p - 2.0).abs() < 1e-12 && (f.c - 3.5).abs() < 1e-10 && (f.r2 - 1.0).abs() < 1e-12);
    assert!(fit_power(&data[..3]).is_err());
    assert!(fit_power(&[(0.1, 1.0), (0.1, 1.0), (0.1, 1.0), (0.1, 1.0)]).is_err());
    assert!(fit_power(&[(0.1, 1.0), (0.05, -1.0), (0.02, 1.0), (0.01, 1.0)]).is_err());
}

#[test]
fn constant_uses_the_two_smallest_points() {
    let data = [(0.16, 100.0), (0.08, 100.0), (0.04, 2.0 * 0.04f64.powi(2)), (0.02, 8.0 * 0.02f64.powi(2))];
    assert!((constant_at_smallest(&data, 2.0) - 4.0).abs() < 1e-12);
}

#[test]
fn log_fit_recovers_both_coefficients() {
    let data: Vec<(f64, f64)> = LADDER
        .iter()
        .map(|&e: &f64| {
            let l = e.ln().abs();
            (e, 6.0 / l - 2.5 / (l * l))
        })
        .collect();
    let f = fit_log(&data).unwrap();
    assert!((f.c - 6.0).abs() < 1e-9 && (f.d + 2.5).abs() < 1e-9, "{f:?}");
    assert!(fit_log(&data[..2]).is_err());
    assert!(fit_log(&[(0.1, 1.0), (0.1, 1.0), (0.1, 1.0)]).is_err());
    assert!(fit_log(&[(1.5, 1.0), (0.1, 1.0), (0.01, 1.0)]).is_err());
}

#[test]
fn judging_each_law() {
    let tol = Tolerances::default();
    let log_pts: Vec<(f64, f64)> = LADDER.iter().map(|&e: &f64| (e, 1.1 * TAU / e.ln().abs())).collect();
    let (_, v) = judge(&law(TheoremId::PDiam, Law::Log { c: TAU }), &log_pts, &tol).unwrap();
    assert!(v.pass && (v.relative_deviation - 0.1).abs() < 1e-9);
    let (_, v) = judge(&law(TheoremId::PDiam, Law::Log { c: TAU / 1.3 }), &log_pts, &tol).unwrap();
    assert!(!v.pass);

    let pow: Vec<(f64, f64)> = LADDER.iter().map(|&e| (e, 5.0 * e.powf(2.02))).collect();
    let (fit, v) = judge(&law(TheoremId::TDisk, Law::Power { c: 5.0, p: 2.0 }), &pow, &tol).unwrap();
    assert!(matches!(fit, FittedLaw::Power { p, .. } if (p - 2.02).abs() < 1e-9));
    assert!(v.pass, "{}", v.detail);
    let (_, v) = judge(&law(TheoremId::TDisk, Law::Power { c: 5.0, p: 1.8 }), &pow, &tol).unwrap();
    assert!(!v.pass);

    let steep: Vec<(f64, f64)> = LADDER.iter().map(|&e| (e, e.powf(3.85))).collect();
    let bound = law(TheoremId::TSegTangent, Law::UpperBound { p: 4.0 });
    assert!(judge(&bound, &steep, &tol).unwrap().1.pass);
    let shallow: Vec<(f64, f64)> = LADDER.iter().map(|&e| (e, e.powf(3.7))).collect();
    assert!(!judge(&bound, &shallow, &tol).unwrap().1.pass);

    assert!(judge(&law(TheoremId::PShift, Law::Ratio), &pow, &tol).is_err());
}

#[test]
fn ratio_judging() {
    let band = [0.85, 1.15];
    let good = [(0.16, 1.6), (0.08, 1.3), (0.04, 1.12), (0.02, 1.05)];
    assert!(judge_ratio(&good, band).1.pass);
    let out_of_band = [(0.16, 1.9), (0.08, 1.6), (0.04, 1.4), (0.02, 1.3)];
    let (fit, v) = judge_ratio(&out_of_band, band);
    assert!(!v.pass && matches!(fit, FittedLaw::Ratio { last } if last == 1.3));
    let wandering = [(0.16, 1.1), (0.08, 0.9), (0.04, 1.12), (0.02, 1.01)];
    assert!(!judge_ratio(&wandering, band).1.pass);
}

#[test]
fn experiment_validation() {
    let ok = Experiment::new(TheoremId::TDisk, rect(), Template::Disk, LADDER.to_vec());
    ok.validate().unwrap();

    let mut e = ok.clone();
    e.n = 0;
    assert!(e.validate().is_err());

    let mut e = ok.clone();
    e.h_rule = HRule::Fixed { h: 0.01 };
    assert!(e.validate().is_err());

    let e = Experiment::new(TheoremId::TDisk, rect(), Template::Segment { angle: 0.0 }, LADDER.to_vec());
    assert!(e.validate().is_err());

    let e = Experiment::new(TheoremId::TAb, rect(), Template::Segment { angle: 0.3 }, LADDER.to_vec());
    assert!(e.validate().is_err());

    let e = Experiment::new(TheoremId::TDisk, rect(), Template::Disk, vec![0.08, 0.04]);
    assert!(e.validate().is_err());

    let e = Experiment::new(TheoremId::TDisk, rect(), Template::Disk, vec![0.5, 0.08, 0.04]);
    assert!(matches!(e.validate(), Err(Error::Escapes { .. })));
}

#[test]
fn tolerances_deserialize_with_defaults() {
    let t: Tolerances = serde_json::from_str(r#"{"constant": 0.2}"#).unwrap();
    assert_eq!(t.constant, 0.2);
    assert_eq!(t.exponent, 0.1);
    assert_eq!(t.shift_ratio, [0.85, 1.15]);
    assert_eq!(t.capacity_ratio, [0.9, 1.1]);
}

#[test]
fn degenerate_eigenvalue_is_refused() {
    let square = Domain::rectangle(1.0, 1.0).unwrap();
    let mut e = Experiment::new(TheoremId::TDisk, square, Template::Disk, vec![0.16, 0.08, 0.04]);
    e.n = 2;
    assert!(matches!(verify(&e), Err(Error::Hypothesis(_))));
}

#[test]
fn tangent_case_needs_a_zero() {
    let e = Experiment::new(TheoremId::TSegTangent, rect(), Template::Segment { angle: 0.0 }, vec![0.16, 0.12, 0.08]);
    let err = verify(&e).unwrap_err();
    assert!(matches!(&err, Error::Hypothesis(m) if m.contains("u_N(0) = 0")), "{err}");
}

#[test]
fn transversal_segment_rejects_the_tangent_route() {
    let mut e = Experiment::new(TheoremId::TSegTangent, rect(), Template::Segment { angle: 0.0 }, vec![0.16, 0.12, 0.08]);
    e.n = 2;
    let err = verify(&e).unwrap_err();
    assert!(matches!(&err, Error::Hypothesis(m) if m.contains("not tangent")), "{err}");
}

#[test]
fn short_capacity_ladder_report() {
    let mut e = Experiment::new(TheoremId::PNonvanishing, rect(), Template::Disk, vec![0.16, 0.12, 0.08]);
    e.oracle.u0_sq = Some(5.0);
    let r = verify(&e).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert_eq!(r.case_id, "P-nonvanishing");
    assert!(r.local.is_some_and(|l| l.k == 0));
    for row in &r.rows {
        assert!(row.capacity.unwrap() > 0.0 && row.u_capacity.unwrap() > 0.0);
        assert!(row.measured > 0.5 && row.measured < 1.5, "{}", row.measured);
        assert!(row.l2_ratio.unwrap() > 0.0);
        assert!(row.shift.is_none());
    }
    assert!(matches!(r.fitted, FittedLaw::Ratio { .. }));
}

proptest! {
    #[test]
    fn power_fit_is_exact_on_power_laws(c in 0.01f64..100.0, p in 0.5f64..6.0) {
        let data: Vec<(f64, f64)> = LADDER.iter().map(|&e| (e, c * e.powf(p))).collect();
        let f = fit_power(&data).unwrap();
        prop_assert!((f.p - p).abs() < 1e-9);
        prop_assert!((f.c / c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn log_fit_is_exact_on_log_laws(c in 0.1f64..50.0, d in -20.0f64..20.0) {
        let data: Vec<(f64, f64)> = LADDER.iter().map(|&e: &f64| { let l = e.ln().abs(); (e, c / l + d / (l * l)) }).collect();
        let f = fit_log(&data).unwrap();
        prop_assert!((f.c - c).abs() < 1e-8 * (1.0 + c.abs() + d.abs()));
    }
}
