use std::f64::consts::PI;

use holecap::geometry::{CompactSet, Domain};
use holecap::spectral::*;
use holecap::Error;

/// First root of `J0(k)Y0(0.3k) − J0(0.3k)Y0(k)`, squared.
const ANNULUS_03: f64 = 19.46922692484467;

#[test]
fn rectangle_spectrum_and_gaps() {
    let d = Domain::rectangle(1.0, 0.8).unwrap();
    let s = spectrum(&d, 1.0 / 64.0, 3).unwrap();
    let exact = [PI * PI * 2.5625, PI * PI * 5.5625, PI * PI * 7.25];
    for (x, e) in s.extrapolated.iter().zip(exact) {
        assert!((x - e).abs() < 2e-4 * e);
    }
    assert_eq!(s.gaps().len(), 2);
    assert!(s.gaps().iter().all(|&g| g > 1.0));
    assert_eq!(s.fields.len(), 3);
}

#[test]
fn annulus_eigenvalue() {
    let d = Domain::disk(1.0).unwrap();
    let hole = CompactSet::disk([0.0, 0.0], 0.3);
    let s = perturbed_spectrum(&d, &hole, 1.0 / 64.0, 1).unwrap();
    let x = s.extrapolated[0];
    assert!((x - ANNULUS_03).abs() < 0.01 * ANNULUS_03, "{x}");
}

#[test]
fn removing_a_set_raises_eigenvalues() {
    let d = Domain::rectangle(1.0, 0.8).unwrap();
    let k = CompactSet::disk([0.0, 0.0], 0.08);
    let shift = eigenvalue_shift(&d, &k, 1, 0.01).unwrap();
    assert!(shift.coarse.delta > 0.0 && shift.fine.delta > 0.0 && shift.delta > 0.0);
    assert!((shift.lambda_perturbed - shift.lambda - shift.delta).abs() < 1e-12);
    assert!((shift.lambda - PI * PI * 2.5625).abs() < 1e-3 * shift.lambda);
}

#[test]
fn degenerate_eigenvalues_violate_the_hypothesis() {
    let d = Domain::rectangle(1.0, 1.0).unwrap();
    let k = CompactSet::disk([0.0, 0.0], 0.1);
    let err = eigenvalue_shift(&d, &k, 2, 0.0125).unwrap_err();
    assert!(matches!(err, Error::Hypothesis(_)), "{err}");
    assert!(eigenvalue_shift(&d, &k, 0, 0.0125).is_err());
}

#[test]
fn simplicity_gap_rules() {
    let v = [1.0, 2.0, 2.0005, 4.0];
    assert!(simplicity_gap(&v, 1, SIMPLICITY_TOL).unwrap());
    assert!(!simplicity_gap(&v, 2, SIMPLICITY_TOL).unwrap());
    assert!(!simplicity_gap(&v, 3, SIMPLICITY_TOL).unwrap());
    assert!(simplicity_gap(&v, 4, SIMPLICITY_TOL).is_err());
    assert!(simplicity_gap(&v, 0, SIMPLICITY_TOL).is_err());
}

#[test]
fn grid_shift_needs_enough_base_values() {
    let d = Domain::rectangle(1.0, 0.8).unwrap();
    let base = grid_spectrum(&d, None, 0.02, 1).unwrap();
    let k = CompactSet::disk([0.0, 0.0], 0.16);
    assert!(grid_shift(&d, &k, 2, &base).is_err());
    let s = grid_shift(&d, &k, 1, &base).unwrap();
    assert_eq!(s.lambda, base.values[0]);
    assert!(s.delta > 0.0);
}

#[test]
fn pair_combination_orders() {
    let g = |h: f64, l: f64, p: f64| GridShift { h, lambda: l, lambda_perturbed: p, delta: p - l };
    let s = EigenvalueShift::from_pair(1, g(0.02, 10.4, 12.0), g(0.01, 10.1, 11.5));
    assert!((s.delta - 1.2).abs() < 1e-12);
    assert!((s.lambda - 10.0).abs() < 1e-12);
    assert!((s.lambda_perturbed - 11.2).abs() < 1e-12);
}
