use std::f64::consts::{PI, TAU};

use holecap::discrete::{Lattice, Layout, ScalarField};
use holecap::geometry::Domain;
use holecap::local_expansion::*;
use holecap::spectral::grid_spectrum;
use holecap::Error;
use proptest::prelude::*;

fn synthetic(k: usize, beta: f64, alpha: f64, h: f64) -> ScalarField {
    let lat = Lattice::covering(h, Layout::Node, [-0.5, -0.5], [0.5, 0.5]);
    ScalarField::from_fn(lat, |p| {
        let (r, t) = (p[0].hypot(p[1]), p[1].atan2(p[0]));
        beta * r.powi(k as i32) * (alpha - k as f64 * t).sin() + 0.7 * r.powi(k as i32 + 2) * ((k + 2) as f64 * t).cos()
    })
}

#[test]
fn recovers_planted_harmonics() {
    for (k, beta, alpha) in [(0, 1.3, PI / 2.0), (1, 2.0, 0.7), (2, 0.5, 2.1), (3, 1.1, 1.0)] {
        let f = synthetic(k, beta, alpha, 0.002);
        let le = extract(&f).unwrap();
        assert_eq!(le.k, k);
        assert!((le.beta - beta).abs() < 2e-3 * beta, "k={k}: {le:?}");
        if k > 0 {
            assert!((le.alpha - alpha).abs() < 1e-3, "k={k}: {le:?}");
        }
        assert_eq!(le.sign, 1.0);
        assert_eq!(le.radii, [0.032, 0.016]);
    }
}

#[test]
fn negative_constant_sets_the_sign() {
    let f = synthetic(0, -2.0, PI / 2.0, 0.005);
    let le = extract(&f).unwrap();
    assert_eq!((le.k, le.sign), (0, -1.0));
    assert!((le.c0() + 2.0).abs() < 1e-6);
}

#[test]
fn zero_field_has_no_dominant_mode() {
    let lat = Lattice::covering(0.01, Layout::Node, [-0.5, -0.5], [0.5, 0.5]);
    assert!(matches!(extract(&ScalarField::zeros(lat)), Err(Error::ZeroFunction)));
}

#[test]
fn radii_are_validated() {
    let f = synthetic(1, 1.0, 1.0, 0.01);
    assert!(extract_with_radii(&f, 0.1, 0.2).is_err());
    assert!(extract_with_radii(&f, 2.0, 0.1).is_err());
}

#[test]
fn rectangle_eigenfunctions_at_the_centre() {
    let d = Domain::rectangle(1.0, 0.8).unwrap();
    let s = grid_spectrum(&d, None, 1.0 / 200.0, 2).unwrap();
    let u1 = extract(&s.fields[0]).unwrap();
    assert_eq!(u1.k, 0);
    assert!((u1.c0() - 5f64.sqrt()).abs() < 1e-3);
    let u2 = extract(&s.fields[1]).unwrap();
    assert_eq!(u2.k, 1);
    // |∇u₂(0)| = 2π·√5 for u₂ = √5 sin(2πx) sin(πy/0.8)
    assert!((u2.beta - TAU * 5f64.sqrt()).abs() < 2e-3 * u2.beta, "{u2:?}");
    // u₂ ∝ x₁ near the centre, i.e. α = π/2
    assert!((u2.alpha - PI / 2.0).abs() < 1e-4, "{u2:?}");
}

#[test]
fn polynomial_matches_the_field() {
    let f = synthetic(2, 0.8, 0.4, 0.002);
    let le = extract(&f).unwrap();
    let p = to_polynomial(&le);
    let x: [f64; 2] = [0.01, 0.004];
    let (r, t) = (x[0].hypot(x[1]), x[1].atan2(x[0]));
    let want = 0.8 * r * r * (0.4 - 2.0 * t).sin();
    assert!((p.eval(x) - want).abs() < 1e-3 * r * r);
}

proptest! {
    #[test]
    fn rotation_is_a_change_of_frame(k in 1usize..5, beta in 0.2f64..3.0, alpha in 0.0f64..PI, phi in -PI..PI, t in 0.0f64..TAU) {
        let le = LocalExpansion { k, beta, alpha, sign: 1.0, fit_residual: 0.0, radii: [0.2, 0.1] };
        let rot = le.rotated(phi);
        prop_assert!((0.0..PI).contains(&rot.alpha));
        let x = [t.cos(), t.sin()];
        let y = [(t + phi).cos(), (t + phi).sin()];
        let a = to_polynomial(&rot).eval(x);
        let b = to_polynomial(&le).eval(y);
        prop_assert!((a - b).abs() < 1e-9 * beta);
    }
}
