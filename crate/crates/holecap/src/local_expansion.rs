//! Leading harmonic `± β rᵏ sin(α − k t)` of a field at the origin.
//!
//! The field is sampled on two circles; the lowest Fourier mode that clearly
//! dominates fixes `k`, and its amplitude and phase give `β` and `α`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::closed_form::HomogeneousPolynomial;
use crate::discrete::ScalarField;
use crate::error::{invalid, Error, Result};

/// Angles per circle.
pub const SAMPLES: usize = 256;
/// A mode must exceed every lower mode by this factor.
pub const DOMINANCE: f64 = 10.0;
/// ... and the noise estimate by this factor.
pub const NOISE_FACTOR: f64 = 100.0;
/// Highest order searched.
pub const MAX_ORDER: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalExpansion {
    pub k: usize,
    /// `β > 0`.
    pub beta: f64,
    /// `α ∈ [0, π)`.
    pub alpha: f64,
    /// `±1`: the field behaves like `sign · β rᵏ sin(α − k t)`.
    pub sign: f64,
    /// Largest non-leading low mode relative to the leading one.
    pub fit_residual: f64,
    pub radii: [f64; 2],
}

impl LocalExpansion {
    /// `c_0 = sign · β sin α`, the coefficient of `x₁ᵏ`.
    pub fn c0(&self) -> f64 {
        self.sign * self.beta * self.alpha.sin()
    }

    /// Rotates the angular variable so that `t = 0` is the direction `phi`:
    /// `α ↦ α − kφ`, folded back into `[0, π)`.
    pub fn rotated(&self, phi: f64) -> Self {
        let (alpha, flip) = fold_alpha(self.alpha - self.k as f64 * phi);
        LocalExpansion { alpha, sign: self.sign * flip, ..*self }
    }
}

/// `(α mod π, ±1)` with `sin(α − kt)` picking up the sign when shifted by π.
fn fold_alpha(alpha: f64) -> (f64, f64) {
    let m = (alpha / PI).floor();
    let mut a = alpha - m * PI;
    if a >= PI {
        a -= PI;
    }
    if a < 1e-12 || PI - a < 1e-12 {
        a = 0.0;
    }
    (a, if (m as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 })
}

/// Fourier modes `(a_j, b_j)` of `f(t) ≈ a_0 + Σ a_j cos jt + b_j sin jt`.
fn modes(samples: &[f64]) -> Vec<(f64, f64)> {
    let n = samples.len();
    (0..n / 2)
        .map(|j| {
            let (mut a, mut b) = (0.0, 0.0);
            for (i, &v) in samples.iter().enumerate() {
                let t = 2.0 * PI * (i * j % n) as f64 / n as f64;
                a += v * t.cos();
                b += v * t.sin();
            }
            let s = if j == 0 { 1.0 } else { 2.0 } / n as f64;
            (a * s, b * s)
        })
        .collect()
}

struct Circle {
    r: f64,
    k: usize,
    a: f64,
    b: f64,
    residual: f64,
}

fn analyse(field: &ScalarField, r: f64) -> Result<Circle> {
    let mut samples = Vec::with_capacity(SAMPLES);
    for i in 0..SAMPLES {
        let t = 2.0 * PI * i as f64 / SAMPLES as f64;
        let v = field
            .interpolate([r * t.cos(), r * t.sin()])
            .ok_or_else(|| Error::Invalid(format!("circle of radius {r} leaves the grid")))?;
        samples.push(v);
    }
    let m = modes(&samples);
    let amp: Vec<f64> = m.iter().map(|(a, b)| a.hypot(*b)).collect();
    let scale = samples.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let noise = amp[MAX_ORDER + 4..].iter().fold(1e-13 * scale, |s, &v| s.max(v));
    let mut lower = 0.0f64;
    for j in 0..=MAX_ORDER {
        if amp[j] > DOMINANCE * lower && amp[j] > NOISE_FACTOR * noise {
            // mode k + 2 carries the O(r²) Taylor correction and is not a misfit
            let misfit = (0..j).map(|i| amp[i]).fold(amp[j + 1], f64::max);
            return Ok(Circle { r, k: j, a: m[j].0, b: m[j].1, residual: misfit / amp[j] });
        }
        lower = lower.max(amp[j]);
    }
    Err(Error::ZeroFunction)
}

/// Extracts `(k, β, α)` from circles of radii `r0 > r1` around the origin.
pub fn extract_with_radii(field: &ScalarField, r0: f64, r1: f64) -> Result<LocalExpansion> {
    if !(r0 > r1 && r1 > 0.0) {
        return invalid("radii must satisfy r0 > r1 > 0");
    }
    let c0 = analyse(field, r0)?;
    let c1 = analyse(field, r1)?;
    if c0.k != c1.k {
        return invalid(format!("inconsistent vanishing order: k = {} at r = {r0}, k = {} at r = {r1}", c0.k, c1.k));
    }
    let k = c0.k as i32;
    // f_k(t) = r^k β (sin α cos kt − cos α sin kt); the mode grows like
    // r^k (1 + O(r²)), removed by extrapolation in r².
    let scaled = |c: &Circle| (c.a / c.r.powi(k), c.b / c.r.powi(k));
    let (a0, b0) = scaled(&c0);
    let (a1, b1) = scaled(&c1);
    let w = |x0: f64, x1: f64| (r0 * r0 * x1 - r1 * r1 * x0) / (r0 * r0 - r1 * r1);
    let (sa, sb) = (w(a0, a1), w(b0, b1));
    // β sin α = sa, β cos α = −sb
    let beta = sa.hypot(sb);
    let (alpha, sign) = if k == 0 { (PI / 2.0, sa.signum()) } else { fold_alpha(sa.atan2(-sb)) };
    Ok(LocalExpansion {
        k: c0.k,
        beta,
        alpha,
        sign: if sign == 0.0 { 1.0 } else { sign },
        fit_residual: c0.residual.max(c1.residual),
        radii: [r0, r1],
    })
}

/// Extraction with the default radii `16h` and `8h`.
pub fn extract(field: &ScalarField) -> Result<LocalExpansion> {
    let h = field.lattice.h;
    extract_with_radii(field, 16.0 * h, 8.0 * h)
}

/// The harmonic polynomial `sign · β rᵏ sin(α − kt)` in the monomial basis.
pub fn to_polynomial(le: &LocalExpansion) -> HomogeneousPolynomial {
    HomogeneousPolynomial::from_local_form(le.k, le.sign * le.beta, le.alpha)
}
