//! Exact capacity series for segments in ellipses and disks in disks, the
//! constants `A_{j,k}`, `C_k`, `D(P_k)`, and leading-term predictors.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Nodes of the periodic trapezoid rule used for every circle integral.
pub const QUADRATURE_NODES: usize = 4096;

/// `∫₀^{2π} f(t) dt` by the periodic trapezoid rule.
pub fn circle_integral(f: impl Fn(f64) -> f64) -> f64 {
    let n = QUADRATURE_NODES;
    let dt = TAU / n as f64;
    (0..n).map(|i| f(i as f64 * dt)).sum::<f64>() * dt
}

/// Homogeneous polynomial `Σ_j c_j x₁^{k−j} x₂^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPolynomial {
    pub coeffs: Vec<f64>,
}

impl HomogeneousPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("a homogeneous polynomial needs at least one coefficient");
        }
        Ok(HomogeneousPolynomial { coeffs })
    }

    pub fn constant(c: f64) -> Self {
        HomogeneousPolynomial { coeffs: vec![c] }
    }

    pub fn x1() -> Self {
        HomogeneousPolynomial { coeffs: vec![1.0, 0.0] }
    }

    pub fn x2() -> Self {
        HomogeneousPolynomial { coeffs: vec![0.0, 1.0] }
    }

    /// `β rᵏ sin(α − kt)` written in the monomial basis.
    pub fn from_local_form(k: usize, beta: f64, alpha: f64) -> Self {
        // sin(α − kt) rᵏ = sin α Re(zᵏ) − cos α Im(zᵏ)
        let (s, c) = alpha.sin_cos();
        let mut coeffs = vec![0.0; k + 1];
        let mut binom = 1.0f64;
        for (j, cj) in coeffs.iter_mut().enumerate() {
            if j > 0 {
                binom *= (k + 1 - j) as f64 / j as f64;
            }
            // iʲ = 1, i, −1, −i
            *cj = match j % 4 {
                0 => beta * s * binom,
                1 => -beta * c * binom,
                2 => -beta * s * binom,
                _ => beta * c * binom,
            };
        }
        HomogeneousPolynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let k = self.degree() as i32;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * x[0].powi(k - j as i32) * x[1].powi(j as i32))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

/// `A_{j,k} = (1/π) ∫₀^{2π} cosᵏη cos jη dη`; exactly 0 for `j > k`.
pub fn fourier_a(j: usize, k: usize) -> Result<f64> {
    if j == 0 || k == 0 {
        return invalid("A_{j,k} is defined for j, k >= 1");
    }
    if j > k {
        return Ok(0.0);
    }
    Ok(circle_integral(|t| t.cos().powi(k as i32) * (j as f64 * t).cos()) / PI)
}

/// `C_k = Σ_{j=1}^k j A_{j,k}²`.
pub fn c_constant(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Invalid("C_k is undefined for k = 0 (the log law applies)".into()));
    }
    let mut s = 0.0;
    for j in 1..=k {
        let a = fourier_a(j, k)?;
        s += j as f64 * a * a;
    }
    Ok(s)
}

/// Elliptic radius of the ellipse with foci `±ε` and minor semi-axis `L`.
pub fn xi_eps(eps: f64, l: f64) -> Result<f64> {
    if !(eps > 0.0 && l > 0.0) {
        return invalid("xi_eps needs eps > 0 and L > 0");
    }
    let r = l / eps;
    Ok((r + (1.0 + r * r).sqrt()).ln())
}

/// Cosine coefficients `a_0..a_k` of `η ↦ P(cos η, 0)`; the constant mode
/// enters the series as `a_0/2`.
pub fn segment_fourier_coeffs(p: &HomogeneousPolynomial) -> Vec<f64> {
    let k = p.degree();
    (0..=k)
        .map(|j| circle_integral(|t| p.eval([t.cos(), 0.0]) * (j as f64 * t).cos()) / PI)
        .collect()
}

/// Mode energies `∫|a_j'|²` and `∫|a_j|²` over `[0, ξ_ε]` for unit `a_j(0)`.
fn ellipse_mode_integrals(j: usize, xi: f64) -> (f64, f64) {
    let x = j as f64 * xi;
    let one_minus_plus = -(2.0 * x).exp_m1(); // 1 − e^{2jξ}
    let one_minus_minus = -(-2.0 * x).exp_m1(); // 1 − e^{−2jξ}
    let prod = one_minus_plus * one_minus_minus;
    let jf = j as f64;
    let d_int = 0.5 * jf * ((-2.0 * x).exp() - (2.0 * x).exp() - 4.0 * x) / prod;
    let v_int = (-1.0 / one_minus_plus + 1.0 / one_minus_minus + 4.0 * x / prod) / (2.0 * jf);
    (d_int, v_int)
}

/// Exact finite-ε energy of the harmonic extension of `P` from the segment
/// `[−ε,ε]×{0}` to the ellipse with foci `±ε` and minor semi-axis `L`.
pub fn ellipse_segment_capacity_exact(eps: f64, l: f64, p: &HomogeneousPolynomial) -> Result<f64> {
    let xi = xi_eps(eps, l)?;
    let k = p.degree();
    let a = segment_fourier_coeffs(p);
    let mut s = 0.5 * PI * a[0] * a[0] / xi;
    for (j, aj) in a.iter().enumerate().skip(1) {
        if *aj == 0.0 || aj.abs() < 1e-15 {
            continue;
        }
        let (d_int, v_int) = ellipse_mode_integrals(j, xi);
        s += PI * aj * aj * (d_int + (j * j) as f64 * v_int);
    }
    Ok(eps.powi(2 * k as i32) * s)
}

/// Fourier data of `P` on the unit circle: `(a_0..a_k, b_1..b_k)` with the
/// constant mode entering as `a_0/2`.
pub fn disk_fourier_coeffs(p: &HomogeneousPolynomial) -> (Vec<f64>, Vec<f64>) {
    let k = p.degree();
    let f = |t: f64| p.eval([t.cos(), t.sin()]);
    let a = (0..=k).map(|j| circle_integral(|t| f(t) * (j as f64 * t).cos()) / PI).collect();
    let b = (1..=k).map(|j| circle_integral(|t| f(t) * (j as f64 * t).sin()) / PI).collect();
    (a, b)
}

/// `D(P_k) = k a_0²/4 + Σ_j (k+j)²/(2k) (a_j² + b_j²)`.
pub fn d_constant(p: &HomogeneousPolynomial) -> Result<f64> {
    let k = p.degree();
    if k == 0 {
        return invalid("D(P_k) is undefined for k = 0 (the log law applies)");
    }
    if p.is_zero() {
        return invalid("D(P_k) needs a nonzero polynomial");
    }
    let (a, b) = disk_fourier_coeffs(p);
    let kf = k as f64;
    let mut s = kf * a[0] * a[0] / 4.0;
    for j in 1..=k {
        let jf = j as f64;
        s += (kf + jf).powi(2) / (2.0 * kf) * (a[j] * a[j] + b[j - 1] * b[j - 1]);
    }
    Ok(s)
}

/// Exact `Cap_{B(0,R)}(B̄_ε, P)`: energy of `P` inside `B_ε` plus the energy of
/// its harmonic extension to the annulus.
pub fn disk_pk_capacity_exact(eps: f64, r: f64, p: &HomogeneousPolynomial) -> Result<f64> {
    let k = p.degree();
    if k == 0 {
        return invalid("disk_pk_capacity_exact needs k >= 1");
    }
    if !(eps > 0.0 && eps < r) {
        return invalid("disk_pk_capacity_exact needs 0 < eps < R");
    }
    let (a, b) = disk_fourier_coeffs(p);
    let kf = k as f64;
    let e2k = eps.powi(2 * k as i32);
    let q = (eps / r).powi(2);
    let mut inner = kf * kf * PI * a[0] * a[0] / 2.0;
    let mut outer = PI * a[0] * a[0] * e2k / (2.0 * (r / eps).ln());
    for j in 1..=k {
        let m2 = a[j] * a[j] + b[j - 1] * b[j - 1];
        let jf = j as f64;
        inner += PI * (kf * kf + jf * jf) * m2;
        let qj = q.powi(j as i32);
        outer += PI * e2k * jf * m2 * (1.0 + qj) / (1.0 - qj);
    }
    Ok(e2k / (2.0 * kf) * inner + outer)
}

/// `2π / log(R/δ)`, the capacity of `B̄_δ` in `B_R`.
pub fn radial_condenser_capacity(delta: f64, r: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < r) {
        return invalid("radial capacity needs 0 < delta < R");
    }
    Ok(TAU / (r / delta).ln())
}

/// Statements whose leading terms can be predicted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    /// Shift for general compacta away from zeros: `u²(x₀) 2π/|log δ|`.
    #[serde(rename = "T-one")]
    TOne,
    /// Segments at a zero of order k, transversal to the nodal lines.
    #[serde(rename = "T-seg")]
    TSeg,
    /// Disks at a zero of order k.
    #[serde(rename = "T-disk")]
    TDisk,
    /// Colliding Aharonov–Bohm poles.
    #[serde(rename = "T-AB")]
    TAb,
    /// Segment tangent to a nodal line: upper bound only.
    #[serde(rename = "T-seg-tangent")]
    TSegTangent,
    /// u-capacity vs `u²(x₀)` times condenser capacity.
    #[serde(rename = "P-nonvanishing")]
    PNonvanishing,
    /// Condenser capacity of small sets: `2π/|log δ|`.
    #[serde(rename = "P-diam")]
    PDiam,
    /// Eigenvalue shift vs u-capacity.
    #[serde(rename = "P-shift")]
    PShift,
}

impl TheoremId {
    pub fn name(&self) -> &'static str {
        match self {
            TheoremId::TOne => "T-one",
            TheoremId::TSeg => "T-seg",
            TheoremId::TDisk => "T-disk",
            TheoremId::TAb => "T-AB",
            TheoremId::TSegTangent => "T-seg-tangent",
            TheoremId::PNonvanishing => "P-nonvanishing",
            TheoremId::PDiam => "P-diam",
            TheoremId::PShift => "P-shift",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "T-one" => TheoremId::TOne,
            "T-seg" => TheoremId::TSeg,
            "T-disk" => TheoremId::TDisk,
            "T-AB" => TheoremId::TAb,
            "T-seg-tangent" => TheoremId::TSegTangent,
            "P-nonvanishing" => TheoremId::PNonvanishing,
            "P-diam" => TheoremId::PDiam,
            "P-shift" => TheoremId::PShift,
            _ => return invalid(format!("unknown theorem id {s:?}")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Law {
    /// `c / |log x|`.
    Log { c: f64 },
    /// `c xᵖ`.
    Power { c: f64, p: f64 },
    /// `O(xᵖ)`, no constant.
    UpperBound { p: f64 },
    /// `factor · Cap(K_ε)`.
    Proportional { factor: f64 },
    /// The measured quantity divided by a reference tends to 1.
    Ratio,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub theorem: TheoremId,
    pub law: Law,
}

impl AsymptoticPrediction {
    /// Leading term at `x`, when the law has one.
    pub fn leading_term(&self, x: f64) -> Option<f64> {
        match self.law {
            Law::Log { c } => Some(c / x.ln().abs()),
            Law::Power { c, p } => Some(c * x.powf(p)),
            _ => None,
        }
    }
}

/// Parameters of the local behaviour of `u_N` at the concentration point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictParams {
    pub k: Option<usize>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    /// `u(x₀)`; `u0_sq` takes precedence when both are given.
    pub u0: Option<f64>,
    pub u0_sq: Option<f64>,
}

impl PredictParams {
    fn u0_sq(&self, who: &str) -> Result<f64> {
        self.u0_sq
            .or(self.u0.map(|u| u * u))
            .ok_or_else(|| Error::Invalid(format!("{who} needs u(x0) or u(x0)^2")))
    }

    fn k(&self, who: &str) -> Result<usize> {
        self.k.ok_or_else(|| Error::Invalid(format!("{who} needs the vanishing order k")))
    }

    fn beta(&self, who: &str) -> Result<f64> {
        self.beta.ok_or_else(|| Error::Invalid(format!("{who} needs beta")))
    }
}

/// Leading-order law for a statement.
pub fn predict(theorem: TheoremId, params: &PredictParams) -> Result<AsymptoticPrediction> {
    let who = theorem.name();
    let law = match theorem {
        TheoremId::TOne => Law::Log { c: TAU * params.u0_sq(who)? },
        TheoremId::PDiam => Law::Log { c: TAU },
        TheoremId::PNonvanishing => Law::Proportional { factor: params.u0_sq(who)? },
        TheoremId::PShift => Law::Ratio,
        TheoremId::TSeg | TheoremId::TAb => {
            let k = params.k(who)?;
            if k == 0 {
                Law::Log { c: TAU * params.u0_sq(who)? }
            } else {
                let beta = params.beta(who)?;
                let alpha = params
                    .alpha
                    .ok_or_else(|| Error::Invalid(format!("{who} with k >= 1 needs alpha")))?;
                let s = alpha.sin();
                if s.abs() < 1e-9 {
                    return Err(Error::Hypothesis(format!(
                        "{who} requires alpha != 0 (segment not tangent to a nodal line); route to T-seg-tangent"
                    )));
                }
                Law::Power { c: PI * beta * beta * s * s * c_constant(k)?, p: 2.0 * k as f64 }
            }
        }
        TheoremId::TDisk => {
            let k = params.k(who)?;
            if k == 0 {
                Law::Log { c: TAU * params.u0_sq(who)? }
            } else {
                let beta = params.beta(who)?;
                Law::Power { c: 2.0 * k as f64 * PI * beta * beta, p: 2.0 * k as f64 }
            }
        }
        TheoremId::TSegTangent => {
            let k = params.k(who)?;
            Law::UpperBound { p: 2.0 * k as f64 + 2.0 }
        }
    };
    Ok(AsymptoticPrediction { theorem, law })
}
