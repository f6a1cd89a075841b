//! Dirichlet eigenvalues of `Ω` and `Ω∖K`, eigenvalue shifts and simplicity.
//!
//! Indices `n` are 1-based and count multiplicity. Shifts are always taken
//! between two spectra computed on the same grid.

use serde::Serialize;

use crate::capacity::CAPACITY_ORDER;
use crate::discrete::{richardson, EigenOptions, Layout, Problem, ScalarField, SolverChoice};
use crate::error::{invalid, Error, Result};
use crate::geometry::{CompactSet, Domain};

/// Relative gap below which two eigenvalues are treated as one multiple value.
pub const SIMPLICITY_TOL: f64 = 1e-3;

/// Error order of eigenvalues of the unperturbed five-point operator.
pub const EIGEN_ORDER: f64 = 2.0;

/// Eigenpairs on a single grid.
#[derive(Clone, Debug)]
pub struct GridSpectrum {
    pub h: f64,
    pub values: Vec<f64>,
    /// `h² Σ v² = 1`, positive at the domain's sample point.
    pub fields: Vec<ScalarField>,
}

/// Eigenpairs of a problem on one grid. Perturbed problems constrain the
/// nodes of `k` to zero.
pub fn grid_spectrum(domain: &Domain, k: Option<&CompactSet>, h: f64, m: usize) -> Result<GridSpectrum> {
    let problem = Problem::new(domain, h, Layout::Node, k, SolverChoice::Direct)?;
    let pairs = problem.eigenpairs(m, &EigenOptions::default(), domain.designated_sample_point())?;
    let (values, fields) = pairs.into_iter().unzip();
    Ok(GridSpectrum { h, values, fields })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralResult {
    pub h: f64,
    /// Eigenvalues at `h`, ascending.
    pub values: Vec<f64>,
    /// Eigenvalues at `h/2`.
    pub refined: Vec<f64>,
    /// Richardson combination of the two.
    pub extrapolated: Vec<f64>,
    /// Eigenfields at `h`.
    #[serde(skip)]
    pub fields: Vec<ScalarField>,
}

impl SpectralResult {
    fn combine(coarse: GridSpectrum, fine: GridSpectrum, order: f64) -> Self {
        let extrapolated = coarse.values.iter().zip(&fine.values).map(|(&c, &f)| richardson(c, f, order)).collect();
        SpectralResult {
            h: coarse.h,
            values: coarse.values,
            refined: fine.values,
            extrapolated,
            fields: coarse.fields,
        }
    }

    /// `λ_{n+1} − λ_n` for consecutive extrapolated eigenvalues.
    pub fn gaps(&self) -> Vec<f64> {
        self.extrapolated.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// The `m` lowest eigenvalues of `Ω`.
pub fn spectrum(domain: &Domain, h: f64, m: usize) -> Result<SpectralResult> {
    let coarse = grid_spectrum(domain, None, h, m)?;
    let fine = grid_spectrum(domain, None, h / 2.0, m)?;
    Ok(SpectralResult::combine(coarse, fine, EIGEN_ORDER))
}

/// The `m` lowest eigenvalues of `Ω∖K`. The rasterized set makes the error
/// first order in `h`, and the extrapolation uses that order.
pub fn perturbed_spectrum(domain: &Domain, k: &CompactSet, h: f64, m: usize) -> Result<SpectralResult> {
    let coarse = grid_spectrum(domain, Some(k), h, m)?;
    let fine = grid_spectrum(domain, Some(k), h / 2.0, m)?;
    Ok(SpectralResult::combine(coarse, fine, CAPACITY_ORDER))
}

/// Whether `λ_n` is separated from its neighbours by more than `rel_tol λ_n`.
pub fn simplicity_gap(values: &[f64], n: usize, rel_tol: f64) -> Result<bool> {
    if n == 0 || n + 1 > values.len() {
        return invalid(format!("simplicity of λ_{n} needs at least {} eigenvalues", n + 1));
    }
    let l = values[n - 1];
    let mut gap = values[n] - l;
    if n >= 2 {
        gap = gap.min(l - values[n - 2]);
    }
    Ok(gap / l > rel_tol)
}

pub(crate) fn require_simple(values: &[f64], n: usize) -> Result<()> {
    if !simplicity_gap(values, n, SIMPLICITY_TOL)? {
        return Err(Error::Hypothesis(format!(
            "theorem hypotheses require simple eigenvalue: λ_{n} is degenerate within relative {SIMPLICITY_TOL}"
        )));
    }
    Ok(())
}

/// `λ_n(Ω∖K) − λ_n(Ω)` on one grid.
#[derive(Clone, Debug, Serialize)]
pub struct GridShift {
    pub h: f64,
    pub lambda: f64,
    pub lambda_perturbed: f64,
    pub delta: f64,
}

/// Shift on one grid; `base` must come from the same `domain` and `h`.
pub fn grid_shift(domain: &Domain, k: &CompactSet, n: usize, base: &GridSpectrum) -> Result<GridShift> {
    if base.values.len() < n {
        return invalid(format!("base spectrum has {} values, λ_{n} requested", base.values.len()));
    }
    let pert = grid_spectrum(domain, Some(k), base.h, n)?;
    let lambda = base.values[n - 1];
    let lambda_perturbed = pert.values[n - 1];
    Ok(GridShift { h: base.h, lambda, lambda_perturbed, delta: lambda_perturbed - lambda })
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenvalueShift {
    pub n: usize,
    pub coarse: GridShift,
    pub fine: GridShift,
    /// Extrapolated `Δλ`.
    pub delta: f64,
    /// Extrapolated `λ_n(Ω)`.
    pub lambda: f64,
    /// `lambda + delta`.
    pub lambda_perturbed: f64,
}

impl EigenvalueShift {
    pub fn from_pair(n: usize, coarse: GridShift, fine: GridShift) -> Self {
        let delta = richardson(coarse.delta, fine.delta, CAPACITY_ORDER);
        let lambda = richardson(coarse.lambda, fine.lambda, EIGEN_ORDER);
        EigenvalueShift { n, coarse, fine, delta, lambda, lambda_perturbed: lambda + delta }
    }
}

/// `λ_n(Ω∖K) − λ_n(Ω)` at `h` and `h/2`, rejecting a multiple `λ_n`.
pub fn eigenvalue_shift(domain: &Domain, k: &CompactSet, n: usize, h: f64) -> Result<EigenvalueShift> {
    if n == 0 {
        return invalid("eigenvalue index is 1-based");
    }
    let mut shifts = Vec::with_capacity(2);
    for hh in [h, h / 2.0] {
        let base = grid_spectrum(domain, None, hh, n + 1)?;
        require_simple(&base.values, n)?;
        shifts.push(grid_shift(domain, k, n, &base)?);
    }
    let fine = shifts.pop().unwrap();
    let coarse = shifts.pop().unwrap();
    Ok(EigenvalueShift::from_pair(n, coarse, fine))
}
