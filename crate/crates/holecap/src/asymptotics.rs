//! ε-ladders: measurement, law fitting and verdicts against predicted
//! leading terms.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::capacity::{potential_on, Data};
use crate::closed_form::{predict, AsymptoticPrediction, Law, PredictParams, TheoremId};
use crate::discrete::{HRule, Layout, Problem, SolverChoice};
use crate::error::{invalid, Error, Result};
use crate::geometry::{concentrating_family, CompactSet, Domain, Template};
use crate::local_expansion::{extract, LocalExpansion};
use crate::spectral::{grid_shift, grid_spectrum, require_simple, EigenvalueShift, GridShift, GridSpectrum};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub p: f64,
    /// From the two smallest ε with the fitted exponent.
    pub c: f64,
    pub r2: f64,
}

/// Least squares on `(log ε, log y)`.
pub fn fit_power(data: &[(f64, f64)]) -> Result<PowerFit> {
    if data.len() < 4 {
        return invalid("a power fit needs at least 4 points");
    }
    if data.iter().any(|&(e, y)| !(e > 0.0) || !(y > 0.0)) {
        return invalid("a power fit needs positive ε and y");
    }
    let xs: Vec<f64> = data.iter().map(|d| d.0.ln()).collect();
    let ys: Vec<f64> = data.iter().map(|d| d.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("degenerate ladder: all ε equal");
    }
    let p = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerFit { p, c: constant_at_smallest(data, p), r2 })
}

/// Geometric mean of `y / εᵖ` over the two smallest ε.
pub fn constant_at_smallest(data: &[(f64, f64)], p: f64) -> f64 {
    let mut d = data.to_vec();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    let take = d.len().min(2);
    let s: f64 = d[..take].iter().map(|&(e, y)| (y / e.powf(p)).ln()).sum();
    (s / take as f64).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub c: f64,
    /// Coefficient of the `1/log²ε` correction.
    pub d: f64,
}

/// Least squares of `y ≈ c/|log ε| + d/log²ε`.
pub fn fit_log(data: &[(f64, f64)]) -> Result<LogFit> {
    if data.len() < 3 {
        return invalid("a log fit needs at least 3 points");
    }
    let mut ata = Matrix2::zeros();
    let mut aty = Vector2::zeros();
    for &(e, y) in data {
        if !(e > 0.0 && e < 1.0) {
            return invalid("a log fit needs 0 < ε < 1");
        }
        let l = e.ln().abs();
        let row = Vector2::new(1.0 / l, 1.0 / (l * l));
        ata += row * row.transpose();
        aty += row * y;
    }
    let scale = ata.abs().max();
    if ata.determinant().abs() <= 1e-12 * scale * scale {
        return invalid("degenerate ladder for a log fit");
    }
    let sol = ata.try_inverse().ok_or_else(|| Error::Invalid("degenerate ladder for a log fit".into()))? * aty;
    Ok(LogFit { c: sol[0], d: sol[1] })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute, on fitted exponents.
    pub exponent: f64,
    /// Relative, on constants of power and log laws.
    pub constant: f64,
    /// Upper-bound laws pass with a slope at least `p − bound_slack`.
    pub bound_slack: f64,
    /// Band for the shift / u-capacity ratio.
    pub shift_ratio: [f64; 2],
    /// Band for the u-capacity / (u² Cap) ratio.
    pub capacity_ratio: [f64; 2],
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exponent: 0.1,
            constant: 0.15,
            bound_slack: 0.2,
            shift_ratio: [0.85, 1.15],
            capacity_ratio: [0.9, 1.1],
        }
    }
}

/// Known values that replace the ones measured from the eigenfunction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Oracle {
    pub k: Option<usize>,
    pub beta: Option<f64>,
    /// Relative to the direction of the set (segments) or the x₁-axis.
    pub alpha: Option<f64>,
    pub u0_sq: Option<f64>,
}

fn default_n() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// One ladder experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    #[serde(default)]
    pub name: String,
    pub theorem: TheoremId,
    pub domain: Domain,
    pub template: Template,
    pub ladder: Vec<f64>,
    /// 1-based eigenvalue index.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub h_rule: HRule,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub oracle: Oracle,
    /// Combine `h` and `h/2`; otherwise only `h` is used.
    #[serde(default = "default_true")]
    pub extrapolate: bool,
}

impl Experiment {
    pub fn new(theorem: TheoremId, domain: Domain, template: Template, ladder: Vec<f64>) -> Self {
        Experiment {
            name: theorem.name().to_string(),
            theorem,
            domain,
            template,
            ladder,
            n: 1,
            h_rule: HRule::default(),
            tolerances: Tolerances::default(),
            oracle: Oracle::default(),
            extrapolate: true,
        }
    }

    /// Structural checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("eigenvalue index n is 1-based");
        }
        self.domain.validate()?;
        for &eps in &self.ladder {
            self.h_rule.check(eps)?;
        }
        let ok = match self.theorem {
            TheoremId::TDisk => matches!(self.template, Template::Disk),
            TheoremId::TSeg | TheoremId::TSegTangent | TheoremId::TAb => self.template.is_segment(),
            _ => true,
        };
        if self.theorem == TheoremId::TAb {
            if !matches!(self.template, Template::Segment { angle } if angle == 0.0) {
                return invalid("T-AB poles lie on the x₁-axis: the segment angle must be 0");
            }
            if !self.domain.mirror_symmetric {
                return invalid("T-AB needs a domain symmetric about x₂ = 0");
            }
        }
        if !ok {
            return invalid(format!("{} does not apply to a {:?} template", self.theorem.name(), self.template));
        }
        if self.ladder.len() < 3 {
            return invalid("a ladder needs at least 3 values");
        }
        concentrating_family(&self.domain, &self.template, &self.ladder)?;
        Ok(())
    }

    /// Whether the law is read against `δ = diam K_ε` instead of ε.
    fn uses_diameter(&self) -> bool {
        matches!(self.theorem, TheoremId::TOne | TheoremId::PDiam)
    }

    fn needs_spectrum(&self) -> bool {
        !matches!(self.theorem, TheoremId::PDiam)
    }
}

/// Measurements for one member of the family.
#[derive(Clone, Debug, Default, Serialize)]
pub struct LadderRow {
    pub eps: f64,
    /// `diam K_ε`.
    pub delta: f64,
    pub h: f64,
    pub capacity: Option<f64>,
    pub capacity_raw: Option<f64>,
    pub u_capacity: Option<f64>,
    pub u_capacity_raw: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_perturbed: Option<f64>,
    pub shift: Option<f64>,
    pub shift_raw: Option<f64>,
    /// Per-grid shifts at `h` and `h/2`.
    pub grids: Vec<GridShift>,
    /// `‖V_{K,u}‖² / Cap(K,u)` (or of `V_K` without eigenfunction).
    pub l2_ratio: Option<f64>,
    /// The quantity the law is fitted to.
    pub measured: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedLaw {
    Log { c: f64, d: f64 },
    Power { c: f64, p: f64, r2: f64, c_at_predicted_p: f64 },
    Ratio { last: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub pass: bool,
    /// Relative deviation of the constant (or ratio) from its prediction.
    pub relative_deviation: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderReport {
    pub case_id: String,
    pub theorem: TheoremId,
    pub rows: Vec<LadderRow>,
    pub fitted: FittedLaw,
    pub predicted: AsymptoticPrediction,
    pub local: Option<LocalExpansion>,
    pub verdict: Verdict,
}

impl LadderReport {
    /// `(x, measured)` pairs with `x` the ladder variable of the law.
    pub fn points(&self, diameter: bool) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (if diameter { r.delta } else { r.eps }, r.measured)).collect()
    }
}

/// Fits `points` with the kind of law predicted and judges the result.
pub fn judge(prediction: &AsymptoticPrediction, points: &[(f64, f64)], tol: &Tolerances) -> Result<(FittedLaw, Verdict)> {
    let mut smallest = points.to_vec();
    smallest.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(match prediction.law {
        Law::Log { c } => {
            let fit = fit_log(points)?;
            let dev = fit.c / c - 1.0;
            let pass = dev.abs() <= tol.constant;
            let detail = format!("log constant {:.6} vs {:.6} ({:+.2}%)", fit.c, c, 100.0 * dev);
            (FittedLaw::Log { c: fit.c, d: fit.d }, Verdict { pass, relative_deviation: dev, detail })
        }
        Law::Power { c, p } => {
            let fit = fit_power(points)?;
            let cp = constant_at_smallest(points, p);
            let dev = cp / c - 1.0;
            let pass = (fit.p - p).abs() <= tol.exponent && dev.abs() <= tol.constant;
            let detail = format!(
                "exponent {:.4} vs {p} (±{}), constant {:.6} vs {:.6} ({:+.2}%)",
                fit.p,
                tol.exponent,
                cp,
                c,
                100.0 * dev
            );
            (FittedLaw::Power { c: fit.c, p: fit.p, r2: fit.r2, c_at_predicted_p: cp }, Verdict { pass, relative_deviation: dev, detail })
        }
        Law::UpperBound { p } => {
            let fit = fit_power(points)?;
            let pass = fit.p >= p - tol.bound_slack;
            let detail = format!("slope {:.4} vs bound order {p} (slack {})", fit.p, tol.bound_slack);
            (
                FittedLaw::Power { c: fit.c, p: fit.p, r2: fit.r2, c_at_predicted_p: constant_at_smallest(points, p) },
                Verdict { pass, relative_deviation: fit.p / p - 1.0, detail },
            )
        }
        Law::Proportional { .. } | Law::Ratio => {
            return invalid("ratio laws are judged by the caller");
        }
    })
}

/// Ratio at the smallest ε in `band`, and `|ratio − 1|` non-increasing.
pub fn judge_ratio(points: &[(f64, f64)], band: [f64; 2]) -> (FittedLaw, Verdict) {
    let mut d = points.to_vec();
    d.sort_by(|a, b| b.0.total_cmp(&a.0));
    let last = d.last().map_or(f64::NAN, |p| p.1);
    let in_band = last >= band[0] && last <= band[1];
    let trend = d.windows(2).all(|w| (w[1].1 - 1.0).abs() <= (w[0].1 - 1.0).abs() + 1e-12);
    let detail = format!(
        "ratio at smallest ε {last:.5} (band [{}, {}]); trend toward 1: {}",
        band[0],
        band[1],
        if trend { "monotone" } else { "not monotone" }
    );
    (FittedLaw::Ratio { last }, Verdict { pass: in_band && trend, relative_deviation: last - 1.0, detail })
}

/// Unperturbed spectra keyed by grid spacing.
#[derive(Default)]
pub struct SpectrumCache {
    map: BTreeMap<u64, GridSpectrum>,
}

impl SpectrumCache {
    /// Computes the spectra for every spacing not yet present (in parallel).
    pub fn fill(&mut self, domain: &Domain, hs: &[f64], m: usize) -> Result<()> {
        let todo: Vec<f64> = hs.iter().copied().filter(|h| !self.map.contains_key(&h.to_bits())).collect();
        let mut todo_unique = todo.clone();
        todo_unique.sort_by(|a, b| a.total_cmp(b));
        todo_unique.dedup();
        let got = crate::par::map(&todo_unique, |&h| grid_spectrum(domain, None, h, m));
        for (h, s) in todo_unique.into_iter().zip(got) {
            self.map.insert(h.to_bits(), s?);
        }
        Ok(())
    }

    pub fn get(&self, h: f64) -> Option<&GridSpectrum> {
        self.map.get(&h.to_bits())
    }
}

struct GridMeasure {
    capacity: Option<f64>,
    u_capacity: Option<f64>,
    l2: Option<f64>,
    shift: Option<GridShift>,
}

fn measure_on_grid(exp: &Experiment, k: &CompactSet, h: f64, base: Option<&GridSpectrum>) -> Result<GridMeasure> {
    let t = exp.theorem;
    let n = exp.n;
    let problem = Problem::new(&exp.domain, h, Layout::Node, Some(k), SolverChoice::Auto)?;
    let want_cap = matches!(t, TheoremId::PDiam | TheoremId::PNonvanishing);
    let want_ucap = matches!(t, TheoremId::PNonvanishing | TheoremId::PShift);
    let want_shift = !matches!(t, TheoremId::PDiam | TheoremId::PNonvanishing);
    let mut out = GridMeasure { capacity: None, u_capacity: None, l2: None, shift: None };
    if want_cap {
        let p = potential_on(&problem, Data::One)?;
        out.l2 = Some(p.l2_norm_sq);
        out.capacity = Some(p.energy);
    }
    if want_ucap {
        let base = base.ok_or_else(|| Error::Invalid("u-capacity needs the eigenfunction".into()))?;
        let p = potential_on(&problem, Data::Field(&base.fields[n - 1]))?;
        out.l2 = Some(p.l2_norm_sq);
        out.u_capacity = Some(p.energy);
    }
    drop(problem);
    if want_shift {
        let base = base.ok_or_else(|| Error::Invalid("a shift needs the unperturbed spectrum".into()))?;
        out.shift = Some(grid_shift(&exp.domain, k, n, base)?);
    }
    Ok(out)
}

fn combine(coarse: Option<f64>, fine: Option<f64>) -> Option<f64> {
    match (coarse, fine) {
        (Some(c), Some(f)) => {
            let v = crate::discrete::richardson(c, f, crate::capacity::CAPACITY_ORDER);
            Some(if v.abs() < crate::capacity::ZERO_THRESHOLD { 0.0 } else { v })
        }
        (Some(c), None) => Some(c),
        _ => None,
    }
}

fn measure_row(exp: &Experiment, k: &CompactSet, h: f64, cache: &SpectrumCache) -> Result<LadderRow> {
    let coarse = measure_on_grid(exp, k, h, cache.get(h))?;
    let fine = if exp.extrapolate { Some(measure_on_grid(exp, k, h / 2.0, cache.get(h / 2.0))?) } else { None };
    let f = fine.as_ref();
    let capacity = combine(coarse.capacity, f.and_then(|m| m.capacity));
    let u_capacity = combine(coarse.u_capacity, f.and_then(|m| m.u_capacity));
    let mut row = LadderRow {
        eps: k.epsilon,
        delta: k.diameter(),
        h,
        capacity,
        capacity_raw: coarse.capacity,
        u_capacity,
        u_capacity_raw: coarse.u_capacity,
        ..Default::default()
    };
    let l2 = f.map_or(coarse.l2, |m| m.l2);
    let denom = u_capacity.or(capacity);
    if let (Some(l2), Some(c)) = (l2, denom) {
        if c > 0.0 {
            row.l2_ratio = Some(l2 / c);
        }
    }
    if let Some(cs) = coarse.shift {
        let s = match f.and_then(|m| m.shift.clone()) {
            Some(fs) => EigenvalueShift::from_pair(exp.n, cs.clone(), fs),
            None => EigenvalueShift {
                n: exp.n,
                delta: cs.delta,
                lambda: cs.lambda,
                lambda_perturbed: cs.lambda_perturbed,
                fine: cs.clone(),
                coarse: cs.clone(),
            },
        };
        row.grids = std::iter::once(cs.clone()).chain(f.and_then(|m| m.shift.clone())).collect();
        row.shift_raw = Some(cs.delta);
        row.shift = Some(s.delta);
        row.lambda = Some(s.lambda);
        row.lambda_perturbed = Some(s.lambda_perturbed);
    }
    Ok(row)
}

/// `u_N(0)²` from the finest cached eigenfunction.
fn u0_sq_measured(cache: &SpectrumCache, h: f64, n: usize) -> Option<f64> {
    cache.get(h).and_then(|s| s.fields[n - 1].nearest_value([0.0, 0.0])).map(|v| v * v)
}

/// Runs the ladder of `exp` and compares it with the predicted law.
pub fn verify(exp: &Experiment) -> Result<LadderReport> {
    exp.validate()?;
    let family = concentrating_family(&exp.domain, &exp.template, &exp.ladder)?;
    let hs: Vec<f64> = exp.ladder.iter().map(|&e| exp.h_rule.h(e)).collect();
    let mut all_h = hs.clone();
    if exp.extrapolate {
        all_h.extend(hs.iter().map(|h| h / 2.0));
    }
    let finest = all_h.iter().copied().fold(f64::INFINITY, f64::min);

    let mut cache = SpectrumCache::default();
    let mut local = None;
    if exp.needs_spectrum() {
        // a multiple eigenvalue is rejected on the coarsest grid before the expensive ones
        let coarsest = all_h.iter().copied().fold(0.0, f64::max);
        cache.fill(&exp.domain, &[coarsest], exp.n + 1)?;
        require_simple(&cache.get(coarsest).unwrap().values, exp.n)?;
        cache.fill(&exp.domain, &all_h, exp.n + 1)?;
        for h in &all_h {
            require_simple(&cache.get(*h).unwrap().values, exp.n)?;
        }
        let field = &cache.get(finest).unwrap().fields[exp.n - 1];
        local = match extract(field) {
            Ok(le) => Some(le),
            Err(Error::ZeroFunction) => None,
            Err(e) => return Err(e),
        };
    }
    let prediction = prediction_for(exp, local.as_ref(), &cache, finest)?;

    let jobs: Vec<usize> = (0..family.sets.len()).collect();
    let rows = crate::par::map(&jobs, |&i| measure_row(exp, &family.sets[i], hs[i], &cache));
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let u0_sq = exp.oracle.u0_sq.or_else(|| u0_sq_measured(&cache, finest, exp.n));
    for r in &mut rows {
        r.measured = match exp.theorem {
            TheoremId::PDiam => r.capacity.unwrap_or(f64::NAN),
            TheoremId::PNonvanishing => {
                let u2 = u0_sq.unwrap_or(f64::NAN);
                r.u_capacity.unwrap_or(f64::NAN) / (u2 * r.capacity.unwrap_or(f64::NAN))
            }
            TheoremId::PShift => r.shift.unwrap_or(f64::NAN) / r.u_capacity.unwrap_or(f64::NAN),
            _ => r.shift.unwrap_or(f64::NAN),
        };
    }
    let points: Vec<(f64, f64)> =
        rows.iter().map(|r| (if exp.uses_diameter() { r.delta } else { r.eps }, r.measured)).collect();
    let (fitted, verdict) = match exp.theorem {
        TheoremId::PShift => judge_ratio(&points, exp.tolerances.shift_ratio),
        TheoremId::PNonvanishing => judge_ratio(&points, exp.tolerances.capacity_ratio),
        _ => judge(&prediction, &points, &exp.tolerances)?,
    };
    Ok(LadderReport {
        case_id: if exp.name.is_empty() { exp.theorem.name().to_string() } else { exp.name.clone() },
        theorem: exp.theorem,
        rows,
        fitted,
        predicted: prediction,
        local,
        verdict,
    })
}

/// Prediction parameters from the oracle, falling back to measurements.
fn prediction_for(
    exp: &Experiment,
    local: Option<&LocalExpansion>,
    cache: &SpectrumCache,
    finest: f64,
) -> Result<AsymptoticPrediction> {
    let o = &exp.oracle;
    let angle = match exp.template {
        Template::Segment { angle } => angle,
        _ => 0.0,
    };
    let rotated = local.map(|le| le.rotated(angle));
    let params = PredictParams {
        k: o.k.or(rotated.map(|l| l.k)),
        beta: o.beta.or(rotated.map(|l| l.beta)),
        alpha: o.alpha.or(rotated.map(|l| l.alpha)),
        u0: None,
        u0_sq: o.u0_sq.or_else(|| u0_sq_measured(cache, finest, exp.n)),
    };
    if matches!(exp.theorem, TheoremId::TAb) && params.k.unwrap_or(0) > 0 {
        if let Some(a) = params.alpha {
            if a.sin().abs() < TANGENCY_TOL {
                return Err(Error::Hypothesis("theorem hypothesis α ≠ 0 violated".into()));
            }
        }
    }
    if matches!(exp.theorem, TheoremId::TSeg) && params.k.unwrap_or(0) > 0 {
        if let Some(a) = params.alpha {
            if a.sin().abs() < 1e-9 {
                return Err(Error::Hypothesis(
                    "the segment is tangent to a nodal line (alpha = 0); use T-seg-tangent".into(),
                ));
            }
        }
    }
    if matches!(exp.theorem, TheoremId::TSegTangent) {
        if params.k.unwrap_or(0) == 0 {
            return Err(Error::Hypothesis("the tangent case needs u_N(0) = 0".into()));
        }
        if let Some(a) = params.alpha {
            if a.sin().abs() > TANGENCY_TOL {
                return Err(Error::Hypothesis(format!(
                    "segment is not tangent to a nodal line: |sin(alpha)| = {:.3e}",
                    a.sin().abs()
                )));
            }
        }
    }
    predict(exp.theorem, &params)
}

/// Largest `|sin α|` accepted as tangency to a nodal line.
pub const TANGENCY_TOL: f64 = 1e-3;
