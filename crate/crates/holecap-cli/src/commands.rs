use std::path::{Path, PathBuf};

use holecap::aharonov_bohm::{ab_collision_asymptotics, isospectrality_check, AbCollisionReport, Sector};
use holecap::asymptotics::LadderReport;
use holecap::capacity::{condenser_capacity, u_capacity, Data};
use holecap::closed_form::{c_constant, d_constant, fourier_a, HomogeneousPolynomial, TheoremId};
use holecap::discrete::HRule;
use holecap::geometry::concentrating_family;
use holecap::spectral::{grid_spectrum, spectrum as domain_spectrum};
use serde::Serialize;

use crate::config::{CapacityData, ExperimentConfig};
use crate::output::{LogLogPlot, Sink};
use crate::CliError;

pub struct Invocation {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub h_rule: Option<HRule>,
    pub ladder: Option<Vec<f64>>,
    pub plot: bool,
}

impl Invocation {
    fn load(&self) -> Result<(ExperimentConfig, Sink, bool), CliError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(r) = self.h_rule {
            cfg.h_rule = r;
        }
        if let Some(l) = &self.ladder {
            cfg.ladder = l.clone();
        }
        let dir = self.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
        let plot = self.plot || cfg.output.plot;
        Ok((cfg, Sink::new(&dir)?, plot))
    }
}

#[derive(Serialize)]
struct ConstantRow {
    k: usize,
    j: usize,
    a_jk: f64,
    c_k: f64,
}

pub const K_MAX: usize = 12;

pub fn constants(k_max: usize, polys: &[String], out: Option<&Path>) -> Result<bool, CliError> {
    if k_max > K_MAX {
        return Err(CliError::usage(format!("k_max must be at most {K_MAX}")));
    }
    let mut rows = Vec::new();
    if k_max == 0 {
        println!("k = 0: no constant, the log law 2π/|log ε| applies");
    }
    for k in 1..=k_max {
        let c = c_constant(k)?;
        println!("C_{k} = {c:.15}");
        for j in 1..=k {
            let a = fourier_a(j, k)?;
            println!("  A_{{{j},{k}}} = {a:.15}");
            rows.push(ConstantRow { k, j, a_jk: a, c_k: c });
        }
    }
    for p in polys {
        let coeffs = p
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::usage(format!("bad polynomial {p:?}: {e}")))?;
        let poly = HomogeneousPolynomial::new(coeffs)?;
        println!("D({p}) = {:.15}", d_constant(&poly)?);
    }
    if let Some(dir) = out {
        Sink::new(dir)?.csv("constants", "constants", &rows)?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct CapacityRow {
    eps: f64,
    delta: f64,
    h: f64,
    capacity: f64,
    raw: f64,
    refined: Option<f64>,
    l2_ratio: Option<f64>,
}

pub fn capacity(inv: &Invocation) -> Result<bool, CliError> {
    let (cfg, sink, plot) = inv.load()?;
    let template = cfg.template()?;
    let family = concentrating_family(&cfg.domain, &template, &cfg.ladder)?;
    let hs = cfg.ladder.iter().map(|&e| cfg.h_rule.check(e)).collect::<Result<Vec<_>, _>>()?;
    let field = match cfg.data {
        CapacityData::One => None,
        CapacityData::Eigenfunction => {
            let finest = hs.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
            let s = grid_spectrum(&cfg.domain, None, finest, cfg.n)?;
            Some(s.fields[cfg.n - 1].clone())
        }
    };
    let mut rows = Vec::new();
    for (k, &h) in family.sets.iter().zip(&hs) {
        let r = match &field {
            None => condenser_capacity(&cfg.domain, k, h)?,
            Some(f) => u_capacity(&cfg.domain, Some(k), Data::Field(f), h)?,
        };
        rows.push(CapacityRow {
            eps: k.epsilon,
            delta: k.diameter(),
            h,
            capacity: r.value,
            raw: r.raw,
            refined: r.refined,
            l2_ratio: (r.value > 0.0).then(|| r.l2_norm_sq / r.value),
        });
        println!("eps = {:<10} capacity = {:.8}", k.epsilon, r.value);
    }
    let stem = cfg.name("capacity");
    sink.csv(&stem, "capacity", &rows)?;
    if plot {
        sink.svg(
            &stem,
            &LogLogPlot {
                title: format!("{stem}: capacity"),
                x_label: "eps".into(),
                y_label: "capacity".into(),
                measured: rows.iter().map(|r| (r.eps, r.capacity)).collect(),
                predicted: vec![],
            },
        )?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct SpectrumRow {
    index: usize,
    h: f64,
    coarse: f64,
    fine: f64,
    extrapolated: f64,
}

pub fn spectrum(inv: &Invocation) -> Result<bool, CliError> {
    let (cfg, sink, _) = inv.load()?;
    let (h, m) = (cfg.h()?, cfg.m()?);
    let s = domain_spectrum(&cfg.domain, h, m)?;
    let rows: Vec<SpectrumRow> = (0..m)
        .map(|i| SpectrumRow {
            index: i + 1,
            h,
            coarse: s.values[i],
            fine: s.refined[i],
            extrapolated: s.extrapolated[i],
        })
        .collect();
    for r in &rows {
        println!("λ_{} = {:.10}", r.index, r.extrapolated);
    }
    let stem = cfg.name("spectrum");
    sink.csv(&stem, "spectrum", &rows)?;
    sink.json(&stem, &s)?;
    Ok(true)
}

#[derive(Serialize)]
struct LadderCsvRow {
    eps: f64,
    delta: f64,
    h: f64,
    measured: f64,
    shift: Option<f64>,
    shift_raw: Option<f64>,
    lambda: Option<f64>,
    lambda_perturbed: Option<f64>,
    capacity: Option<f64>,
    u_capacity: Option<f64>,
    l2_ratio: Option<f64>,
}

fn ladder_rows(report: &LadderReport) -> Vec<LadderCsvRow> {
    report
        .rows
        .iter()
        .map(|r| LadderCsvRow {
            eps: r.eps,
            delta: r.delta,
            h: r.h,
            measured: r.measured,
            shift: r.shift,
            shift_raw: r.shift_raw,
            lambda: r.lambda,
            lambda_perturbed: r.lambda_perturbed,
            capacity: r.capacity,
            u_capacity: r.u_capacity,
            l2_ratio: r.l2_ratio,
        })
        .collect()
}

fn ladder_plot(report: &LadderReport, diameter: bool) -> LogLogPlot {
    let measured = report.points(diameter);
    let predicted = measured.iter().filter_map(|&(x, _)| report.predicted.leading_term(x).map(|y| (x, y))).collect();
    LogLogPlot {
        title: format!("{} ({})", report.case_id, report.theorem.name()),
        x_label: if diameter { "diam K".into() } else { "eps".into() },
        y_label: "measured".into(),
        measured,
        predicted,
    }
}

fn print_verdict(report: &LadderReport) {
    println!(
        "{} {}: {}",
        if report.verdict.pass { "PASS" } else { "FAIL" },
        report.case_id,
        report.verdict.detail
    );
}

pub fn verify(inv: &Invocation) -> Result<bool, CliError> {
    let (cfg, sink, plot) = inv.load()?;
    if cfg.theorem()? == TheoremId::TAb {
        return ab_collide_with(cfg, sink, plot);
    }
    let exp = cfg.experiment()?;
    let report = holecap::asymptotics::verify(&exp)?;
    let stem = exp.name.clone();
    sink.json(&stem, &report)?;
    sink.csv(&stem, "ladder", &ladder_rows(&report))?;
    if plot {
        let diameter = matches!(exp.theorem, TheoremId::TOne | TheoremId::PDiam);
        sink.svg(&stem, &ladder_plot(&report, diameter))?;
    }
    print_verdict(&report);
    Ok(report.verdict.pass)
}

#[derive(Serialize)]
struct PairingRow {
    index: usize,
    magnetic: f64,
    union: f64,
    sector: Sector,
    relative_mismatch: f64,
}

pub fn isospectral(inv: &Invocation) -> Result<bool, CliError> {
    let (cfg, sink, _) = inv.load()?;
    let (h, m) = (cfg.h()?, cfg.m()?);
    let a = cfg.a.ok_or_else(|| CliError::usage("the config needs the pole half-distance `a`"))?;
    let report = isospectrality_check(&cfg.domain, a, h, m)?;
    let rows: Vec<PairingRow> = report
        .pairs
        .iter()
        .map(|p| PairingRow {
            index: p.index,
            magnetic: p.reference,
            union: p.partner,
            sector: p.sector,
            relative_mismatch: p.relative_mismatch,
        })
        .collect();
    for r in &rows {
        println!("{:>3} {:>16.10} {:>16.10} {:?} {:.3e}", r.index, r.magnetic, r.union, r.sector, r.relative_mismatch);
    }
    let stem = cfg.name("isospectral");
    sink.json(&stem, &report)?;
    sink.csv(&stem, "pairing", &rows)?;
    let pass = report.within(cfg.iso_tolerance);
    println!(
        "{} max relative mismatch {:.3e} (tolerance {})",
        if pass { "PASS" } else { "FAIL" },
        report.max_relative_mismatch,
        cfg.iso_tolerance
    );
    Ok(pass)
}

pub fn ab_collide(inv: &Invocation) -> Result<bool, CliError> {
    let (cfg, sink, plot) = inv.load()?;
    ab_collide_with(cfg, sink, plot)
}

/// Largest relative disagreement accepted between the slit and NDN routes.
pub const ROUTE_TOLERANCE: f64 = 1e-3;

fn ab_collide_with(cfg: ExperimentConfig, sink: Sink, plot: bool) -> Result<bool, CliError> {
    let report: AbCollisionReport = ab_collision_asymptotics(&cfg.domain, cfg.n, &cfg.ladder, cfg.h_rule)?;
    let stem = cfg.name("ab-collide");
    sink.json(&stem, &report)?;
    sink.csv(&stem, "ab-routes", &report.routes)?;
    sink.csv(&format!("{stem}-ladder"), "ladder", &ladder_rows(&report.ladder))?;
    if plot {
        sink.svg(&stem, &ladder_plot(&report.ladder, false))?;
    }
    print_verdict(&report.ladder);
    let routes = report.max_route_mismatch <= ROUTE_TOLERANCE;
    println!("routes agree to {:.3e} (tolerance {ROUTE_TOLERANCE})", report.max_route_mismatch);
    Ok(report.ladder.verdict.pass && routes)
}
