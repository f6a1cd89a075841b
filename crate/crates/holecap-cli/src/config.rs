use std::path::{Path, PathBuf};

use holecap::asymptotics::{Experiment, Oracle, Tolerances};
use holecap::closed_form::TheoremId;
use holecap::discrete::HRule;
use holecap::geometry::{Domain, Template};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn iso_tolerance() -> f64 {
    0.01
}

/// Boundary data for the `capacity` command.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityData {
    /// Condenser capacity (`u = 1`).
    #[default]
    One,
    /// u-capacity of the `n`-th eigenfunction.
    Eigenfunction,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub plot: bool,
}

/// One experiment document. Commands read the fields they need.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub theorem: Option<TheoremId>,
    pub domain: Domain,
    pub template: Option<Template>,
    /// ε values, or pole half-distances for `ab-collide`.
    #[serde(default)]
    pub ladder: Vec<f64>,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default)]
    pub h_rule: HRule,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub oracle: Oracle,
    #[serde(default = "yes")]
    pub extrapolate: bool,
    /// Grid spacing for `spectrum` and `isospectral`.
    pub h: Option<f64>,
    /// Number of eigenvalues for `spectrum` and `isospectral`.
    pub m: Option<usize>,
    /// Pole half-distance for `isospectral`.
    pub a: Option<f64>,
    #[serde(default)]
    pub data: CapacityData,
    /// Largest relative mismatch accepted by `isospectral`.
    #[serde(default = "iso_tolerance")]
    pub iso_tolerance: f64,
    #[serde(default)]
    pub output: Output,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::usage(format!("bad config: {e}")))?;
        if !cfg.domain.mirror_symmetric {
            cfg.domain.mirror_symmetric = cfg.domain.sampled_mirror_symmetry();
        }
        cfg.domain.validate()?;
        Ok(cfg)
    }

    pub fn name(&self, fallback: &str) -> String {
        if self.name.is_empty() {
            fallback.to_string()
        } else {
            self.name.clone()
        }
    }

    pub fn theorem(&self) -> Result<TheoremId, CliError> {
        self.theorem.ok_or_else(|| CliError::usage("the config needs `theorem`"))
    }

    pub fn template(&self) -> Result<Template, CliError> {
        self.template.clone().ok_or_else(|| CliError::usage("the config needs a [template] section"))
    }

    pub fn h(&self) -> Result<f64, CliError> {
        match self.h {
            Some(h) if h > 0.0 => Ok(h),
            Some(h) => Err(CliError::usage(format!("grid spacing must be positive, got {h}"))),
            None => Err(CliError::usage("the config needs `h`")),
        }
    }

    pub fn m(&self) -> Result<usize, CliError> {
        match self.m {
            Some(m) if m > 0 => Ok(m),
            _ => Err(CliError::usage("the config needs `m >= 1`")),
        }
    }

    pub fn experiment(&self) -> Result<Experiment, CliError> {
        let theorem = self.theorem()?;
        let mut e = Experiment::new(theorem, self.domain.clone(), self.template()?, self.ladder.clone());
        e.name = self.name(theorem.name());
        e.n = self.n;
        e.h_rule = self.h_rule;
        e.tolerances = self.tolerances;
        e.oracle = self.oracle;
        e.extrapolate = self.extrapolate;
        Ok(e)
    }
}
