//! Experiment parameters from flags and JSON config files.
//!
//! Every subcommand accepts the same [`Params`]; a config file supplies the
//! same fields by name and flags override it field by field.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use entropy_lab::divergence::FDivergence;
use entropy_lab::measure::GeneratorMeasure;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalOpts {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for Monte Carlo and random search.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Add wall-clock runtimes to the report.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[arg(skip)]
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,

    /// Rank of the free group.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Generator weights: d values (symmetric, summing to 1/2) or 2d values
    /// in the order a1, a1', a2, a2', ...
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    /// Use the uniform measure on the generators.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub uniform: bool,
    /// Entropy weights, in the same layout as `p`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    /// Divergence: kl, reverse_kl, chi2, hellinger2 or linear.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// Abel parameters in (0, 1).
    #[arg(long = "a", value_delimiter = ',', num_args = 1..)]
    #[serde(default, alias = "a_list", skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    /// Cylinder depth.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Monte Carlo paths.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    /// Random densities to sample.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Convolution powers for the entropy rate.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    /// Lattice dimension (1 or 2).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Abel tail tolerance.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Ball radius for the truncated-sum oracle.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    /// Solver tolerance.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $(if $top.$field.is_some() {
            $base.$field = $top.$field;
        })*
    };
}

impl Params {
    /// `self` with every field set in `top` replaced.
    pub fn overridden_by(mut self, top: Params) -> Params {
        overlay!(
            self, top, command, seed, format, out, d, p, lambda, f, a, depth, paths, samples, n,
            dim, eps, radius, tol
        );
        self.uniform |= top.uniform;
        self
    }

    pub fn with_globals(mut self, g: &GlobalOpts) -> Params {
        if g.seed.is_some() {
            self.seed = g.seed;
        }
        if g.format.is_some() {
            self.format = g.format;
        }
        if g.out.is_some() {
            self.out = g.out.clone();
        }
        self
    }

    pub fn rank(&self) -> Result<usize, CliError> {
        match self.d {
            Some(d) if d >= 2 => Ok(d),
            Some(d) => Err(CliError::Validation(format!("d must be at least 2, got {d}"))),
            None => Err(CliError::Validation("d is required".into())),
        }
    }

    pub fn divergence(&self) -> Result<FDivergence, CliError> {
        Ok(FDivergence::builtin(self.f.as_deref().unwrap_or("kl"))?)
    }

    /// The walk measure from `--p` or `--uniform`.
    pub fn walk(&self) -> Result<GeneratorMeasure, CliError> {
        let d = self.rank()?;
        match (&self.p, self.uniform) {
            (Some(_), true) => Err(CliError::Validation(
                "give either p or uniform, not both".into(),
            )),
            (Some(p), false) => generator_measure(d, p, "p"),
            (None, true) => Ok(GeneratorMeasure::uniform(d)?),
            (None, false) => Err(CliError::Validation("p or uniform is required".into())),
        }
    }

    /// `λ` from `--lambda`, if given.
    pub fn weights(&self) -> Result<Option<GeneratorMeasure>, CliError> {
        let d = self.rank()?;
        self.lambda
            .as_ref()
            .map(|l| generator_measure(d, l, "lambda"))
            .transpose()
    }

    pub fn a_list(&self, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let list = self.a.clone().unwrap_or_else(|| default.to_vec());
        if list.is_empty() {
            return Err(CliError::Validation("a list is empty".into()));
        }
        for &a in &list {
            if !(a > 0.0 && a < 1.0) {
                return Err(CliError::Validation(format!("a must lie in (0,1), got {a}")));
            }
        }
        Ok(list)
    }

    pub fn positive_tol(&self, default: f64) -> Result<f64, CliError> {
        match self.tol {
            Some(t) if !(t > 0.0 && t.is_finite()) => {
                Err(CliError::Validation(format!("tol must be positive, got {t}")))
            }
            Some(t) => Ok(t),
            None => Ok(default),
        }
    }

    pub fn unit_eps(&self, default: f64) -> Result<f64, CliError> {
        let eps = self.eps.unwrap_or(default);
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CliError::Validation(format!("eps must lie in (0,1), got {eps}")));
        }
        Ok(eps)
    }
}

fn generator_measure(d: usize, values: &[f64], name: &str) -> Result<GeneratorMeasure, CliError> {
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(CliError::Validation(format!(
            "{name} entries must be positive, got {bad}"
        )));
    }
    if values.len() == d {
        let sum: f64 = values.iter().sum();
        if (2.0 * sum - 1.0).abs() > 1e-9 {
            return Err(CliError::Validation(format!(
                "{name} has {d} entries, so twice their sum must be 1 within 1e-9; got {}",
                2.0 * sum
            )));
        }
        Ok(GeneratorMeasure::symmetric(values)?)
    } else if values.len() == 2 * d {
        Ok(GeneratorMeasure::new(d, values.to_vec())?)
    } else {
        Err(CliError::Validation(format!(
            "{name} needs {d} or {} entries, got {}",
            2 * d,
            values.len()
        )))
    }
}

pub fn load_config(path: &Path) -> Result<Params, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
}
