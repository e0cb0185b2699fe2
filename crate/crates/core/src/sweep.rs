//! Parameter sweeps over a grid of sample transmissivities.
//!
//! A sweep is described by a TOML file:
//!
//! ```toml
//! schema_version = 1
//! eta_grid = [0.5, 0.9, 0.99]
//! normalization = "lossless-ql"
//! output_format = "csv"
//! output_path = "sweep.csv"
//!
//! [[schemes]]
//! family = "mp"
//! m = 15
//!
//! [[schemes]]
//! family = "sqz"
//! n_sq = inf
//! eta_p = 0.9
//! eta_d = 0.9
//! ```
//!
//! Each scheme carries its own external losses (`eta_p`, `eta_rt`, `eta_d`,
//! all defaulting to 1); the sample transmissivity comes from the grid. The
//! output has one row per (scheme, eta) pair, schemes in file order and eta
//! in grid order.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LossBudget;
use crate::schemes::{EfficiencyReport, Family, SchemeSpec};
use crate::table::{Cell, OutputFormat, Table};

pub const SCHEMA_VERSION: u32 = 1;

pub const SWEEP_COLUMNS: [&str; 12] = [
    "family",
    "n",
    "m",
    "n_sq",
    "eta",
    "eta_p",
    "eta_rt",
    "eta_d",
    "j_per_unit",
    "dose_per_unit",
    "xi",
    "xi_ratio",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Ratios against the lossless quantum limit `4 eta / (1 - eta)`.
    #[default]
    LosslessQl,
    /// Placeholder for a loss-aware limit; rejected at validation.
    LossyQlUnsupported,
}

fn one() -> f64 {
    1.0
}

/// One scheme of a sweep. The sample transmissivity is supplied per grid
/// point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepScheme {
    pub family: Family,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub n_sq: Option<f64>,
    #[serde(default = "one")]
    pub eta_p: f64,
    #[serde(default = "one")]
    pub eta_rt: f64,
    #[serde(default = "one")]
    pub eta_d: f64,
}

impl SweepScheme {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            n: None,
            m: None,
            n_sq: None,
            eta_p: 1.0,
            eta_rt: 1.0,
            eta_d: 1.0,
        }
    }

    pub fn at(&self, eta: f64) -> Result<SchemeSpec> {
        let budget = LossBudget::new(eta, self.eta_p, self.eta_rt, self.eta_d)?;
        Ok(SchemeSpec {
            family: self.family,
            n: self.n,
            m: self.m,
            n_sq: self.n_sq,
            budget,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub eta_grid: Vec<f64>,
    pub schemes: Vec<SweepScheme>,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub output_format: OutputFormat,
    pub output_path: PathBuf,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version must be {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if self.eta_grid.is_empty() {
            return Err(Error::Config("eta_grid must not be empty".into()));
        }
        for &eta in &self.eta_grid {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::Domain {
                    name: "eta_grid",
                    value: eta,
                    expected: "every value in (0, 1)",
                });
            }
        }
        if let Some(w) = self.eta_grid.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!(
                "eta_grid must be strictly increasing ({} is followed by {})",
                w[0], w[1]
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("schemes must list at least one scheme".into()));
        }
        if self.normalization == Normalization::LossyQlUnsupported {
            return Err(Error::Config(
                "normalization 'lossy-ql-unsupported' is not implemented; use 'lossless-ql'".into(),
            ));
        }
        for s in &self.schemes {
            s.at(self.eta_grid[0])?.validate()?;
        }
        Ok(())
    }
}

fn report_row(r: &EfficiencyReport) -> Vec<Cell> {
    let s = &r.spec_echo;
    vec![
        s.family.name().into(),
        s.n.into(),
        s.m.into(),
        s.n_sq.into(),
        s.budget.eta.into(),
        s.budget.eta_p.into(),
        s.budget.eta_rt.into(),
        s.budget.eta_d.into(),
        r.j_per_unit.into(),
        r.dose_per_unit.into(),
        r.xi.into(),
        r.xi_ratio.into(),
    ]
}

/// Long-format table of efficiency reports, one row each.
pub fn reports_table(reports: &[EfficiencyReport]) -> Table {
    let mut table = Table::new(SWEEP_COLUMNS);
    table.rows = reports.iter().map(report_row).collect();
    table
}

/// Evaluates every (scheme, eta) pair of the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<Table> {
    config.validate()?;
    let jobs: Vec<(SweepScheme, f64)> = config
        .schemes
        .iter()
        .flat_map(|s| config.eta_grid.iter().map(move |&eta| (*s, eta)))
        .collect();
    let reports: Vec<EfficiencyReport> = jobs
        .par_iter()
        .map(|(s, eta)| s.at(*eta)?.evaluate())
        .collect::<Result<_>>()?;
    Ok(reports_table(&reports))
}

/// Runs the sweep and writes it to the configured path.
pub fn cmd_sweep(config: &SweepConfig) -> Result<Table> {
    let table = run_sweep(config)?;
    table.write(&config.output_path, config.output_format)?;
    Ok(table)
}

/// One parsed row of a sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub spec: SchemeSpec,
    pub j_per_unit: f64,
    pub dose_per_unit: f64,
    pub xi: f64,
    pub xi_ratio: f64,
}

fn parse_field<T: std::str::FromStr>(field: &str, column: &str, line: usize) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: cannot parse {column} = '{field}'")))
}

fn parse_optional<T: std::str::FromStr>(field: &str, column: &str, line: usize) -> Result<Option<T>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, column, line).map(Some)
    }
}

/// Reads back a CSV written by [`cmd_sweep`].
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config("empty sweep file".into()))?;
    if header != SWEEP_COLUMNS.join(",") {
        return Err(Error::Config(format!("unexpected sweep header '{header}'")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let line_no = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != SWEEP_COLUMNS.len() {
                return Err(Error::Config(format!(
                    "line {line_no}: expected {} fields, found {}",
                    SWEEP_COLUMNS.len(),
                    f.len()
                )));
            }
            let real = |k: usize| parse_field::<f64>(f[k], SWEEP_COLUMNS[k], line_no);
            let budget = LossBudget::new(real(4)?, real(5)?, real(6)?, real(7)?)?;
            Ok(SweepRow {
                spec: SchemeSpec {
                    family: parse_field(f[0], "family", line_no)?,
                    n: parse_optional(f[1], "n", line_no)?,
                    m: parse_optional(f[2], "m", line_no)?,
                    n_sq: parse_optional(f[3], "n_sq", line_no)?,
                    budget,
                },
                j_per_unit: real(8)?,
                dose_per_unit: real(9)?,
                xi: real(10)?,
                xi_ratio: real(11)?,
            })
        })
        .collect()
}
