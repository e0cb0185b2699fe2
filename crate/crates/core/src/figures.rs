//! Data behind the comparison curves: efficiency relative to the lossless
//! quantum limit versus absorption probability or scheme parameter.
//!
//! Grid points are evaluated in parallel and assembled in grid order, so
//! the tables do not depend on the thread count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::chain::ci_limit_xi;
use crate::error::{Error, Result};
use crate::model::LossBudget;
use crate::schemes::{
    equivalent_db_for_ratio, optimal_int_param, ql_ratio, xi_cic, xi_cio, xi_mp, xi_noon, xi_sp, xi_sqz,
    Family, DEFAULT_SEARCH_MAX,
};
use crate::table::{Cell, Table};

/// Chain lengths shown for the optimized chain interferometer.
pub const CIO_STAGES: [usize; 3] = [4, 32, 128];
/// Chain length whose ratio sets the `equivalent_db` column.
pub const EQUIVALENT_DB_STAGES: usize = 32;
/// Largest parameter in the parameter-sweep figure.
pub const PARAM_MAX: usize = 128;
/// Sample transmissivity for the parameter-sweep figure.
pub const PARAM_ETA: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureName {
    Fig1a,
    Fig1b,
    Fig3,
}

impl FigureName {
    pub const ALL: [FigureName; 3] = [FigureName::Fig1a, FigureName::Fig1b, FigureName::Fig3];

    pub fn name(self) -> &'static str {
        match self {
            FigureName::Fig1a => "fig1a",
            FigureName::Fig1b => "fig1b",
            FigureName::Fig3 => "fig3",
        }
    }
}

impl fmt::Display for FigureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure '{s}' (expected fig1a, fig1b or fig3)")))
    }
}

/// Log-spaced grid in absorption probability `1 - eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for AbsorptionGrid {
    fn default() -> Self {
        Self {
            lo: 1e-3,
            hi: 0.9,
            points: 200,
        }
    }
}

impl AbsorptionGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi < 1.0) {
            return Err(Error::Config(format!(
                "absorption grid needs 0 < lo < hi < 1, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.points < 2 {
            return Err(Error::Config("absorption grid needs at least 2 points".into()));
        }
        Ok(())
    }

    /// Values of `1 - eta`, increasing, with exact endpoints.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.points;
        let ratio = (self.hi / self.lo).ln();
        Ok((0..n)
            .map(|i| {
                if i == 0 {
                    self.lo
                } else if i == n - 1 {
                    self.hi
                } else {
                    self.lo * (ratio * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect())
    }
}

/// Loss budget used for the figure with optical losses outside the sample.
pub fn lossy_budget(eta: f64) -> Result<LossBudget> {
    LossBudget::new(eta, 0.9, 0.95, 0.9)
}

/// As [`lossy_budget`] with a low-loss round trip, for the multi-pass curves.
pub fn low_loss_round_trip_budget(eta: f64) -> Result<LossBudget> {
    LossBudget::new(eta, 0.9, 0.99, 0.9)
}

fn opt_ratio(family: Family, budget: &LossBudget) -> Result<f64> {
    Ok(optimal_int_param(family, budget, DEFAULT_SEARCH_MAX)?.report.xi_ratio)
}

/// Ratio columns shared by both absorption-axis figures.
fn scheme_ratios(budget: &LossBudget) -> Result<Vec<f64>> {
    let mut v = vec![
        xi_sp(budget)?.xi_ratio,
        opt_ratio(Family::Noon, budget)?,
        opt_ratio(Family::Mp, budget)?,
        opt_ratio(Family::Cic, budget)?,
    ];
    for m in CIO_STAGES {
        v.push(xi_cio(m, budget)?.xi_ratio);
    }
    Ok(v)
}

const SCHEME_COLUMNS: [&str; 8] = [
    "one_minus_eta",
    "ratio_sp",
    "ratio_noon_opt",
    "ratio_mp_opt",
    "ratio_cic_opt",
    "ratio_cio_m4",
    "ratio_cio_m32",
    "ratio_cio_m128",
];

fn collect_rows<F>(grid: &[f64], row: F) -> Result<Vec<Vec<Cell>>>
where
    F: Fn(f64) -> Result<Vec<Cell>> + Sync,
{
    grid.par_iter().map(|&x| row(x)).collect()
}

/// Lossless ratios versus `1 - eta`, with the squeezing (dB) a lossless
/// Gaussian probe would need to match the 32-stage optimized chain.
pub fn fig1a(grid: &AbsorptionGrid) -> Result<Table> {
    let mut columns: Vec<&str> = SCHEME_COLUMNS.to_vec();
    columns.push("equivalent_db");
    let mut table = Table::new(columns);
    let cio_db_idx = 4 + CIO_STAGES.iter().position(|&m| m == EQUIVALENT_DB_STAGES).unwrap_or(0);
    table.rows = collect_rows(&grid.values()?, |x| {
        let eta = 1.0 - x;
        let budget = LossBudget::lossless(eta)?;
        let ratios = scheme_ratios(&budget)?;
        let db = match equivalent_db_for_ratio(ratios[cio_db_idx], eta) {
            Ok(db) => db,
            Err(Error::Unattainable(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let mut row: Vec<Cell> = vec![x.into()];
        row.extend(ratios.into_iter().map(Cell::from));
        row.push(db.into());
        Ok(row)
    })?;
    Ok(table)
}

/// Lossless ratios at `eta = 0.9` versus the scheme parameter: `n` for
/// NOON, `m` for the multi-pass and chain schemes, `n_sq` for squeezing.
pub fn fig1b() -> Result<Table> {
    let mut table = Table::new([
        "param",
        "ratio_sp",
        "ratio_noon",
        "ratio_mp",
        "ratio_cic",
        "ratio_cio",
        "ratio_sqz",
    ]);
    let budget = LossBudget::lossless(PARAM_ETA)?;
    let sp = xi_sp(&budget)?.xi_ratio;
    let params: Vec<usize> = (1..=PARAM_MAX).collect();
    table.rows = params
        .par_iter()
        .map(|&p| {
            Ok(vec![
                p.into(),
                sp.into(),
                xi_noon(p, &budget)?.xi_ratio.into(),
                xi_mp(p, &budget)?.xi_ratio.into(),
                xi_cic(p, &budget)?.xi_ratio.into(),
                xi_cio(p, &budget)?.xi_ratio.into(),
                xi_sqz(p as f64, &budget)?.xi_ratio.into(),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(table)
}

/// Ratios with losses outside the sample, all normalized by the lossless
/// quantum limit. Adds the infinite-chain and infinite-squeezing bounds and
/// the optimized multi-pass curves with a low-loss round trip.
pub fn fig3(grid: &AbsorptionGrid) -> Result<Table> {
    let mut columns: Vec<&str> = SCHEME_COLUMNS.to_vec();
    columns.extend(["ratio_cio_inf", "ratio_sqz_inf", "mp_rt99", "mpsqz_rt99"]);
    let mut table = Table::new(columns);
    table.rows = collect_rows(&grid.values()?, |x| {
        let eta = 1.0 - x;
        let budget = lossy_budget(eta)?;
        let rt99 = low_loss_round_trip_budget(eta)?;
        let mut row: Vec<Cell> = vec![x.into()];
        row.extend(scheme_ratios(&budget)?.into_iter().map(Cell::from));
        row.push(ql_ratio(ci_limit_xi(&budget)?, eta).into());
        row.push(xi_sqz(f64::INFINITY, &budget)?.xi_ratio.into());
        row.push(opt_ratio(Family::Mp, &rt99)?.into());
        row.push(opt_ratio(Family::Mpsqz, &rt99)?.into());
        Ok(row)
    })?;
    Ok(table)
}

/// Builds a figure table on the default absorption grid.
pub fn figure(name: FigureName) -> Result<Table> {
    figure_with_grid(name, &AbsorptionGrid::default())
}

pub fn figure_with_grid(name: FigureName, grid: &AbsorptionGrid) -> Result<Table> {
    match name {
        FigureName::Fig1a => fig1a(grid),
        FigureName::Fig1b => fig1b(),
        FigureName::Fig3 => fig3(grid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_log_spaced_with_exact_ends() {
        let v = AbsorptionGrid::default().values().unwrap();
        assert_eq!(v.len(), 200);
        assert_eq!(v[0], 1e-3);
        assert_eq!(v[199], 0.9);
        let step = (v[1] / v[0]).ln();
        for w in v.windows(2) {
            assert!(((w[1] / w[0]).ln() - step).abs() < 1e-12);
        }
        assert!(AbsorptionGrid { lo: 0.5, hi: 0.1, points: 10 }.values().is_err());
        assert!(AbsorptionGrid { lo: 0.1, hi: 0.5, points: 1 }.values().is_err());
    }

    #[test]
    fn names_round_trip() {
        for f in FigureName::ALL {
            assert_eq!(f.name().parse::<FigureName>().unwrap(), f);
        }
        assert!("fig2".parse::<FigureName>().is_err());
    }

    #[test]
    fn fig1b_first_row_reduces_to_single_pass() {
        let t = fig1b().unwrap();
        assert_eq!(t.rows.len(), PARAM_MAX);
        for col in ["ratio_sp", "ratio_noon", "ratio_mp", "ratio_cic", "ratio_cio"] {
            let v = t.real_column(col).unwrap()[0];
            assert!((v - 0.1).abs() < 1e-12, "{col}: {v}");
        }
    }

    #[test]
    fn fig3_cio_bound_column() {
        let grid = AbsorptionGrid {
            lo: 0.1,
            hi: 0.5,
            points: 3,
        };
        let t = fig3(&grid).unwrap();
        let x = t.real_column("one_minus_eta").unwrap();
        let inf = t.real_column("ratio_cio_inf").unwrap();
        assert!((x[0] - 0.1).abs() < 1e-15);
        assert!((inf[0] - 22.3448275862069 / 36.0).abs() < 1e-12);
        let m128 = t.real_column("ratio_cio_m128").unwrap();
        for (a, b) in m128.iter().zip(&inf) {
            assert!(*a <= b * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fig1a_small_grid_columns() {
        let grid = AbsorptionGrid {
            lo: 0.01,
            hi: 0.5,
            points: 4,
        };
        let t = fig1a(&grid).unwrap();
        assert_eq!(t.columns.len(), 9);
        assert_eq!(t.rows.len(), 4);
        let sp = t.real_column("ratio_sp").unwrap();
        let x = t.real_column("one_minus_eta").unwrap();
        for (s, x) in sp.iter().zip(&x) {
            assert!((s - x).abs() < 1e-12);
        }
        let db = t.real_column("equivalent_db").unwrap();
        let cio = t.real_column("ratio_cio_m32").unwrap();
        for ((d, r), x) in db.iter().zip(&cio).zip(&x) {
            let eta = 1.0 - x;
            let want = equivalent_db_for_ratio(*r, eta).unwrap();
            assert_eq!(*d, want);
        }
    }
}
