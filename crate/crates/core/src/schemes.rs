//! Closed-form dose efficiencies of the measurement families.
//!
//! Every family is evaluated per unit probe intensity in the sample arm, so
//! the reported QFI and dose are finite numbers whose ratio is the dose
//! efficiency `xi = J / d`. Ratios are always taken against the lossless
//! quantum limit `4 eta / (1 - eta)`, whatever the optical losses.
//!
//! | family | parameter | xi (lossy) |
//! |--------|-----------|------------|
//! | SP     | -         | `4 eta eta_D` |
//! | NOON   | n         | `4 n eta_P^(n-1) (eta eta_D)^n` |
//! | MP     | m         | `4 m^2 eta^m eta_rt^(m-1) eta_D (1 - eta_rt eta) / (1 - (eta_rt eta)^m)` |
//! | SQZ    | n_sq      | `4 eta eta_D / (1 + 2 eta_tot (n_sq - sqrt(n_sq (n_sq + 1))))` |
//! | MPSQZ  | m         | infinite-squeezing bound with `m` passes |
//! | CIC    | m         | chain interferometer, constant `tau` |
//! | CIO    | m         | chain interferometer, optimal `tau` schedule |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::{ci_optimal_taus, ci_xi, cic_xi_curve};
use crate::error::{Error, Result};
use crate::model::{LossBudget, TauSchedule};

/// Beamsplitter scale used when a chain family is evaluated per unit
/// `eps^2`. The efficiency does not depend on it.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Default upper bound of integer parameter scans.
pub const DEFAULT_SEARCH_MAX: usize = 4096;

/// A later scan value must beat the incumbent by this relative margin to
/// replace it, so exact ties resolve to the smaller parameter.
const TIE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Sp,
    Noon,
    Mp,
    Sqz,
    Mpsqz,
    Cic,
    Cio,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Sp,
        Family::Noon,
        Family::Mp,
        Family::Sqz,
        Family::Mpsqz,
        Family::Cic,
        Family::Cio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Sp => "sp",
            Family::Noon => "noon",
            Family::Mp => "mp",
            Family::Sqz => "sqz",
            Family::Mpsqz => "mpsqz",
            Family::Cic => "cic",
            Family::Cio => "cio",
        }
    }

    /// Whether the family is driven by a single particle (no entanglement,
    /// no squeezing).
    pub fn is_single_particle(self) -> bool {
        matches!(self, Family::Sp | Family::Mp | Family::Cic | Family::Cio)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown family '{s}'")))
    }
}

/// One measurement family with its parameters and loss budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sq: Option<f64>,
    pub budget: LossBudget,
}

impl SchemeSpec {
    pub fn new(family: Family, budget: LossBudget) -> Self {
        Self {
            family,
            n: None,
            m: None,
            n_sq: None,
            budget,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_n_sq(mut self, n_sq: f64) -> Self {
        self.n_sq = Some(n_sq);
        self
    }

    fn require_count(&self, name: &'static str, value: Option<usize>) -> Result<usize> {
        let v = value.ok_or(Error::MissingParameter {
            family: self.family.name(),
            name,
        })?;
        if v < 1 {
            return Err(Error::Domain {
                name,
                value: v as f64,
                expected: "an integer >= 1",
            });
        }
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        match self.family {
            Family::Sp => {}
            Family::Noon => {
                self.require_count("n", self.n)?;
            }
            Family::Mp | Family::Cic | Family::Cio => {
                self.require_count("m", self.m)?;
            }
            Family::Sqz => {
                let n_sq = self.n_sq.ok_or(Error::MissingParameter {
                    family: "sqz",
                    name: "n_sq",
                })?;
                check_n_sq(n_sq)?;
            }
            Family::Mpsqz => {
                self.require_count("m", self.m)?;
                if let Some(n_sq) = self.n_sq {
                    if n_sq != f64::INFINITY {
                        return Err(Error::Domain {
                            name: "n_sq",
                            value: n_sq,
                            expected: "inf (only the infinite-squeezing bound is modelled)",
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self) -> Result<EfficiencyReport> {
        self.validate()?;
        let b = &self.budget;
        let report = match self.family {
            Family::Sp => xi_sp(b)?,
            Family::Noon => xi_noon(self.n.unwrap_or(0), b)?,
            Family::Mp => xi_mp(self.m.unwrap_or(0), b)?,
            Family::Sqz => xi_sqz(self.n_sq.unwrap_or(f64::NAN), b)?,
            Family::Mpsqz => xi_mpsqz(self.m.unwrap_or(0), b)?,
            Family::Cic => xi_cic(self.m.unwrap_or(0), b)?,
            Family::Cio => xi_cio(self.m.unwrap_or(0), b)?,
        };
        Ok(report)
    }
}

/// QFI and dose per unit sample-arm intensity, and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub j_per_unit: f64,
    pub dose_per_unit: f64,
    pub xi: f64,
    /// `xi / xi_QL(eta)` with the lossless quantum limit.
    pub xi_ratio: f64,
    pub spec_echo: SchemeSpec,
}

impl EfficiencyReport {
    fn new(j_per_unit: f64, dose_per_unit: f64, spec: SchemeSpec) -> Self {
        let xi = if dose_per_unit > 0.0 {
            j_per_unit / dose_per_unit
        } else {
            0.0
        };
        Self {
            j_per_unit,
            dose_per_unit,
            xi,
            xi_ratio: ql_ratio(xi, spec.budget.eta),
            spec_echo: spec,
        }
    }
}

/// Quantum limit on QFI per dose, `4 eta / (1 - eta)`.
pub fn xi_ql(eta: f64) -> Result<f64> {
    if eta == 1.0 {
        return Err(Error::DivergentLimit("quantum limit"));
    }
    if !(eta.is_finite() && (0.0..1.0).contains(&eta)) {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            expected: "a value in [0, 1)",
        });
    }
    Ok(4.0 * eta / (1.0 - eta))
}

/// `xi / xi_QL(eta)`; zero when `xi` is zero or the limit is infinite.
pub fn ql_ratio(xi: f64, eta: f64) -> f64 {
    if xi == 0.0 || eta >= 1.0 {
        0.0
    } else {
        xi * (1.0 - eta) / (4.0 * eta)
    }
}

/// `sum_{k=0}^{m-1} x^k` without cancellation near `x = 1`.
pub(crate) fn geometric_sum(x: f64, m: usize) -> f64 {
    if m == 0 {
        0.0
    } else if x == 1.0 {
        m as f64
    } else if x == 0.0 {
        1.0
    } else {
        let dx = x - 1.0;
        (m as f64 * dx.ln_1p()).exp_m1() / dx
    }
}

fn check_count(name: &'static str, v: usize) -> Result<()> {
    if v < 1 {
        Err(Error::Domain {
            name,
            value: v as f64,
            expected: "an integer >= 1",
        })
    } else {
        Ok(())
    }
}

fn check_n_sq(n_sq: f64) -> Result<()> {
    if n_sq.is_nan() || n_sq < 0.0 {
        Err(Error::Domain {
            name: "n_sq",
            value: n_sq,
            expected: "n_sq >= 0",
        })
    } else {
        Ok(())
    }
}

/// Single-particle, single-pass interferometer.
pub fn xi_sp(budget: &LossBudget) -> Result<EfficiencyReport> {
    budget.validate()?;
    let b = budget;
    Ok(EfficiencyReport::new(
        4.0 * b.eta_p * b.eta * b.eta_d,
        b.eta_p,
        SchemeSpec::new(Family::Sp, *b),
    ))
}

/// Unbalanced NOON state of size `n`.
pub fn xi_noon(n: usize, budget: &LossBudget) -> Result<EfficiencyReport> {
    check_count("n", n)?;
    budget.validate()?;
    let b = budget;
    let nf = n as f64;
    let j = 4.0 * nf * nf * (b.eta_p * b.eta * b.eta_d).powi(n as i32);
    Ok(EfficiencyReport::new(
        j,
        b.eta_p * nf,
        SchemeSpec::new(Family::Noon, *b).with_n(n),
    ))
}

/// Single particle passed `m` times through the sample.
pub fn xi_mp(m: usize, budget: &LossBudget) -> Result<EfficiencyReport> {
    check_count("m", m)?;
    budget.validate()?;
    let b = budget;
    let mf = m as f64;
    let j = 4.0 * mf * mf * b.eta_p * b.eta.powi(m as i32) * b.eta_rt.powi(m as i32 - 1) * b.eta_d;
    let d = b.eta_p * geometric_sum(b.eta_rt * b.eta, m);
    Ok(EfficiencyReport::new(
        j,
        d,
        SchemeSpec::new(Family::Mp, *b).with_m(m),
    ))
}

/// `n_sq - sqrt(n_sq (n_sq + 1))`, which lies in `(-1/2, 0]`.
fn squeeze_gap(n_sq: f64) -> f64 {
    if n_sq == f64::INFINITY {
        -0.5
    } else if n_sq == 0.0 {
        0.0
    } else {
        -n_sq / (n_sq + (n_sq * (n_sq + 1.0)).sqrt())
    }
}

/// Squeezed Gaussian probe with `n_sq` particles in the squeezing. Accepts
/// `n_sq = inf` for the infinite-squeezing bound.
///
/// Losses enter through `eta_tot = eta_P eta eta_D` in the denominator; only
/// the `n_sq -> inf` value of that extension has an independent derivation.
pub fn xi_sqz(n_sq: f64, budget: &LossBudget) -> Result<EfficiencyReport> {
    check_n_sq(n_sq)?;
    budget.validate()?;
    let b = budget;
    let eta_tot = b.eta_p * b.eta * b.eta_d;
    let denom = 2.0 * eta_tot * squeeze_gap(n_sq) + 1.0;
    if denom <= 0.0 {
        return Err(Error::DivergentLimit("squeezed-state xi"));
    }
    let xi = 4.0 * b.eta * b.eta_d / denom;
    Ok(EfficiencyReport::new(
        xi * b.eta_p,
        b.eta_p,
        SchemeSpec::new(Family::Sqz, *b).with_n_sq(n_sq),
    ))
}

/// Squeezed probe passed `m` times, at the infinite-squeezing bound.
pub fn xi_mpsqz(m: usize, budget: &LossBudget) -> Result<EfficiencyReport> {
    check_count("m", m)?;
    budget.validate()?;
    let b = budget;
    let mf = m as f64;
    let eta_tot =
        b.eta_p * b.eta.powi(m as i32) * b.eta_rt.powi(m as i32 - 1) * b.eta_d;
    if eta_tot >= 1.0 {
        return Err(Error::DivergentLimit("multi-pass squeezed xi"));
    }
    let j = 4.0 * mf * mf * eta_tot / (1.0 - eta_tot);
    let d = b.eta_p * geometric_sum(b.eta_rt * b.eta, m);
    Ok(EfficiencyReport::new(
        j,
        d,
        SchemeSpec::new(Family::Mpsqz, *b)
            .with_m(m)
            .with_n_sq(f64::INFINITY),
    ))
}

fn chain_report(schedule: &TauSchedule, spec: SchemeSpec) -> Result<EfficiencyReport> {
    let eps2 = schedule.epsilon() * schedule.epsilon();
    let r = ci_xi(schedule, &spec.budget)?;
    Ok(EfficiencyReport::new(r.j / eps2, r.dose / eps2, spec))
}

/// Chain interferometer with the same beamsplitter at every stage.
pub fn xi_cic(m: usize, budget: &LossBudget) -> Result<EfficiencyReport> {
    check_count("m", m)?;
    budget.validate()?;
    chain_report(
        &TauSchedule::constant(m, DEFAULT_EPSILON)?,
        SchemeSpec::new(Family::Cic, *budget).with_m(m),
    )
}

/// Chain interferometer with the optimal beamsplitter schedule.
pub fn xi_cio(m: usize, budget: &LossBudget) -> Result<EfficiencyReport> {
    check_count("m", m)?;
    chain_report(
        &ci_optimal_taus(m, budget, DEFAULT_EPSILON)?,
        SchemeSpec::new(Family::Cio, *budget).with_m(m),
    )
}

/// Squeezing in dB, `10 log10(e^{2r})` with `r = asinh(sqrt(n_sq))`.
pub fn squeezing_db(n_sq: f64) -> Result<f64> {
    check_n_sq(n_sq)?;
    let r = n_sq.sqrt().asinh();
    Ok(20.0 * r / std::f64::consts::LN_10)
}

/// Inverse of [`squeezing_db`].
pub fn n_sq_from_db(db: f64) -> Result<f64> {
    if db.is_nan() || db < 0.0 {
        return Err(Error::Domain {
            name: "db",
            value: db,
            expected: "db >= 0",
        });
    }
    let r = db * std::f64::consts::LN_10 / 20.0;
    let s = r.sinh();
    Ok(s * s)
}

/// Squeezing (dB) a lossless Gaussian probe needs to reach
/// `xi / xi_QL = target_ratio`.
///
/// With `xi_SQZ = 4 eta / (1 - eta + eta e^{-2r})` the answer is
/// `10 log10(eta R / ((1 - eta)(1 - R)))`, clamped at 0 dB for ratios a
/// coherent probe already reaches.
pub fn equivalent_db_for_ratio(target_ratio: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            expected: "a value in (0, 1)",
        });
    }
    if target_ratio >= 1.0 {
        return Err(Error::Unattainable(target_ratio));
    }
    if !(target_ratio > 0.0) {
        return Err(Error::Domain {
            name: "target_ratio",
            value: target_ratio,
            expected: "a value in (0, 1)",
        });
    }
    let db = 10.0 * (eta * target_ratio / ((1.0 - eta) * (1.0 - target_ratio))).log10();
    Ok(db.max(0.0))
}

/// Outcome of an exhaustive integer-parameter scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntOptimum {
    pub param: usize,
    pub report: EfficiencyReport,
    /// The argmax sits on `search_max`; a larger range may do better.
    pub on_boundary: bool,
}

fn eval_family(family: Family, param: usize, budget: &LossBudget) -> Result<EfficiencyReport> {
    match family {
        Family::Noon => xi_noon(param, budget),
        Family::Mp => xi_mp(param, budget),
        Family::Mpsqz => xi_mpsqz(param, budget),
        Family::Cic => xi_cic(param, budget),
        Family::Cio => xi_cio(param, budget),
        Family::Sp | Family::Sqz => Err(Error::Config(format!(
            "family {family} has no integer parameter to scan"
        ))),
    }
}

/// Index (0-based) of the maximum; ties go to the earliest entry.
fn argmax_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b + TIE_REL_TOL * b.abs()) => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Exhaustive scan of the integer parameter (`n` or `m`) over
/// `1..=search_max`, maximizing `xi`. Ties go to the smaller parameter.
pub fn optimal_int_param(family: Family, budget: &LossBudget, search_max: usize) -> Result<IntOptimum> {
    check_count("search_max", search_max)?;
    budget.validate()?;
    let idx = match family {
        Family::Cic => argmax_first(cic_xi_curve(search_max, budget)),
        _ => {
            let values = (1..=search_max)
                .map(|p| eval_family(family, p, budget).map(|r| r.xi))
                .collect::<Result<Vec<_>>>()?;
            argmax_first(values)
        }
    };
    let param = idx.ok_or(Error::DegenerateSchedule)? + 1;
    let on_boundary = param == search_max && search_max > 1;
    if on_boundary {
        log::warn!("{family}: optimum at search boundary {search_max} (eta = {})", budget.eta);
    }
    Ok(IntOptimum {
        param,
        report: eval_family(family, param, budget)?,
        on_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lossless(eta: f64) -> LossBudget {
        LossBudget::lossless(eta).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            (a - b).abs() / b.abs()
        }
    }

    #[test]
    fn quantum_limit_examples() {
        assert!(rel(xi_ql(0.9).unwrap(), 36.0) < 1e-14);
        assert_eq!(xi_ql(0.5).unwrap(), 4.0);
        assert_eq!(xi_ql(0.0).unwrap(), 0.0);
        assert!(matches!(xi_ql(1.0), Err(Error::DivergentLimit(_))));
        assert!(matches!(xi_ql(1.2), Err(Error::Domain { .. })));
        assert!(matches!(xi_ql(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn sp_examples() {
        let r = xi_sp(&lossless(0.9)).unwrap();
        assert!(rel(r.xi, 3.6) < 1e-14);
        assert!(rel(r.xi_ratio, 0.1) < 1e-14);
        let r = xi_sp(&LossBudget::new(0.9, 1.0, 1.0, 0.9).unwrap()).unwrap();
        assert!(rel(r.xi, 3.24) < 1e-14);
        let r = xi_sp(&LossBudget::new(0.9, 0.5, 1.0, 1.0).unwrap()).unwrap();
        assert!(rel(r.xi, 3.6) < 1e-14);
        assert_eq!(r.dose_per_unit, 0.5);
    }

    #[test]
    fn noon_examples() {
        assert!(rel(xi_noon(1, &lossless(0.7)).unwrap().xi, 2.8) < 1e-14);
        assert!(rel(xi_noon(2, &lossless(0.9)).unwrap().xi, 6.48) < 1e-14);
        let opt = optimal_int_param(Family::Noon, &lossless(0.9), DEFAULT_SEARCH_MAX).unwrap();
        assert_eq!(opt.param, 9);
        let tie = 36.0 * 0.9f64.powi(9);
        assert!(rel(opt.report.xi, tie) < 1e-13);
        assert!(rel(xi_noon(10, &lossless(0.9)).unwrap().xi, tie) < 1e-13);
        assert!((opt.report.xi_ratio - 0.38742).abs() < 1e-5);
        assert!(xi_noon(0, &lossless(0.9)).is_err());
        // continuous estimate -1/ln(eta) = 9.49 lies between the tied optima
        let guess = -1.0 / 0.9f64.ln();
        assert!(guess > 9.0 && guess < 10.0);
    }

    #[test]
    fn mp_examples() {
        let b = LossBudget::new(0.8, 0.7, 0.9, 0.6).unwrap();
        assert!(rel(xi_mp(1, &b).unwrap().xi, 4.0 * 0.8 * 0.6) < 1e-14);
        let opt = optimal_int_param(Family::Mp, &lossless(0.9), 200).unwrap();
        assert_eq!(opt.param, 15);
        assert!((opt.report.xi - 23.33).abs() < 0.01);
        assert!((opt.report.xi_ratio - 0.648).abs() < 1e-3);
    }

    #[test]
    fn mp_optimum_ratio_floor() {
        // The optimum ratio approaches sup_c c^2/(e^c - 1) = 0.64761... from
        // above as eta -> 1.
        let c = 1.593_624_26_f64;
        let floor = c * c / c.exp_m1();
        assert!((floor - 0.647_61).abs() < 1e-5);
        for i in 0..=49 {
            let eta = 0.5 + 0.01 * i as f64;
            let opt = optimal_int_param(Family::Mp, &lossless(eta), DEFAULT_SEARCH_MAX).unwrap();
            assert!(opt.report.xi_ratio >= floor - 1e-9, "eta={eta}");
            assert!(!opt.on_boundary);
        }
    }

    #[test]
    fn sqz_examples() {
        assert!(rel(xi_sqz(0.0, &lossless(0.9)).unwrap().xi, 3.6) < 1e-14);
        let want = 3.6 / (1.8 - 1.8 * 2f64.sqrt() + 1.0);
        assert!(rel(xi_sqz(1.0, &lossless(0.9)).unwrap().xi, want) < 1e-13);
        assert!(rel(want, 14.150_076_385_424_76) < 1e-13);
        assert!(rel(xi_sqz(f64::INFINITY, &lossless(0.9)).unwrap().xi, 36.0) < 1e-14);
        assert!(rel(xi_sqz(1e12, &lossless(0.9)).unwrap().xi, 36.0) < 1e-9);
        assert!(xi_sqz(-1.0, &lossless(0.9)).is_err());
        let b = LossBudget::new(0.9, 0.9, 1.0, 0.9).unwrap();
        let bound = 4.0 * 0.9 * 0.9 / (1.0 - 0.9 * 0.9 * 0.9);
        assert!(rel(xi_sqz(f64::INFINITY, &b).unwrap().xi, bound) < 1e-14);
    }

    #[test]
    fn mpsqz_examples() {
        for b in [lossless(0.9), LossBudget::new(0.7, 0.9, 0.99, 0.9).unwrap()] {
            let one = xi_mpsqz(1, &b).unwrap().xi;
            assert!(rel(one, xi_sqz(f64::INFINITY, &b).unwrap().xi) < 1e-12);
        }
        assert!(rel(xi_mpsqz(1, &lossless(0.9)).unwrap().xi, 36.0) < 1e-12);
        assert!(xi_mpsqz(3, &lossless(1.0)).is_err());
    }

    #[test]
    fn cic_examples() {
        let b = LossBudget::new(0.9, 0.8, 0.95, 0.9).unwrap();
        assert!(rel(xi_cic(1, &b).unwrap().xi, 4.0 * 0.9 * 0.9) < 1e-14);
        // 4 (2 eta + sqrt(eta))^2 / (1 + (1 + sqrt(eta))^2), eta = 0.9
        let r = 0.9f64.sqrt();
        let want = 4.0 * (1.8 + r).powi(2) / (1.0 + (1.0 + r).powi(2));
        let got = xi_cic(2, &lossless(0.9)).unwrap().xi;
        assert!(rel(got, want) < 1e-13);
        assert!(rel(got, 6.299_505_965_728_99) < 1e-12);
        let opt = optimal_int_param(Family::Cic, &lossless(0.9), 256).unwrap();
        assert!(!opt.on_boundary);
        for m in [opt.param - 1, opt.param + 1] {
            assert!(xi_cic(m, &lossless(0.9)).unwrap().xi <= opt.report.xi);
        }
    }

    #[test]
    fn cio_examples() {
        let b = LossBudget::new(0.9, 0.8, 0.95, 0.9).unwrap();
        assert!(rel(xi_cio(1, &b).unwrap().xi, 3.24) < 1e-14);
        let r = xi_cio(128, &lossless(0.9)).unwrap();
        assert!((r.xi_ratio - 1.0).abs() < 0.05);
        let sq10 = xi_sqz(n_sq_from_db(10.0).unwrap(), &lossless(0.9)).unwrap().xi;
        let sq20 = xi_sqz(n_sq_from_db(20.0).unwrap(), &lossless(0.9)).unwrap().xi;
        assert!(xi_cio(10, &lossless(0.9)).unwrap().xi >= sq10);
        assert!(xi_cio(32, &lossless(0.9)).unwrap().xi >= sq20);
    }

    #[test]
    fn db_examples() {
        assert_eq!(squeezing_db(0.0).unwrap(), 0.0);
        for x in [0.1, 1.0, 10.0] {
            assert!(rel(n_sq_from_db(squeezing_db(x).unwrap()).unwrap(), x) < 1e-10);
        }
        let n = n_sq_from_db(10.0).unwrap();
        assert!(rel(n, 2.025) < 1e-12);
        assert!(squeezing_db(-1.0).is_err());
        assert!(n_sq_from_db(-1.0).is_err());
    }

    /// Bisection on n_sq in [0, 1e6] using the forward squeezed-state formula.
    fn bisect_n_sq(target: f64, eta: f64) -> f64 {
        let b = lossless(eta);
        let ratio = |n: f64| xi_sqz(n, &b).unwrap().xi_ratio;
        let (mut lo, mut hi) = (0.0f64, 1e6f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ratio(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn equivalent_db_examples() {
        assert!(equivalent_db_for_ratio(0.1, 0.9).unwrap() < 1e-12);
        let db = equivalent_db_for_ratio(0.5, 0.9).unwrap();
        let n_oracle = bisect_n_sq(0.5, 0.9);
        assert!(rel(n_sq_from_db(db).unwrap(), n_oracle) < 1e-9);
        let back = xi_sqz(n_sq_from_db(db).unwrap(), &lossless(0.9)).unwrap().xi_ratio;
        assert!(rel(back, 0.5) < 1e-12);
        assert!(equivalent_db_for_ratio(0.6, 0.9).unwrap() > db);
        assert!(matches!(
            equivalent_db_for_ratio(1.0, 0.9),
            Err(Error::Unattainable(_))
        ));
    }

    #[test]
    fn scheme_spec_validation_names_missing_parameter() {
        let b = lossless(0.9);
        let err = SchemeSpec::new(Family::Noon, b).evaluate().unwrap_err();
        assert!(err.to_string().contains('n'));
        assert!(matches!(err, Error::MissingParameter { name: "n", .. }));
        let err = SchemeSpec::new(Family::Noon, b).with_n(0).evaluate().unwrap_err();
        assert!(matches!(err, Error::Domain { name: "n", .. }));
        assert!(SchemeSpec::new(Family::Mpsqz, b).with_m(2).with_n_sq(3.0).validate().is_err());
        assert!(SchemeSpec::new(Family::Sqz, b).evaluate().is_err());
    }

    #[test]
    fn geometric_sum_edges() {
        assert_eq!(geometric_sum(1.0, 7), 7.0);
        assert_eq!(geometric_sum(0.0, 7), 1.0);
        assert!(rel(geometric_sum(0.5, 3), 1.75) < 1e-15);
        let x: f64 = 1.0 - 1e-10;
        let direct: f64 = (0..50).map(|k| x.powi(k)).sum();
        assert!(rel(geometric_sum(x, 50), direct) < 1e-13);
    }

    fn arb_budget() -> impl Strategy<Value = LossBudget> {
        (0.01..0.99f64, 0.05..=1.0f64, 0.05..=1.0f64, 0.05..=1.0f64)
            .prop_map(|(e, p, rt, d)| LossBudget::new(e, p, rt, d).unwrap())
    }

    proptest! {
        #[test]
        fn reductions_to_single_pass(b in arb_budget()) {
            let sp = xi_sp(&b).unwrap().xi;
            for xi in [
                xi_noon(1, &b).unwrap().xi,
                xi_mp(1, &b).unwrap().xi,
                xi_cic(1, &b).unwrap().xi,
                xi_cio(1, &b).unwrap().xi,
                xi_sqz(0.0, &b).unwrap().xi,
            ] {
                prop_assert!(rel(xi, sp) <= 1e-12);
            }
        }

        #[test]
        fn single_particle_schemes_ignore_preparation_loss(
            b in arb_budget(), eta_p2 in 0.05..=1.0f64, m in 1usize..40,
        ) {
            let b2 = LossBudget { eta_p: eta_p2, ..b };
            let pairs = [
                (xi_sp(&b).unwrap(), xi_sp(&b2).unwrap()),
                (xi_mp(m, &b).unwrap(), xi_mp(m, &b2).unwrap()),
                (xi_cic(m, &b).unwrap(), xi_cic(m, &b2).unwrap()),
                (xi_cio(m, &b).unwrap(), xi_cio(m, &b2).unwrap()),
            ];
            for (r1, r2) in pairs {
                prop_assert!(rel(r1.xi, r2.xi) <= 1e-12);
                prop_assert!(rel(r1.dose_per_unit / r2.dose_per_unit, b.eta_p / eta_p2) <= 1e-12);
            }
        }

        #[test]
        fn sqz_increasing_and_bounded(b in arb_budget(), n in 0.0..1e4f64, dn in 1e-3..10.0f64) {
            let lo = xi_sqz(n, &b).unwrap().xi;
            let hi = xi_sqz(n + dn, &b).unwrap().xi;
            prop_assert!(hi > lo);
            let bound = 4.0 * b.eta * b.eta_d / (1.0 - b.eta * b.eta_p * b.eta_d);
            prop_assert!(hi <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn report_xi_is_ratio_of_parts(b in arb_budget(), p in 1usize..64) {
            for r in [
                xi_noon(p, &b).unwrap(), xi_mp(p, &b).unwrap(), xi_mpsqz(p, &b).unwrap(),
                xi_cic(p, &b).unwrap(), xi_cio(p, &b).unwrap(),
            ] {
                prop_assert!(rel(r.xi, r.j_per_unit / r.dose_per_unit) <= 1e-12);
                prop_assert!(r.xi_ratio >= 0.0);
            }
        }
    }

    #[test]
    fn lossless_ceiling() {
        for i in 1..=19 {
            let eta = 0.05 * i as f64;
            let b = lossless(eta);
            let ceiling = xi_ql(eta).unwrap() * (1.0 + 1e-9);
            assert!(xi_sp(&b).unwrap().xi <= ceiling);
            for p in 1..=256 {
                for r in [
                    xi_noon(p, &b).unwrap(),
                    xi_mp(p, &b).unwrap(),
                    xi_mpsqz(p, &b).unwrap(),
                    xi_cic(p, &b).unwrap(),
                    xi_cio(p, &b).unwrap(),
                    xi_sqz(p as f64, &b).unwrap(),
                ] {
                    assert!(r.xi <= ceiling, "{:?}", r.spec_echo);
                }
            }
        }
    }
}
