//! Self-checks of the simulator, grouped by invariant.
//!
//! - perturbative convergence: exact simulation agrees with the leading
//!   order formulas, with a gap shrinking as `eps^2`;
//! - MP equivalence: a chain with only the first beamsplitter open is the
//!   multi-pass scheme;
//! - limit recovery: long chains reach their closed-form limits;
//! - prescription optimality: the analytic schedule is not beaten by the
//!   numerical optimizer.
//!
//! [`Mutation`] deliberately corrupts the dose formula so that a run can
//! confirm the harness notices.

use std::fmt;

use crate::chain::{
    ci_exact_xi, ci_optimal_taus, ci_perturbative_d, ci_perturbative_j, ci_xi, ci_zero_detuning_gap,
};
use crate::error::Result;
use crate::model::{LossBudget, TauSchedule};
use crate::optimizer::{verify_prescription, OptimizerConfig};
use crate::schemes::{xi_mp, xi_sp};

pub const CONVERGENCE_STAGES: [usize; 4] = [2, 4, 8, 32];
pub const CONVERGENCE_ETAS: [f64; 3] = [0.5, 0.9, 0.99];
pub const CONVERGENCE_EPSILON: f64 = 1e-3;
pub const CONVERGENCE_GAP_MAX: f64 = 1e-4;
/// Stage counts for the halving-ratio check. Longer chains under the
/// analytic schedule have an `eps^2` coefficient small enough that `eps^4`
/// terms still dominate at `eps = 1e-3`.
pub const HALVING_STAGES: [usize; 3] = [2, 4, 8];
/// Accepted range for `gap(eps) / gap(eps / 2)`.
pub const HALVING_RATIO: (f64, f64) = (3.5, 4.5);
pub const MP_EQUIVALENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Adds an extra `tau_k^2` to the dose of every pass.
    ExtraTauInDose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValidateOptions {
    /// Only `eps = 1e-3`: skips the halving-ratio check.
    pub quick: bool,
    pub mutation: Mutation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl GroupResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for GroupResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {} ({} checks, {} failed)",
            self.name,
            self.checks,
            self.failures.len()
        )?;
        for fail in &self.failures {
            write!(f, "\n  - {fail}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub groups: Vec<GroupResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.groups.iter().all(GroupResult::passed)
    }

    pub fn group(&self, name: &str) -> Option<&GroupResult> {
        self.groups.iter().find(|g| g.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.groups {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

fn dose(schedule: &TauSchedule, budget: &LossBudget, mutation: Mutation) -> f64 {
    let d = ci_perturbative_d(schedule, budget);
    match mutation {
        Mutation::None => d,
        Mutation::ExtraTauInDose => {
            let eps2 = schedule.epsilon() * schedule.epsilon();
            let extra: f64 = schedule
                .taus()
                .iter()
                .enumerate()
                .map(|(k, t)| budget.eta_rt.powi(k as i32) * t * t)
                .sum();
            d + budget.eta_p * eps2 * extra
        }
    }
}

/// Relative gap between exact and leading-order `xi` for the analytic
/// schedule, from the exact propagator with finite differences.
pub fn perturbative_gap(m: usize, budget: &LossBudget, epsilon: f64) -> Result<f64> {
    let schedule = ci_optimal_taus(m, budget, epsilon)?;
    let pert = ci_xi(&schedule, budget)?.xi;
    let exact = ci_exact_xi(&schedule, budget, 0.0)?.xi;
    Ok((exact - pert).abs() / pert)
}

/// `gap(eps) / gap(eps / 2)` for the analytic schedule, with both gaps in
/// extended precision.
pub fn halving_ratio(m: usize, budget: &LossBudget, epsilon: f64) -> Result<f64> {
    let gap = |eps| ci_zero_detuning_gap(&ci_optimal_taus(m, budget, eps)?, budget);
    Ok(gap(epsilon)? / gap(0.5 * epsilon)?)
}

fn perturbative_convergence(opts: &ValidateOptions) -> Result<GroupResult> {
    let mut g = GroupResult::new("perturbative-convergence");
    for &m in &CONVERGENCE_STAGES {
        for &eta in &CONVERGENCE_ETAS {
            let b = LossBudget::lossless(eta)?;
            let gap = perturbative_gap(m, &b, CONVERGENCE_EPSILON)?;
            g.check(gap <= CONVERGENCE_GAP_MAX, || {
                format!("m={m} eta={eta}: gap {gap:.3e} > {CONVERGENCE_GAP_MAX:e}")
            });
            if !opts.quick && HALVING_STAGES.contains(&m) {
                let ratio = halving_ratio(m, &b, CONVERGENCE_EPSILON)?;
                g.check(ratio >= HALVING_RATIO.0 && ratio <= HALVING_RATIO.1, || {
                    format!("m={m} eta={eta}: halving ratio {ratio:.4} outside {HALVING_RATIO:?}")
                });
            }
        }
    }
    Ok(g)
}

fn mp_equivalence(opts: &ValidateOptions) -> Result<GroupResult> {
    let mut g = GroupResult::new("mp-equivalence");
    let eps = 0.01;
    for eta in [0.5, 0.9] {
        let budgets = [
            LossBudget::lossless(eta)?,
            LossBudget::new(eta, 0.9, 0.95, 0.9)?,
        ];
        for b in budgets {
            for m in 1..=32 {
                let s = TauSchedule::single_injection(m, eps)?;
                let xi = ci_perturbative_j(&s, &b) / dose(&s, &b, opts.mutation);
                let want = xi_mp(m, &b)?.xi;
                let rel = (xi - want).abs() / want;
                g.check(rel <= MP_EQUIVALENCE_TOL, || {
                    format!("m={m} budget={b:?}: chain {xi} vs multi-pass {want}")
                });
            }
        }
    }
    Ok(g)
}

fn limit_recovery() -> Result<GroupResult> {
    let mut g = GroupResult::new("limit-recovery");
    let eps = 0.01;
    let eps2 = eps * eps;

    let b = LossBudget::lossless(0.9)?;
    let s = ci_optimal_taus(500, &b, eps)?;
    let j = ci_perturbative_j(&s, &b) / eps2;
    let d = ci_perturbative_d(&s, &b) / eps2;
    g.check((j - 324.0).abs() <= 0.5, || format!("lossless m=500: J/eps^2 = {j}, want 324"));
    g.check((d - 9.0).abs() <= 0.01, || format!("lossless m=500: d/eps^2 = {d}, want 9"));

    let b = LossBudget::new(0.9, 0.9, 0.95, 0.9)?;
    let xi = ci_xi(&ci_optimal_taus(512, &b, eps)?, &b)?.xi;
    let want = 4.0 * 0.9 * 0.9 / (1.0 - 0.9 * 0.95);
    g.check((xi - want).abs() <= 0.05, || format!("lossy m=512: xi = {xi}, want {want}"));

    for eta in [0.2, 0.5, 0.9] {
        let b = LossBudget::new(eta, 0.8, 0.9, 0.7)?;
        let sp = xi_sp(&b)?.xi;
        for s in [
            TauSchedule::constant(1, eps)?,
            ci_optimal_taus(1, &b, eps)?,
        ] {
            let xi = ci_xi(&s, &b)?.xi;
            g.check((xi - sp).abs() <= 1e-12 * sp, || format!("eta={eta}: one stage {xi} vs single pass {sp}"));
        }
    }
    Ok(g)
}

fn prescription_optimality() -> Result<GroupResult> {
    let mut g = GroupResult::new("prescription-optimality");
    for eta in [0.5, 0.9] {
        let rows = verify_prescription(&[1, 2, 3, 4, 8, 16], &LossBudget::lossless(eta)?, &OptimizerConfig::default())?;
        for r in rows {
            g.check(r.within_tolerance, || {
                format!(
                    "m={} eta={eta}: optimizer beats prescription by {:.3e} (tolerance {:e})",
                    r.m, r.shortfall, r.tolerance
                )
            });
            g.check(r.converged, || format!("m={} eta={eta}: optimizer did not converge", r.m));
        }
    }
    Ok(g)
}

/// Runs all four groups.
pub fn run_validation(opts: &ValidateOptions) -> Result<ValidationReport> {
    Ok(ValidationReport {
        groups: vec![
            perturbative_convergence(opts)?,
            mp_equivalence(opts)?,
            limit_recovery()?,
            prescription_optimality()?,
        ],
    })
}
