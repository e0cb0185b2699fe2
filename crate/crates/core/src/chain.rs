//! The m-stage chain interferometer.
//!
//! Each stage weakly couples the reference channel into the sample channel
//! with a beamsplitter of amplitude `tau_k`, then the sample channel picks up
//! the unknown phase (and is attenuated by the sample) while the reference
//! channel picks up the programmed phase. Round-trip loss acts between
//! stages, preparation loss before the first stage and detection loss after
//! the last.
//!
//! Two models live here: an exact propagator that keeps every order in
//! `tau`, and the leading-order expressions for the QFI and dose that are
//! valid when every `tau_k` is small. The exact model is the oracle for the
//! perturbative one.

use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::model::{
    beamsplitter_op, reference_phase_op, sample_op, uniform_loss_op, LossBudget, Op2,
    PhaseConfig, ProbeState, TauSchedule,
};
use crate::qfi::{fd_derivative, qfi_conditional};
use crate::schemes::{ql_ratio, xi_ql};

/// Result of propagating a probe through the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CiRun {
    pub exit_state: ProbeState,
    /// Expected number of particles incident on the sample, all passes.
    pub dose: f64,
    /// `|psi_1^(k)|^2` just before pass `k`.
    pub per_pass_dose: Vec<f64>,
}

/// Dose efficiency of one chain configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiReport {
    pub j: f64,
    pub dose: f64,
    pub xi: f64,
    /// `xi / xi_QL(eta)` with the lossless quantum limit.
    pub xi_ratio: f64,
}

impl CiReport {
    /// Callers have already rejected all-zero schedules.
    fn new(j: f64, dose: f64, eta: f64) -> Result<Self> {
        if !(dose >= f64::MIN_POSITIVE) {
            return Err(Error::Underflow("dose"));
        }
        let xi = j / dose;
        Ok(Self {
            j,
            dose,
            xi,
            xi_ratio: ql_ratio(xi, eta),
        })
    }
}

/// Exact propagation, all orders in `tau`.
pub fn ci_exact_propagate(
    schedule: &TauSchedule,
    budget: &LossBudget,
    phases: &PhaseConfig,
) -> Result<CiRun> {
    budget.validate()?;
    let m = schedule.m();
    let pass = reference_phase_op(phases.gamma) * sample_op(budget.eta, phases.theta)?;
    let round_trip = uniform_loss_op(budget.eta_rt)?;
    let detect = uniform_loss_op(budget.eta_d)?;

    let mut state = uniform_loss_op(budget.eta_p)?.apply(&ProbeState::initial());
    let mut per_pass_dose = Vec::with_capacity(m);
    for (k, &tau) in schedule.taus().iter().enumerate() {
        state = beamsplitter_op(tau)?.apply(&state);
        per_pass_dose.push(state.samp_amp.norm_sqr());
        state = pass.apply(&state);
        if k + 1 < m {
            state = round_trip.apply(&state);
        }
    }
    state = detect.apply(&state);
    let dose = per_pass_dose.iter().sum();
    Ok(CiRun {
        exit_state: state,
        dose,
        per_pass_dose,
    })
}

/// Leading-order QFI:
/// `4 eta_P eta_rt^(m-1) eta_D |sum_k (m-k) eta^((m-k)/2) tau_k|^2`.
pub fn ci_perturbative_j(schedule: &TauSchedule, budget: &LossBudget) -> f64 {
    let m = schedule.m();
    let root_eta = budget.eta.sqrt();
    let amp: f64 = schedule
        .taus()
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            let passes = (m - k) as i32;
            passes as f64 * root_eta.powi(passes) * tau
        })
        .sum();
    let prefactor = budget.eta_p * budget.eta_rt.powi(m as i32 - 1) * budget.eta_d;
    4.0 * prefactor * amp * amp
}

/// Leading-order dose:
/// `eta_P sum_k eta_rt^k |sum_{k'<=k} eta^((k-k')/2) tau_k'|^2`.
pub fn ci_perturbative_d(schedule: &TauSchedule, budget: &LossBudget) -> f64 {
    let root_eta = budget.eta.sqrt();
    let mut amp = 0.0;
    let mut rt = 1.0;
    let mut dose = 0.0;
    for &tau in schedule.taus() {
        amp = root_eta * amp + tau;
        dose += rt * amp * amp;
        rt *= budget.eta_rt;
    }
    budget.eta_p * dose
}

/// The analytic beamsplitter schedule maximizing the leading-order `xi`:
/// `tau_0 = eps (eta_rt sqrt(eta))^m`,
/// `tau_k = eps (1 - eta_rt eta) (eta_rt sqrt(eta))^(m-k)` for `k > 0`.
///
/// With `eta_rt = 1` this is the lossless schedule.
pub fn ci_optimal_taus(m: usize, budget: &LossBudget, epsilon: f64) -> Result<TauSchedule> {
    if m < 1 {
        return Err(Error::Domain {
            name: "m",
            value: m as f64,
            expected: "m >= 1",
        });
    }
    if !(epsilon > 0.0 && epsilon <= crate::model::PERTURBATIVE_TAU_MAX) {
        return Err(Error::Domain {
            name: "epsilon",
            value: epsilon,
            expected: "a value in (0, 0.05]",
        });
    }
    budget.validate()?;
    let base = budget.eta_rt * budget.eta.sqrt();
    let taus = (0..m)
        .map(|k| {
            let tail = base.powi((m - k) as i32);
            if k == 0 {
                epsilon * tail
            } else {
                epsilon * (1.0 - budget.eta_rt * budget.eta) * tail
            }
        })
        .collect();
    TauSchedule::new(taus, epsilon)
}

/// Leading-order dose efficiency of a schedule at zero detuning.
pub fn ci_xi(schedule: &TauSchedule, budget: &LossBudget) -> Result<CiReport> {
    schedule.require_perturbative()?;
    budget.validate()?;
    if schedule.is_zero() {
        return Err(Error::DegenerateSchedule);
    }
    CiReport::new(
        ci_perturbative_j(schedule, budget),
        ci_perturbative_d(schedule, budget),
        budget.eta,
    )
}

/// Dose efficiency from the exact propagator with sample phase `detuning`
/// and reference phase zero.
pub fn ci_exact_xi(schedule: &TauSchedule, budget: &LossBudget, detuning: f64) -> Result<CiReport> {
    if schedule.is_zero() {
        return Err(Error::DegenerateSchedule);
    }
    let run = ci_exact_propagate(schedule, budget, &PhaseConfig::new(detuning, 0.0)?)?;
    let derivative = fd_derivative(
        |theta| {
            Ok(ci_exact_propagate(schedule, budget, &PhaseConfig::new(theta, 0.0)?)?.exit_state)
        },
        detuning,
    )?;
    let qfi = qfi_conditional(&run.exit_state, &derivative)?;
    CiReport::new(qfi.j, run.dose, budget.eta)
}

/// Exact `xi` as a function of the mismatch between sample and reference
/// phase.
pub fn ci_detuning_scan(
    schedule: &TauSchedule,
    budget: &LossBudget,
    detunings: &[f64],
) -> Result<Vec<(f64, f64)>> {
    schedule.require_perturbative()?;
    if schedule.is_zero() {
        return Err(Error::DegenerateSchedule);
    }
    detunings
        .iter()
        .map(|&delta| Ok((delta, ci_exact_xi(schedule, budget, delta)?.xi)))
        .collect()
}

/// `xi` of the optimal schedule as `m -> infinity`:
/// `4 eta eta_D / (1 - eta eta_rt)`.
pub fn ci_limit_xi(budget: &LossBudget) -> Result<f64> {
    let x = budget.eta * budget.eta_rt;
    if x >= 1.0 {
        return Err(Error::DivergentLimit("chain-interferometer xi"));
    }
    Ok(4.0 * budget.eta * budget.eta_d / (1.0 - x))
}

/// Lossless large-`m` limits of `J / eps^2` and `d / eps^2` under the
/// optimal schedule: `(4 eta^2 / (1-eta)^2, eta / (1-eta))`.
pub fn ci_lossless_limits(eta: f64) -> Result<(f64, f64)> {
    xi_ql(eta)?;
    let q = 1.0 - eta;
    Ok((4.0 * eta * eta / (q * q), eta / q))
}

/// `xi` of the optimal schedule for each `m` in `ms`, for convergence
/// studies.
pub fn ci_optimal_xi_sequence(ms: &[usize], budget: &LossBudget, epsilon: f64) -> Result<Vec<f64>> {
    ms.iter()
        .map(|&m| Ok(ci_xi(&ci_optimal_taus(m, budget, epsilon)?, budget)?.xi))
        .collect()
}

/// Leading-order `xi` of the constant-`tau` chain for every `m` in
/// `1..=max_m`, in one pass using prefix sums.
pub fn cic_xi_curve(max_m: usize, budget: &LossBudget) -> Vec<f64> {
    let root_eta = budget.eta.sqrt();
    let mut out = Vec::with_capacity(max_m);
    // sum_{j=1}^{m} j eta^(j/2)
    let mut j_sum = 0.0;
    let mut eta_pow = 1.0;
    // sum_{j=0}^{k} eta^(j/2)
    let mut inject = 0.0;
    let mut dose = 0.0;
    let mut rt_pow = 1.0;
    for m in 1..=max_m {
        let k = m - 1;
        inject += eta_pow;
        dose += rt_pow * inject * inject;
        eta_pow *= root_eta;
        j_sum += m as f64 * eta_pow;
        let j = 4.0 * budget.eta_p * budget.eta_rt.powi(k as i32) * budget.eta_d * j_sum * j_sum;
        out.push(if dose > 0.0 { j / (budget.eta_p * dose) } else { 0.0 });
        rt_pow *= budget.eta_rt;
    }
    out
}

/// Relative gap `|xi_exact - xi_pert| / xi_pert` at zero detuning, in
/// double-double arithmetic.
///
/// At zero detuning every amplitude is real and the phase derivative of the
/// state is `i` times a real vector, so the derivative is propagated
/// analytically alongside the state. This resolves gaps far below the
/// resolution of `f64`, which matters when the leading-order error is tiny.
pub fn ci_zero_detuning_gap(schedule: &TauSchedule, budget: &LossBudget) -> Result<f64> {
    schedule.require_perturbative()?;
    budget.validate()?;
    if schedule.is_zero() {
        return Err(Error::DegenerateSchedule);
    }
    let one = TwoFloat::from(1.0);
    let root = |x: f64| TwoFloat::from(x).sqrt();
    let root_eta = root(budget.eta);
    let root_rt = root(budget.eta_rt);
    let m = schedule.m();

    // state (r, s) and derivative i (dr, ds)
    let (mut r, mut s) = (root(budget.eta_p), TwoFloat::from(0.0));
    let (mut dr, mut ds) = (TwoFloat::from(0.0), TwoFloat::from(0.0));
    let mut dose = TwoFloat::from(0.0);
    for (k, &tau) in schedule.taus().iter().enumerate() {
        let t = TwoFloat::from(tau);
        let c = (one - t * t).sqrt();
        (r, s) = (c * r + t * s, c * s - t * r);
        (dr, ds) = (c * dr + t * ds, c * ds - t * dr);
        dose += s * s;
        // d/dtheta of sqrt(eta) e^{i theta} s at theta = 0 adds sqrt(eta) s
        ds = root_eta * (ds + s);
        s = root_eta * s;
        if k + 1 < m {
            r *= root_rt;
            s *= root_rt;
            dr *= root_rt;
            ds *= root_rt;
        }
    }
    let root_d = root(budget.eta_d);
    let (r, s, dr, ds) = (r * root_d, s * root_d, dr * root_d, ds * root_d);
    // division in double-double is no better than f64, so keep every
    // quotient symbolic until the last step: j_exact = 4 q / p
    let p = r * r + s * s;
    let overlap = r * dr + s * ds;
    let q = (dr * dr + ds * ds) * p - overlap * overlap;

    let mut amp = TwoFloat::from(0.0);
    let mut inject = TwoFloat::from(0.0);
    let mut rt = one;
    let mut dose_pert = TwoFloat::from(0.0);
    let eta_rt = TwoFloat::from(budget.eta_rt);
    for (k, &tau) in schedule.taus().iter().enumerate() {
        let passes = (m - k) as i32;
        let mut w = TwoFloat::from(passes as f64);
        for _ in 0..passes {
            w *= root_eta;
        }
        amp += w * tau;
        inject = root_eta * inject + tau;
        dose_pert += rt * inject * inject;
        rt *= eta_rt;
    }
    let mut prefactor = TwoFloat::from(budget.eta_p * budget.eta_d);
    for _ in 1..m {
        prefactor *= eta_rt;
    }
    // xi_exact = 4 q / (p dose), xi_pert = 4 prefactor amp^2 / (eta_P dose_pert)
    let exact_num = q * dose_pert * budget.eta_p;
    let pert_num = prefactor * amp * amp * p * dose;
    Ok((f64::from(exact_num - pert_num) / f64::from(pert_num)).abs())
}

/// Product of all stage operators for a given phase; used by tests and by
/// diagnostics to inspect the full transfer matrix.
pub fn chain_transfer(schedule: &TauSchedule, budget: &LossBudget, phases: &PhaseConfig) -> Result<Op2> {
    let m = schedule.m();
    let pass = reference_phase_op(phases.gamma) * sample_op(budget.eta, phases.theta)?;
    let round_trip = uniform_loss_op(budget.eta_rt)?;
    let mut total = uniform_loss_op(budget.eta_p)?;
    for (k, &tau) in schedule.taus().iter().enumerate() {
        total = pass * beamsplitter_op(tau)? * total;
        if k + 1 < m {
            total = round_trip * total;
        }
    }
    Ok(uniform_loss_op(budget.eta_d)? * total)
}
