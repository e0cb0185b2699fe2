//! Quantum Fisher information of pure two-mode states.
//!
//! Absorption sends the particle to a state that carries no phase
//! information, so the QFI of the surviving branch is weighted by its
//! probability: `J = p * J_conditional`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ProbeState;

/// Finite-difference step in radians.
pub const FD_STEP: f64 = 1e-4;

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiResult {
    pub j: f64,
    pub p_survive: f64,
    pub j_conditional: f64,
}

/// `4<dpsi|dpsi> - 4|<dpsi|psi>|^2` for a normalized state.
pub fn qfi_pure(psi: &ProbeState, dpsi: &ProbeState) -> Result<f64> {
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Domain {
            name: "psi norm",
            value: norm.sqrt(),
            expected: "a normalized state (|psi| = 1)",
        });
    }
    let j = 4.0 * dpsi.norm_sqr() - 4.0 * dpsi.inner(psi).norm_sqr();
    Ok(j.max(0.0))
}

/// QFI of an unnormalized exit state, conditioned on survival and weighted
/// by the survival probability.
///
/// `exit_derivative` is the derivative of the *unnormalized* state. The
/// derivative of the normalized state follows from the quotient rule.
pub fn qfi_conditional(exit_state: &ProbeState, exit_derivative: &ProbeState) -> Result<QfiResult> {
    let p = exit_state.norm_sqr();
    if !(p > 0.0) {
        return Err(Error::DegenerateState);
    }
    if p > 1.0 + 1e-12 {
        return Err(Error::Domain {
            name: "exit norm^2",
            value: p,
            expected: "a survival probability in (0, 1]",
        });
    }
    let root = p.sqrt();
    let dp = 2.0 * exit_state.inner(exit_derivative).re;
    let psi_n = exit_state.scale(Complex64::new(1.0 / root, 0.0));
    let dpsi_n = exit_derivative.scale(Complex64::new(1.0 / root, 0.0))
        - exit_state.scale(Complex64::new(dp / (2.0 * p * root), 0.0));
    let j_conditional = qfi_pure(&psi_n, &dpsi_n)?;
    Ok(QfiResult {
        j: p * j_conditional,
        p_survive: p,
        j_conditional,
    })
}

/// Derivative of `propagator` at `theta` from central differences.
///
/// Central differences at `h` and `2h` are combined by one Richardson step,
/// which is the classical 5-point stencil with O(h^4) truncation error.
pub fn fd_derivative<F>(propagator: F, theta: f64) -> Result<ProbeState>
where
    F: Fn(f64) -> Result<ProbeState>,
{
    let h = FD_STEP;
    let p1 = propagator(theta + h)?;
    let m1 = propagator(theta - h)?;
    let p2 = propagator(theta + 2.0 * h)?;
    let m2 = propagator(theta - 2.0 * h)?;
    let d_h = (p1 - m1).scale(Complex64::new(1.0 / (2.0 * h), 0.0));
    let d_2h = (p2 - m2).scale(Complex64::new(1.0 / (4.0 * h), 0.0));
    // (4 D(h) - D(2h)) / 3
    Ok(d_h.scale(Complex64::new(4.0 / 3.0, 0.0)) - d_2h.scale(Complex64::new(1.0 / 3.0, 0.0)))
}
