//! Two-mode single-particle model of an interferometer.
//!
//! A probe is a pair of complex amplitudes: the reference channel and the
//! sample channel. Amplitudes are never renormalized, so the squared norm of a
//! state is the probability that the particle has survived every loss so far.
//! Each stage of a chain interferometer is a product of the small operators
//! defined here.

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};

/// Largest beamsplitter amplitude for which the leading-order dose and QFI
/// expressions are treated as valid.
pub const PERTURBATIVE_TAU_MAX: f64 = 0.05;

/// Unnormalized amplitude pair `(reference, sample)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeState {
    pub ref_amp: Complex64,
    pub samp_amp: Complex64,
}

impl ProbeState {
    pub fn new(ref_amp: Complex64, samp_amp: Complex64) -> Self {
        Self { ref_amp, samp_amp }
    }

    /// The particle enters through the reference port.
    pub fn initial() -> Self {
        Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ref_amp.norm_sqr() + self.samp_amp.norm_sqr()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::new(self.ref_amp * factor, self.samp_amp * factor)
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &ProbeState) -> Complex64 {
        self.ref_amp.conj() * other.ref_amp + self.samp_amp.conj() * other.samp_amp
    }

    pub fn as_array(&self) -> [Complex64; 2] {
        [self.ref_amp, self.samp_amp]
    }
}

impl std::ops::Add for ProbeState {
    type Output = ProbeState;
    fn add(self, rhs: ProbeState) -> ProbeState {
        ProbeState::new(self.ref_amp + rhs.ref_amp, self.samp_amp + rhs.samp_amp)
    }
}

impl std::ops::Sub for ProbeState {
    type Output = ProbeState;
    fn sub(self, rhs: ProbeState) -> ProbeState {
        ProbeState::new(self.ref_amp - rhs.ref_amp, self.samp_amp - rhs.samp_amp)
    }
}

/// A 2×2 complex operator acting on [`ProbeState`], row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Op2(pub [[Complex64; 2]; 2]);

impl Op2 {
    pub fn identity() -> Self {
        Self::diag(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Op2([[a, zero], [zero, b]])
    }

    pub fn real(m: [[f64; 2]; 2]) -> Self {
        Op2([
            [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
            [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
        ])
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Op2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn apply(&self, state: &ProbeState) -> ProbeState {
        let m = &self.0;
        ProbeState::new(
            m[0][0] * state.ref_amp + m[0][1] * state.samp_amp,
            m[1][0] * state.ref_amp + m[1][1] * state.samp_amp,
        )
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Op2) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }
}

impl Mul for Op2 {
    type Output = Op2;
    fn mul(self, rhs: Op2) -> Op2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Op2(out)
    }
}

impl Mul<ProbeState> for Op2 {
    type Output = ProbeState;
    fn mul(self, rhs: ProbeState) -> ProbeState {
        self.apply(&rhs)
    }
}

/// Transmissivities of the sample and of the optics around it.
///
/// `eta` is the probability that a particle survives one pass through the
/// sample; `eta_p`, `eta_rt` and `eta_d` are the survival probabilities of
/// probe preparation, each round trip between stages, and detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub eta: f64,
    pub eta_p: f64,
    pub eta_rt: f64,
    pub eta_d: f64,
}

impl LossBudget {
    pub fn new(eta: f64, eta_p: f64, eta_rt: f64, eta_d: f64) -> Result<Self> {
        check_unit_interval("eta", eta)?;
        for (name, v) in [("eta_p", eta_p), ("eta_rt", eta_rt), ("eta_d", eta_d)] {
            if !(v.is_finite() && v > 0.0 && v <= 1.0) {
                return Err(Error::Domain {
                    name,
                    value: v,
                    expected: "a value in (0, 1]",
                });
            }
        }
        Ok(Self {
            eta,
            eta_p,
            eta_rt,
            eta_d,
        })
    }

    /// Only the sample absorbs.
    pub fn lossless(eta: f64) -> Result<Self> {
        Self::new(eta, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.eta, self.eta_p, self.eta_rt, self.eta_d).map(|_| ())
    }

    pub fn is_lossless(&self) -> bool {
        self.eta_p == 1.0 && self.eta_rt == 1.0 && self.eta_d == 1.0
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        Self::new(eta, self.eta_p, self.eta_rt, self.eta_d)
    }
}

/// Per-stage beamsplitter amplitudes `tau_k = sqrt(T_k)` and their scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSchedule {
    taus: Vec<f64>,
    epsilon: f64,
}

impl TauSchedule {
    pub fn new(taus: Vec<f64>, epsilon: f64) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::Domain {
                name: "m",
                value: 0.0,
                expected: "at least one stage",
            });
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Domain {
                name: "epsilon",
                value: epsilon,
                expected: "a positive finite scale",
            });
        }
        for &t in &taus {
            if !(t.is_finite() && (0.0..1.0).contains(&t)) {
                return Err(Error::Domain {
                    name: "tau",
                    value: t,
                    expected: "a value in [0, 1)",
                });
            }
        }
        Ok(Self { taus, epsilon })
    }

    /// Every stage couples with the same amplitude `epsilon`.
    pub fn constant(m: usize, epsilon: f64) -> Result<Self> {
        Self::new(vec![epsilon; m], epsilon)
    }

    /// Only the first beamsplitter couples; the chain then behaves as a
    /// plain multi-pass interferometer.
    pub fn single_injection(m: usize, epsilon: f64) -> Result<Self> {
        let mut taus = vec![0.0; m];
        if let Some(first) = taus.first_mut() {
            *first = epsilon;
        }
        Self::new(taus, epsilon)
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn m(&self) -> usize {
        self.taus.len()
    }

    pub fn max_tau(&self) -> f64 {
        self.taus.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_perturbative(&self) -> bool {
        self.max_tau() <= PERTURBATIVE_TAU_MAX
    }

    pub fn require_perturbative(&self) -> Result<()> {
        if self.is_perturbative() {
            Ok(())
        } else {
            Err(Error::NotPerturbative {
                max_tau: self.max_tau(),
                threshold: PERTURBATIVE_TAU_MAX,
            })
        }
    }

    pub fn is_zero(&self) -> bool {
        self.taus.iter().all(|&t| t == 0.0)
    }

    /// Same direction, every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.taus.iter().map(|t| t * factor).collect(),
            self.epsilon * factor,
        )
    }

    pub fn norm(&self) -> f64 {
        self.taus.iter().map(|t| t * t).sum::<f64>().sqrt()
    }
}

/// Sample phase and the programmed reference phase shift applied per stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub theta: f64,
    pub gamma: f64,
}

impl PhaseConfig {
    pub fn new(theta: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("gamma", gamma)] {
            if !v.is_finite() {
                return Err(Error::Domain {
                    name,
                    value: v,
                    expected: "a finite phase",
                });
            }
        }
        Ok(Self { theta, gamma })
    }
}

/// Real orthogonal beamsplitter `[[sqrt(1-tau^2), tau], [-tau, sqrt(1-tau^2)]]`.
///
/// Amplitude `tau` couples the two channels; the sign on the lower-left
/// entry keeps the matrix unitary.
pub fn beamsplitter_op(tau: f64) -> Result<Op2> {
    if !(tau.is_finite() && (0.0..1.0).contains(&tau)) {
        return Err(Error::Domain {
            name: "tau",
            value: tau,
            expected: "a value in [0, 1)",
        });
    }
    let c = (1.0 - tau * tau).sqrt();
    Ok(Op2::real([[c, tau], [-tau, c]]))
}

/// Absorbing sample with phase shift: `diag(1, sqrt(eta) e^{i theta})`.
pub fn sample_op(eta: f64, theta: f64) -> Result<Op2> {
    check_unit_interval("eta", eta)?;
    Ok(Op2::diag(
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(eta.sqrt(), theta),
    ))
}

/// Programmed phase on the reference arm: `diag(e^{i gamma}, 1)`.
pub fn reference_phase_op(gamma: f64) -> Op2 {
    Op2::diag(Complex64::from_polar(1.0, gamma), Complex64::new(1.0, 0.0))
}

/// Loss hitting both channels equally: `sqrt(eta_x) * I`.
pub fn uniform_loss_op(eta_x: f64) -> Result<Op2> {
    check_unit_interval("eta_x", eta_x)?;
    let a = Complex64::new(eta_x.sqrt(), 0.0);
    Ok(Op2::diag(a, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn beamsplitter_examples() {
        assert_eq!(beamsplitter_op(0.0).unwrap(), Op2::identity());
        let b = beamsplitter_op(FRAC_1_SQRT_2).unwrap();
        for (r, col, sign) in [(0, 0, 1.0), (0, 1, 1.0), (1, 0, -1.0), (1, 1, 1.0)] {
            assert!((b.entry(r, col) - c(sign * FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
        let b = beamsplitter_op(0.09).unwrap();
        assert!((b.entry(0, 0).re - 0.995_941_765_365_827).abs() < 1e-15);
        assert_eq!(b.entry(1, 1), b.entry(0, 0));
        assert_eq!(b.entry(0, 1).re, 0.09);
        assert_eq!(b.entry(1, 0).re, -0.09);
        assert!(beamsplitter_op(1.0).is_err());
        assert!(beamsplitter_op(-0.1).is_err());
    }

    #[test]
    fn beamsplitter_is_orthogonal_on_grid() {
        for i in 0..=99 {
            let tau = 0.01 * i as f64;
            let b = beamsplitter_op(tau).unwrap();
            let prod = b * b.adjoint();
            assert!(prod.max_abs_diff(&Op2::identity()) < 1e-14, "tau = {tau}");
        }
    }

    #[test]
    fn sample_examples() {
        assert_eq!(sample_op(1.0, 0.0).unwrap(), Op2::identity());
        let s = sample_op(0.81, 0.0).unwrap();
        assert!(s.max_abs_diff(&Op2::diag(c(1.0, 0.0), c(0.9, 0.0))) < 1e-15);
        let s = sample_op(0.9, PI).unwrap();
        assert!((s.entry(1, 1) - c(-0.948_683_298_050_513_8, 0.0)).norm() < 1e-12);
        assert!(sample_op(1.1, 0.0).is_err());
        assert!(sample_op(-0.1, 0.0).is_err());
    }

    #[test]
    fn reference_phase_examples() {
        assert_eq!(reference_phase_op(0.0), Op2::identity());
        let r = reference_phase_op(FRAC_PI_2);
        assert!((r.entry(0, 0) - c(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(r.entry(1, 1), c(1.0, 0.0));

        // m applications of gamma = theta: relative phase m*theta between the arms
        let theta = 0.3;
        let m = 5;
        let mut total = Op2::identity();
        for _ in 0..m {
            total = reference_phase_op(theta) * total;
        }
        let rel = total.entry(0, 0) * total.entry(1, 1).conj();
        assert!((rel - Complex64::from_polar(1.0, m as f64 * theta)).norm() < 1e-14);
        // and it cancels the sample phase when the sample is transparent
        let stage = sample_op(1.0, theta).unwrap() * reference_phase_op(theta);
        let global = stage.entry(0, 0) * stage.entry(1, 1).conj();
        assert!((global - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn uniform_loss_examples() {
        assert_eq!(uniform_loss_op(1.0).unwrap(), Op2::identity());
        let l = uniform_loss_op(0.95).unwrap();
        assert!((l.entry(0, 0).re - 0.974_679_434_480_896_4).abs() < 1e-14);
        let psi = ProbeState::new(c(0.6, 0.1), c(0.2, -0.7));
        let out = l * (l * psi);
        assert!((out.norm_sqr() - 0.9025 * psi.norm_sqr()).abs() < 1e-15);
        assert!(uniform_loss_op(1.5).is_err());
    }

    #[test]
    fn loss_budget_rejects_out_of_range() {
        assert!(LossBudget::new(1.2, 1.0, 1.0, 1.0).is_err());
        assert!(LossBudget::new(0.5, 0.0, 1.0, 1.0).is_err());
        assert!(LossBudget::new(0.5, 1.0, -0.1, 1.0).is_err());
        assert!(LossBudget::new(0.5, 1.0, 1.0, f64::NAN).is_err());
        assert!(LossBudget::new(0.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn tau_schedule_invariants() {
        assert!(TauSchedule::new(vec![], 0.01).is_err());
        assert!(TauSchedule::new(vec![1.0], 0.01).is_err());
        assert!(TauSchedule::new(vec![0.01], 0.0).is_err());
        let s = TauSchedule::new(vec![0.01, 0.06], 0.06).unwrap();
        assert!(!s.is_perturbative());
        assert!(s.require_perturbative().is_err());
        let s = TauSchedule::single_injection(4, 0.01).unwrap();
        assert_eq!(s.taus(), &[0.01, 0.0, 0.0, 0.0]);
        assert_eq!(ProbeState::initial().norm_sqr(), 1.0);
    }

    fn arb_state() -> impl Strategy<Value = ProbeState> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_map(|(a, b, x, y)| ProbeState::new(c(a, b), c(x, y)))
    }

    proptest! {
        #[test]
        fn sample_op_never_increases_norm(psi in arb_state(), eta in 0.0..=1.0f64, theta in -PI..PI) {
            let out = sample_op(eta, theta).unwrap() * psi;
            prop_assert!(out.norm_sqr() <= psi.norm_sqr() * (1.0 + 1e-14));
            if eta < 1.0 && psi.samp_amp.norm() > 1e-6 {
                prop_assert!(out.norm_sqr() < psi.norm_sqr());
            }
        }

        #[test]
        fn norm_non_increasing_under_any_sequence(
            ops in proptest::collection::vec((0usize..4, 0.0..0.99f64, -PI..PI), 1..40)
        ) {
            let mut psi = ProbeState::initial();
            let mut last = psi.norm_sqr();
            for (kind, x, phase) in ops {
                let op = match kind {
                    0 => beamsplitter_op(x).unwrap(),
                    1 => sample_op(x, phase).unwrap(),
                    2 => reference_phase_op(phase),
                    _ => uniform_loss_op(x).unwrap(),
                };
                psi = op * psi;
                let n = psi.norm_sqr();
                prop_assert!(n <= last + 1e-12);
                prop_assert!(n <= 1.0 + 1e-12);
                last = n;
            }
        }
    }
}
