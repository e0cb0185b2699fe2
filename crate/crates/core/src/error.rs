use thiserror::Error;

/// Errors raised by the models, calculators and sweep machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its allowed domain.
    #[error("{name} = {value} is out of range: expected {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("{family} requires parameter {name}")]
    MissingParameter {
        family: &'static str,
        name: &'static str,
    },

    #[error("state has zero norm; conditional QFI is undefined")]
    DegenerateState,

    #[error("schedule injects no amplitude into the sample arm (zero dose)")]
    DegenerateSchedule,

    /// The result is below the smallest normal `f64`, typically from
    /// `eta_rt^m` in very long lossy chains.
    #[error("{0} underflows double precision")]
    Underflow(&'static str),

    #[error("schedule is not perturbative: max tau = {max_tau} exceeds {threshold}")]
    NotPerturbative { max_tau: f64, threshold: f64 },

    #[error("{0} diverges for a lossless budget")]
    DivergentLimit(&'static str),

    #[error("target ratio {0} is unattainable (only the infinite-squeezing limit reaches 1)")]
    Unattainable(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            expected: "a value in [0, 1]",
        })
    }
}
