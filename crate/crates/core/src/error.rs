use thiserror::Error;

/// Errors produced by the models, solvers and the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular planar operator (a = b = 0)")]
    SingularOperator,

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("infeasible amplitude set-point: psi = {psi:.6e} <= 0")]
    InfeasibleAmplitude { psi: f64 },

    #[error("modulation roots are complex (discriminant {discriminant:.6e})")]
    ComplexRoots { discriminant: f64 },

    #[error("no steady state beyond the nose tip: P_max = {p_max:.6e} W ({reason})")]
    BeyondNoseTip { p_max: f64, reason: String },

    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),

    #[error("modulation out of range: {0}")]
    Overmodulation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("integration blew up at t = {t:.9} s (step {step}); state = {state:?}")]
    Blowup { t: f64, step: u64, state: Vec<f64> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
