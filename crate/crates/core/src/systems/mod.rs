//! Random semiflows `φ(t, ω)x` and the concrete systems used throughout the crate.
//!
//! Every system implements [`Cocycle`]. The driving noise is passed as a
//! [`ShiftedPath`], so the skew product `(ω, x) ↦ (θ_t ω, φ(t, ω)x)` is realized by
//! evolving `x` and shifting the path by the same amount.

mod galerkin;
mod pitchfork;
mod stochastic;

pub use galerkin::{ChafeeInfanteGalerkin, ModeProjection};
pub use pitchfork::PitchforkFlow;
pub use stochastic::{FixedPointEstimate, FixedPointSign, StochasticPitchfork};

use thiserror::Error;

use crate::noise::{NoiseError, ShiftedPath};

pub type State = Vec<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("state became non-finite at t = {time}")]
    BlowUp { time: f64 },
}

/// A cocycle over the Wiener shift.
///
/// Implementations must return `x` unchanged for `t = 0` and satisfy
/// `φ(t + s, ω) = φ(t, θ_s ω) ∘ φ(s, ω)` up to their integration error.
pub trait Cocycle: Send + Sync {
    fn name(&self) -> &str;

    fn state_dim(&self) -> usize;

    /// `φ(t, ω)x`. The path window must cover `[0, t]`.
    fn evolve(&self, t: f64, omega: &ShiftedPath<'_>, x: &[f64]) -> Result<State, SystemError>;

    /// Evolves many initial states over the same fiber. Systems with a
    /// state-independent part of the solution override this.
    fn evolve_batch(&self, t: f64, omega: &ShiftedPath<'_>, xs: &[State]) -> Vec<Result<State, SystemError>> {
        xs.iter().map(|x| self.evolve(t, omega, x)).collect()
    }
}

pub(crate) fn check_args(dim: usize, t: f64, omega: &ShiftedPath<'_>, x: &[f64]) -> Result<(), SystemError> {
    if x.len() != dim {
        return Err(SystemError::Dimension { expected: dim, got: x.len() });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SystemError::InvalidArgument(format!("evolution time {t} must be finite and >= 0")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SystemError::InvalidArgument("initial state is not finite".into()));
    }
    if !omega.covers(0.0, t) {
        let (lo, hi) = omega.window();
        return Err(NoiseError::OutOfWindow { t, lo, hi }.into());
    }
    Ok(())
}

/// Pull-back map `φ(t, θ_{−t} ω)x` into the fiber at time 0.
pub fn evolve_pullback<S: Cocycle + ?Sized>(
    system: &S,
    t: f64,
    omega: &ShiftedPath<'_>,
    x: &[f64],
) -> Result<State, SystemError> {
    if t == 0.0 {
        check_args(system.state_dim(), 0.0, omega, x)?;
        return Ok(x.to_vec());
    }
    let past = omega.shift(-t)?;
    system.evolve(t, &past, x)
}

/// Euclidean distance between `φ(t + s, ω)x` and `φ(t, θ_s ω) φ(s, ω)x`.
pub fn cocycle_residual<S: Cocycle + ?Sized>(
    system: &S,
    t: f64,
    s: f64,
    omega: &ShiftedPath<'_>,
    x: &[f64],
) -> Result<f64, SystemError> {
    let direct = system.evolve(t + s, omega, x)?;
    let mid = system.evolve(s, omega, x)?;
    let later = omega.shift(s)?;
    let composed = system.evolve(t, &later, &mid)?;
    Ok(euclidean(&direct, &composed))
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}
