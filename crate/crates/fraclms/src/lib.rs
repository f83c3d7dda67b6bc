//! Fractional least-mean-square adaptive filtering.
//!
//! This crate implements the LMS adaptive filter together with two
//! fractional-order variants behind one per-sample `adapt` contract:
//!
//! * **FLMS** — LMS augmented with a fractional-derivative term of the cost,
//!   which adds a per-tap factor `w^(1-v) / Γ(2-v)` to the gradient step for
//!   a fixed fractional order `v ∈ (0, 1]`.
//! * **RVP-FLMS** — FLMS whose fractional order `v(n)` is adapted on-line
//!   from an exponentially averaged error-energy correlation and clamped to
//!   `[v_min, v_max]`, trading a large effective step during the transient
//!   for a small one at steady state.
//!
//! On top of the kernels sit deterministic, seedable signal generators
//! ([`signals`]) and Monte-Carlo experiment harnesses ([`experiments`]) that
//! run system-identification and channel-equalization ensembles and
//! produce MSE learning curves in dB.
//!
//! Everything is reproducible by construction: all randomness flows from a
//! single master seed through a fixed stream-derivation scheme, so repeated
//! runs with the same parameters are byte-identical.

pub mod error;
pub mod experiments;
pub mod filters;
pub mod fracmath;
pub mod signals;

pub use error::Error;
pub use experiments::{
    compare, Comparison, CurveStats, ExperimentKind, ExperimentSpec, LearningCurve, SysIdResult,
};
pub use filters::{AdaptOutcome, AdaptiveFilter, Algorithm, FilterConfig, FilterState};
pub use fracmath::FractionalPower;
pub use signals::{FirSystem, SignalFrame};

/// Convenience alias for results carrying [`Error`].
pub type Result<T> = std::result::Result<T, Error>;
