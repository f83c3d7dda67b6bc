//! Adaptive filter kernels: LMS, FLMS and RVP-FLMS.
//!
//! All three share one per-sample contract: given a regressor vector `x`
//! and a desired sample `d`, produce the output `y = w·x` and error
//! `e = d - y`, then move the tap weights. The update rules are
//!
//! ```text
//! LMS       w_k += mu * e * x_k
//! FLMS      w_k += mu * e * x_k + mu_f * e * x_k * w_k^(1-v) / Γ(2-v)
//! RVP-FLMS  as FLMS with time-varying v(n), then
//!           p(n)   = alpha * p(n-1) + (1 - alpha) * e(n) * e(n-1)
//!           v(n+1) = clamp(beta * v(n) + gamma * p(n)^2, v_min, v_max)
//! ```
//!
//! where `w_k^(1-v)` is the sign-preserving magnitude power of
//! [`crate::fracmath::signed_frac_pow`]. The weight update always uses the
//! pre-update power `v(n)`; the power recursion advances afterwards.
//!
//! A filter instance is single-threaded: one adapt call at a time. Distinct
//! instances are independent and may run on distinct threads.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fracmath::{gamma, signed_frac_pow, FractionalPower};
use crate::Result;

/// Which update rule a filter applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "lms")]
    Lms,
    #[serde(rename = "flms")]
    Flms,
    #[serde(rename = "rvp")]
    RvpFlms,
}

impl Algorithm {
    /// Stable lowercase token used in CLI flags and CSV output.
    pub fn token(self) -> &'static str {
        match self {
            Algorithm::Lms => "lms",
            Algorithm::Flms => "flms",
            Algorithm::RvpFlms => "rvp",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lms" => Ok(Algorithm::Lms),
            "flms" => Ok(Algorithm::Flms),
            "rvp" | "rvp-flms" | "rvp_flms" => Ok(Algorithm::RvpFlms),
            other => Err(Error::config(format!(
                "unknown algorithm {other:?}, expected lms, flms or rvp"
            ))),
        }
    }
}

/// Step sizes, power-schedule constants and clamp bounds for a filter.
///
/// Defaults follow the conventional simulation setup for these algorithms:
/// 3 taps, `mu = mu_f = 1e-4`, `v0 = 0.5`, `alpha = 0.9`, `beta = 0.99`,
/// `gamma = 0.9` and clamp bounds `[0.5, 1.0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Tap count of the transversal filter.
    pub num_taps: usize,
    /// Integer-order step size.
    pub mu: f64,
    /// Fractional-term step size.
    pub mu_f: f64,
    /// Initial fractional power `v(0)`; FLMS keeps it fixed for the
    /// lifetime of the filter.
    pub v0: f64,
    /// Forgetting factor of the error-energy correlation average, in (0, 1).
    pub alpha: f64,
    /// Decay factor of the power recursion, in (0, 1).
    pub beta: f64,
    /// Gain applied to `p(n)^2` in the power recursion, positive.
    pub gamma: f64,
    /// Lower clamp bound for the fractional power.
    pub v_min: f64,
    /// Upper clamp bound for the fractional power.
    pub v_max: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            num_taps: 3,
            mu: 1e-4,
            mu_f: 1e-4,
            v0: 0.5,
            alpha: 0.9,
            beta: 0.99,
            gamma: 0.9,
            v_min: 0.5,
            v_max: 1.0,
        }
    }
}

impl FilterConfig {
    /// Checks every field against its documented range, naming the
    /// offending field in the error.
    pub fn validate(&self) -> Result<()> {
        if self.num_taps == 0 {
            return Err(Error::config("num_taps must be at least 1"));
        }
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(Error::config(format!("mu must be positive, got {}", self.mu)));
        }
        if !self.mu_f.is_finite() || self.mu_f < 0.0 {
            return Err(Error::config(format!(
                "mu_f must be non-negative, got {}",
                self.mu_f
            )));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(Error::config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !self.beta.is_finite() || self.beta <= 0.0 || self.beta >= 1.0 {
            return Err(Error::config(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(Error::config(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        // The fractional power and its clamp bounds all live in (0, 1].
        FractionalPower::new(self.v_min)
            .map_err(|_| Error::config(format!("v_min must lie in (0, 1], got {}", self.v_min)))?;
        FractionalPower::new(self.v_max)
            .map_err(|_| Error::config(format!("v_max must lie in (0, 1], got {}", self.v_max)))?;
        FractionalPower::new(self.v0)
            .map_err(|_| Error::config(format!("v0 must lie in (0, 1], got {}", self.v0)))?;
        if self.v_max <= self.v_min {
            return Err(Error::config(format!(
                "v_max ({}) must exceed v_min ({})",
                self.v_max, self.v_min
            )));
        }
        if self.v0 < self.v_min || self.v0 > self.v_max {
            return Err(Error::config(format!(
                "v0 ({}) must lie within [v_min, v_max] = [{}, {}]",
                self.v0, self.v_min, self.v_max
            )));
        }
        Ok(())
    }
}

/// Mutable state of one filter instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    /// Tap weights `w_k(n)`.
    pub w: Vec<f64>,
    /// Current fractional power `v(n)`; always within the clamp bounds.
    pub v: f64,
    /// Average error-energy correlation `p(n)`.
    pub p: f64,
    /// Previous-iteration error `e(n-1)`.
    pub e_prev: f64,
    /// Iteration counter.
    pub n: u64,
}

/// Output/error pair of one adapt call, with `e = d - y` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptOutcome {
    pub y: f64,
    pub e: f64,
}

/// A transversal adaptive filter with a selected update rule.
#[derive(Debug, Clone)]
pub struct AdaptiveFilter {
    algorithm: Algorithm,
    config: FilterConfig,
    state: FilterState,
    // Memo of (v, Γ(2-v)); v is pinned for FLMS and piecewise constant for
    // RVP-FLMS whenever the clamp engages, so this is hit most iterations.
    gamma_memo: (f64, f64),
}

impl AdaptiveFilter {
    /// Builds a filter with zeroed weights. Fails on an invalid config.
    pub fn new(algorithm: Algorithm, config: FilterConfig) -> Result<Self> {
        config.validate()?;
        let state = FilterState {
            w: vec![0.0; config.num_taps],
            v: config.v0,
            p: 0.0,
            e_prev: 0.0,
            n: 0,
        };
        let gamma_memo = (config.v0, gamma(2.0 - config.v0)?);
        Ok(AdaptiveFilter {
            algorithm,
            config,
            state,
            gamma_memo,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }

    pub fn weights(&self) -> &[f64] {
        &self.state.w
    }

    /// Zeroes the weights and restores `v = v0`, `p = 0`, `e_prev = 0`, `n = 0`.
    pub fn reset(&mut self) {
        self.state.w.fill(0.0);
        self.state.v = self.config.v0;
        self.state.p = 0.0;
        self.state.e_prev = 0.0;
        self.state.n = 0;
    }

    /// Filter output `y = Σ_k w_k x_k` for a regressor of length `num_taps`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.config.num_taps {
            return Err(Error::config(format!(
                "regressor length {} does not match num_taps {}",
                x.len(),
                self.config.num_taps
            )));
        }
        Ok(self.state.w.iter().zip(x).map(|(w, xi)| w * xi).sum())
    }

    /// One adapt step with the update rule selected at construction.
    pub fn adapt(&mut self, x: &[f64], d: f64) -> Result<AdaptOutcome> {
        match self.algorithm {
            Algorithm::Lms => self.adapt_lms(x, d),
            Algorithm::Flms => self.adapt_flms(x, d),
            Algorithm::RvpFlms => self.adapt_rvp_flms(x, d),
        }
    }

    /// Plain LMS step: `w_k += mu * e * x_k`.
    pub fn adapt_lms(&mut self, x: &[f64], d: f64) -> Result<AdaptOutcome> {
        let out = self.output_pair(x, d)?;
        let scale = self.config.mu * out.e;
        for (wk, xk) in self.state.w.iter_mut().zip(x) {
            *wk += scale * xk;
        }
        self.check_weights_finite()?;
        self.state.n += 1;
        Ok(out)
    }

    /// FLMS step with the fractional power fixed at `v0`.
    pub fn adapt_flms(&mut self, x: &[f64], d: f64) -> Result<AdaptOutcome> {
        let out = self.output_pair(x, d)?;
        self.fractional_update(x, out.e, self.config.v0)?;
        self.check_weights_finite()?;
        self.state.n += 1;
        Ok(out)
    }

    /// RVP-FLMS step: FLMS weight update at the current power `v(n)`,
    /// then the `p`/`v` recursion and clamp.
    pub fn adapt_rvp_flms(&mut self, x: &[f64], d: f64) -> Result<AdaptOutcome> {
        let out = self.output_pair(x, d)?;
        self.fractional_update(x, out.e, self.state.v)?;
        self.check_weights_finite()?;

        let cfg = &self.config;
        self.state.p = cfg.alpha * self.state.p + (1.0 - cfg.alpha) * out.e * self.state.e_prev;
        let v_next = cfg.beta * self.state.v + cfg.gamma * self.state.p * self.state.p;
        self.state.v = if v_next > cfg.v_max {
            cfg.v_max
        } else if v_next < cfg.v_min {
            cfg.v_min
        } else {
            v_next
        };
        if !self.state.v.is_finite() {
            return Err(Error::Divergence {
                iteration: self.state.n,
            });
        }
        self.state.e_prev = out.e;
        self.state.n += 1;
        Ok(out)
    }

    fn output_pair(&self, x: &[f64], d: f64) -> Result<AdaptOutcome> {
        let y = self.predict(x)?;
        let e = d - y;
        if !y.is_finite() || !e.is_finite() {
            return Err(Error::Divergence {
                iteration: self.state.n,
            });
        }
        Ok(AdaptOutcome { y, e })
    }

    fn fractional_update(&mut self, x: &[f64], e: f64, v: f64) -> Result<()> {
        let exponent = 1.0 - v;
        let g = self.gamma_factor(v);
        let cfg = &self.config;
        for (wk, xk) in self.state.w.iter_mut().zip(x) {
            let frac = signed_frac_pow(*wk, exponent)?;
            *wk += cfg.mu * e * xk + cfg.mu_f * e * xk * frac / g;
        }
        Ok(())
    }

    fn gamma_factor(&mut self, v: f64) -> f64 {
        if self.gamma_memo.0 != v {
            // v is clamped into (0, 1], so 2 - v lies in [1, 2).
            let g = gamma(2.0 - v).expect("2 - v within gamma domain");
            self.gamma_memo = (v, g);
        }
        self.gamma_memo.1
    }

    fn check_weights_finite(&self) -> Result<()> {
        if self.state.w.iter().all(|w| w.is_finite()) {
            Ok(())
        } else {
            Err(Error::Divergence {
                iteration: self.state.n,
            })
        }
    }
}
