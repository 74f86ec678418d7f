//! Solvers for the implicit input equation
//!
//! ```text
//! Z(u) = g(X^) + theta_hat' f(X^, u) - r = 0
//! ```
//!
//! The certified path is the contraction iteration `u <- u - Z(u) / l'`
//! started at zero and stopped after the a-priori iteration count `p0`. A
//! bracketing bisection is provided as an independent oracle and as the
//! "direct-solve" input mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{dot, Regressor};

/// How the contraction constant `l'` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LPrimeStrategy {
    Fixed(f64),
    /// `l' = margin_factor * max |dZ/du|` over an even grid of `samples`
    /// points on `[-|c'|/d0, |c'|/d0]`.
    Sampled { margin_factor: f64, samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainSign {
    Positive,
    Negative,
    /// Probe the sign of `dZ/du` at `u = 0`.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Lower bound standing in for the unknown input-gain floor `d0`.
    pub d0_lower: f64,
    #[serde(default = "default_l_prime")]
    pub l_prime: LPrimeStrategy,
    #[serde(default = "default_epsilon_tol")]
    pub epsilon_tol: f64,
    #[serde(default = "default_max_iter_cap")]
    pub max_iter_cap: u64,
    #[serde(default)]
    pub gain_sign: GainSign,
    /// Keep every iterate in [`SolveResult::iterates`].
    #[serde(default)]
    pub record_iterates: bool,
}

fn default_l_prime() -> LPrimeStrategy {
    LPrimeStrategy::Sampled {
        margin_factor: 1.25,
        samples: 256,
    }
}

fn default_epsilon_tol() -> f64 {
    1e-8
}

fn default_max_iter_cap() -> u64 {
    10_000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            d0_lower: 0.5,
            l_prime: default_l_prime(),
            epsilon_tol: default_epsilon_tol(),
            max_iter_cap: default_max_iter_cap(),
            gain_sign: GainSign::Auto,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.d0_lower > 0.0 && self.d0_lower.is_finite()) {
            errs.push(format!("d0_lower must be positive, got {}", self.d0_lower));
        }
        if !(self.epsilon_tol > 0.0 && self.epsilon_tol.is_finite()) {
            errs.push(format!("epsilon must be positive, got {}", self.epsilon_tol));
        }
        if self.max_iter_cap == 0 {
            errs.push("max_iter_cap must be at least 1".into());
        }
        match self.l_prime {
            LPrimeStrategy::Fixed(l) if !(l > self.d0_lower && l.is_finite()) => {
                errs.push(format!("fixed l' = {l} must exceed d0_lower = {}", self.d0_lower))
            }
            LPrimeStrategy::Sampled { margin_factor, samples } => {
                if !(margin_factor > 1.0 && margin_factor.is_finite()) {
                    errs.push(format!("margin_factor must exceed 1, got {margin_factor}"));
                }
                if samples < 2 {
                    errs.push(format!("l' sampling needs at least 2 points, got {samples}"));
                }
            }
            _ => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Ran the `p0` iterations prescribed by the stopping criterion.
    CriterionMet,
    /// `c' = 0`, or the iterate stopped moving in floating point.
    FixedPointExact,
    CapHit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub u: f64,
    pub iterations: u64,
    pub p0: u64,
    pub residual: f64,
    pub stop_reason: StopReason,
    pub l_prime: f64,
    pub c_prime: f64,
    /// Some iterate left `B(0, |c'|/d0)`.
    pub left_ball: bool,
    #[serde(skip)]
    pub iterates: Vec<f64>,
}

/// One instance of the input equation.
pub struct InputEquation<'a> {
    regressor: &'a dyn Regressor,
    theta_hat: &'a [f64],
    window: &'a [f64],
    target: f64,
    offset: f64,
    scratch: Vec<f64>,
}

impl<'a> InputEquation<'a> {
    pub fn new(regressor: &'a dyn Regressor, theta_hat: &'a [f64], window: &'a [f64], target: f64) -> Self {
        Self {
            offset: regressor.offset(window),
            scratch: vec![0.0; regressor.dim()],
            regressor,
            theta_hat,
            window,
            target,
        }
    }

    /// `Z(u)`.
    pub fn z(&mut self, u: f64) -> f64 {
        self.regressor.eval(self.window, u, &mut self.scratch);
        self.offset + dot(self.theta_hat, &self.scratch) - self.target
    }

    /// `dZ/du`.
    pub fn gain(&mut self, u: f64) -> f64 {
        self.regressor.eval_du(self.window, u, &mut self.scratch);
        dot(self.theta_hat, &self.scratch)
    }
}

/// A-priori iteration count guaranteeing `|u^p0 - u*| < eps` for a
/// contraction with ratio `1 - d0/l'`. Never less than 1.
pub fn stopping_p0(u1: f64, u0: f64, d0: f64, l_prime: f64, eps: f64) -> Result<u64> {
    if !(d0 > 0.0 && d0 < l_prime) {
        return Err(Error::Config(format!(
            "contraction ratio 1 - d0/l' outside (0, 1): d0 = {d0}, l' = {l_prime}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {eps}")));
    }
    if u1 == u0 {
        return Ok(1);
    }
    let q = 1.0 - d0 / l_prime;
    let arg = eps * d0 / (l_prime * (u1 - u0).abs());
    let exponent = (arg.ln() / q.ln()).floor();
    if exponent.is_nan() {
        return Err(Error::Config(format!("stopping criterion undefined for |u1 - u0| = {}", (u1 - u0).abs())));
    }
    // `as` saturates; a negative exponent means one step already suffices
    Ok((exponent.max(0.0) as u64).saturating_add(1))
}

fn sampled_l_prime(eq: &mut InputEquation<'_>, radius: f64, samples: usize) -> (f64, f64) {
    // returns (max |gain|, signed gain of largest magnitude)
    let mut best = 0.0f64;
    let mut signed = 0.0;
    for i in 0..samples {
        let u = if samples == 1 {
            0.0
        } else {
            -radius + 2.0 * radius * i as f64 / (samples - 1) as f64
        };
        let g = eq.gain(u);
        if g.abs() > best {
            best = g.abs();
            signed = g;
        }
    }
    (best, signed)
}

/// Contraction-mapping solve of `Z(u) = 0`.
pub fn solve_fixed_point(eq: &mut InputEquation<'_>, cfg: &SolverConfig) -> Result<SolveResult> {
    let c_prime = eq.z(0.0);
    if !c_prime.is_finite() {
        return Err(Error::Divergence {
            iterations: 0,
            l_prime: f64::NAN,
            last: 0.0,
        });
    }
    if c_prime == 0.0 {
        return Ok(SolveResult {
            u: 0.0,
            iterations: 0,
            p0: 1,
            residual: 0.0,
            stop_reason: StopReason::FixedPointExact,
            l_prime: f64::NAN,
            c_prime,
            left_ball: false,
            iterates: if cfg.record_iterates { vec![0.0] } else { Vec::new() },
        });
    }
    let d0 = cfg.d0_lower;
    let radius = c_prime.abs() / d0;

    let (l_prime, probe) = match cfg.l_prime {
        LPrimeStrategy::Fixed(l) => (l, 0.0),
        LPrimeStrategy::Sampled { margin_factor, samples } => {
            let (sup, signed) = sampled_l_prime(eq, radius, samples);
            // A sampled sup below d0 means d0_lower overestimates the gain;
            // keep the iteration well defined and let the residual show it.
            ((margin_factor * sup).max(margin_factor * d0), signed)
        }
    };
    let sign = match cfg.gain_sign {
        GainSign::Positive => 1.0,
        GainSign::Negative => -1.0,
        GainSign::Auto => {
            let g0 = eq.gain(0.0);
            let g = if g0 != 0.0 { g0 } else { probe };
            if g == 0.0 || !g.is_finite() {
                return Err(Error::Config(
                    "input gain vanishes at u = 0; the input equation has no usable sign".into(),
                ));
            }
            g.signum()
        }
    };

    let mut iterates = Vec::new();
    if cfg.record_iterates {
        iterates.push(0.0);
    }
    let mut u = -sign * c_prime / l_prime;
    if cfg.record_iterates {
        iterates.push(u);
    }
    let p0 = stopping_p0(u, 0.0, d0, l_prime, cfg.epsilon_tol)?;
    let limit = p0.min(cfg.max_iter_cap);
    let mut iterations = 1u64;
    let mut left_ball = u.abs() > radius * (1.0 + 1e-12);
    let mut stagnated = false;
    while iterations < limit {
        let next = u - sign * eq.z(u) / l_prime;
        if !next.is_finite() {
            return Err(Error::Divergence {
                iterations,
                l_prime,
                last: u,
            });
        }
        iterations += 1;
        if cfg.record_iterates {
            iterates.push(next);
        }
        left_ball |= next.abs() > radius * (1.0 + 1e-12);
        if next == u {
            stagnated = true;
            break;
        }
        u = next;
    }
    let stop_reason = if stagnated {
        StopReason::FixedPointExact
    } else if p0 > cfg.max_iter_cap {
        StopReason::CapHit
    } else {
        StopReason::CriterionMet
    };
    Ok(SolveResult {
        u,
        iterations,
        p0,
        residual: eq.z(u).abs(),
        stop_reason,
        l_prime,
        c_prime,
        left_ball,
        iterates,
    })
}

/// Bisection root of `Z`. The bracket is widened symmetrically from `+-1`
/// up to `+-2^40` when `(lo, hi)` does not straddle a sign change.
pub fn oracle_root(eq: &mut InputEquation<'_>, bracket: (f64, f64), tol: f64) -> Result<f64> {
    oracle_root_counted(eq, bracket, tol).map(|(u, _)| u)
}

fn oracle_root_counted(eq: &mut InputEquation<'_>, bracket: (f64, f64), tol: f64) -> Result<(f64, u64)> {
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    let mut zlo = eq.z(lo);
    let mut zhi = eq.z(hi);
    if zlo == 0.0 {
        return Ok((lo, 0));
    }
    if zhi == 0.0 {
        return Ok((hi, 0));
    }
    if !(zlo.signum() != zhi.signum()) {
        let mut samples = vec![(lo, zlo), (hi, zhi)];
        let mut found = false;
        for e in 0..=40 {
            let r = 2f64.powi(e);
            let (a, b) = (eq.z(-r), eq.z(r));
            samples.push((-r, a));
            samples.push((r, b));
            if a == 0.0 {
                return Ok((-r, 0));
            }
            if b == 0.0 {
                return Ok((r, 0));
            }
            if a.is_finite() && b.is_finite() && a.signum() != b.signum() {
                (lo, hi, zlo, zhi) = (-r, r, a, b);
                found = true;
                break;
            }
        }
        if !found {
            samples.retain(|(_, z)| z.is_finite());
            samples.truncate(12);
            return Err(Error::Bracketing { samples });
        }
    }
    let _ = zhi;
    let mut steps = 0u64;
    loop {
        let mid = 0.5 * (lo + hi);
        let zm = eq.z(mid);
        steps += 1;
        if zm.abs() <= tol || hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok((mid, steps));
        }
        if zm.signum() == zlo.signum() {
            lo = mid;
            zlo = zm;
        } else {
            hi = mid;
        }
    }
}

/// Input by bisection; the "direct-solve" mode.
pub fn solve_direct(eq: &mut InputEquation<'_>, tol: f64) -> Result<SolveResult> {
    let c_prime = eq.z(0.0);
    let (u, steps) = oracle_root_counted(eq, (-1.0, 1.0), tol)?;
    Ok(SolveResult {
        u,
        iterations: steps,
        p0: 0,
        residual: eq.z(u).abs(),
        stop_reason: StopReason::CriterionMet,
        l_prime: f64::NAN,
        c_prime,
        left_ball: false,
        iterates: Vec::new(),
    })
}
