//! Gradient-descent parameter adaptation with a dead zone, disturbance-bound
//! estimation and projection onto a known ball.
//!
//! One [`AdaptState`] holds the estimates for every control instant of one
//! channel. Updates at different `t` never interact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{dot, norm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl ProjectionBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("ball center must be a non-empty finite vector".into()));
        }
        Ok(Self { center, radius })
    }

    pub fn distance(&self, theta: &[f64]) -> f64 {
        norm(&self.offset(theta))
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.distance(theta) <= self.radius
    }

    fn offset(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.center).map(|(a, c)| a - c).collect()
    }
}

/// Which simplification of the adaptation law is in force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptVariant {
    /// Dead zone driven by the estimated disturbance bound.
    Robust,
    /// Dead zone disabled (`a = 1`), no bound estimation.
    DisturbanceFree,
    /// Dead zone driven by a known bound `w+`, no bound estimation.
    KnownBound(f64),
}

/// Normalization of the modeling error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MMode {
    /// `m^2 = 1 + |f|^2`.
    #[default]
    Normalized,
    /// `m = 1`, valid for bounded regressors.
    Unit,
}

/// Returns `(epsilon, m^2)` with `m^2 = 1 + |f|^2` and
/// `epsilon = (x_next - theta_hat' f) / m^2`.
pub fn normalized_error(x_next: f64, theta_hat: &[f64], f_val: &[f64]) -> (f64, f64) {
    let m_sq = 1.0 + dot(f_val, f_val);
    ((x_next - dot(theta_hat, f_val)) / m_sq, m_sq)
}

/// Dead-zone factor. Zero when `|epsilon| <= w_hat / m^2`, ties included.
pub fn dead_zone(epsilon: f64, m_sq: f64, w_hat: f64) -> f64 {
    let abs = epsilon.abs();
    if abs <= w_hat / m_sq {
        0.0
    } else {
        1.0 - w_hat / (abs * m_sq)
    }
}

/// Euclidean projection onto the ball.
pub fn project(theta_bar: &[f64], ball: &ProjectionBall) -> Vec<f64> {
    let off = ball.offset(theta_bar);
    let d = norm(&off);
    if d <= ball.radius {
        return theta_bar.to_vec();
    }
    ball.center
        .iter()
        .zip(&off)
        .map(|(c, o)| c + ball.radius * o / d)
        .collect()
}

/// `V = |theta_hat - theta|^2 / 2 + (w_hat - w)^2 / 2`. Needs the hidden truth,
/// so it is only used for diagnostics.
pub fn lyapunov(theta_hat: &[f64], w_hat: f64, theta_true: &[f64], w_true: f64) -> f64 {
    let d: f64 = theta_hat
        .iter()
        .zip(theta_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    0.5 * d + 0.5 * (w_hat - w_true) * (w_hat - w_true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateDiagnostics {
    pub epsilon: f64,
    pub m_sq: f64,
    pub a: f64,
    pub theta_bar: Vec<f64>,
    /// Estimated bound after the update (unchanged for non-robust variants).
    pub w_hat: f64,
    pub projected: bool,
}

#[derive(Debug, Clone)]
pub struct AdaptState {
    theta_hat: Vec<Vec<f64>>,
    w_hat: Vec<f64>,
    eta: f64,
    ball: ProjectionBall,
    variant: AdaptVariant,
    m_mode: MMode,
}

impl AdaptState {
    /// `steps` estimates, all initialised to `theta0` and `w_hat = 0`.
    ///
    /// `theta0` may lie outside the ball; it is brought inside by the first
    /// update at each `t` (or immediately with [`AdaptState::project_all`]).
    pub fn new(steps: usize, theta0: Vec<f64>, eta: f64, ball: ProjectionBall, variant: AdaptVariant) -> Result<Self> {
        if !(eta > 0.0 && eta < 2.0) {
            return Err(Error::Config(format!("adaptation gain must lie in (0, 2), got {eta}")));
        }
        if theta0.len() != ball.center.len() {
            return Err(Error::Config(format!(
                "initial estimate has length {} but the ball has dimension {}",
                theta0.len(),
                ball.center.len()
            )));
        }
        if theta0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("initial estimate must be finite".into()));
        }
        if let AdaptVariant::KnownBound(w) = variant {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("known disturbance bound must be non-negative, got {w}")));
            }
        }
        Ok(Self {
            theta_hat: vec![theta0; steps],
            w_hat: vec![0.0; steps],
            eta,
            ball,
            variant,
            m_mode: MMode::Normalized,
        })
    }

    pub fn with_m_mode(mut self, m_mode: MMode) -> Self {
        self.m_mode = m_mode;
        self
    }

    pub fn project_all(&mut self) {
        for th in &mut self.theta_hat {
            *th = project(th, &self.ball);
        }
    }

    pub fn theta_hat(&self, t: usize) -> &[f64] {
        &self.theta_hat[t]
    }

    /// Overwrites the estimate at `t` (warm starts, tests).
    pub fn set_theta_hat(&mut self, t: usize, theta: Vec<f64>) {
        assert_eq!(theta.len(), self.ball.center.len(), "estimate dimension mismatch");
        self.theta_hat[t] = theta;
    }

    pub fn theta_hats(&self) -> &[Vec<f64>] {
        &self.theta_hat
    }

    pub fn w_hat(&self, t: usize) -> f64 {
        self.w_hat[t]
    }

    pub fn w_hats(&self) -> &[f64] {
        &self.w_hat
    }

    pub fn ball(&self) -> &ProjectionBall {
        &self.ball
    }

    pub fn variant(&self) -> AdaptVariant {
        self.variant
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn steps(&self) -> usize {
        self.theta_hat.len()
    }

    /// Applies the variant-appropriate law.
    pub fn update(&mut self, t: usize, x_next: f64, f_val: &[f64]) -> Result<UpdateDiagnostics> {
        match self.variant {
            AdaptVariant::DisturbanceFree => self.gdpa_update_disturbance_free(t, x_next, f_val),
            _ => self.gdpa_update(t, x_next, f_val),
        }
    }

    /// Robust or known-bound law at instant `t`, from the measured
    /// `x(t + rho)` (minus any known offset) and `f(X(t), u(t))`.
    pub fn gdpa_update(&mut self, t: usize, x_next: f64, f_val: &[f64]) -> Result<UpdateDiagnostics> {
        let bound = match self.variant {
            AdaptVariant::Robust => self.w_hat[t],
            AdaptVariant::KnownBound(w) => w,
            AdaptVariant::DisturbanceFree => {
                return Err(Error::Usage(
                    "gdpa_update called on a disturbance-free adaptation state".into(),
                ))
            }
        };
        let (epsilon, m_sq) = self.error(t, x_next, f_val)?;
        let a = dead_zone(epsilon, m_sq, bound);
        if self.variant == AdaptVariant::Robust {
            self.w_hat[t] += self.eta * a * epsilon.abs();
        }
        Ok(self.finish(t, epsilon, m_sq, a, f_val))
    }

    pub fn gdpa_update_disturbance_free(&mut self, t: usize, x_next: f64, f_val: &[f64]) -> Result<UpdateDiagnostics> {
        if self.variant != AdaptVariant::DisturbanceFree {
            return Err(Error::Usage(format!(
                "disturbance-free update called on a {:?} adaptation state",
                self.variant
            )));
        }
        let (epsilon, m_sq) = self.error(t, x_next, f_val)?;
        Ok(self.finish(t, epsilon, m_sq, 1.0, f_val))
    }

    fn error(&self, t: usize, x_next: f64, f_val: &[f64]) -> Result<(f64, f64)> {
        if t >= self.theta_hat.len() {
            return Err(Error::Sequencing(format!(
                "no adaptation state for t={t} (steps = {})",
                self.theta_hat.len()
            )));
        }
        if f_val.len() != self.ball.center.len() {
            return Err(Error::Usage(format!(
                "regressor has length {}, estimate has {}",
                f_val.len(),
                self.ball.center.len()
            )));
        }
        Ok(match self.m_mode {
            MMode::Normalized => normalized_error(x_next, &self.theta_hat[t], f_val),
            MMode::Unit => (x_next - dot(&self.theta_hat[t], f_val), 1.0),
        })
    }

    fn finish(&mut self, t: usize, epsilon: f64, m_sq: f64, a: f64, f_val: &[f64]) -> UpdateDiagnostics {
        let step = self.eta * a * epsilon;
        let theta_bar: Vec<f64> = self.theta_hat[t]
            .iter()
            .zip(f_val)
            .map(|(th, f)| th + step * f)
            .collect();
        let projected = !self.ball.contains(&theta_bar);
        self.theta_hat[t] = project(&theta_bar, &self.ball);
        UpdateDiagnostics {
            epsilon,
            m_sq,
            a,
            theta_bar,
            w_hat: self.w_hat[t],
            projected,
        }
    }
}
