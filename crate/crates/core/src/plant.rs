//! Discrete-time parameterized non-affine plants.
//!
//! A plant has `n` channels sharing one relative degree `rho`. Channel `c`
//! evolves as
//!
//! ```text
//! x_c(t + rho) = g_c(X(t)) + theta_c(t)' f_c(X(t), u_c(t)) + w_c(t)
//! ```
//!
//! where `X(t)` is the channel-major window
//! `[x_0(t+rho-1), .., x_0(t), x_1(t+rho-1), .., x_1(t), ..]` and `g_c` is a
//! known, parameter-free offset (zero for most plants). The single-channel case
//! is the classic SISO form; multi-channel plants must have a diagonal input
//! Jacobian, i.e. `f_c` only depends on `u_c`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::adaptation::ProjectionBall;
use crate::error::{Error, Result};
use crate::rng::{keyed_rng, Stream};

/// Known regressor vector `f(X, u)` of one channel.
pub trait Regressor: Send + Sync {
    /// Parameter dimension `p`.
    fn dim(&self) -> usize;

    fn eval(&self, window: &[f64], u: f64, out: &mut [f64]);

    /// Whether [`Regressor::eval_du`] is analytic.
    fn has_analytic_du(&self) -> bool {
        false
    }

    /// `df/du`. Defaults to a central difference with step `1e-6 * max(1, |u|)`.
    fn eval_du(&self, window: &[f64], u: f64, out: &mut [f64]) {
        let h = 1e-6 * u.abs().max(1.0);
        let mut lo = vec![0.0; self.dim()];
        self.eval(window, u + h, out);
        self.eval(window, u - h, &mut lo);
        for (o, l) in out.iter_mut().zip(&lo) {
            *o = (*o - l) / (2.0 * h);
        }
    }

    /// Parameter-free part of the dynamics, `g(X)`.
    fn offset(&self, _window: &[f64]) -> f64 {
        0.0
    }
}

type VecFn = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;
type OffsetFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Closure-backed regressor for custom plants.
#[derive(Clone)]
pub struct FnRegressor {
    dim: usize,
    f: Arc<VecFn>,
    du: Option<Arc<VecFn>>,
    offset: Option<Arc<OffsetFn>>,
}

impl FnRegressor {
    pub fn new(dim: usize, f: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            f: Arc::new(f),
            du: None,
            offset: None,
        }
    }

    pub fn with_du(mut self, du: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.du = Some(Arc::new(du));
        self
    }

    pub fn with_offset(mut self, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.offset = Some(Arc::new(g));
        self
    }
}

impl Regressor for FnRegressor {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, window: &[f64], u: f64, out: &mut [f64]) {
        let v = (self.f)(window, u);
        debug_assert_eq!(v.len(), self.dim, "regressor output length");
        out.copy_from_slice(&v);
    }

    fn has_analytic_du(&self) -> bool {
        self.du.is_some()
    }

    fn eval_du(&self, window: &[f64], u: f64, out: &mut [f64]) {
        match &self.du {
            Some(du) => out.copy_from_slice(&du(window, u)),
            None => {
                let h = 1e-6 * u.abs().max(1.0);
                let hi = (self.f)(window, u + h);
                let lo = (self.f)(window, u - h);
                for ((o, a), b) in out.iter_mut().zip(hi).zip(lo) {
                    *o = (a - b) / (2.0 * h);
                }
            }
        }
    }

    fn offset(&self, window: &[f64]) -> f64 {
        self.offset.as_ref().map_or(0.0, |g| g(window))
    }
}

pub type ThetaSchedule = Arc<dyn Fn(usize) -> Vec<f64> + Send + Sync>;
/// Iteration index `k` to per-channel initial states `x_c(0..rho)`.
pub type InitialStates = Arc<dyn Fn(u64) -> Vec<Vec<f64>> + Send + Sync>;

#[derive(Clone)]
pub struct Channel {
    pub regressor: Arc<dyn Regressor>,
    /// True parameters. Hidden from the controller; used by the plant and by
    /// diagnostics that need the truth.
    pub theta: ThetaSchedule,
}

impl Channel {
    pub fn new(regressor: impl Regressor + 'static, theta: impl Fn(usize) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            regressor: Arc::new(regressor),
            theta: Arc::new(theta),
        }
    }

    pub fn dim(&self) -> usize {
        self.regressor.dim()
    }

    /// `g(X) + theta' f(X, u)`, i.e. the noise-free next state.
    pub fn predict(&self, theta: &[f64], window: &[f64], u: f64, scratch: &mut [f64]) -> f64 {
        self.regressor.eval(window, u, scratch);
        self.regressor.offset(window) + dot(theta, scratch)
    }
}

#[derive(Clone)]
pub struct PlantSpec {
    pub name: String,
    pub rho: usize,
    pub horizon: usize,
    pub channels: Vec<Channel>,
    pub initial_states: InitialStates,
}

impl fmt::Debug for PlantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlantSpec")
            .field("name", &self.name)
            .field("rho", &self.rho)
            .field("horizon", &self.horizon)
            .field("channels", &self.channels.len())
            .finish()
    }
}

impl PlantSpec {
    pub fn siso(
        name: impl Into<String>,
        rho: usize,
        horizon: usize,
        channel: Channel,
        initial_states: impl Fn(u64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            rho,
            horizon,
            channels: vec![channel],
            initial_states: Arc::new(move |k| vec![initial_states(k)]),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho == 0 {
            return Err(Error::Config("relative degree must be at least 1".into()));
        }
        if self.horizon < self.rho {
            return Err(Error::Config(format!(
                "horizon {} is shorter than the relative degree {}",
                self.horizon, self.rho
            )));
        }
        if self.channels.is_empty() {
            return Err(Error::Config("plant has no channels".into()));
        }
        for (c, ch) in self.channels.iter().enumerate() {
            if ch.dim() == 0 {
                return Err(Error::Config(format!("channel {c}: parameter dimension is zero")));
            }
            let th = (ch.theta)(0);
            if th.len() != ch.dim() {
                return Err(Error::Config(format!(
                    "channel {c}: theta has length {} but the regressor has {}",
                    th.len(),
                    ch.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Number of control instants per iteration, `T - rho + 1`.
    pub fn steps(&self) -> usize {
        self.horizon - self.rho + 1
    }

    pub fn window_len(&self) -> usize {
        self.rho * self.channels.len()
    }

    pub fn reset(&self, k: u64) -> Result<PlantState> {
        PlantState::reset(self, k)
    }
}

/// Trajectory of one iteration, filled causally.
#[derive(Debug, Clone)]
pub struct PlantState {
    k: u64,
    rho: usize,
    horizon: usize,
    x: Vec<Vec<f64>>,
    w_applied: Vec<Vec<f64>>,
    filled: usize,
    max_read: usize,
}

impl PlantState {
    pub fn reset(spec: &PlantSpec, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Usage("iteration indices start at 1".into()));
        }
        let init = (spec.initial_states)(k);
        if init.len() != spec.n_channels() {
            return Err(Error::Config(format!(
                "initial states cover {} channels, plant has {}",
                init.len(),
                spec.n_channels()
            )));
        }
        let mut x = Vec::with_capacity(init.len());
        for (c, x0) in init.into_iter().enumerate() {
            if x0.len() != spec.rho {
                return Err(Error::Config(format!(
                    "channel {c}: {} initial states given, relative degree is {}",
                    x0.len(),
                    spec.rho
                )));
            }
            if let Some(bad) = x0.iter().find(|v| !v.is_finite()) {
                return Err(Error::Config(format!("channel {c}: non-finite initial state {bad}")));
            }
            let mut traj = vec![f64::NAN; spec.horizon + 1];
            traj[..spec.rho].copy_from_slice(&x0);
            x.push(traj);
        }
        Ok(Self {
            k,
            rho: spec.rho,
            horizon: spec.horizon,
            w_applied: vec![Vec::with_capacity(spec.steps()); x.len()],
            x,
            filled: spec.rho,
            max_read: 0,
        })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Number of leading time indices with a known state.
    pub fn filled(&self) -> usize {
        self.filled
    }

    /// Known part of channel `c`'s trajectory.
    pub fn states(&self, c: usize) -> &[f64] {
        &self.x[c][..self.filled]
    }

    pub fn disturbances(&self, c: usize) -> &[f64] {
        &self.w_applied[c]
    }

    /// Largest time index read through [`PlantState::window`].
    pub fn max_read_index(&self) -> usize {
        self.max_read
    }

    pub fn get(&self, c: usize, t: usize) -> Result<f64> {
        if t >= self.filled {
            return Err(Error::Sequencing(format!(
                "x({t}) of channel {c} read before it was written (known up to {})",
                self.filled as isize - 1
            )));
        }
        Ok(self.x[c][t])
    }

    /// Measured window `X(t)` over all channels.
    pub fn window(&mut self, t: usize) -> Result<Vec<f64>> {
        let top = t + self.rho - 1;
        if top >= self.filled {
            return Err(Error::Sequencing(format!(
                "window X({t}) needs x({top}) but states are known up to {}",
                self.filled as isize - 1
            )));
        }
        self.max_read = self.max_read.max(top);
        Ok(self.window_unchecked(t))
    }

    fn window_unchecked(&self, t: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rho * self.x.len());
        for traj in &self.x {
            out.extend((t..t + self.rho).rev().map(|i| traj[i]));
        }
        out
    }

    /// Applies `u(t)` (one entry per channel) with disturbances `w(t)` and
    /// returns the new states `x(t + rho)`.
    pub fn step(&mut self, spec: &PlantSpec, t: usize, u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let n = self.x.len();
        if u.len() != n || w.len() != n {
            return Err(Error::Usage(format!(
                "step expects {n} inputs and disturbances, got {} and {}",
                u.len(),
                w.len()
            )));
        }
        if t + self.rho > self.horizon {
            return Err(Error::Sequencing(format!(
                "time {t} is past the last control instant {}",
                self.horizon - self.rho
            )));
        }
        match (t + self.rho).cmp(&self.filled) {
            std::cmp::Ordering::Greater => {
                return Err(Error::Sequencing(format!(
                    "step at t={t} before x({}) is known",
                    t + self.rho - 1
                )))
            }
            std::cmp::Ordering::Less => {
                return Err(Error::Sequencing(format!("x({}) was already written", t + self.rho)))
            }
            std::cmp::Ordering::Equal => {}
        }
        let window = self.window(t)?;
        let write = t + self.rho;
        debug_assert!(write > self.max_read);
        let mut next = Vec::with_capacity(n);
        for (c, ch) in spec.channels.iter().enumerate() {
            let theta = (ch.theta)(t);
            let mut scratch = vec![0.0; ch.dim()];
            let v = ch.predict(&theta, &window, u[c], &mut scratch) + w[c];
            if !v.is_finite() {
                return Err(Error::Overflow { k: self.k, t, u: u[c] });
            }
            next.push(v);
        }
        for (c, v) in next.iter().enumerate() {
            self.x[c][write] = *v;
            self.w_applied[c].push(w[c]);
        }
        self.filled = write + 1;
        Ok(next)
    }

    /// Single-channel convenience around [`PlantState::step`].
    pub fn step_scalar(&mut self, spec: &PlantSpec, t: usize, u: f64, w: f64) -> Result<f64> {
        Ok(self.step(spec, t, &[u], &[w])?[0])
    }

    pub fn is_complete(&self) -> bool {
        self.filled == self.horizon + 1
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Builds per-iteration initial states drawn uniformly from `[low, high]`,
/// keyed on `(seed, k)`.
pub fn uniform_initial_states(n_channels: usize, rho: usize, low: f64, high: f64, seed: u64) -> InitialStates {
    Arc::new(move |k| {
        let mut rng = keyed_rng(seed, Stream::InitialState, k, 0);
        (0..n_channels)
            .map(|_| {
                (0..rho)
                    .map(|_| if high > low { rng.random_range(low..=high) } else { low })
                    .collect()
            })
            .collect()
    })
}

/// Sampling box and thresholds for [`assumption_check`].
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub samples: usize,
    pub seed: u64,
    /// States are drawn from `[-state_range, state_range]`.
    pub state_range: f64,
    pub input_range: f64,
    /// Minimum gains below this value are flagged.
    pub flag_below: f64,
}

impl Default for AssumptionCheck {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            state_range: 2.0,
            input_range: 2.0,
            flag_below: 1e-3,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AssumptionReport {
    pub channel: usize,
    pub samples: usize,
    /// Smallest observed `|phi' df/du|` with `phi` in the ball.
    pub min_gain: f64,
    pub max_gain: f64,
    pub lipschitz_state: f64,
    pub lipschitz_input: f64,
    pub flagged: bool,
}

/// Monte-Carlo estimate of the gain floor and Lipschitz constants of each
/// channel. Advisory: a report is always produced.
pub fn assumption_check(spec: &PlantSpec, balls: &[ProjectionBall], opts: &AssumptionCheck) -> Vec<AssumptionReport> {
    let wl = spec.window_len();
    spec.channels
        .iter()
        .enumerate()
        .map(|(c, ch)| {
            let ball = &balls[c.min(balls.len() - 1)];
            let p = ch.dim();
            let mut rng = keyed_rng(opts.seed, Stream::AssumptionCheck, c as u64, 0);
            let mut f1 = vec![0.0; p];
            let mut f2 = vec![0.0; p];
            let mut du = vec![0.0; p];
            let mut min_gain = f64::INFINITY;
            let mut max_gain = 0.0f64;
            let mut lx = 0.0f64;
            let mut lu = 0.0f64;
            let sx = opts.state_range;
            let su = opts.input_range;
            for _ in 0..opts.samples.max(1) {
                let x1: Vec<f64> = (0..wl).map(|_| rng.random_range(-sx..=sx)).collect();
                let x2: Vec<f64> = (0..wl).map(|_| rng.random_range(-sx..=sx)).collect();
                let u1 = rng.random_range(-su..=su);
                let u2 = rng.random_range(-su..=su);
                let phi = sample_ball(ball, &mut rng);

                ch.regressor.eval_du(&x1, u1, &mut du);
                let g = dot(&phi, &du).abs();
                min_gain = min_gain.min(g);
                max_gain = max_gain.max(g);

                ch.regressor.eval(&x1, u1, &mut f1);
                ch.regressor.eval(&x2, u1, &mut f2);
                let dx = norm(&x1.iter().zip(&x2).map(|(a, b)| a - b).collect::<Vec<_>>());
                if dx > 0.0 {
                    let df = norm(&f1.iter().zip(&f2).map(|(a, b)| a - b).collect::<Vec<_>>());
                    lx = lx.max(df / dx);
                }
                ch.regressor.eval(&x1, u2, &mut f2);
                if u1 != u2 {
                    let df = norm(&f1.iter().zip(&f2).map(|(a, b)| a - b).collect::<Vec<_>>());
                    lu = lu.max(df / (u1 - u2).abs());
                }
            }
            AssumptionReport {
                channel: c,
                samples: opts.samples.max(1),
                min_gain,
                max_gain,
                lipschitz_state: lx,
                lipschitz_input: lu,
                flagged: min_gain < opts.flag_below,
            }
        })
        .collect()
}

/// Uniform draw from the ball (direction from a normal, radius `R u^(1/p)`).
fn sample_ball<R: Rng>(ball: &ProjectionBall, rng: &mut R) -> Vec<f64> {
    let p = ball.center.len();
    let dir: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
    let n = norm(&dir);
    let r = ball.radius * rng.random::<f64>().powf(1.0 / p as f64);
    ball.center
        .iter()
        .zip(&dir)
        .map(|(c, d)| if n > 0.0 { c + r * d / n } else { *c })
        .collect()
}
