//! Adaptive ILC orchestration.
//!
//! Each iteration is a causal rollout (estimate the window, solve the input
//! equation, step the plant) followed by a batch of adaptation updates, one
//! per control instant, that produce the estimates used by the next
//! iteration. The updates use the measured window `X_k(t)`, which is fully
//! known once the rollout is over.

use serde::{Deserialize, Serialize};

use crate::adaptation::{lyapunov, AdaptState, AdaptVariant, MMode, ProjectionBall};
use crate::disturbance::DisturbanceSource;
use crate::error::{Error, Result};
use crate::estimator::{estimate_state_vector_audited, EstimatorMemory};
use crate::plant::PlantSpec;
use crate::reference::Reference;
use crate::solver::{solve_direct, solve_fixed_point, InputEquation, SolveResult, SolverConfig, StopReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    #[default]
    FixedPoint,
    DirectSolve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub variant: AdaptVariant,
    pub input_mode: InputMode,
    pub m_mode: MMode,
    pub solver: SolverConfig,
    pub eta: f64,
    /// Project the initial estimates onto their balls before the first
    /// rollout instead of at the first update.
    pub project_initial: bool,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 2.0) {
            return Err(Error::Config(format!("eta must lie in (0, 2), got {}", self.eta)));
        }
        self.solver.validate()
    }
}

/// Per-channel prior knowledge: projection ball and initial estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelInit {
    pub ball: ProjectionBall,
    pub theta0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveTelemetry {
    pub iterations: u64,
    pub p0: u64,
    pub residual: f64,
    pub l_prime: f64,
    pub stop_reason: StopReason,
    pub left_ball: bool,
}

impl From<&SolveResult> for SolveTelemetry {
    fn from(r: &SolveResult) -> Self {
        Self {
            iterations: r.iterations,
            p0: r.p0,
            residual: r.residual,
            l_prime: r.l_prime,
            stop_reason: r.stop_reason,
            left_ball: r.left_ball,
        }
    }
}

/// One control instant `t` of one channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    /// `x(t + rho)`.
    pub x: f64,
    /// `r(t + rho)`.
    pub r: f64,
    /// `x - r`.
    pub e: f64,
    pub u: f64,
    /// Disturbance applied at `t`.
    pub w: f64,
    pub epsilon: Option<f64>,
    pub a: Option<f64>,
    /// Bound estimate after this iteration's update.
    pub w_hat: Option<f64>,
    /// Lyapunov value after the update; filled when the truth is known.
    pub v: Option<f64>,
    /// Parameter estimate after the update (PPD estimate for the baseline).
    pub theta_hat: Vec<f64>,
    pub solver: Option<SolveTelemetry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelTrace {
    pub rows: Vec<TraceRow>,
    /// Full trajectory `x(0..=T)`.
    pub states: Vec<f64>,
    pub max_err: f64,
    pub avg_err: f64,
}

impl ChannelTrace {
    pub fn new(rows: Vec<TraceRow>, states: Vec<f64>) -> Self {
        let mut c = Self {
            rows,
            states,
            max_err: 0.0,
            avg_err: 0.0,
        };
        c.summarize();
        c
    }

    /// Recomputes `max_err` / `avg_err` over the stored `|e|`.
    pub fn summarize(&mut self) {
        let n = self.rows.len().max(1) as f64;
        self.max_err = self.rows.iter().map(|r| r.e.abs()).fold(0.0, f64::max);
        self.avg_err = self.rows.iter().map(|r| r.e.abs()).sum::<f64>() / n;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub k: u64,
    pub channels: Vec<ChannelTrace>,
}

impl IterationTrace {
    pub fn max_err(&self, c: usize) -> f64 {
        self.channels[c].max_err
    }

    pub fn avg_err(&self, c: usize) -> f64 {
        self.channels[c].avg_err
    }
}

pub fn new_adapt_states(spec: &PlantSpec, cfg: &ControllerConfig, inits: &[ChannelInit]) -> Result<Vec<AdaptState>> {
    cfg.validate()?;
    if inits.len() != spec.n_channels() {
        return Err(Error::Config(format!(
            "{} channel initialisations for a {}-channel plant",
            inits.len(),
            spec.n_channels()
        )));
    }
    inits
        .iter()
        .zip(&spec.channels)
        .enumerate()
        .map(|(c, (init, ch))| {
            if init.ball.center.len() != ch.dim() {
                return Err(Error::Config(format!(
                    "channel {c}: ball dimension {} does not match regressor dimension {}",
                    init.ball.center.len(),
                    ch.dim()
                )));
            }
            let mut st = AdaptState::new(spec.steps(), init.theta0.clone(), cfg.eta, init.ball.clone(), cfg.variant)?
                .with_m_mode(cfg.m_mode);
            if cfg.project_initial {
                st.project_all();
            }
            Ok(st)
        })
        .collect()
}

/// Causal rollout of iteration `k` with the estimates in `adapt`. The
/// returned trace has no adaptation diagnostics yet; see [`adapt_from_trace`].
pub fn run_iteration(
    spec: &PlantSpec,
    adapt: &[AdaptState],
    cfg: &ControllerConfig,
    reference: &Reference,
    disturbances: &mut DisturbanceSource,
    k: u64,
) -> Result<IterationTrace> {
    let n = spec.n_channels();
    let rho = spec.rho;
    let steps = spec.steps();
    let mut state = spec.reset(k)?;
    let mut inputs: Vec<Vec<f64>> = vec![Vec::with_capacity(steps); n];
    let mut rows: Vec<Vec<TraceRow>> = vec![Vec::with_capacity(steps); n];
    let mut u_t = vec![0.0; n];
    let mut w_t = vec![0.0; n];

    for t in 0..steps {
        let measured_upto = t.max(rho - 1);
        let x_hat = {
            let mem = EstimatorMemory {
                x_hist: (0..n).map(|c| &state.states(c)[..=measured_upto]).collect(),
                u_hist: inputs.iter().map(|u| &u[..t]).collect(),
                theta_hist: adapt.iter().map(|a| a.theta_hats()).collect(),
            };
            let (x_hat, audit) = estimate_state_vector_audited(spec, &mem, t).map_err(|e| e.at(k, t))?;
            debug_assert!(audit.max_state_index <= measured_upto);
            debug_assert!(audit.max_input_index.is_none_or(|i| i < t));
            x_hat
        };

        let mut telemetry = Vec::with_capacity(n);
        for c in 0..n {
            let x_now = state.get(c, t)?;
            w_t[c] = disturbances.sample(c, k, t, x_now).map_err(|e| e.at(k, t))?;
            let target = reference.eval(k, c, t + rho);
            let ch = &spec.channels[c];
            let mut eq = InputEquation::new(ch.regressor.as_ref(), adapt[c].theta_hat(t), &x_hat, target);
            let res = match cfg.input_mode {
                InputMode::FixedPoint => solve_fixed_point(&mut eq, &cfg.solver),
                InputMode::DirectSolve => solve_direct(&mut eq, 1e-12),
            }
            .map_err(|e| e.at(k, t))?;
            u_t[c] = res.u;
            telemetry.push(SolveTelemetry::from(&res));
        }

        let next = state.step(spec, t, &u_t, &w_t)?;
        for c in 0..n {
            inputs[c].push(u_t[c]);
            let r = reference.eval(k, c, t + rho);
            rows[c].push(TraceRow {
                t,
                x: next[c],
                r,
                e: next[c] - r,
                u: u_t[c],
                w: w_t[c],
                epsilon: None,
                a: None,
                w_hat: None,
                v: None,
                theta_hat: Vec::new(),
                solver: Some(telemetry[c].clone()),
            });
        }
    }

    Ok(IterationTrace {
        k,
        channels: rows
            .into_iter()
            .enumerate()
            .map(|(c, r)| ChannelTrace::new(r, state.states(c).to_vec()))
            .collect(),
    })
}

/// Post-rollout adaptation: one update per `(channel, t)` on the measured
/// window `X_k(t)` and applied input. Diagnostics are written into `trace`.
pub fn adapt_from_trace(spec: &PlantSpec, adapt: &mut [AdaptState], trace: &mut IterationTrace) -> Result<()> {
    let n = spec.n_channels();
    let rho = spec.rho;
    let mut window = vec![0.0; n * rho];
    for t in 0..spec.steps() {
        for (c, ct) in trace.channels.iter().enumerate() {
            for i in 0..rho {
                window[c * rho + i] = ct.states[t + rho - 1 - i];
            }
        }
        for c in 0..n {
            let ch = &spec.channels[c];
            let row = &trace.channels[c].rows[t];
            let mut f = vec![0.0; ch.dim()];
            ch.regressor.eval(&window, row.u, &mut f);
            let y = row.x - ch.regressor.offset(&window);
            let d = adapt[c].update(t, y, &f).map_err(|e| e.at(trace.k, t))?;
            let row = &mut trace.channels[c].rows[t];
            row.epsilon = Some(d.epsilon);
            row.a = Some(d.a);
            row.w_hat = Some(d.w_hat);
            row.theta_hat = adapt[c].theta_hat(t).to_vec();
        }
    }
    Ok(())
}

/// Everything produced by an adaptive run.
#[derive(Debug, Clone)]
pub struct AilcRun {
    pub traces: Vec<IterationTrace>,
    pub adapt: Vec<AdaptState>,
    /// Initial estimates, per channel and `t`, as used by iteration 1.
    pub initial_theta: Vec<Vec<Vec<f64>>>,
    /// Largest applied `|w|` per channel.
    pub w_sup: Vec<f64>,
}

impl AilcRun {
    /// Per-channel error series over iterations.
    pub fn max_err(&self, c: usize) -> Vec<f64> {
        self.traces.iter().map(|t| t.max_err(c)).collect()
    }

    pub fn avg_err(&self, c: usize) -> Vec<f64> {
        self.traces.iter().map(|t| t.avg_err(c)).collect()
    }

    /// Fills `TraceRow::v` with `V_k(t)` against the true parameters and the
    /// applied disturbance sup, and returns the initial values `V_0(t)`.
    pub fn fill_lyapunov(&mut self, spec: &PlantSpec) -> Vec<Vec<f64>> {
        let v0 = (0..spec.n_channels())
            .map(|c| {
                (0..spec.steps())
                    .map(|t| lyapunov(&self.initial_theta[c][t], 0.0, &(spec.channels[c].theta)(t), self.w_sup[c]))
                    .collect()
            })
            .collect();
        for tr in &mut self.traces {
            for (c, ct) in tr.channels.iter_mut().enumerate() {
                for row in &mut ct.rows {
                    let truth = (spec.channels[c].theta)(row.t);
                    row.v = Some(lyapunov(&row.theta_hat, row.w_hat.unwrap_or(0.0), &truth, self.w_sup[c]));
                }
            }
        }
        v0
    }
}

/// Runs `iterations` AILC iterations. Works for any number of channels; the
/// channels share the rollout and are coupled only through the plant.
pub fn run_ailc(
    spec: &PlantSpec,
    cfg: &ControllerConfig,
    inits: &[ChannelInit],
    reference: &Reference,
    mut disturbances: DisturbanceSource,
    iterations: u64,
) -> Result<AilcRun> {
    spec.validate()?;
    let mut adapt = new_adapt_states(spec, cfg, inits)?;
    let initial_theta = adapt.iter().map(|a| a.theta_hats().to_vec()).collect();
    let mut traces = Vec::with_capacity(iterations as usize);
    for k in 1..=iterations {
        let mut trace = run_iteration(spec, &adapt, cfg, reference, &mut disturbances, k)?;
        adapt_from_trace(spec, &mut adapt, &mut trace)?;
        traces.push(trace);
    }
    Ok(AilcRun {
        traces,
        adapt,
        initial_theta,
        w_sup: disturbances.empirical_sup().to_vec(),
    })
}

/// Multi-channel entry point: returns traces regrouped per channel.
pub fn mimo_run_experiment(
    spec: &PlantSpec,
    cfg: &ControllerConfig,
    inits: &[ChannelInit],
    reference: &Reference,
    disturbances: DisturbanceSource,
    iterations: u64,
) -> Result<Vec<Vec<ChannelTrace>>> {
    let run = run_ailc(spec, cfg, inits, reference, disturbances, iterations)?;
    let mut per_channel = vec![Vec::with_capacity(run.traces.len()); spec.n_channels()];
    for tr in run.traces {
        for (c, ct) in tr.channels.into_iter().enumerate() {
            per_channel[c].push(ct);
        }
    }
    Ok(per_channel)
}

/// Whether a variant estimates the disturbance bound.
pub fn estimates_bound(v: AdaptVariant) -> bool {
    matches!(v, AdaptVariant::Robust)
}
