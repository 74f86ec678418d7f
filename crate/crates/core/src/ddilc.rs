//! Data-driven ILC baseline with a pseudo-partial-derivative (PPD) estimate
//! per time instant. Relative degree one, single channel.

use serde::{Deserialize, Serialize};

use crate::controller::{ChannelTrace, IterationTrace, TraceRow};
use crate::disturbance::DisturbanceSource;
use crate::error::{Error, Result};
use crate::plant::PlantSpec;
use crate::reference::Reference;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdilcParams {
    /// PPD estimation gain.
    pub eta: f64,
    /// Learning gain on the tracking error.
    pub rho: f64,
    pub lambda: f64,
    pub mu: f64,
    /// PPD reset value.
    pub theta0: f64,
    /// Input applied on the first iteration.
    pub u0: f64,
    /// Reset threshold for `|theta'|` and `|du|`.
    pub reset_tol: f64,
}

impl Default for DdilcParams {
    fn default() -> Self {
        Self {
            eta: 0.5,
            rho: 0.4,
            lambda: 1.0,
            mu: 0.5,
            theta0: 1.0,
            u0: 0.0,
            reset_tol: 1e-4,
        }
    }
}

impl DdilcParams {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.lambda > 0.0) {
            errs.push(format!("ddilc lambda must be positive, got {}", self.lambda));
        }
        if !(self.mu > 0.0) {
            errs.push(format!("ddilc mu must be positive, got {}", self.mu));
        }
        if self.theta0 == 0.0 || !self.theta0.is_finite() {
            errs.push("ddilc theta0 must be finite and non-zero".into());
        }
        for (name, v) in [("eta", self.eta), ("rho", self.rho), ("u0", self.u0), ("reset_tol", self.reset_tol)] {
            if !v.is_finite() {
                errs.push(format!("ddilc {name} must be finite"));
            }
        }
        match errs.len() {
            0 => Ok(()),
            1 => Err(Error::Config(errs.remove(0))),
            _ => Err(Error::Validation(errs)),
        }
    }
}

/// Learning memory between iterations.
#[derive(Debug, Clone)]
pub struct DdilcState {
    pub params: DdilcParams,
    /// Input to apply on the next iteration.
    pub u: Vec<f64>,
    u_prev: Vec<f64>,
    x_prev: Option<Vec<f64>>,
    /// Current PPD estimates.
    pub theta: Vec<f64>,
}

impl DdilcState {
    pub fn new(params: DdilcParams, steps: usize) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            u: vec![params.u0; steps],
            u_prev: vec![params.u0; steps],
            x_prev: None,
            theta: vec![params.theta0; steps],
            params,
        })
    }
}

fn sgn(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Consumes iteration `k`'s measured states `x` (indices `0..=T`) and
/// reference `r(t + 1)`; leaves the next inputs and PPD estimates in `state`.
pub fn ddilc_update(state: &mut DdilcState, x: &[f64], r_next: &[f64]) {
    let p = &state.params;
    let steps = state.u.len();
    let x_prev = state.x_prev.as_deref().unwrap_or(x);
    for t in 0..steps {
        let du = state.u[t] - state.u_prev[t];
        let dx = x[t + 1] - x_prev[t + 1];
        let th = state.theta[t];
        let cand = th + p.eta * du * (dx - th * du) / (p.mu + du * du);
        let reset = sgn(cand) != sgn(p.theta0) || cand.abs() <= p.reset_tol || du.abs() <= p.reset_tol;
        let th_next = if reset { p.theta0 } else { cand };
        state.theta[t] = th_next;
        state.u_prev[t] = state.u[t];
        state.u[t] += p.rho * th_next * (r_next[t] - x[t + 1]) / (p.lambda + th_next * th_next);
    }
    state.x_prev = Some(x.to_vec());
}

/// Runs the baseline for `iterations` iterations on a single-channel,
/// relative-degree-one plant.
pub fn run_ddilc(
    spec: &PlantSpec,
    params: &DdilcParams,
    reference: &Reference,
    mut disturbances: DisturbanceSource,
    iterations: u64,
) -> Result<Vec<IterationTrace>> {
    spec.validate()?;
    if spec.rho != 1 || spec.n_channels() != 1 {
        return Err(Error::Config(format!(
            "the ddilc baseline needs a single-channel plant with relative degree 1, got {} channel(s) with rho = {}",
            spec.n_channels(),
            spec.rho
        )));
    }
    let steps = spec.steps();
    let mut st = DdilcState::new(params.clone(), steps)?;
    let mut traces = Vec::with_capacity(iterations as usize);
    for k in 1..=iterations {
        let mut plant = spec.reset(k)?;
        let mut rows = Vec::with_capacity(steps);
        for t in 0..steps {
            let w = disturbances.sample(0, k, t, plant.get(0, t)?).map_err(|e| e.at(k, t))?;
            let x = plant.step_scalar(spec, t, st.u[t], w)?;
            let r = reference.eval(k, 0, t + 1);
            rows.push(TraceRow {
                t,
                x,
                r,
                e: x - r,
                u: st.u[t],
                w,
                epsilon: None,
                a: None,
                w_hat: None,
                v: None,
                theta_hat: Vec::new(),
                solver: None,
            });
        }
        let x = plant.states(0).to_vec();
        let r_next: Vec<f64> = rows.iter().map(|r| r.r).collect();
        ddilc_update(&mut st, &x, &r_next);
        for (row, th) in rows.iter_mut().zip(&st.theta) {
            row.theta_hat = vec![*th];
        }
        traces.push(IterationTrace {
            k,
            channels: vec![ChannelTrace::new(rows, x)],
        });
    }
    Ok(traces)
}
