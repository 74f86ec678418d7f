use std::time::Instant;

use serde::Serialize;

use crate::controller::{run_ailc, AilcRun, IterationTrace};
use crate::ddilc::run_ddilc;
use crate::disturbance::DisturbanceSource;
use crate::error::{Error, Result};
use crate::plant::{assumption_check, AssumptionCheck, AssumptionReport, PlantSpec};
use crate::solver::StopReason;

use super::{ControllerKind, ScenarioConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverStats {
    pub solves: u64,
    pub total_iterations: u64,
    pub cap_hits: u64,
    pub exact_stops: u64,
    /// Largest `|Z(u)|` left by any solve.
    pub max_residual: f64,
    /// Solves whose iterates left `B(0, |c'| / d0_lower)`.
    pub left_ball: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSummary {
    /// Per iteration, `max_t |e_k|` and the mean of `|e_k|`.
    pub max_err: Vec<f64>,
    pub avg_err: Vec<f64>,
    /// Final estimates per control instant (PPD estimates for the baseline).
    pub final_theta_hat: Vec<Vec<f64>>,
    /// Final bound estimates per control instant; empty for the baseline.
    pub final_w_hat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerSummary {
    pub controller: ControllerKind,
    pub channels: Vec<ChannelSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub iterations: u64,
    pub wall_clock_s: f64,
    pub controllers: Vec<ControllerSummary>,
    /// Full configuration as TOML; loading it reruns the scenario exactly.
    pub config: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub config: ScenarioConfig,
    pub plant: PlantSpec,
    pub ailc: Option<AilcRun>,
    pub ddilc: Option<Vec<IterationTrace>>,
    pub summary: RunSummary,
}

impl ScenarioOutcome {
    pub fn traces(&self, kind: ControllerKind) -> Option<&[IterationTrace]> {
        match kind {
            ControllerKind::Ailc => self.ailc.as_ref().map(|r| r.traces.as_slice()),
            ControllerKind::Ddilc => self.ddilc.as_deref(),
        }
    }
}

fn solver_stats(traces: &[IterationTrace]) -> SolverStats {
    let mut s = SolverStats::default();
    for row in traces.iter().flat_map(|t| &t.channels).flat_map(|c| &c.rows) {
        if let Some(st) = &row.solver {
            s.solves += 1;
            s.total_iterations += st.iterations;
            s.cap_hits += (st.stop_reason == StopReason::CapHit) as u64;
            s.exact_stops += (st.stop_reason == StopReason::FixedPointExact) as u64;
            s.max_residual = s.max_residual.max(st.residual);
            s.left_ball += st.left_ball as u64;
        }
    }
    s
}

fn channel_summaries(traces: &[IterationTrace], n: usize) -> Vec<ChannelSummary> {
    (0..n)
        .map(|c| ChannelSummary {
            max_err: traces.iter().map(|t| t.max_err(c)).collect(),
            avg_err: traces.iter().map(|t| t.avg_err(c)).collect(),
            final_theta_hat: traces
                .last()
                .map(|t| t.channels[c].rows.iter().map(|r| r.theta_hat.clone()).collect())
                .unwrap_or_default(),
            final_w_hat: traces
                .last()
                .map(|t| t.channels[c].rows.iter().filter_map(|r| r.w_hat).collect())
                .unwrap_or_default(),
        })
        .collect()
}

/// Runs every enabled controller on a freshly built plant. Controllers share
/// the seed, so random initial states and disturbances coincide (state
/// dependent disturbances aside).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let seed = cfg.run.seed;
    let plant = cfg.plant.build(seed);
    let n = plant.n_channels();
    let steps = plant.steps();
    let source = || DisturbanceSource::new(cfg.disturbance.specs(n, seed), steps);

    let mut ailc = None;
    let mut ddilc = None;
    let mut controllers = Vec::new();
    for &kind in &cfg.controller.controllers {
        match kind {
            ControllerKind::Ailc => {
                let section = cfg
                    .controller
                    .ailc
                    .as_ref()
                    .ok_or_else(|| Error::Config("[controller.ailc] is missing".into()))?;
                let mut run = run_ailc(
                    &plant,
                    &section.controller_config(),
                    &section.channels,
                    &cfg.reference,
                    source()?,
                    cfg.run.iterations,
                )?;
                run.fill_lyapunov(&plant);
                controllers.push(ControllerSummary {
                    controller: kind,
                    channels: channel_summaries(&run.traces, n),
                    solver: Some(solver_stats(&run.traces)),
                });
                ailc = Some(run);
            }
            ControllerKind::Ddilc => {
                let traces = run_ddilc(&plant, &cfg.ddilc_params(), &cfg.reference, source()?, cfg.run.iterations)?;
                controllers.push(ControllerSummary {
                    controller: kind,
                    channels: channel_summaries(&traces, n),
                    solver: None,
                });
                ddilc = Some(traces);
            }
        }
    }

    let summary = RunSummary {
        scenario: cfg.run.name.clone(),
        seed,
        iterations: cfg.run.iterations,
        wall_clock_s: start.elapsed().as_secs_f64(),
        controllers,
        config: cfg.to_toml(),
    };
    Ok(ScenarioOutcome {
        config: cfg.clone(),
        plant,
        ailc,
        ddilc,
        summary,
    })
}

/// Advisory gain-floor and Lipschitz report over the scenario's projection
/// balls (or a unit ball around the truth at `t = 0` without AILC settings).
pub fn check_scenario(cfg: &ScenarioConfig, opts: &AssumptionCheck) -> Vec<AssumptionReport> {
    let plant = cfg.plant.build(cfg.run.seed);
    let balls = match &cfg.controller.ailc {
        Some(a) => a.channels.iter().map(|c| c.ball.clone()).collect(),
        None => plant
            .channels
            .iter()
            .map(|c| crate::adaptation::ProjectionBall {
                center: (c.theta)(0),
                radius: 1.0,
            })
            .collect::<Vec<_>>(),
    };
    assumption_check(&plant, &balls, opts)
}
