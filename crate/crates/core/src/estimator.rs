//! Multi-step state estimator for plants with relative degree above one.
//!
//! At instant `t` of an iteration only `x(0..=t)` and `u(0..t)` are known, but
//! the input equation needs the full window `X(t) = [x(t+rho-1), .., x(t)]`.
//! The missing entries are predicted bottom-up:
//!
//! ```text
//! x^(t+j | t) = g(X^(t+j-rho)) + theta_hat(t+j-rho)' f(X^(t+j-rho), u(t+j-rho)),  j = 1..rho-1
//! ```
//!
//! where each window `X^(tau)` uses measured states for indices `<= t` and the
//! estimates of lower levels above that. Indices below `rho` are initial
//! states and are always taken as measured.

use crate::error::{Error, Result};
use crate::plant::PlantSpec;

/// Read-only view of what is causally available at instant `t`.
#[derive(Debug, Clone)]
pub struct EstimatorMemory<'a> {
    /// Per channel: measured states, at least `x(0..=max(t, rho-1))`.
    pub x_hist: Vec<&'a [f64]>,
    /// Per channel: inputs `u(0..t)`.
    pub u_hist: Vec<&'a [f64]>,
    /// Per channel: current parameter estimates for every control instant.
    pub theta_hist: Vec<&'a [Vec<f64>]>,
}

/// Highest indices touched by one estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimateAudit {
    pub max_state_index: usize,
    pub max_input_index: Option<usize>,
    pub regressor_evals: usize,
}

pub fn estimate_state_vector(spec: &PlantSpec, mem: &EstimatorMemory<'_>, t: usize) -> Result<Vec<f64>> {
    estimate_state_vector_audited(spec, mem, t).map(|(x, _)| x)
}

/// Returns the estimated window `X^(t)` (channel-major, newest first) and the
/// indices it read.
pub fn estimate_state_vector_audited(
    spec: &PlantSpec,
    mem: &EstimatorMemory<'_>,
    t: usize,
) -> Result<(Vec<f64>, EstimateAudit)> {
    let rho = spec.rho;
    let n = spec.n_channels();
    if t > spec.horizon - rho {
        return Err(Error::Sequencing(format!(
            "estimate requested at t={t}, last control instant is {}",
            spec.horizon - rho
        )));
    }
    if mem.x_hist.len() != n || mem.u_hist.len() != n || mem.theta_hist.len() != n {
        return Err(Error::Usage(format!("estimator memory must cover {n} channels")));
    }
    let mut audit = EstimateAudit::default();
    let measured = |c: usize, i: usize, audit: &mut EstimateAudit| -> Result<f64> {
        mem.x_hist[c].get(i).copied().map_or_else(
            || {
                Err(Error::Sequencing(format!(
                    "estimator needs measured x({i}) of channel {c}, only {} available",
                    mem.x_hist[c].len()
                )))
            },
            |v| {
                audit.max_state_index = audit.max_state_index.max(i);
                Ok(v)
            },
        )
    };

    // levels[c][j] holds the value used for x_c(t + j)
    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut lv = vec![0.0; rho];
        lv[0] = measured(c, t, &mut audit)?;
        levels.push(lv);
    }

    let mut window = vec![0.0; n * rho];
    let mut scratch = Vec::new();
    for j in 1..rho {
        let idx = t + j;
        if idx < rho {
            for (c, lv) in levels.iter_mut().enumerate() {
                lv[j] = measured(c, idx, &mut audit)?;
            }
            continue;
        }
        let tau = idx - rho;
        for c in 0..n {
            for i in 0..rho {
                let src = tau + rho - 1 - i;
                window[c * rho + i] = if src <= t {
                    measured(c, src, &mut audit)?
                } else {
                    levels[c][src - t]
                };
            }
        }
        for c in 0..n {
            let ch = &spec.channels[c];
            let u = *mem.u_hist[c].get(tau).ok_or_else(|| {
                Error::Sequencing(format!("estimator needs u({tau}) of channel {c} at t={t}"))
            })?;
            let theta = mem.theta_hist[c]
                .get(tau)
                .ok_or_else(|| Error::Sequencing(format!("no parameter estimate for t={tau}")))?;
            audit.max_input_index = Some(audit.max_input_index.map_or(tau, |m: usize| m.max(tau)));
            scratch.resize(ch.dim(), 0.0);
            levels[c][j] = ch.predict(theta, &window, u, &mut scratch);
            audit.regressor_evals += 1;
        }
    }

    let mut out = Vec::with_capacity(n * rho);
    for lv in &levels {
        out.extend(lv.iter().rev());
    }
    Ok((out, audit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{Channel, FnRegressor, PlantSpec};

    fn chain(rho: usize, horizon: usize, init: Vec<f64>) -> PlantSpec {
        // f(X, u) = [newest state + u]
        PlantSpec::siso(
            "chain",
            rho,
            horizon,
            Channel::new(FnRegressor::new(1, |x, u| vec![x[0] + u]), |_| vec![1.0]),
            move |_| init.clone(),
        )
        .unwrap()
    }

    #[test]
    fn rho_one_returns_measurement_without_evaluations() {
        let spec = chain(1, 5, vec![0.25]);
        let x = [0.25, 1.0, 2.0, 3.0];
        let th = vec![vec![1.0]; 5];
        let mem = EstimatorMemory {
            x_hist: vec![&x],
            u_hist: vec![&[0.0, 0.0, 0.0]],
            theta_hist: vec![&th],
        };
        let (v, audit) = estimate_state_vector_audited(&spec, &mem, 3).unwrap();
        assert_eq!(v, vec![3.0]);
        assert_eq!(audit.regressor_evals, 0);
        assert_eq!(audit.max_input_index, None);
    }

    #[test]
    fn rho_two_early_instants_use_initial_states() {
        let spec = chain(2, 6, vec![0.1, 0.2]);
        let x = [0.1, 0.2];
        let th = vec![vec![1.0]; 5];
        for t in 0..=0 {
            let mem = EstimatorMemory {
                x_hist: vec![&x],
                u_hist: vec![&[]],
                theta_hist: vec![&th],
            };
            let (v, audit) = estimate_state_vector_audited(&spec, &mem, t).unwrap();
            assert_eq!(v, vec![x[t + 1], x[t]]);
            assert_eq!(audit.regressor_evals, 0);
        }
        let x = [0.1, 0.2, 0.7];
        let mem = EstimatorMemory {
            x_hist: vec![&x[..2]],
            u_hist: vec![&[0.3]],
            theta_hist: vec![&th],
        };
        // t = 1: x(2) is needed; it is not an initial state and not measured yet
        let (v, _) = estimate_state_vector_audited(&spec, &mem, 1).unwrap();
        // x^(2|1) = x(1) + u(0)
        assert_eq!(v, vec![0.2 + 0.3, 0.2]);
    }

    #[test]
    fn rho_two_hand_trace() {
        let spec = chain(2, 6, vec![0.0, 0.0]);
        let x = [0.0, 0.0, 1.5];
        let u = [0.0, 0.25];
        let th = vec![vec![1.0]; 5];
        let mem = EstimatorMemory {
            x_hist: vec![&x],
            u_hist: vec![&u],
            theta_hist: vec![&th],
        };
        // x^(3|2) = theta_hat(1) * (x(2) + u(1))
        let (v, audit) = estimate_state_vector_audited(&spec, &mem, 2).unwrap();
        assert_eq!(v, vec![1.5 + 0.25, 1.5]);
        assert_eq!(audit.max_state_index, 2);
        assert_eq!(audit.max_input_index, Some(1));
    }

    #[test]
    fn missing_history_is_a_sequencing_error() {
        let spec = chain(3, 8, vec![0.0, 0.0, 0.0]);
        let x = [0.0, 0.0, 0.0, 1.0];
        let th = vec![vec![1.0]; 6];
        let mem = EstimatorMemory {
            x_hist: vec![&x],
            u_hist: vec![&[0.1]],
            theta_hist: vec![&th],
        };
        assert!(matches!(estimate_state_vector(&spec, &mem, 3), Err(Error::Sequencing(_))));
        assert!(matches!(estimate_state_vector(&spec, &mem, 6), Err(Error::Sequencing(_))));
    }
}
