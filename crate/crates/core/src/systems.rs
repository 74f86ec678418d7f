//! Built-in benchmark plants.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::plant::{uniform_initial_states, Channel, PlantSpec, Regressor};

pub const HORIZON: usize = 50;

/// Scalar non-affine plant with relative degree one:
///
/// `f(x, u) = [x sin x / (1 + x^2), exp(x / 100), u^3, atan u + u]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Example1Regressor;

impl Regressor for Example1Regressor {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&self, window: &[f64], u: f64, out: &mut [f64]) {
        let x = window[0];
        out[0] = x * x.sin() / (1.0 + x * x);
        out[1] = (x / 100.0).exp();
        out[2] = u * u * u;
        out[3] = u.atan() + u;
    }

    fn has_analytic_du(&self) -> bool {
        true
    }

    fn eval_du(&self, _window: &[f64], u: f64, out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = 0.0;
        out[2] = 3.0 * u * u;
        out[3] = 1.0 / (1.0 + u * u) + 1.0;
    }
}

pub fn example1_theta(t: usize) -> Vec<f64> {
    let tf = t as f64;
    let sign = if t.is_multiple_of(2) { 1.0 } else { -1.0 };
    vec![
        0.5 + tf / 50.0,
        0.75 + tf / 75.0,
        1.5 + 0.5 * sign,
        (PI / 4.0 + PI * tf / 100.0).sin(),
    ]
}

/// First benchmark with initial state drawn from `[x0_low, x0_high]` each
/// iteration (a single value when the bounds coincide).
pub fn example1(x0_low: f64, x0_high: f64, seed: u64) -> PlantSpec {
    PlantSpec {
        name: "example1".into(),
        rho: 1,
        horizon: HORIZON,
        channels: vec![Channel {
            regressor: Arc::new(Example1Regressor),
            theta: Arc::new(example1_theta),
        }],
        initial_states: uniform_initial_states(1, 1, x0_low, x0_high, seed),
    }
}

/// One channel of the Euler-discretized double inverted pendulum. The window
/// is `[x_0(t+1), x_0(t), x_1(t+1), x_1(t)]`; `channel` picks the own pair.
///
/// `x_c(t+2) = 2 x_c(t+1) - x_c(t)
///           + theta' [sin x_c(t), 1, sin(x_o(t+1) - x_o(t)), tanh u_c]`
#[derive(Debug, Clone, Copy)]
pub struct PendulumRegressor {
    pub channel: usize,
}

impl PendulumRegressor {
    fn pairs(&self, w: &[f64]) -> ((f64, f64), (f64, f64)) {
        let a = (w[0], w[1]);
        let b = (w[2], w[3]);
        if self.channel == 0 {
            (a, b)
        } else {
            (b, a)
        }
    }
}

impl Regressor for PendulumRegressor {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&self, window: &[f64], u: f64, out: &mut [f64]) {
        let ((_, own_t), (other_next, other_t)) = self.pairs(window);
        out[0] = own_t.sin();
        out[1] = 1.0;
        out[2] = (other_next - other_t).sin();
        out[3] = u.tanh();
    }

    fn has_analytic_du(&self) -> bool {
        true
    }

    fn eval_du(&self, _window: &[f64], u: f64, out: &mut [f64]) {
        let th = u.tanh();
        out[..3].fill(0.0);
        out[3] = 1.0 - th * th;
    }

    fn offset(&self, window: &[f64]) -> f64 {
        let ((own_next, own_t), _) = self.pairs(window);
        2.0 * own_next - own_t
    }
}

pub const EXAMPLE2_THETA: [[f64; 4]; 2] = [[7.12, 30.0, 12.5, 40.0], [9.62, 24.0, 10.0, 32.0]];
pub const EXAMPLE2_CENTER: [[f64; 4]; 2] = [[7.13, 29.98, 12.52, 39.97], [9.63, 24.02, 9.98, 32.02]];
pub const EXAMPLE2_RADIUS: f64 = 0.11;

/// Two-channel pendulum with relative degree two; initial states uniform in
/// `[0, 0.1]`.
pub fn example2(seed: u64) -> PlantSpec {
    PlantSpec {
        name: "example2".into(),
        rho: 2,
        horizon: HORIZON,
        channels: (0..2)
            .map(|c| Channel {
                regressor: Arc::new(PendulumRegressor { channel: c }),
                theta: Arc::new(move |_| EXAMPLE2_THETA[c].to_vec()),
            })
            .collect(),
        initial_states: uniform_initial_states(2, 2, 0.0, 0.1, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::ProjectionBall;
    use crate::plant::{assumption_check, AssumptionCheck};

    #[test]
    fn example1_first_step_from_rest() {
        let spec = example1(0.0, 0.0, 1);
        let mut s = spec.reset(1).unwrap();
        assert_eq!(s.states(0), &[0.0]);
        // only the exponential term survives at x = 0, u = 0
        assert_eq!(s.step_scalar(&spec, 0, 0.0, 0.0).unwrap(), 0.75);
    }

    #[test]
    fn example1_matches_closed_form() {
        let spec = example1(0.0, 0.0, 1);
        let mut s = spec.reset(1).unwrap();
        let mut x: f64 = 0.0;
        for t in 0..spec.steps() {
            let u = 0.3 * (t as f64).cos();
            let tf = t as f64;
            let expect = (0.5 + tf / 50.0) * x * x.sin() / (1.0 + x * x)
                + (0.75 + tf / 75.0) * (x / 100.0).exp()
                + (1.5 + 0.5 * (-1.0f64).powi(t as i32)) * u.powi(3)
                + (PI / 4.0 + PI / 100.0 * tf).sin() * (u.atan() + u);
            let got = s.step_scalar(&spec, t, u, 0.0).unwrap();
            assert!((got - expect).abs() < 1e-12);
            x = got;
        }
    }

    #[test]
    fn example2_initial_states_in_range() {
        let spec = example2(5);
        for k in 1..20 {
            let s = spec.reset(k).unwrap();
            for c in 0..2 {
                assert!(s.states(c).iter().all(|v| (0.0..=0.1).contains(v)));
            }
        }
        let a = spec.reset(3).unwrap();
        let b = spec.reset(3).unwrap();
        assert_eq!(a.states(0), b.states(0));
    }

    #[test]
    fn example2_step_matches_equations() {
        let spec = example2(5);
        let mut s = spec.reset(1).unwrap();
        let (x1, x2) = (s.states(0).to_vec(), s.states(1).to_vec());
        let u = [0.2, -0.4];
        let next = s.step(&spec, 0, &u, &[0.0, 0.0]).unwrap();
        let th = EXAMPLE2_THETA;
        let e1 = 2.0 * x1[1] - x1[0] + th[0][0] * x1[0].sin() + th[0][1] + th[0][2] * (x2[1] - x2[0]).sin() + th[0][3] * u[0].tanh();
        let e2 = 2.0 * x2[1] - x2[0] + th[1][0] * x2[0].sin() + th[1][1] + th[1][2] * (x1[1] - x1[0]).sin() + th[1][3] * u[1].tanh();
        assert!((next[0] - e1).abs() < 1e-12);
        assert!((next[1] - e2).abs() < 1e-12);
    }

    #[test]
    fn example2_truth_inside_balls() {
        for c in 0..2 {
            let ball = ProjectionBall::new(EXAMPLE2_CENTER[c].to_vec(), EXAMPLE2_RADIUS).unwrap();
            assert!(ball.contains(&EXAMPLE2_THETA[c]));
        }
    }

    #[test]
    fn example1_gain_report_is_positive() {
        let spec = example1(0.0, 0.0, 1);
        let ball = ProjectionBall::new(vec![1.0; 4], 0.9).unwrap();
        let rep = assumption_check(
            &spec,
            &[ball],
            &AssumptionCheck {
                samples: 10_000,
                seed: 2024,
                ..Default::default()
            },
        );
        // gain >= theta_4 (1 + 1/(1+u^2)) with theta_4 >= 0.1 on the ball
        assert!(rep[0].min_gain > 0.1, "{:?}", rep[0]);
        assert!(!rep[0].flagged);
    }
}
