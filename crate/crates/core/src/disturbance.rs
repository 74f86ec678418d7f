//! Disturbance generators. Random kinds draw from an RNG keyed on
//! `(seed, channel, k, t)`, so a draw never depends on call order.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{keyed_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigFn {
    Sin,
    Cos,
}

/// `amplitude * fn(freq * pi * k * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub freq: f64,
    pub func: TrigFn,
}

impl TrigTerm {
    fn eval(&self, k: u64, t: usize) -> f64 {
        let arg = self.freq * PI * k as f64 * t as f64;
        self.amplitude
            * match self.func {
                TrigFn::Sin => arg.sin(),
                TrigFn::Cos => arg.cos(),
            }
    }
}

/// How the `scale` of a Gaussian disturbance is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianScale {
    #[default]
    Variance,
    StdDev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceKind {
    None,
    Uniform {
        low: f64,
        high: f64,
    },
    Gaussian {
        mean: f64,
        scale: f64,
        #[serde(default)]
        scale_is: GaussianScale,
    },
    /// `v1` with probability `p1`, otherwise `v2`.
    BernoulliLike {
        v1: f64,
        p1: f64,
        v2: f64,
        p2: f64,
    },
    Trigonometric {
        terms: Vec<TrigTerm>,
    },
    /// `w_1 = w1`, `w_2 = w2`, `w_k = c1 w_{k-1} + c2 w_{k-2}` afterwards.
    Hoim {
        c1: f64,
        c2: f64,
        w1: f64,
        w2: f64,
    },
    /// `linear * x - sine * sin(pi x)`.
    StateDependent {
        linear: f64,
        sine: f64,
    },
    /// Trigonometric disturbance of the double pendulum, per channel.
    Example2Channel {
        channel: usize,
    },
}

impl DisturbanceKind {
    /// Disturbance rows of the first benchmark, numbered 1 to 6.
    pub fn benchmark(row: u8) -> Option<Self> {
        Some(match row {
            1 => Self::Uniform { low: -0.01, high: 0.01 },
            2 => Self::Gaussian {
                mean: 0.0,
                scale: 0.01,
                scale_is: GaussianScale::Variance,
            },
            3 => Self::BernoulliLike {
                v1: 0.03,
                p1: 0.3,
                v2: -0.01,
                p2: 0.7,
            },
            4 => Self::Trigonometric {
                terms: vec![
                    TrigTerm {
                        amplitude: 0.01,
                        freq: 1.0 / 50.0,
                        func: TrigFn::Sin,
                    },
                    TrigTerm {
                        amplitude: 0.006,
                        freq: 0.5,
                        func: TrigFn::Cos,
                    },
                ],
            },
            5 => Self::Hoim {
                c1: 5.0 / 3.0,
                c2: -2.0 / 3.0,
                w1: 0.02,
                w2: -0.02,
            },
            6 => Self::StateDependent { linear: 0.01, sine: 0.01 },
            _ => return None,
        })
    }

    fn example2_terms(channel: usize) -> [TrigTerm; 2] {
        let (f1, f2) = if channel == 0 { (1.0, 0.5) } else { (2.0, 1.0) };
        [
            TrigTerm {
                amplitude: 1e-4,
                freq: f1,
                func: TrigFn::Cos,
            },
            TrigTerm {
                amplitude: 1e-4,
                freq: f2,
                func: TrigFn::Sin,
            },
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match *self {
            Self::Uniform { low, high } if !(low <= high) => bad(format!("uniform bounds reversed: [{low}, {high}]")),
            Self::Gaussian { scale, .. } if !(scale >= 0.0) => bad(format!("gaussian scale must be non-negative, got {scale}")),
            Self::BernoulliLike { p1, p2, .. } if !((0.0..=1.0).contains(&p1) && (p1 + p2 - 1.0).abs() < 1e-12) => {
                bad(format!("bernoulli probabilities must sum to 1, got {p1} + {p2}"))
            }
            Self::Example2Channel { channel } if channel > 1 => bad(format!("the pendulum has channels 0 and 1, got {channel}")),
            _ => Ok(()),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Self::Uniform { .. } | Self::Gaussian { .. } | Self::BernoulliLike { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub kind: DisturbanceKind,
    pub seed: u64,
}

/// Iteration-axis memory needed by the internal-model disturbance:
/// per `t`, the last iteration sampled and the last two values.
#[derive(Debug, Clone, Default)]
pub struct HoimMemory {
    entries: Vec<Option<(u64, f64, f64)>>,
}

impl HoimMemory {
    pub fn new(steps: usize) -> Self {
        Self {
            entries: vec![None; steps],
        }
    }
}

/// Draws `w_k(t)` for one channel. `x` is the state `x_k(t)` at application
/// time (used by the state-dependent kind).
pub fn sample(spec: &DisturbanceSpec, channel: usize, k: u64, t: usize, x: f64, memory: &mut HoimMemory) -> Result<f64> {
    let rng = || keyed_rng(spec.seed ^ (channel as u64).wrapping_mul(0xA076_1D64_78BD_642F), Stream::Disturbance, k, t as u64);
    Ok(match &spec.kind {
        DisturbanceKind::None => 0.0,
        DisturbanceKind::Uniform { low, high } => {
            if high > low {
                rng().random_range(*low..=*high)
            } else {
                *low
            }
        }
        DisturbanceKind::Gaussian { mean, scale, scale_is } => {
            let sd = match scale_is {
                GaussianScale::Variance => scale.sqrt(),
                GaussianScale::StdDev => *scale,
            };
            let normal = Normal::new(*mean, sd).map_err(|e| Error::Config(format!("gaussian disturbance: {e}")))?;
            normal.sample(&mut rng())
        }
        DisturbanceKind::BernoulliLike { v1, p1, v2, .. } => {
            if rng().random::<f64>() < *p1 {
                *v1
            } else {
                *v2
            }
        }
        DisturbanceKind::Trigonometric { terms } => terms.iter().map(|term| term.eval(k, t)).sum(),
        DisturbanceKind::Hoim { c1, c2, w1, w2 } => {
            if t >= memory.entries.len() {
                memory.entries.resize(t + 1, None);
            }
            let slot = &mut memory.entries[t];
            let w = match (k, *slot) {
                (0, _) => return Err(Error::Usage("iteration indices start at 1".into())),
                (_, Some((last, w_last, _))) if last == k => w_last,
                (1, _) => *w1,
                (2, Some((1, w_last, _))) => {
                    debug_assert_eq!(w_last, *w1);
                    *w2
                }
                (_, Some((last, w_last, w_prev))) if last + 1 == k && k > 2 => c1 * w_last + c2 * w_prev,
                _ => {
                    return Err(Error::Sequencing(format!(
                        "internal-model disturbance at k={k}, t={t} needs the values of iterations {} and {}",
                        k.saturating_sub(1),
                        k.saturating_sub(2)
                    )))
                }
            };
            let prev = slot.map_or(0.0, |(_, w_last, _)| w_last);
            if slot.is_none_or(|(last, ..)| last != k) {
                *slot = Some((k, w, prev));
            }
            w
        }
        DisturbanceKind::StateDependent { linear, sine } => linear * x - sine * (x * PI).sin(),
        DisturbanceKind::Example2Channel { channel } => DisturbanceKind::example2_terms(*channel)
            .iter()
            .map(|term| term.eval(k, t))
            .sum(),
    })
}

/// Per-channel disturbance streams of one run, with their running sup.
#[derive(Debug, Clone)]
pub struct DisturbanceSource {
    specs: Vec<DisturbanceSpec>,
    memory: Vec<HoimMemory>,
    sup: Vec<f64>,
}

impl DisturbanceSource {
    pub fn new(specs: Vec<DisturbanceSpec>, steps: usize) -> Result<Self> {
        for s in &specs {
            s.kind.validate()?;
        }
        let n = specs.len();
        Ok(Self {
            specs,
            memory: vec![HoimMemory::new(steps); n],
            sup: vec![0.0; n],
        })
    }

    pub fn none(channels: usize, steps: usize) -> Self {
        Self::new(
            vec![
                DisturbanceSpec {
                    kind: DisturbanceKind::None,
                    seed: 0
                };
                channels
            ],
            steps,
        )
        .expect("none is always valid")
    }

    pub fn sample(&mut self, channel: usize, k: u64, t: usize, x: f64) -> Result<f64> {
        let w = sample(&self.specs[channel], channel, k, t, x, &mut self.memory[channel])?;
        self.sup[channel] = self.sup[channel].max(w.abs());
        Ok(w)
    }

    /// Largest `|w|` produced so far on each channel.
    pub fn empirical_sup(&self) -> &[f64] {
        &self.sup
    }

    pub fn specs(&self) -> &[DisturbanceSpec] {
        &self.specs
    }
}
