//! Reference trajectory families `r_k(t)`. Iteration-varying references are
//! ordinary members of the family, not a special case.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    /// `offset + amplitude * sin(2 pi t / period)` on every iteration.
    Sine {
        amplitude: f64,
        period: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Sine for `k <= invariant_until` and for even `k`; cosine for odd
    /// `k > invariant_until`.
    SwitchSineCosine {
        sine_amplitude: f64,
        cosine_amplitude: f64,
        period: f64,
        invariant_until: u64,
    },
    /// Sine on odd `k`, square wave `0.5 + 0.5 (-1)^floor(t / half_period)`
    /// on even `k`.
    SwitchSineSquare {
        sine_amplitude: f64,
        period: f64,
        half_period: usize,
    },
}

impl Reference {
    pub fn example1_compare() -> Self {
        Self::SwitchSineCosine {
            sine_amplitude: 0.8,
            cosine_amplitude: 1.2,
            period: 25.0,
            invariant_until: 10,
        }
    }

    pub fn example1_robust() -> Self {
        Self::SwitchSineSquare {
            sine_amplitude: 0.8,
            period: 25.0,
            half_period: 20,
        }
    }

    pub fn example2() -> Self {
        Self::Sine {
            amplitude: 0.1,
            period: 25.0,
            offset: 0.0,
        }
    }

    /// `r_k(t)` for one channel. All built-in families are shared by channels.
    pub fn eval(&self, k: u64, _channel: usize, t: usize) -> f64 {
        let tf = t as f64;
        match *self {
            Self::Sine { amplitude, period, offset } => offset + amplitude * (2.0 * PI * tf / period).sin(),
            Self::SwitchSineCosine {
                sine_amplitude,
                cosine_amplitude,
                period,
                invariant_until,
            } => {
                if k <= invariant_until || k.is_multiple_of(2) {
                    sine_amplitude * (2.0 * PI * tf / period).sin()
                } else {
                    cosine_amplitude * (2.0 * PI * tf / period).cos()
                }
            }
            Self::SwitchSineSquare {
                sine_amplitude,
                period,
                half_period,
            } => {
                if k % 2 == 1 {
                    sine_amplitude * (2.0 * PI * tf / period).sin()
                } else if (t / half_period.max(1)).is_multiple_of(2) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let period = match *self {
            Self::Sine { period, .. } | Self::SwitchSineCosine { period, .. } | Self::SwitchSineSquare { period, .. } => period,
        };
        if !(period > 0.0 && period.is_finite()) {
            return Err(format!("reference period must be positive, got {period}"));
        }
        if let Self::SwitchSineSquare { half_period: 0, .. } = self {
            return Err("square-wave half period must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_reference_switches_after_ten() {
        let r = Reference::example1_compare();
        let s = |t: usize| 0.8 * (2.0 * PI * t as f64 / 25.0).sin();
        let c = |t: usize| 1.2 * (2.0 * PI * t as f64 / 25.0).cos();
        for k in 1..=10 {
            assert_eq!(r.eval(k, 0, 3), s(3));
        }
        assert_eq!(r.eval(11, 0, 3), c(3));
        assert_eq!(r.eval(12, 0, 3), s(3));
        assert_eq!(r.eval(13, 0, 0), 1.2);
    }

    #[test]
    fn robust_reference_square_wave() {
        let r = Reference::example1_robust();
        assert_eq!(r.eval(2, 0, 0), 1.0);
        assert_eq!(r.eval(2, 0, 19), 1.0);
        assert_eq!(r.eval(2, 0, 20), 0.0);
        assert_eq!(r.eval(2, 0, 40), 1.0);
        assert_eq!(r.eval(1, 0, 0), 0.0);
    }
}
