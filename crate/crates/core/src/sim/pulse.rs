use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian window extent, in standard deviations, beyond which the pulse is
/// treated as zero (the envelope is below 1.6e-8 of its peak there).
const SUPPORT_SIGMAS: f64 = 6.0;

/// Band-limited transducer impulse response: a Gaussian-windowed sine whose
/// amplitude spectrum is `fractional_bandwidth * center_frequency` wide at
/// -6 dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseModel {
    center_frequency: f64,
    fractional_bandwidth: f64,
}

impl PulseModel {
    pub fn new(center_frequency: f64, fractional_bandwidth: f64) -> Result<Self> {
        if !(center_frequency.is_finite() && center_frequency > 0.0) {
            return Err(Error::invalid(
                "pulse",
                format!("center frequency must be positive, got {center_frequency}"),
            ));
        }
        if !(fractional_bandwidth > 0.0 && fractional_bandwidth < 2.0) {
            return Err(Error::invalid(
                "pulse",
                format!("fractional bandwidth must lie in (0, 2), got {fractional_bandwidth}"),
            ));
        }
        Ok(Self {
            center_frequency,
            fractional_bandwidth,
        })
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    pub fn fractional_bandwidth(&self) -> f64 {
        self.fractional_bandwidth
    }

    /// Standard deviation of the Gaussian time window.
    pub fn sigma_t(&self) -> f64 {
        (2.0 * LN_2).sqrt() / (PI * self.fractional_bandwidth * self.center_frequency)
    }

    /// Half-width of the interval outside which [`PulseModel::eval`] is
    /// negligible.
    pub fn support(&self) -> f64 {
        SUPPORT_SIGMAS * self.sigma_t()
    }

    pub fn eval(&self, t: f64) -> f64 {
        pulse_waveform(t, self)
    }
}

impl Default for PulseModel {
    /// 7 MHz centre, 77 % fractional bandwidth.
    fn default() -> Self {
        Self {
            center_frequency: 7.0e6,
            fractional_bandwidth: 0.77,
        }
    }
}

/// `p(t) = exp(-t^2 / (2 sigma^2)) * sin(2 pi f0 t)`.
pub fn pulse_waveform(t: f64, pulse: &PulseModel) -> f64 {
    let s = pulse.sigma_t();
    (-t * t / (2.0 * s * s)).exp() * (2.0 * PI * pulse.center_frequency * t).sin()
}
