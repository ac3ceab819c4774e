use serde::{Deserialize, Serialize};

/// Fractional sample index at which a source at `pixel` reaches an element
/// at lateral `element_x` on the `z = 0` line: one-way time of flight
/// `r / c`, relative to the frame start `t0`, times `fs`.
#[inline]
pub fn compute_delay(pixel: (f64, f64), element_x: f64, c: f64, fs: f64, t0: f64) -> f64 {
    let r = (pixel.0 - element_x).hypot(pixel.1);
    (r / c - t0) * fs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Linear,
    Nearest,
}

/// Reads `channel` at fractional index `delta`. Indices outside
/// `[0, N - 1]` read as zero.
#[inline]
pub fn sample_at(channel: &[f64], delta: f64) -> f64 {
    sample_with(channel, delta, Interpolation::Linear)
}

#[inline]
pub fn sample_with(channel: &[f64], delta: f64, interp: Interpolation) -> f64 {
    let last = channel.len() as f64 - 1.0;
    // also rejects NaN
    if !(delta >= 0.0 && delta <= last) {
        return 0.0;
    }
    match interp {
        Interpolation::Nearest => channel[delta.round() as usize],
        Interpolation::Linear => {
            let k = delta.floor();
            let frac = delta - k;
            let k = k as usize;
            if frac == 0.0 {
                channel[k]
            } else {
                channel[k] * (1.0 - frac) + channel[k + 1] * frac
            }
        }
    }
}
