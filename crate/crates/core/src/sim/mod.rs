//! Analytic forward model: spherical spreading from ideal point sources in a
//! homogeneous lossless medium, filtered by a band-limited transducer pulse.

mod phantom;
mod pulse;

pub use phantom::{
    cyst_disks, make_cyst_phantom, make_cyst_phantom_with, make_low_contrast_phantom,
    make_low_contrast_phantom_with, make_point_grid_phantom, make_two_wire_phantom,
    point_grid_depths, CystParams, Disk, LowContrastParams, Phantom, PointAbsorber,
    RandomBackground, POINT_GRID_FIRST_DEPTH, POINT_GRID_PAIR_SPACING, POINT_GRID_ROW_STEP,
};
pub use pulse::{pulse_waveform, PulseModel};

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::RfFrame;
use crate::geometry::{ArrayGeometry, MediumModel};

/// Shortest recording that captures every absorber's full pulse on every
/// element, starting at `t = 0`.
pub fn required_duration(
    absorbers: &[PointAbsorber],
    geometry: &ArrayGeometry,
    medium: &MediumModel,
    pulse: &PulseModel,
) -> f64 {
    let (first, last) = (geometry.position(0), geometry.position(geometry.num_elements() - 1));
    let far = absorbers
        .iter()
        .map(|a| {
            let dx = (a.lateral - first).abs().max((a.lateral - last).abs());
            dx.hypot(a.axial)
        })
        .fold(0.0, f64::max);
    far / medium.sound_speed() + pulse.support()
}

/// Synthesises the noiseless RF frame of `phantom`, sampled at `fs` from
/// `t = 0` for `duration` seconds (`ceil(duration * fs)` samples).
///
/// Channel `i` holds `sum_s (a_s / r_si) * p(t - r_si / c)`. Channels are
/// synthesised in parallel; each channel's absorber sum runs in phantom order,
/// so the output does not depend on the worker count.
pub fn simulate_rf(
    phantom: &Phantom,
    geometry: &ArrayGeometry,
    medium: &MediumModel,
    pulse: &PulseModel,
    fs: f64,
    duration: f64,
) -> Result<RfFrame> {
    phantom.validate()?;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid("simulation", format!("sample rate must be positive, got {fs}")));
    }
    let absorbers = phantom.all_absorbers();
    if absorbers.is_empty() {
        return Err(Error::invalid("simulation", "phantom has no absorbers"));
    }
    let required = required_duration(&absorbers, geometry, medium, pulse);
    if !(duration >= required) {
        return Err(Error::DurationTooShort {
            required_s: required,
            given_s: duration,
        });
    }

    let n = (duration * fs).ceil() as usize;
    let c = medium.sound_speed();
    let support = pulse.support();
    let mut data = Array2::<f64>::zeros((geometry.num_elements(), n));
    data.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let xe = geometry.position(i);
            for a in &absorbers {
                let r = (a.lateral - xe).hypot(a.axial);
                if r == 0.0 {
                    // source on the element face; 1/r is singular
                    continue;
                }
                let tau = r / c;
                let weight = a.amplitude / r;
                let k0 = ((tau - support) * fs).ceil().max(0.0) as usize;
                let k1 = (((tau + support) * fs).floor() as usize).min(n - 1);
                for k in k0..=k1 {
                    let t = k as f64 / fs;
                    row[k] += weight * pulse_waveform(t - tau, pulse);
                }
            }
        });
    RfFrame::new(data, fs, 0.0)
}

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation
/// `rms(frame) * 10^(-snr_db / 20)`.
///
/// Channel `i` draws from a ChaCha20 stream seeded with `seed` on stream id
/// `i`, so results are reproducible and independent of scheduling.
/// `snr_db = +inf` returns the frame unchanged.
pub fn add_noise(frame: &RfFrame, snr_db: f64, seed: u64) -> Result<RfFrame> {
    if snr_db == f64::INFINITY {
        return Ok(frame.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("noise", format!("snr_db must be finite or +inf, got {snr_db}")));
    }
    let rms = frame.rms();
    if rms == 0.0 {
        return Err(Error::ZeroReferencePower { snr_db });
    }
    let sigma = noise_sigma(rms, snr_db);
    let mut data = frame.data().clone();
    data.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            for v in row.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * z;
            }
        });
    RfFrame::new(data, frame.sample_rate(), frame.start_time())
}

pub fn noise_sigma(reference_rms: f64, snr_db: f64) -> f64 {
    reference_rms * 10f64.powf(-snr_db / 20.0)
}
