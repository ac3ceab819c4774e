//! Image formation after beamforming: per-column analytic-signal envelope,
//! global normalisation and log compression.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ImagingGrid;

/// Default display range.
pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 60.0;

/// FFT plans for the discrete analytic signal of a fixed length.
#[derive(Clone)]
pub struct HilbertEnvelope {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl HilbertEnvelope {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Writes `|analytic(line)|` into `out`. Both slices must have the planned
    /// length.
    pub fn envelope_into(&self, line: ArrayView1<'_, f64>, out: &mut [f64], buf: &mut Vec<Complex64>) {
        let n = self.len;
        assert_eq!(line.len(), n, "line length differs from the planned length");
        buf.clear();
        buf.extend(line.iter().map(|&v| Complex64::new(v, 0.0)));
        self.forward.process(buf);
        // keep DC (and Nyquist for even n), double positive bins, zero negative ones
        let half = n / 2;
        let even = n.is_multiple_of(2);
        let last_doubled = if even { half - 1 } else { half };
        for (k, v) in buf.iter_mut().enumerate().skip(1) {
            if k <= last_doubled {
                *v *= 2.0;
            } else if !(even && k == half) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse.process(buf);
        let scale = 1.0 / n as f64;
        for (o, v) in out.iter_mut().zip(buf.iter()) {
            *o = v.norm() * scale;
        }
    }
}

/// Magnitude of the discrete analytic signal of `line`.
pub fn hilbert_envelope(line: &[f64]) -> Result<Vec<f64>> {
    if line.len() < 2 {
        return Err(Error::invalid("envelope input", "line needs at least 2 samples"));
    }
    let h = HilbertEnvelope::new(line.len());
    let mut out = vec![0.0; line.len()];
    h.envelope_into(ArrayView1::from(line), &mut out, &mut Vec::with_capacity(line.len()));
    Ok(out)
}

/// Envelope of every lateral column, taken along depth (axis 0).
pub fn column_envelopes(raw: &Array2<f64>) -> Result<Array2<f64>> {
    let (n_ax, n_lat) = raw.dim();
    if n_ax < 2 {
        return Err(Error::invalid("envelope input", "image needs at least 2 rows"));
    }
    let h = HilbertEnvelope::new(n_ax);
    let cols: Vec<Vec<f64>> = (0..n_lat)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n_ax),
            |buf, c| {
                let mut out = vec![0.0; n_ax];
                h.envelope_into(raw.column(c), &mut out, buf);
                out
            },
        )
        .collect();
    let mut env = Array2::zeros((n_ax, n_lat));
    for (c, col) in cols.into_iter().enumerate() {
        env.column_mut(c).assign(&Array1::from(col));
    }
    Ok(env)
}

/// `max(20 log10(env / max(env)), -dr)`.
pub fn log_compress(envelope: &Array2<f64>, dynamic_range_db: f64) -> Result<Array2<f64>> {
    let peak = envelope.iter().copied().fold(0.0, f64::max);
    log_compress_with_reference(envelope, dynamic_range_db, peak)
}

/// Log compression against an explicit reference level, for normalising
/// several images jointly.
pub fn log_compress_with_reference(
    envelope: &Array2<f64>,
    dynamic_range_db: f64,
    reference: f64,
) -> Result<Array2<f64>> {
    if !(dynamic_range_db.is_finite() && dynamic_range_db > 0.0) {
        return Err(Error::invalid("dynamic range", format!("must be positive, got {dynamic_range_db}")));
    }
    if !(reference > 0.0 && reference.is_finite()) {
        return Err(Error::AllZeroEnvelope);
    }
    let floor = -dynamic_range_db;
    Ok(envelope.mapv(|v| (20.0 * (v / reference).log10()).max(floor)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformedImage {
    pub grid: ImagingGrid,
    pub raw: Array2<f64>,
    pub envelope: Array2<f64>,
    pub db: Array2<f64>,
    pub dynamic_range_db: f64,
}

impl BeamformedImage {
    pub fn peak_envelope(&self) -> f64 {
        self.envelope.iter().copied().fold(0.0, f64::max)
    }

    /// Recompresses against another reference, for joint normalisation.
    pub fn renormalize(&mut self, reference: f64) -> Result<()> {
        self.db = log_compress_with_reference(&self.envelope, self.dynamic_range_db, reference)?;
        Ok(())
    }
}

/// Column envelopes followed by global log compression.
pub fn form_image(raw: Array2<f64>, grid: &ImagingGrid, dynamic_range_db: f64) -> Result<BeamformedImage> {
    if raw.dim() != grid.shape() {
        return Err(Error::invalid(
            "beamformed image",
            format!("shape {:?} does not match grid {:?}", raw.dim(), grid.shape()),
        ));
    }
    let envelope = column_envelopes(&raw)?;
    let db = log_compress(&envelope, dynamic_range_db)?;
    Ok(BeamformedImage {
        grid: *grid,
        raw,
        envelope,
        db,
        dynamic_range_db,
    })
}

/// Largest envelope value over several images.
pub fn joint_peak<'a>(images: impl IntoIterator<Item = &'a BeamformedImage>) -> f64 {
    images.into_iter().map(|i| i.peak_envelope()).fold(0.0, f64::max)
}

/// Energy check helper: `sum(env^2) >= sum(raw^2)` column by column.
pub fn column_energy(img: &Array2<f64>) -> Vec<f64> {
    img.axis_iter(Axis(1)).map(|c| c.iter().map(|v| v * v).sum()).collect()
}

/// Elementwise `|a - b|` maximum, handy for image comparisons.
pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mut m = 0.0f64;
    Zip::from(a).and(b).for_each(|&x, &y| m = m.max((x - y).abs()));
    m
}
