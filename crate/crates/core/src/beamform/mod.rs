//! Receive beamforming on a pixel grid.

mod delay;
mod kernels;

pub use delay::{compute_delay, sample_at, sample_with, Interpolation};
pub use kernels::{
    count_ops, das_pixel, dmas_pixel, dsdmas_pixel, dsdmas_terms, signed_sqrt,
    table_operation_count, BeamformMethod, Beamformer, EvalMode, OpCounter, OpCounts, Scratch,
};

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::RfFrame;
use crate::geometry::{ArrayGeometry, ImagingGrid};

/// Knobs shared by every method in one beamforming pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamformSettings {
    /// Sound speed assumed when computing delays; may differ from the true
    /// speed of the medium.
    pub sound_speed: f64,
    pub interpolation: Interpolation,
    /// Run rows on the rayon pool. Output is identical either way.
    pub parallel: bool,
}

impl BeamformSettings {
    pub fn new(sound_speed: f64) -> Self {
        Self {
            sound_speed,
            interpolation: Interpolation::Linear,
            parallel: true,
        }
    }
}

/// Beamforms `frame` onto `grid` with a single method, linear interpolation.
/// The result has shape `(n_axial, n_lateral)`.
pub fn beamform_image(
    frame: &RfFrame,
    grid: &ImagingGrid,
    geometry: &ArrayGeometry,
    sound_speed: f64,
    method: BeamformMethod,
) -> Result<Array2<f64>> {
    let mut out = beamform_images(frame, grid, geometry, &BeamformSettings::new(sound_speed), &[method])?;
    Ok(out.remove(0))
}

/// Beamforms with several methods at once, gathering each pixel's delayed
/// samples only once. Images come back in `methods` order.
pub fn beamform_images(
    frame: &RfFrame,
    grid: &ImagingGrid,
    geometry: &ArrayGeometry,
    settings: &BeamformSettings,
    methods: &[BeamformMethod],
) -> Result<Vec<Array2<f64>>> {
    let m = geometry.num_elements();
    if frame.num_elements() != m {
        return Err(Error::invalid(
            "beamform input",
            format!("frame has {} channels but the array has {m} elements", frame.num_elements()),
        ));
    }
    if !(settings.sound_speed.is_finite() && settings.sound_speed > 0.0) {
        return Err(Error::invalid("beamform input", "sound speed must be positive"));
    }
    for method in methods {
        method.beamformer.check_elements(m)?;
    }

    let (n_ax, n_lat) = grid.shape();
    let mut images: Vec<Array2<f64>> = methods.iter().map(|_| Array2::zeros((n_ax, n_lat))).collect();
    // per grid row, all methods' values laid out method-major
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); n_ax];
    let positions = geometry.element_positions();
    let data = frame.data();
    let channels: Vec<&[f64]> = (0..m)
        .map(|i| data.row(i).to_slice().expect("RF frame rows are contiguous"))
        .collect();
    let ctx = RowContext {
        channels: &channels,
        positions: &positions,
        grid,
        settings,
        methods,
        fs: frame.sample_rate(),
        t0: frame.start_time(),
    };

    if settings.parallel {
        rows.par_iter_mut()
            .enumerate()
            .for_each_init(|| RowScratch::new(m), |s, (r, row)| *row = ctx.row(r, s));
    } else {
        let mut s = RowScratch::new(m);
        for (r, row) in rows.iter_mut().enumerate() {
            *row = ctx.row(r, &mut s);
        }
    }

    for (r, row) in rows.into_iter().enumerate() {
        for (k, img) in images.iter_mut().enumerate() {
            img.index_axis_mut(Axis(0), r)
                .iter_mut()
                .zip(row[k * n_lat..(k + 1) * n_lat].iter())
                .for_each(|(dst, &v)| *dst = v);
        }
    }
    Ok(images)
}

struct RowContext<'a> {
    channels: &'a [&'a [f64]],
    positions: &'a [f64],
    grid: &'a ImagingGrid,
    settings: &'a BeamformSettings,
    methods: &'a [BeamformMethod],
    fs: f64,
    t0: f64,
}

struct RowScratch {
    delayed: Vec<f64>,
    kernel: Scratch,
}

impl RowScratch {
    fn new(m: usize) -> Self {
        Self {
            delayed: vec![0.0; m],
            kernel: Scratch::with_capacity(m),
        }
    }
}

impl RowContext<'_> {
    /// All methods' values for grid row `r`, method-major.
    fn row(&self, r: usize, s: &mut RowScratch) -> Vec<f64> {
        let n_lat = self.grid.n_lateral();
        let z = self.grid.axial_at(r);
        let mut out = vec![0.0; n_lat * self.methods.len()];
        for c in 0..n_lat {
            let x = self.grid.lateral_at(c);
            for (i, (&xe, ch)) in self.positions.iter().zip(self.channels).enumerate() {
                let delta = compute_delay((x, z), xe, self.settings.sound_speed, self.fs, self.t0);
                s.delayed[i] = sample_with(ch, delta, self.settings.interpolation);
            }
            for (k, &method) in self.methods.iter().enumerate() {
                out[k * n_lat + c] = s.kernel.eval(&s.delayed, method, &mut ());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_frame_gives_zero_image() {
        let g = ArrayGeometry::new(8, 0.3e-3).unwrap();
        let f = RfFrame::zeros(8, 400, 40e6, 0.0).unwrap();
        let grid = ImagingGrid::square((-1e-3, 1e-3), (1e-3, 3e-3), 0.5e-3).unwrap();
        for b in Beamformer::ALL {
            for mode in [EvalMode::Naive, EvalMode::Fast] {
                let img = beamform_image(&f, &grid, &g, 1540.0, BeamformMethod::new(b, mode)).unwrap();
                assert_eq!(img.dim(), grid.shape());
                assert!(img.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn channel_count_mismatch() {
        let g = ArrayGeometry::new(8, 0.3e-3).unwrap();
        let f = RfFrame::zeros(4, 10, 40e6, 0.0).unwrap();
        let grid = ImagingGrid::square((0.0, 1e-3), (0.0, 1e-3), 0.5e-3).unwrap();
        assert!(beamform_image(&f, &grid, &g, 1540.0, BeamformMethod::fast(Beamformer::Das)).is_err());
    }

    #[test]
    fn element_count_checked_once() {
        let g = ArrayGeometry::new(2, 0.3e-3).unwrap();
        let f = RfFrame::zeros(2, 10, 40e6, 0.0).unwrap();
        let grid = ImagingGrid::square((0.0, 1e-3), (0.0, 1e-3), 0.5e-3).unwrap();
        let err = beamform_image(&f, &grid, &g, 1540.0, BeamformMethod::fast(Beamformer::DsDmas)).unwrap_err();
        assert!(matches!(err, Error::TooFewElements { .. }));
        assert!(beamform_image(&f, &grid, &g, 1540.0, BeamformMethod::fast(Beamformer::Dmas)).is_ok());
    }
}
