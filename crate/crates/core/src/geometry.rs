//! Array layout, imaging grid and medium.
//!
//! Coordinates are SI throughout: lateral `x` runs along the array, axial `z`
//! points into the medium, and the elements sit on `z = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack when counting grid pixels, so `40 mm / 0.1 mm` gives 401
/// samples instead of 400 after rounding error.
const GRID_EPS: f64 = 1e-9;

/// Linear array with `num_elements` elements at a fixed pitch, centred on
/// the lateral origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    num_elements: usize,
    pitch: f64,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, pitch: f64) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::invalid("array geometry", "num_elements must be >= 1"));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::invalid(
                "array geometry",
                format!("pitch must be positive and finite, got {pitch}"),
            ));
        }
        Ok(Self { num_elements, pitch })
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Lateral position of element `i`: `(i - (M-1)/2) * pitch`.
    pub fn position(&self, i: usize) -> f64 {
        (i as f64 - (self.num_elements as f64 - 1.0) / 2.0) * self.pitch
    }

    pub fn element_positions(&self) -> Vec<f64> {
        (0..self.num_elements).map(|i| self.position(i)).collect()
    }

    /// Total aperture, first to last element centre.
    pub fn span(&self) -> f64 {
        (self.num_elements as f64 - 1.0) * self.pitch
    }
}

/// Rectangular reconstruction grid. Pixel `(row, col)` sits at
/// `(lateral_min + col * lateral_step, axial_min + row * axial_step)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingGrid {
    lateral_min: f64,
    lateral_max: f64,
    axial_min: f64,
    axial_max: f64,
    lateral_step: f64,
    axial_step: f64,
}

impl ImagingGrid {
    pub fn new(
        lateral: (f64, f64),
        axial: (f64, f64),
        lateral_step: f64,
        axial_step: f64,
    ) -> Result<Self> {
        let vals = [lateral.0, lateral.1, axial.0, axial.1, lateral_step, axial_step];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("imaging grid", "all extents must be finite"));
        }
        if lateral.1 <= lateral.0 {
            return Err(Error::invalid("imaging grid", "lateral_max must exceed lateral_min"));
        }
        if axial.1 <= axial.0 {
            return Err(Error::invalid("imaging grid", "axial_max must exceed axial_min"));
        }
        if axial.0 < 0.0 {
            return Err(Error::invalid("imaging grid", "axial_min must be >= 0"));
        }
        if lateral_step <= 0.0 || axial_step <= 0.0 {
            return Err(Error::invalid("imaging grid", "steps must be positive"));
        }
        Ok(Self {
            lateral_min: lateral.0,
            lateral_max: lateral.1,
            axial_min: axial.0,
            axial_max: axial.1,
            lateral_step,
            axial_step,
        })
    }

    /// Same step on both axes.
    pub fn square(lateral: (f64, f64), axial: (f64, f64), step: f64) -> Result<Self> {
        Self::new(lateral, axial, step, step)
    }

    pub fn lateral_min(&self) -> f64 {
        self.lateral_min
    }
    pub fn lateral_max(&self) -> f64 {
        self.lateral_max
    }
    pub fn axial_min(&self) -> f64 {
        self.axial_min
    }
    pub fn axial_max(&self) -> f64 {
        self.axial_max
    }
    pub fn lateral_step(&self) -> f64 {
        self.lateral_step
    }
    pub fn axial_step(&self) -> f64 {
        self.axial_step
    }

    pub fn n_lateral(&self) -> usize {
        count(self.lateral_max - self.lateral_min, self.lateral_step)
    }

    pub fn n_axial(&self) -> usize {
        count(self.axial_max - self.axial_min, self.axial_step)
    }

    /// `(n_axial, n_lateral)`, the shape of every image on this grid.
    pub fn shape(&self) -> (usize, usize) {
        (self.n_axial(), self.n_lateral())
    }

    pub fn lateral_at(&self, col: usize) -> f64 {
        self.lateral_min + col as f64 * self.lateral_step
    }

    pub fn axial_at(&self, row: usize) -> f64 {
        self.axial_min + row as f64 * self.axial_step
    }

    pub fn lateral_coords(&self) -> Vec<f64> {
        (0..self.n_lateral()).map(|c| self.lateral_at(c)).collect()
    }

    pub fn axial_coords(&self) -> Vec<f64> {
        (0..self.n_axial()).map(|r| self.axial_at(r)).collect()
    }

    /// Pixel centres in row-major order: axial outer, lateral inner.
    pub fn pixels(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n_lat = self.n_lateral();
        (0..self.n_axial())
            .flat_map(move |r| (0..n_lat).map(move |c| (self.lateral_at(c), self.axial_at(r))))
    }

    /// Row whose depth is closest to `depth`, or `None` outside the grid
    /// (half a step of slack on either end).
    pub fn nearest_row(&self, depth: f64) -> Option<usize> {
        nearest(depth, self.axial_min, self.axial_step, self.n_axial())
    }

    pub fn nearest_col(&self, lateral: f64) -> Option<usize> {
        nearest(lateral, self.lateral_min, self.lateral_step, self.n_lateral())
    }
}

fn count(span: f64, step: f64) -> usize {
    (span / step * (1.0 + GRID_EPS)).floor() as usize + 1
}

fn nearest(v: f64, min: f64, step: f64, n: usize) -> Option<usize> {
    let idx = ((v - min) / step).round();
    if !idx.is_finite() || idx < 0.0 || idx > (n - 1) as f64 {
        None
    } else {
        Some(idx as usize)
    }
}

/// Homogeneous, lossless medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumModel {
    sound_speed: f64,
}

impl MediumModel {
    pub fn new(sound_speed: f64) -> Result<Self> {
        if !(sound_speed.is_finite() && sound_speed > 0.0) {
            return Err(Error::invalid(
                "medium",
                format!("sound speed must be positive, got {sound_speed}"),
            ));
        }
        Ok(Self { sound_speed })
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }
}

impl Default for MediumModel {
    fn default() -> Self {
        Self { sound_speed: 1540.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MM: f64 = 1e-3;

    #[test]
    fn single_element_sits_at_origin() {
        let g = ArrayGeometry::new(1, 0.3 * MM).unwrap();
        assert_eq!(g.element_positions(), vec![0.0]);
    }

    #[test]
    fn two_elements_are_symmetric() {
        let g = ArrayGeometry::new(2, 0.3 * MM).unwrap();
        let p = g.element_positions();
        assert!((p[0] + 0.15 * MM).abs() < 1e-15);
        assert!((p[1] - 0.15 * MM).abs() < 1e-15);
    }

    #[test]
    fn full_array_span() {
        let pitch = 0.3 * MM;
        let g = ArrayGeometry::new(128, pitch).unwrap();
        let p = g.element_positions();
        assert_eq!(p.len(), 128);
        assert!((p[127] - p[0] - 127.0 * pitch).abs() < 1e-15);
        for i in 0..128 {
            assert_eq!(p[i], -p[127 - i]);
        }
        for w in p.windows(2) {
            assert!((w[1] - w[0] - pitch).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(ArrayGeometry::new(0, 1.0).is_err());
        assert!(ArrayGeometry::new(4, 0.0).is_err());
        assert!(ArrayGeometry::new(4, f64::NAN).is_err());
    }

    #[test]
    fn single_pixel_grid() {
        // max > min is required, so a 1x1 grid uses a step larger than the span
        let g = ImagingGrid::square((1.0 * MM, 1.05 * MM), (5.0 * MM, 5.05 * MM), 0.1 * MM).unwrap();
        assert_eq!(g.shape(), (1, 1));
        let px: Vec<_> = g.pixels().collect();
        assert_eq!(px, vec![(1.0 * MM, 5.0 * MM)]);
    }

    #[test]
    fn three_lateral_columns() {
        let g = ImagingGrid::square((0.0, 1.0 * MM), (0.0, 1.0 * MM), 0.5 * MM).unwrap();
        assert_eq!(g.n_lateral(), 3);
        let xs = g.lateral_coords();
        assert_eq!(xs, vec![0.0, 0.5 * MM, 1.0 * MM]);
    }

    #[test]
    fn full_field_grid_pixel_count() {
        let g = ImagingGrid::square((-20.0 * MM, 20.0 * MM), (0.0, 60.0 * MM), 0.1 * MM).unwrap();
        assert_eq!(g.n_lateral(), 401);
        assert_eq!(g.n_axial(), 601);
        assert_eq!(g.pixels().count(), 401 * 601);
    }

    #[test]
    fn pixels_are_axial_outer() {
        let g = ImagingGrid::square((0.0, 1.0), (0.0, 1.0), 1.0).unwrap();
        let px: Vec<_> = g.pixels().collect();
        assert_eq!(px, vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn grid_validation() {
        assert!(ImagingGrid::square((1.0, 0.0), (0.0, 1.0), 0.1).is_err());
        assert!(ImagingGrid::square((0.0, 1.0), (-1.0, 1.0), 0.1).is_err());
        assert!(ImagingGrid::square((0.0, 1.0), (0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn nearest_row_bounds() {
        let g = ImagingGrid::square((0.0, 1.0), (0.0, 1.0), 0.25).unwrap();
        assert_eq!(g.nearest_row(0.26), Some(1));
        assert_eq!(g.nearest_row(1.1), Some(4));
        assert_eq!(g.nearest_row(1.2), None);
        assert_eq!(g.nearest_row(-0.2), None);
    }

    #[test]
    fn medium_validation() {
        assert!(MediumModel::new(0.0).is_err());
        assert_eq!(MediumModel::default().sound_speed(), 1540.0);
    }
}
