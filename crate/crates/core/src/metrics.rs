//! Image-quality measures: region SNR, lateral FWHM, contrast ratio,
//! sidelobe level and mainlobe energy share.
//!
//! SNR and contrast ratio work on the linear envelope (before log
//! compression); FWHM and sidelobe level work on dB profiles. All lengths
//! are in metres.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ImagingGrid;

/// FWHM threshold below the peak.
pub const FWHM_DROP_DB: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum RegionSpec {
    Rect { lateral: (f64, f64), axial: (f64, f64) },
    Disk { center: (f64, f64), radius: f64 },
}

impl RegionSpec {
    /// Rectangle of `width x height` centred on `(lateral, axial)`.
    pub fn centered_rect(center: (f64, f64), width: f64, height: f64) -> Self {
        RegionSpec::Rect {
            lateral: (center.0 - width / 2.0, center.0 + width / 2.0),
            axial: (center.1 - height / 2.0, center.1 + height / 2.0),
        }
    }

    pub fn disk(center: (f64, f64), radius: f64) -> Self {
        RegionSpec::Disk { center, radius }
    }

    /// Boundary points count as inside.
    pub fn contains(&self, lateral: f64, axial: f64) -> bool {
        // slack for grid coordinates that land on the boundary up to rounding
        const EPS: f64 = 1e-12;
        match *self {
            RegionSpec::Rect { lateral: (l0, l1), axial: (a0, a1) } => {
                lateral >= l0 - EPS && lateral <= l1 + EPS && axial >= a0 - EPS && axial <= a1 + EPS
            }
            RegionSpec::Disk { center, radius } => {
                let dx = lateral - center.0;
                let dz = axial - center.1;
                (dx * dx + dz * dz).sqrt() <= radius + EPS
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            RegionSpec::Rect { lateral, axial } => format!(
                "rect lateral [{:.3}, {:.3}] mm x axial [{:.3}, {:.3}] mm",
                lateral.0 * 1e3,
                lateral.1 * 1e3,
                axial.0 * 1e3,
                axial.1 * 1e3
            ),
            RegionSpec::Disk { center, radius } => format!(
                "disk centre ({:.3}, {:.3}) mm radius {:.3} mm",
                center.0 * 1e3,
                center.1 * 1e3,
                radius * 1e3
            ),
        }
    }

    /// Image values of every grid pixel inside the region.
    pub fn values(&self, image: &Array2<f64>, grid: &ImagingGrid) -> Vec<f64> {
        let (n_ax, n_lat) = image.dim();
        let mut out = Vec::new();
        for r in 0..n_ax {
            let z = grid.axial_at(r);
            for c in 0..n_lat {
                if self.contains(grid.lateral_at(c), z) {
                    out.push(image[[r, c]]);
                }
            }
        }
        out
    }

    fn values_min(&self, image: &Array2<f64>, grid: &ImagingGrid, required: usize) -> Result<Vec<f64>> {
        let v = self.values(image, grid);
        if v.len() < required {
            return Err(Error::RegionTooSmall {
                region: self.describe(),
                pixels: v.len(),
                required,
            });
        }
        Ok(v)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// `20 log10((max - min) / std)` over the envelope values inside `region`.
pub fn snr_region(envelope: &Array2<f64>, grid: &ImagingGrid, region: &RegionSpec) -> Result<f64> {
    let v = region.values_min(envelope, grid, 2)?;
    snr_of_values(&v).ok_or_else(|| Error::ConstantRegion(region.describe()))
}

/// SNR of a bare sample set; `None` when the values are constant.
pub fn snr_of_values(v: &[f64]) -> Option<f64> {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let sd = std_dev(v);
    if sd == 0.0 {
        None
    } else {
        Some(20.0 * ((hi - lo) / sd).log10())
    }
}

/// `20 log10(mean(cyst) / mean(background))` over envelope values.
pub fn contrast_ratio(
    envelope: &Array2<f64>,
    grid: &ImagingGrid,
    cyst: &RegionSpec,
    background: &RegionSpec,
) -> Result<f64> {
    let c = cyst.values_min(envelope, grid, 1)?;
    let b = background.values_min(envelope, grid, 1)?;
    let mb = mean(&b);
    if mb <= 0.0 {
        return Err(Error::ZeroBackground);
    }
    Ok(20.0 * (mean(&c) / mb).log10())
}

/// One image row with its lateral coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateralProfile {
    /// Depth of the row actually used (nearest to the request).
    pub depth: f64,
    pub lateral: Vec<f64>,
    pub values: Vec<f64>,
}

impl LateralProfile {
    pub fn new(depth: f64, lateral: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(lateral.len(), values.len());
        Self { depth, lateral, values }
    }

    /// Sub-profile restricted to `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> LateralProfile {
        let (lateral, values) = self
            .lateral
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| **x >= lo - 1e-12 && **x <= hi + 1e-12)
            .map(|(x, v)| (*x, *v))
            .unzip();
        LateralProfile {
            depth: self.depth,
            lateral,
            values,
        }
    }

    pub fn argmax(&self) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((i, v)),
            })
            .map(|(i, _)| i)
    }
}

/// The image row closest to `depth`.
pub fn lateral_profile(db: &Array2<f64>, grid: &ImagingGrid, depth: f64) -> Result<LateralProfile> {
    let row = grid.nearest_row(depth).ok_or(Error::DepthOutsideGrid {
        depth_m: depth,
        min_m: grid.axial_min(),
        max_m: grid.axial_at(grid.n_axial() - 1),
    })?;
    Ok(LateralProfile::new(
        grid.axial_at(row),
        grid.lateral_coords(),
        db.row(row).to_vec(),
    ))
}

/// Width of the connected region around the peak (largest value with
/// lateral position in `window`) where the profile stays within 3 dB of the
/// peak. Crossings are placed by linear interpolation between samples.
pub fn fwhm_of_profile(profile: &LateralProfile, window: (f64, f64)) -> Result<f64> {
    let no_peak = Error::NoPeak {
        lo_m: window.0,
        hi_m: window.1,
    };
    let (x, v) = (&profile.lateral, &profile.values);
    let peak_idx = (0..v.len())
        .filter(|&i| x[i] >= window.0 - 1e-12 && x[i] <= window.1 + 1e-12)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if v[b] >= v[i] => Some(b),
            _ => Some(i),
        })
        .ok_or(no_peak)?;
    let level = v[peak_idx] - FWHM_DROP_DB;

    let mut l = peak_idx;
    while v[l] >= level {
        if l == 0 {
            return Err(Error::ContourExitsGrid { side: "left" });
        }
        l -= 1;
    }
    // v[l] < level <= v[l + 1]
    let left = x[l] + (level - v[l]) / (v[l + 1] - v[l]) * (x[l + 1] - x[l]);

    let mut r = peak_idx;
    while v[r] >= level {
        if r + 1 == v.len() {
            return Err(Error::ContourExitsGrid { side: "right" });
        }
        r += 1;
    }
    // v[r - 1] >= level > v[r]
    let right = x[r - 1] + (v[r - 1] - level) / (v[r - 1] - v[r]) * (x[r] - x[r - 1]);
    Ok(right - left)
}

/// Lateral -3 dB width of the peak inside `peak_window` on the row nearest
/// `depth`.
pub fn fwhm_lateral(db: &Array2<f64>, grid: &ImagingGrid, depth: f64, peak_window: (f64, f64)) -> Result<f64> {
    fwhm_of_profile(&lateral_profile(db, grid, depth)?, peak_window)
}

/// Highest profile value farther than `half_width` from the profile peak,
/// relative to the peak (dB).
pub fn sidelobe_level(profile: &LateralProfile, half_width: f64) -> Result<f64> {
    if !(half_width > 0.0) {
        return Err(Error::invalid("sidelobe half-width", "must be positive"));
    }
    let peak_idx = profile.argmax().ok_or(Error::NoPeak {
        lo_m: f64::NEG_INFINITY,
        hi_m: f64::INFINITY,
    })?;
    let (px, pv) = (profile.lateral[peak_idx], profile.values[peak_idx]);
    profile
        .lateral
        .iter()
        .zip(&profile.values)
        .filter(|(x, _)| (**x - px).abs() > half_width)
        .map(|(_, v)| *v)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        .map(|m| m - pv)
        .ok_or(Error::ExclusionCoversProfile { half_width_m: half_width })
}

/// Fraction of `sum(env^2)` inside `window` that lies farther than
/// `mainlobe_radius` from `center`.
pub fn out_of_mainlobe_energy_fraction(
    envelope: &Array2<f64>,
    grid: &ImagingGrid,
    center: (f64, f64),
    window: &RegionSpec,
    mainlobe_radius: f64,
) -> Result<f64> {
    let lobe = RegionSpec::disk(center, mainlobe_radius);
    let (mut total, mut outside) = (0.0, 0.0);
    let mut n = 0usize;
    for r in 0..grid.n_axial() {
        let z = grid.axial_at(r);
        for c in 0..grid.n_lateral() {
            let x = grid.lateral_at(c);
            if !window.contains(x, z) {
                continue;
            }
            n += 1;
            let e = envelope[[r, c]] * envelope[[r, c]];
            total += e;
            if !lobe.contains(x, z) {
                outside += e;
            }
        }
    }
    if n < 2 {
        return Err(Error::RegionTooSmall {
            region: window.describe(),
            pixels: n,
            required: 2,
        });
    }
    if total == 0.0 {
        return Err(Error::ConstantRegion(window.describe()));
    }
    Ok(outside / total)
}

/// Largest value inside `region` and its position.
pub fn region_peak(image: &Array2<f64>, grid: &ImagingGrid, region: &RegionSpec) -> Option<(f64, (f64, f64))> {
    let mut best: Option<(f64, (f64, f64))> = None;
    for r in 0..grid.n_axial() {
        let z = grid.axial_at(r);
        for c in 0..grid.n_lateral() {
            let x = grid.lateral_at(c);
            if region.contains(x, z) && best.is_none_or(|(b, _)| image[[r, c]] > b) {
                best = Some((image[[r, c]], (x, z)));
            }
        }
    }
    best
}

/// Level below the peak that the mainlobe must reach before a local
/// minimum can end it. Keeps noise ripple near the peak from being taken as
/// a null.
pub const NULL_SEARCH_FLOOR_DB: f64 = 6.0;

/// Mainlobe of the profile around sample `peak`, bounded by the first local
/// minimum (or start of a plateau, such as the clamped display floor) on
/// each side that lies at least [`NULL_SEARCH_FLOOR_DB`] below the peak. Returns inclusive sample indices of the two nulls (or the profile
/// ends).
pub fn mainlobe_bounds(values: &[f64], peak: usize) -> (usize, usize) {
    let floor = values[peak] - NULL_SEARCH_FLOOR_DB;
    let mut l = peak;
    while l > 0 && (values[l - 1] < values[l] || values[l] > floor) {
        l -= 1;
    }
    let mut r = peak;
    while r + 1 < values.len() && (values[r + 1] < values[r] || values[r] > floor) {
        r += 1;
    }
    (l, r)
}

/// How the mainlobe is excluded when reading the sidelobe level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SidelobeExclusion {
    /// Everything between the first nulls either side of the peak.
    FirstNull,
    /// `factor` times the profile's -3 dB width, either side of the peak.
    FwhmMultiple { factor: f64 },
}

impl SidelobeExclusion {
    pub fn describe(&self) -> String {
        match self {
            SidelobeExclusion::FirstNull => format!(
                "mainlobe bounded by the first local minimum at least {NULL_SEARCH_FLOOR_DB} dB below the peak on each side"
            ),
            SidelobeExclusion::FwhmMultiple { factor } => format!("+/-{factor} x FWHM around the peak"),
        }
    }
}

/// Highest value outside the first-null mainlobe, relative to the peak (dB).
pub fn sidelobe_level_first_null(profile: &LateralProfile) -> Result<f64> {
    let peak = profile.argmax().ok_or(Error::NoPeak {
        lo_m: f64::NEG_INFINITY,
        hi_m: f64::INFINITY,
    })?;
    let v = &profile.values;
    let (l, r) = mainlobe_bounds(v, peak);
    v[..l]
        .iter()
        .chain(&v[r + 1..])
        .copied()
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
        .map(|m| m - v[peak])
        .ok_or(Error::ExclusionCoversProfile {
            half_width_m: (profile.lateral[r] - profile.lateral[l]) / 2.0,
        })
}

/// Grid indices (row, column) of the largest value inside `region`.
pub fn region_argmax(image: &Array2<f64>, grid: &ImagingGrid, region: &RegionSpec) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for r in 0..grid.n_axial() {
        let z = grid.axial_at(r);
        for c in 0..grid.n_lateral() {
            if region.contains(grid.lateral_at(c), z) && best.is_none_or(|(_, b)| image[[r, c]] > b) {
                best = Some(((r, c), image[[r, c]]));
            }
        }
    }
    best.map(|(rc, _)| rc)
}

/// How a point target is measured. Lengths in metres.
///
/// The target is first located as the envelope maximum in a search box
/// around its expected image position. Because the beamformers see a
/// band-pass pulse, the nonlinear methods can place the envelope maximum a
/// fraction of a wavelength off the nominal depth, so width and sidelobes are
/// read on the row through the located peak rather than on the nominal row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTargetProtocol {
    /// Lateral x axial size of the box searched for the envelope peak.
    pub peak_search: (f64, f64),
    /// Lateral x axial size of the SNR rectangle, centred on the expected
    /// target position.
    pub snr_region: (f64, f64),
    /// Half-width of the lateral window holding the -3 dB peak.
    pub fwhm_half_window: f64,
    /// Half-width of the lateral window the sidelobe level is read in; keeps
    /// neighbouring targets out.
    pub sidelobe_half_window: f64,
    pub sidelobe_exclusion: SidelobeExclusion,
    /// Lateral x axial size of the box, centred on the located peak, used for
    /// the out-of-mainlobe energy fraction.
    pub energy_window: (f64, f64),
    /// Radius of the disk around the located peak counted as mainlobe for
    /// the energy fraction.
    pub energy_mainlobe_radius: f64,
}

impl Default for PointTargetProtocol {
    fn default() -> Self {
        const MM: f64 = 1e-3;
        Self {
            peak_search: (2.0 * MM, 2.0 * MM),
            snr_region: (2.0 * MM, 1.0 * MM),
            fwhm_half_window: 0.5 * MM,
            sidelobe_half_window: 1.8 * MM,
            sidelobe_exclusion: SidelobeExclusion::FirstNull,
            energy_window: (3.0 * MM, 3.0 * MM),
            energy_mainlobe_radius: 1.0 * MM,
        }
    }
}

impl PointTargetProtocol {
    /// Measures one target whose image is expected at `expected`
    /// (lateral, axial). `envelope` and `db` are the same image before and
    /// after log compression. Individual failures are recorded in the
    /// result's `errors` rather than aborting.
    pub fn measure(
        &self,
        envelope: &Array2<f64>,
        db: &Array2<f64>,
        grid: &ImagingGrid,
        expected: (f64, f64),
    ) -> TargetMetrics {
        let mut t = TargetMetrics {
            lateral_mm: expected.0 * 1e3,
            depth_mm: expected.1 * 1e3,
            peak_lateral_mm: None,
            peak_depth_mm: None,
            peak_db: None,
            snr_db: None,
            fwhm_mm: None,
            sidelobe_db: None,
            energy_fraction: None,
            errors: Vec::new(),
        };
        let note = |t: &mut TargetMetrics, what: &str, e: Error| t.errors.push(format!("{what}: {e}"));

        let snr_box = RegionSpec::centered_rect(expected, self.snr_region.0, self.snr_region.1);
        match snr_region(envelope, grid, &snr_box) {
            Ok(v) => t.snr_db = Some(v),
            Err(e) => note(&mut t, "snr", e),
        }

        let search = RegionSpec::centered_rect(expected, self.peak_search.0, self.peak_search.1);
        let Some((pr, pc)) = region_argmax(envelope, grid, &search) else {
            note(&mut t, "peak", Error::NoPeak { lo_m: expected.0, hi_m: expected.0 });
            return t;
        };
        let (px, pz) = (grid.lateral_at(pc), grid.axial_at(pr));
        t.peak_lateral_mm = Some(px * 1e3);
        t.peak_depth_mm = Some(pz * 1e3);
        t.peak_db = Some(db[[pr, pc]]);

        let profile = LateralProfile::new(pz, grid.lateral_coords(), db.row(pr).to_vec());
        let fwhm = fwhm_of_profile(&profile, (px - self.fwhm_half_window, px + self.fwhm_half_window));
        match &fwhm {
            Ok(w) => t.fwhm_mm = Some(w * 1e3),
            Err(e) => t.errors.push(format!("fwhm: {e}")),
        }

        let local = profile.window(expected.0 - self.sidelobe_half_window, expected.0 + self.sidelobe_half_window);
        let sll = match self.sidelobe_exclusion {
            SidelobeExclusion::FirstNull => sidelobe_level_first_null(&local),
            SidelobeExclusion::FwhmMultiple { factor } => match fwhm {
                Ok(w) => sidelobe_level(&local, factor * w),
                Err(_) => Err(Error::invalid("sidelobe exclusion", "needs the FWHM")),
            },
        };
        match sll {
            Ok(v) => t.sidelobe_db = Some(v),
            Err(e) => note(&mut t, "sidelobe", e),
        }

        let window = RegionSpec::centered_rect((px, pz), self.energy_window.0, self.energy_window.1);
        match out_of_mainlobe_energy_fraction(envelope, grid, (px, pz), &window, self.energy_mainlobe_radius) {
            Ok(v) => t.energy_fraction = Some(v),
            Err(e) => note(&mut t, "energy", e),
        }
        t
    }
}

/// Per-target measurements for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    /// Expected image position of the target.
    pub lateral_mm: f64,
    pub depth_mm: f64,
    /// Located envelope peak.
    pub peak_lateral_mm: Option<f64>,
    pub peak_depth_mm: Option<f64>,
    /// dB value at the located peak.
    pub peak_db: Option<f64>,
    pub snr_db: Option<f64>,
    pub fwhm_mm: Option<f64>,
    pub sidelobe_db: Option<f64>,
    /// Out-of-mainlobe share of envelope energy around the peak.
    pub energy_fraction: Option<f64>,
    /// Set when a metric could not be computed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastMetrics {
    pub label: String,
    pub cyst: RegionSpec,
    pub background: RegionSpec,
    pub cr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: String,
    pub targets: Vec<TargetMetrics>,
    pub contrast: Vec<ContrastMetrics>,
}

/// How the numbers were produced, so a report stands on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_sha256: String,
    pub noise_reference: String,
    pub noise_snr_db: Option<f64>,
    pub noise_seed: u64,
    pub background_seeds: Vec<u64>,
    pub true_sound_speed_m_s: f64,
    pub beamform_sound_speed_m_s: f64,
    /// What "intensity" means for SNR and contrast ratio.
    pub intensity: String,
    pub target_protocol: PointTargetProtocol,
    pub sidelobe_exclusion: String,
    pub normalization: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub methods: Vec<MethodMetrics>,
    pub provenance: Provenance,
}
