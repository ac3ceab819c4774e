//! Scenario files: one TOML document describing a phantom, the acquisition,
//! the reconstruction and the measurements to take, plus the runner that
//! turns it into RF data, images and a metrics report on disk.
//!
//! Keys carry their unit as a suffix (`_mm`, `_mhz`, `_m_s`, `_db`) and are
//! converted to SI when the file is resolved.
//!
//! ```toml
//! name = "point_grid_50db"
//! methods = ["das", "dmas", "dsdmas"]
//!
//! [phantom]
//! kind = "point_grid"
//!
//! [noise]
//! snr_db = 50.0
//! seed = 1
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beamform::{beamform_images, BeamformMethod, BeamformSettings, Beamformer, EvalMode, Interpolation};
use crate::error::{Error, Result};
use crate::frame::RfFrame;
use crate::geometry::{ArrayGeometry, ImagingGrid, MediumModel};
use crate::io::{self, ImageFormat};
use crate::metrics::{
    contrast_ratio, lateral_profile, ContrastMetrics, LateralProfile, MethodMetrics, MetricsReport,
    PointTargetProtocol, Provenance, RegionSpec, SidelobeExclusion,
};
use crate::pipeline::{form_image, joint_peak, BeamformedImage, DEFAULT_DYNAMIC_RANGE_DB};
use crate::sim::{
    self, make_point_grid_phantom, make_two_wire_phantom, point_grid_depths, CystParams, Disk,
    LowContrastParams, Phantom, PointAbsorber, PulseModel, RandomBackground,
};

const MM: f64 = 1e-3;
const MHZ: f64 = 1e6;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shipped scenario files, by name.
pub const SHIPPED: [(&str, &str); 6] = [
    ("point_grid_50db", include_str!("../scenarios/point_grid_50db.toml")),
    ("point_grid_10db", include_str!("../scenarios/point_grid_10db.toml")),
    ("cyst", include_str!("../scenarios/cyst.toml")),
    ("low_contrast", include_str!("../scenarios/low_contrast.toml")),
    ("sound_speed_5pct", include_str!("../scenarios/sound_speed_5pct.toml")),
    ("two_wire", include_str!("../scenarios/two_wire.toml")),
];

/// Parses one of the [`SHIPPED`] scenarios.
pub fn shipped(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::config("name", format!("no shipped scenario called `{name}`")))?;
    ScenarioConfig::from_toml_str(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default = "all_methods")]
    pub methods: Vec<Beamformer>,
    #[serde(default)]
    pub mode: EvalMode,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default = "default_dr")]
    pub dynamic_range_db: f64,
    /// Compress every method against the largest envelope of the set
    /// instead of its own maximum.
    #[serde(default)]
    pub joint_normalization: bool,
    pub phantom: PhantomConfig,
    #[serde(default)]
    pub array: ArrayConfig,
    #[serde(default)]
    pub medium: MediumConfig,
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

fn all_methods() -> Vec<Beamformer> {
    Beamformer::ALL.to_vec()
}

fn default_dr() -> f64 {
    DEFAULT_DYNAMIC_RANGE_DB
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhantomConfig {
    PointGrid {
        #[serde(default = "one")]
        amplitude: f64,
    },
    Cyst {
        #[serde(default)]
        lateral_mm: Option<[f64; 2]>,
        #[serde(default)]
        axial_mm: Option<[f64; 2]>,
        #[serde(default)]
        density_per_mm2: Option<f64>,
        #[serde(default)]
        amplitude: Option<f64>,
        #[serde(default)]
        seed: Option<u64>,
        /// `[lateral, depth, radius]` per cyst.
        #[serde(default)]
        cysts_mm: Option<Vec<[f64; 3]>>,
    },
    LowContrast {
        #[serde(default)]
        target_depths_mm: Option<Vec<f64>>,
        #[serde(default)]
        target_amplitude: Option<f64>,
        #[serde(default)]
        background_lateral_mm: Option<[f64; 2]>,
        #[serde(default)]
        background_axial_mm: Option<[f64; 2]>,
        #[serde(default)]
        background_density_per_mm2: Option<f64>,
        #[serde(default)]
        background_amplitude: Option<f64>,
        #[serde(default)]
        seed: Option<u64>,
    },
    TwoWire {
        #[serde(default = "one")]
        amplitude: f64,
    },
    Custom {
        /// `[lateral, depth, amplitude]` per absorber.
        absorbers_mm: Vec<[f64; 3]>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub num_elements: usize,
    pub pitch_mm: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            num_elements: 128,
            pitch_mm: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub sound_speed_m_s: f64,
    /// Speed assumed by the beamformer; defaults to the true speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beamform_sound_speed_m_s: Option<f64>,
    /// Alternative to the absolute speed: a multiple of the true speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beamform_speed_factor: Option<f64>,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            sound_speed_m_s: 1540.0,
            beamform_sound_speed_m_s: None,
            beamform_speed_factor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub center_frequency_mhz: f64,
    pub fractional_bandwidth: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            center_frequency_mhz: 7.0,
            fractional_bandwidth: 0.77,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub fs_mhz: f64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self { fs_mhz: 40.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Signal-to-noise ratio against the clean frame's global RMS; absent
    /// means noiseless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lateral_mm: [f64; 2],
    pub axial_mm: [f64; 2],
    pub step_mm: f64,
    /// Overrides `step_mm` along depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axial_step_mm: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lateral_mm: [-20.0, 20.0],
            axial_mm: [0.0, 60.0],
            step_mm: 0.1,
            axial_step_mm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// `[lateral, depth]` of each point target to measure, at its true
    /// position. Defaults to the phantom's on-axis absorbers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets_mm: Option<Vec<[f64; 2]>>,
    /// Rows to export as lateral profiles. Defaults to each target's
    /// located peak row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_depths_mm: Option<Vec<f64>>,
    pub peak_search_mm: [f64; 2],
    pub snr_region_mm: [f64; 2],
    pub fwhm_half_window_mm: f64,
    pub sidelobe_half_window_mm: f64,
    pub sidelobe_exclusion: SidelobeRule,
    pub sidelobe_fwhm_factor: f64,
    pub energy_window_mm: [f64; 2],
    pub energy_mainlobe_radius_mm: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contrast: Vec<ContrastConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidelobeRule {
    FirstNull,
    FwhmMultiple,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        let p = PointTargetProtocol::default();
        let mm2 = |v: (f64, f64)| [v.0 / MM, v.1 / MM];
        Self {
            targets_mm: None,
            profile_depths_mm: None,
            peak_search_mm: mm2(p.peak_search),
            snr_region_mm: mm2(p.snr_region),
            fwhm_half_window_mm: p.fwhm_half_window / MM,
            sidelobe_half_window_mm: p.sidelobe_half_window / MM,
            sidelobe_exclusion: SidelobeRule::FirstNull,
            sidelobe_fwhm_factor: 2.0,
            energy_window_mm: mm2(p.energy_window),
            energy_mainlobe_radius_mm: p.energy_mainlobe_radius / MM,
            contrast: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastConfig {
    pub label: String,
    pub cyst: RegionConfig,
    pub background: RegionConfig,
}

/// Either a disk (`center_mm` + `radius_mm`) or a rectangle (`lateral_mm` +
/// `axial_mm`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum RegionConfig {
    Disk { center_mm: [f64; 2], radius_mm: f64 },
    Rect { lateral_mm: [f64; 2], axial_mm: [f64; 2] },
}

impl RegionConfig {
    fn resolve(&self, key: &str) -> Result<RegionSpec> {
        match self {
            RegionConfig::Disk { center_mm, radius_mm } => {
                positive(&format!("{key}.radius_mm"), *radius_mm)?;
                Ok(RegionSpec::disk((center_mm[0] * MM, center_mm[1] * MM), radius_mm * MM))
            }
            RegionConfig::Rect { lateral_mm, axial_mm } => {
                range(&format!("{key}.lateral_mm"), *lateral_mm)?;
                range(&format!("{key}.axial_mm"), *axial_mm)?;
                Ok(RegionSpec::Rect {
                    lateral: (lateral_mm[0] * MM, lateral_mm[1] * MM),
                    axial: (axial_mm[0] * MM, axial_mm[1] * MM),
                })
            }
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be a positive number, got {v}")))
    }
}

fn range(key: &str, v: [f64; 2]) -> Result<(f64, f64)> {
    if v[0].is_finite() && v[1].is_finite() && v[1] > v[0] {
        Ok((v[0], v[1]))
    } else {
        Err(Error::config(key, format!("must be [min, max] with max > min, got {v:?}")))
    }
}

/// Wraps a lower-level validation error with the config key that fed it.
fn keyed<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::config(key, e.to_string()))
}

impl ScenarioConfig {
    /// Parses a scenario document. Errors name the offending key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value =
            toml::from_str(text).map_err(|e| Error::config("<document>", e.message().to_string()))?;
        serde_path_to_error::deserialize(value).map_err(|e| {
            let key = e.path().to_string();
            Error::config(if key == "." { "<root>".to_string() } else { key }, e.inner().to_string())
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serialises")
    }

    /// Hex SHA-256 of the canonical serialisation, identifying the effective
    /// configuration (after any overrides).
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    /// Validates the document and converts it to SI units.
    pub fn resolve(&self) -> Result<Scenario> {
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "list at least one beamformer"));
        }
        positive("dynamic_range_db", self.dynamic_range_db)?;

        let geometry = keyed(
            "array",
            ArrayGeometry::new(self.array.num_elements, positive("array.pitch_mm", self.array.pitch_mm)? * MM),
        )?;
        for (k, m) in self.methods.iter().enumerate() {
            keyed(&format!("methods[{k}]"), m.check_elements(geometry.num_elements()))?;
        }
        let c = positive("medium.sound_speed_m_s", self.medium.sound_speed_m_s)?;
        let medium = MediumModel::new(c)?;
        let c_bf = match (self.medium.beamform_sound_speed_m_s, self.medium.beamform_speed_factor) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "medium.beamform_speed_factor",
                    "give either beamform_sound_speed_m_s or beamform_speed_factor, not both",
                ))
            }
            (Some(v), None) => positive("medium.beamform_sound_speed_m_s", v)?,
            (None, Some(f)) => positive("medium.beamform_speed_factor", f)? * c,
            (None, None) => c,
        };
        let pulse = keyed(
            "pulse",
            PulseModel::new(
                positive("pulse.center_frequency_mhz", self.pulse.center_frequency_mhz)? * MHZ,
                self.pulse.fractional_bandwidth,
            ),
        )?;
        let fs = positive("acquisition.fs_mhz", self.acquisition.fs_mhz)? * MHZ;
        if let Some(snr) = self.noise.snr_db {
            if snr.is_nan() || snr == f64::NEG_INFINITY {
                return Err(Error::config("noise.snr_db", format!("must be finite or +inf, got {snr}")));
            }
        }

        let g = &self.grid;
        let lat = range("grid.lateral_mm", g.lateral_mm)?;
        let ax = range("grid.axial_mm", g.axial_mm)?;
        if ax.0 < 0.0 {
            return Err(Error::config("grid.axial_mm", "depth must be >= 0"));
        }
        let step = positive("grid.step_mm", g.step_mm)?;
        let ax_step = match g.axial_step_mm {
            Some(s) => positive("grid.axial_step_mm", s)?,
            None => step,
        };
        let grid = keyed(
            "grid",
            ImagingGrid::new((lat.0 * MM, lat.1 * MM), (ax.0 * MM, ax.1 * MM), step * MM, ax_step * MM),
        )?;

        let (phantom, default_targets, default_contrast) = self.resolve_phantom()?;
        keyed("phantom", phantom.validate())?;

        let m = &self.metrics;
        let targets: Vec<(f64, f64)> = match &m.targets_mm {
            Some(t) => t.iter().map(|p| (p[0] * MM, p[1] * MM)).collect(),
            None => default_targets,
        };
        let protocol = PointTargetProtocol {
            peak_search: (
                positive("metrics.peak_search_mm[0]", m.peak_search_mm[0])? * MM,
                positive("metrics.peak_search_mm[1]", m.peak_search_mm[1])? * MM,
            ),
            snr_region: (
                positive("metrics.snr_region_mm[0]", m.snr_region_mm[0])? * MM,
                positive("metrics.snr_region_mm[1]", m.snr_region_mm[1])? * MM,
            ),
            fwhm_half_window: positive("metrics.fwhm_half_window_mm", m.fwhm_half_window_mm)? * MM,
            sidelobe_half_window: positive("metrics.sidelobe_half_window_mm", m.sidelobe_half_window_mm)? * MM,
            sidelobe_exclusion: match m.sidelobe_exclusion {
                SidelobeRule::FirstNull => SidelobeExclusion::FirstNull,
                SidelobeRule::FwhmMultiple => SidelobeExclusion::FwhmMultiple {
                    factor: positive("metrics.sidelobe_fwhm_factor", m.sidelobe_fwhm_factor)?,
                },
            },
            energy_window: (
                positive("metrics.energy_window_mm[0]", m.energy_window_mm[0])? * MM,
                positive("metrics.energy_window_mm[1]", m.energy_window_mm[1])? * MM,
            ),
            energy_mainlobe_radius: positive("metrics.energy_mainlobe_radius_mm", m.energy_mainlobe_radius_mm)? * MM,
        };
        let contrast = if m.contrast.is_empty() {
            default_contrast
        } else {
            m.contrast
                .iter()
                .enumerate()
                .map(|(k, cc)| {
                    Ok(ContrastRequest {
                        label: cc.label.clone(),
                        cyst: cc.cyst.resolve(&format!("metrics.contrast[{k}].cyst"))?,
                        background: cc.background.resolve(&format!("metrics.contrast[{k}].background"))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        };
        let profile_depths = m
            .profile_depths_mm
            .as_ref()
            .map(|d| d.iter().map(|z| z * MM).collect());

        Ok(Scenario {
            name: self.name.clone(),
            phantom,
            geometry,
            medium,
            beamform_sound_speed: c_bf,
            pulse,
            sample_rate: fs,
            noise_snr_db: self.noise.snr_db,
            noise_seed: self.noise.seed,
            grid,
            methods: self.methods.iter().map(|&b| BeamformMethod::new(b, self.mode)).collect(),
            interpolation: self.interpolation,
            dynamic_range_db: self.dynamic_range_db,
            joint_normalization: self.joint_normalization,
            targets,
            protocol,
            contrast,
            profile_depths,
            config_sha256: self.sha256(),
        })
    }

    #[allow(clippy::type_complexity)]
    fn resolve_phantom(&self) -> Result<(Phantom, Vec<(f64, f64)>, Vec<ContrastRequest>)> {
        let on_axis = |p: &Phantom| -> Vec<(f64, f64)> {
            p.absorbers
                .iter()
                .filter(|a| a.lateral == 0.0)
                .map(|a| (a.lateral, a.axial))
                .collect()
        };
        match &self.phantom {
            PhantomConfig::PointGrid { amplitude } => {
                let p = make_point_grid_phantom().scaled(*amplitude);
                let targets = point_grid_depths().into_iter().map(|z| (0.0, z)).collect();
                Ok((p, targets, Vec::new()))
            }
            PhantomConfig::TwoWire { amplitude } => {
                let p = make_two_wire_phantom().scaled(*amplitude);
                let t = on_axis(&p);
                Ok((p, t, Vec::new()))
            }
            PhantomConfig::Custom { absorbers_mm } => {
                if absorbers_mm.is_empty() {
                    return Err(Error::config("phantom.absorbers_mm", "list at least one absorber"));
                }
                let p = Phantom::from_absorbers(
                    absorbers_mm
                        .iter()
                        .map(|a| PointAbsorber::new(a[0] * MM, a[1] * MM, a[2]))
                        .collect(),
                );
                let t = p.absorbers.iter().map(|a| (a.lateral, a.axial)).collect();
                Ok((p, t, Vec::new()))
            }
            PhantomConfig::Cyst {
                lateral_mm,
                axial_mm,
                density_per_mm2,
                amplitude,
                seed,
                cysts_mm,
            } => {
                let mut params = CystParams::default();
                if let Some(v) = lateral_mm {
                    let r = range("phantom.lateral_mm", *v)?;
                    params.lateral = (r.0 * MM, r.1 * MM);
                }
                if let Some(v) = axial_mm {
                    let r = range("phantom.axial_mm", *v)?;
                    params.axial = (r.0 * MM, r.1 * MM);
                }
                if let Some(d) = density_per_mm2 {
                    params.density = positive("phantom.density_per_mm2", *d)? / (MM * MM);
                }
                if let Some(a) = amplitude {
                    params.amplitude = *a;
                }
                if let Some(s) = seed {
                    params.seed = *s;
                }
                if let Some(c) = cysts_mm {
                    params.cysts = c
                        .iter()
                        .enumerate()
                        .map(|(k, d)| {
                            Ok(Disk {
                                lateral: d[0] * MM,
                                axial: d[1] * MM,
                                radius: positive(&format!("phantom.cysts_mm[{k}][2]"), d[2])? * MM,
                            })
                        })
                        .collect::<Result<_>>()?;
                }
                let contrast = params.cysts.iter().map(default_cyst_regions).collect();
                Ok((sim::make_cyst_phantom_with(&params), Vec::new(), contrast))
            }
            PhantomConfig::LowContrast {
                target_depths_mm,
                target_amplitude,
                background_lateral_mm,
                background_axial_mm,
                background_density_per_mm2,
                background_amplitude,
                seed,
            } => {
                let mut params = LowContrastParams::default();
                if let Some(d) = target_depths_mm {
                    params.target_depths = d.iter().map(|z| z * MM).collect();
                }
                if let Some(a) = target_amplitude {
                    params.target_amplitude = *a;
                }
                let bg: &mut RandomBackground = &mut params.background;
                if let Some(v) = background_lateral_mm {
                    let r = range("phantom.background_lateral_mm", *v)?;
                    bg.lateral = (r.0 * MM, r.1 * MM);
                }
                if let Some(v) = background_axial_mm {
                    let r = range("phantom.background_axial_mm", *v)?;
                    bg.axial = (r.0 * MM, r.1 * MM);
                }
                if let Some(d) = background_density_per_mm2 {
                    bg.density = positive("phantom.background_density_per_mm2", *d)? / (MM * MM);
                }
                if let Some(a) = background_amplitude {
                    bg.amplitude = *a;
                }
                if let Some(s) = seed {
                    bg.seed = *s;
                }
                let p = sim::make_low_contrast_phantom_with(&params);
                let t = on_axis(&p);
                Ok((p, t, Vec::new()))
            }
        }
    }
}

/// Inner disk of the cyst (three quarters of its radius, away from the
/// edge) against a disk of the same size in the background beside it at
/// the same depth.
fn default_cyst_regions(d: &Disk) -> ContrastRequest {
    let r = 0.75 * d.radius;
    let offset = 2.0 * d.radius;
    ContrastRequest {
        label: format!("cyst_{:.0}mm", d.axial / MM),
        cyst: RegionSpec::disk((d.lateral, d.axial), r),
        background: RegionSpec::disk((d.lateral + offset, d.axial), r),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastRequest {
    pub label: String,
    pub cyst: RegionSpec,
    pub background: RegionSpec,
}

/// A validated scenario in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub phantom: Phantom,
    pub geometry: ArrayGeometry,
    pub medium: MediumModel,
    pub beamform_sound_speed: f64,
    pub pulse: PulseModel,
    pub sample_rate: f64,
    pub noise_snr_db: Option<f64>,
    pub noise_seed: u64,
    pub grid: ImagingGrid,
    pub methods: Vec<BeamformMethod>,
    pub interpolation: Interpolation,
    pub dynamic_range_db: f64,
    pub joint_normalization: bool,
    /// True positions of the point targets to measure.
    pub targets: Vec<(f64, f64)>,
    pub protocol: PointTargetProtocol,
    pub contrast: Vec<ContrastRequest>,
    pub profile_depths: Option<Vec<f64>>,
    pub config_sha256: String,
}

/// One reconstructed image.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodImage {
    pub method: BeamformMethod,
    pub image: BeamformedImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub frame: RfFrame,
    pub images: Vec<MethodImage>,
    pub report: MetricsReport,
}

impl ScenarioRun {
    pub fn image(&self, b: Beamformer) -> Option<&BeamformedImage> {
        self.images.iter().find(|i| i.method.beamformer == b).map(|i| &i.image)
    }

    pub fn metrics(&self, b: Beamformer) -> Option<&MethodMetrics> {
        self.report.methods.iter().find(|m| m.method == b.name())
    }
}

impl Scenario {
    fn context(&self, e: Error) -> Error {
        match e {
            Error::Config { .. } | Error::Scenario { .. } => e,
            other => Error::Scenario {
                scenario: self.name.clone(),
                source: Box::new(other),
            },
        }
    }

    /// Recording length: long enough for every absorber's pulse and for the
    /// deepest, widest pixel of the grid under the beamforming speed.
    pub fn duration(&self) -> f64 {
        let absorbers = self.phantom.all_absorbers();
        let sim = sim::required_duration(&absorbers, &self.geometry, &self.medium, &self.pulse);
        let (first, last) = (self.geometry.position(0), self.geometry.position(self.geometry.num_elements() - 1));
        let dx = (self.grid.lateral_min() - last)
            .abs()
            .max((self.grid.lateral_max() - first).abs());
        let far = dx.hypot(self.grid.axial_max());
        sim.max(far / self.beamform_sound_speed.min(self.medium.sound_speed()) + self.pulse.support())
    }

    /// Clean frame plus the configured noise.
    pub fn simulate(&self) -> Result<RfFrame> {
        self.simulate_inner().map_err(|e| self.context(e))
    }

    fn simulate_inner(&self) -> Result<RfFrame> {
        let clean = sim::simulate_rf(
            &self.phantom,
            &self.geometry,
            &self.medium,
            &self.pulse,
            self.sample_rate,
            self.duration(),
        )?;
        match self.noise_snr_db {
            Some(snr) => sim::add_noise(&clean, snr, self.noise_seed),
            None => Ok(clean),
        }
    }

    pub fn beamform_settings(&self) -> BeamformSettings {
        BeamformSettings {
            sound_speed: self.beamform_sound_speed,
            interpolation: self.interpolation,
            parallel: true,
        }
    }

    /// Beamforms `frame` with every configured method and forms the images.
    pub fn reconstruct(&self, frame: &RfFrame) -> Result<Vec<MethodImage>> {
        self.reconstruct_inner(frame).map_err(|e| self.context(e))
    }

    fn reconstruct_inner(&self, frame: &RfFrame) -> Result<Vec<MethodImage>> {
        let raws = beamform_images(frame, &self.grid, &self.geometry, &self.beamform_settings(), &self.methods)?;
        let mut images = raws
            .into_iter()
            .zip(&self.methods)
            .map(|(raw, &method)| {
                Ok(MethodImage {
                    method,
                    image: form_image(raw, &self.grid, self.dynamic_range_db)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if self.joint_normalization {
            let peak = joint_peak(images.iter().map(|i| &i.image));
            for i in &mut images {
                i.image.renormalize(peak)?;
            }
        }
        Ok(images)
    }

    /// Where a target at true position `(x, z)` should appear when the
    /// beamformer assumes a different sound speed: depths scale with the
    /// speed ratio.
    pub fn expected_position(&self, target: (f64, f64)) -> (f64, f64) {
        (target.0, target.1 * self.beamform_sound_speed / self.medium.sound_speed())
    }

    pub fn evaluate(&self, images: &[MethodImage]) -> Result<MetricsReport> {
        let methods = images
            .iter()
            .map(|mi| {
                let img = &mi.image;
                let targets = self
                    .targets
                    .iter()
                    .map(|&t| {
                        self.protocol
                            .measure(&img.envelope, &img.db, &self.grid, self.expected_position(t))
                    })
                    .collect();
                let contrast = self
                    .contrast
                    .iter()
                    .map(|c| {
                        Ok(ContrastMetrics {
                            label: c.label.clone(),
                            cyst: c.cyst,
                            background: c.background,
                            cr_db: contrast_ratio(&img.envelope, &self.grid, &c.cyst, &c.background)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(MethodMetrics {
                    method: mi.method.beamformer.name().to_string(),
                    targets,
                    contrast,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| self.context(e))?;
        Ok(MetricsReport {
            scenario: self.name.clone(),
            methods,
            provenance: self.provenance(),
        })
    }

    pub fn provenance(&self) -> Provenance {
        let mut seeds = Vec::new();
        if let Some(bg) = &self.phantom.background {
            seeds.push(bg.seed);
        }
        Provenance {
            tool_version: TOOL_VERSION.to_string(),
            config_sha256: self.config_sha256.clone(),
            noise_reference: "global RMS of the clean frame over all channels and samples".into(),
            noise_snr_db: self.noise_snr_db.filter(|s| s.is_finite()),
            noise_seed: self.noise_seed,
            background_seeds: seeds,
            true_sound_speed_m_s: self.medium.sound_speed(),
            beamform_sound_speed_m_s: self.beamform_sound_speed,
            intensity: "envelope magnitude before log compression".into(),
            target_protocol: self.protocol.clone(),
            sidelobe_exclusion: self.protocol.sidelobe_exclusion.describe(),
            normalization: if self.joint_normalization {
                "joint: every method compressed against the largest envelope of the set".into()
            } else {
                "per image: each method compressed against its own maximum".into()
            },
        }
    }

    /// Full chain: simulate, reconstruct, measure.
    pub fn run(&self) -> Result<ScenarioRun> {
        let frame = self.simulate()?;
        let images = self.reconstruct(&frame)?;
        let report = self.evaluate(&images)?;
        Ok(ScenarioRun { frame, images, report })
    }

    /// Lateral profiles of one image: the configured rows, or else the row
    /// through each target's located peak.
    pub fn profiles(&self, image: &BeamformedImage, metrics: &MethodMetrics) -> Result<Vec<LateralProfile>> {
        let depths: Vec<f64> = match &self.profile_depths {
            Some(d) => d.clone(),
            None => metrics
                .targets
                .iter()
                .filter_map(|t| t.peak_depth_mm.map(|z| z * MM))
                .collect(),
        };
        depths
            .iter()
            .map(|&z| lateral_profile(&image.db, &self.grid, z))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| self.context(e))
    }
}

/// Command-line style overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub methods: Option<Vec<Beamformer>>,
    pub mode: Option<EvalMode>,
    pub dynamic_range_db: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            cfg.noise.seed = s;
        }
        if let Some(m) = &self.methods {
            cfg.methods = m.clone();
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(d) = self.dynamic_range_db {
            cfg.dynamic_range_db = d;
        }
    }
}

/// Written alongside every output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactManifest {
    pub scenario: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub noise_seed: u64,
    /// File name (relative to the output directory) and its SHA-256.
    pub files: Vec<(String, String)>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn sha_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes the effective config, and returns its path.
pub fn write_config(cfg: &ScenarioConfig, dir: &Path) -> Result<PathBuf> {
    create_dir(dir)?;
    let p = dir.join("scenario.toml");
    fs::write(&p, cfg.to_toml_string()).map_err(|e| Error::io(&p, e))?;
    Ok(p)
}

pub fn write_rf_output(frame: &RfFrame, dir: &Path) -> Result<PathBuf> {
    create_dir(dir)?;
    let p = dir.join("rf.parf");
    io::write_rf(frame, &p)?;
    Ok(p)
}

/// `<method>.pgm` and `<method>_db.txt` per image.
pub fn write_image_outputs(images: &[MethodImage], dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut out = Vec::new();
    for mi in images {
        let name = mi.method.beamformer.name();
        let img = &mi.image;
        let pgm = dir.join(format!("{name}.pgm"));
        io::write_image(&img.db, &img.grid, img.dynamic_range_db, &pgm, ImageFormat::Graymap)?;
        let txt = dir.join(format!("{name}_db.txt"));
        io::write_image(&img.db, &img.grid, img.dynamic_range_db, &txt, ImageFormat::Table)?;
        out.push(pgm);
        out.push(txt);
    }
    Ok(out)
}

/// `metrics.json` plus `profiles_<method>.txt` per image.
pub fn write_metric_outputs(scenario: &Scenario, images: &[MethodImage], report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut out = Vec::new();
    let p = dir.join("metrics.json");
    let json = serde_json::to_string_pretty(report).expect("metrics report serialises");
    fs::write(&p, json + "\n").map_err(|e| Error::io(&p, e))?;
    out.push(p);
    for (mi, mm) in images.iter().zip(&report.methods) {
        let profiles = scenario.profiles(&mi.image, mm)?;
        let p = dir.join(format!("profiles_{}.txt", mi.method.beamformer.name()));
        io::write_profiles(&profiles, &p)?;
        out.push(p);
    }
    Ok(out)
}

/// Hashes `files` into `manifest.json` in `dir`.
pub fn write_manifest(scenario: &Scenario, files: &[PathBuf], dir: &Path) -> Result<PathBuf> {
    let mut entries = files
        .iter()
        .map(|f| {
            let name = f
                .strip_prefix(dir)
                .unwrap_or(f)
                .to_string_lossy()
                .into_owned();
            Ok((name, sha_file(f)?))
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    let m = ArtifactManifest {
        scenario: scenario.name.clone(),
        tool_version: TOOL_VERSION.to_string(),
        config_sha256: scenario.config_sha256.clone(),
        noise_seed: scenario.noise_seed,
        files: entries,
    };
    let p = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&m).expect("manifest serialises");
    fs::write(&p, json + "\n").map_err(|e| Error::io(&p, e))?;
    Ok(p)
}

/// Loads `config`, applies `overrides`, runs the whole chain and writes
/// every artifact to `out_dir`.
pub fn run_scenario(config: impl AsRef<Path>, out_dir: impl AsRef<Path>, overrides: &Overrides) -> Result<ScenarioRun> {
    let mut cfg = ScenarioConfig::load(config)?;
    overrides.apply(&mut cfg);
    run_config(&cfg, out_dir.as_ref())
}

pub fn run_config(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioRun> {
    let scenario = cfg.resolve()?;
    let run = scenario.run()?;
    let mut files = vec![write_config(cfg, out_dir)?, write_rf_output(&run.frame, out_dir)?];
    files.extend(write_image_outputs(&run.images, out_dir)?);
    files.extend(write_metric_outputs(&scenario, &run.images, &run.report, out_dir)?);
    write_manifest(&scenario, &files, out_dir)?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scenarios_resolve() {
        for (name, _) in SHIPPED {
            let cfg = shipped(name).unwrap();
            assert_eq!(cfg.name, name);
            cfg.resolve().unwrap();
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let text = "name = \"x\"\n[phantom]\nkind = \"point_grid\"\n[array]\nnum_elements = 8\npitch_m = 0.3\n";
        let err = ScenarioConfig::from_toml_str(text).unwrap_err();
        let Error::Config { key, reason } = &err else { panic!("{err}") };
        assert!(key.starts_with("array"), "{key}");
        assert!(reason.contains("pitch_m"), "{reason}");
    }

    #[test]
    fn wrong_type_is_named() {
        let text = "name = \"x\"\n[phantom]\nkind = \"point_grid\"\n[grid]\nlateral_mm = [-1, 1]\naxial_mm = [0, 2]\nstep_mm = \"fine\"\n";
        let Error::Config { key, .. } = ScenarioConfig::from_toml_str(text).unwrap_err() else { panic!() };
        assert_eq!(key, "grid.step_mm");
    }

    #[test]
    fn bad_value_is_named() {
        let mut cfg = shipped("two_wire").unwrap();
        cfg.grid.step_mm = -0.1;
        let Error::Config { key, .. } = cfg.resolve().unwrap_err() else { panic!() };
        assert_eq!(key, "grid.step_mm");
        let mut cfg = shipped("two_wire").unwrap();
        cfg.array.num_elements = 2;
        let Error::Config { key, .. } = cfg.resolve().unwrap_err() else { panic!() };
        assert_eq!(key, "methods[2]");
    }

    #[test]
    fn config_round_trips_through_toml() {
        for (name, _) in SHIPPED {
            let cfg = shipped(name).unwrap();
            let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.sha256(), cfg.sha256());
        }
    }

    #[test]
    fn seed_override_changes_hash() {
        let cfg = shipped("point_grid_10db").unwrap();
        let mut other = cfg.clone();
        Overrides { seed: Some(99), ..Default::default() }.apply(&mut other);
        assert_eq!(other.noise.seed, 99);
        assert_ne!(cfg.sha256(), other.sha256());
    }

    #[test]
    fn speed_factor_scales_expected_depth() {
        let s = shipped("sound_speed_5pct").unwrap().resolve().unwrap();
        assert!((s.beamform_sound_speed - 1.05 * 1540.0).abs() < 1e-9);
        let (_, z) = s.expected_position((0.0, 40.0 * MM));
        assert!((z - 42.0 * MM).abs() < 1e-12);
    }
}
