//! Initial-pressure phantoms built from point absorbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MM: f64 = 1e-3;

/// Ideal point source of initial pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointAbsorber {
    pub lateral: f64,
    pub axial: f64,
    pub amplitude: f64,
}

impl PointAbsorber {
    pub fn new(lateral: f64, axial: f64, amplitude: f64) -> Self {
        Self {
            lateral,
            axial,
            amplitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub lateral: f64,
    pub axial: f64,
    pub radius: f64,
}

impl Disk {
    /// Strict interior test; points on the rim are outside.
    pub fn contains_strict(&self, lateral: f64, axial: f64) -> bool {
        let dx = lateral - self.lateral;
        let dz = axial - self.axial;
        dx * dx + dz * dz < self.radius * self.radius
    }
}

/// Dense field of equal-amplitude absorbers scattered uniformly over a
/// rectangular slab, with optional disk-shaped holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBackground {
    pub lateral: (f64, f64),
    pub axial: (f64, f64),
    /// Candidate absorbers per square metre (before exclusions).
    pub density: f64,
    pub amplitude: f64,
    pub seed: u64,
    #[serde(default)]
    pub exclusions: Vec<Disk>,
}

impl RandomBackground {
    fn validate(&self) -> Result<()> {
        if !(self.lateral.1 > self.lateral.0 && self.axial.1 > self.axial.0) {
            return Err(Error::invalid("background", "slab extents must be increasing"));
        }
        if self.axial.0 < 0.0 {
            return Err(Error::invalid("background", "slab must lie at non-negative depth"));
        }
        if !(self.density.is_finite() && self.density >= 0.0) {
            return Err(Error::invalid("background", "density must be finite and >= 0"));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("background", "amplitude must be finite"));
        }
        Ok(())
    }

    /// Number of candidate positions drawn: `round(density * area)`.
    pub fn candidate_count(&self) -> usize {
        let area = (self.lateral.1 - self.lateral.0) * (self.axial.1 - self.axial.0);
        (self.density * area).round() as usize
    }

    /// Draws the candidate positions and drops the ones inside an exclusion.
    pub fn realize(&self) -> Vec<PointAbsorber> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let n = self.candidate_count();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let x = rng.random_range(self.lateral.0..self.lateral.1);
            let z = rng.random_range(self.axial.0..self.axial.1);
            if self.exclusions.iter().any(|d| d.contains_strict(x, z)) {
                continue;
            }
            out.push(PointAbsorber::new(x, z, self.amplitude));
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub absorbers: Vec<PointAbsorber>,
    pub background: Option<RandomBackground>,
}

impl Phantom {
    pub fn from_absorbers(absorbers: Vec<PointAbsorber>) -> Self {
        Self {
            absorbers,
            background: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.absorbers.iter().enumerate() {
            if !(a.lateral.is_finite() && a.axial.is_finite() && a.amplitude.is_finite()) {
                return Err(Error::invalid("phantom", format!("absorber {i} has a non-finite field")));
            }
            if a.axial < 0.0 {
                return Err(Error::invalid("phantom", format!("absorber {i} lies behind the array")));
            }
        }
        if let Some(bg) = &self.background {
            bg.validate()?;
        }
        Ok(())
    }

    /// Explicit absorbers followed by the realised background, in that order.
    pub fn all_absorbers(&self) -> Vec<PointAbsorber> {
        let mut all = self.absorbers.clone();
        if let Some(bg) = &self.background {
            all.extend(bg.realize());
        }
        all
    }

    /// Union of two phantoms (explicit absorbers only; `self`'s background wins).
    pub fn union(&self, other: &Phantom) -> Phantom {
        let mut absorbers = self.absorbers.clone();
        absorbers.extend_from_slice(&other.absorbers);
        Phantom {
            absorbers,
            background: self.background.clone().or_else(|| other.background.clone()),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Phantom {
        Phantom {
            absorbers: self
                .absorbers
                .iter()
                .map(|a| PointAbsorber::new(a.lateral, a.axial, a.amplitude * alpha))
                .collect(),
            background: self.background.clone().map(|mut b| {
                b.amplitude *= alpha;
                b
            }),
        }
    }

    pub fn shifted_axially(&self, dz: f64) -> Phantom {
        Phantom {
            absorbers: self
                .absorbers
                .iter()
                .map(|a| PointAbsorber::new(a.lateral, a.axial + dz, a.amplitude))
                .collect(),
            background: self.background.clone(),
        }
    }
}

/// Depth of the first point-grid row.
pub const POINT_GRID_FIRST_DEPTH: f64 = 25.0 * MM;
/// Axial distance between point-grid rows.
pub const POINT_GRID_ROW_STEP: f64 = 5.0 * MM;
/// Lateral distance between the two off-axis absorbers of each row, shallow to deep.
pub const POINT_GRID_PAIR_SPACING: [f64; 7] =
    [4.6 * MM, 5.5 * MM, 6.4 * MM, 7.2 * MM, 7.7 * MM, 8.5 * MM, 9.1 * MM];

/// Seven rows of three absorbers, 25 mm to 55 mm deep in 5 mm steps. Each
/// row has one on-axis absorber flanked by a symmetric pair.
pub fn make_point_grid_phantom() -> Phantom {
    let mut absorbers = Vec::with_capacity(21);
    for (row, spacing) in POINT_GRID_PAIR_SPACING.iter().enumerate() {
        let z = POINT_GRID_FIRST_DEPTH + row as f64 * POINT_GRID_ROW_STEP;
        absorbers.push(PointAbsorber::new(-spacing / 2.0, z, 1.0));
        absorbers.push(PointAbsorber::new(0.0, z, 1.0));
        absorbers.push(PointAbsorber::new(spacing / 2.0, z, 1.0));
    }
    Phantom::from_absorbers(absorbers)
}

/// On-axis target depths of the point grid.
pub fn point_grid_depths() -> Vec<f64> {
    (0..POINT_GRID_PAIR_SPACING.len())
        .map(|r| POINT_GRID_FIRST_DEPTH + r as f64 * POINT_GRID_ROW_STEP)
        .collect()
}

/// Layout of the two-cyst phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CystParams {
    pub lateral: (f64, f64),
    pub axial: (f64, f64),
    pub density: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub cysts: Vec<Disk>,
}

impl Default for CystParams {
    fn default() -> Self {
        Self {
            lateral: (-13.0 * MM, 13.0 * MM),
            axial: (5.0 * MM, 35.0 * MM),
            density: 10.0 / (MM * MM),
            amplitude: 1.0,
            seed: 0x5eed_c157,
            cysts: cyst_disks().to_vec(),
        }
    }
}

/// Two 4 mm radius anechoic disks on axis, at 15 mm and 24 mm depth.
pub fn cyst_disks() -> [Disk; 2] {
    [
        Disk {
            lateral: 0.0,
            axial: 15.0 * MM,
            radius: 4.0 * MM,
        },
        Disk {
            lateral: 0.0,
            axial: 24.0 * MM,
            radius: 4.0 * MM,
        },
    ]
}

pub fn make_cyst_phantom() -> Phantom {
    make_cyst_phantom_with(&CystParams::default())
}

/// Uniform absorbing slab realised as a seeded random point cloud, with the
/// cyst disks left empty.
pub fn make_cyst_phantom_with(params: &CystParams) -> Phantom {
    Phantom {
        absorbers: Vec::new(),
        background: Some(RandomBackground {
            lateral: params.lateral,
            axial: params.axial,
            density: params.density,
            amplitude: params.amplitude,
            seed: params.seed,
            exclusions: params.cysts.clone(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowContrastParams {
    pub target_depths: Vec<f64>,
    pub target_amplitude: f64,
    pub background: RandomBackground,
}

impl Default for LowContrastParams {
    fn default() -> Self {
        Self {
            target_depths: vec![25.0 * MM, 30.0 * MM, 35.0 * MM, 40.0 * MM],
            target_amplitude: 1.0,
            background: RandomBackground {
                lateral: (-10.0 * MM, 10.0 * MM),
                axial: (2.0 * MM, 45.0 * MM),
                density: 10.0 / (MM * MM),
                amplitude: 0.1,
                seed: 0x10c0,
                exclusions: Vec::new(),
            },
        }
    }
}

/// Four on-axis absorbers, 25 mm to 40 mm deep, over a weak random background.
pub fn make_low_contrast_phantom() -> Phantom {
    make_low_contrast_phantom_with(&LowContrastParams::default())
}

pub fn make_low_contrast_phantom_with(params: &LowContrastParams) -> Phantom {
    Phantom {
        absorbers: params
            .target_depths
            .iter()
            .map(|&z| PointAbsorber::new(0.0, z, params.target_amplitude))
            .collect(),
        background: Some(params.background.clone()),
    }
}

/// Cross-sections of two wires on axis at 30 mm and 50 mm.
pub fn make_two_wire_phantom() -> Phantom {
    Phantom::from_absorbers(vec![
        PointAbsorber::new(0.0, 30.0 * MM, 1.0),
        PointAbsorber::new(0.0, 50.0 * MM, 1.0),
    ])
}
