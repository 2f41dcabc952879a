//! Run configuration: a TOML file with one flat section per block.
//!
//! Frequencies are given as fractions of the block's reference electron
//! energy, so a config stays meaningful when the energy is changed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub kinematics: Kinematics,
    pub cutoffs: Cutoffs,
    pub quadrature: Quadrature,
    pub grid: Grid,
    pub current: CurrentRows,
    pub spectrum: Spectrum,
    pub overlap: OverlapSweep,
    pub branches: Branches,
    pub sweep: CutoffSweep,
    pub rescatter: Rescatter,
    pub detector: Detector,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            format: Format::Csv,
            out: None,
            kinematics: Kinematics::default(),
            cutoffs: Cutoffs::default(),
            quadrature: Quadrature::default(),
            grid: Grid::default(),
            current: CurrentRows::default(),
            spectrum: Spectrum::default(),
            overlap: OverlapSweep::default(),
            branches: Branches::default(),
            sweep: CutoffSweep::default(),
            rescatter: Rescatter::default(),
            detector: Detector::default(),
        }
    }
}

/// Beam particles and the single-current deflection used by `current`,
/// `spectrum` and `overlap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Kinematics {
    pub electron_energy: f64,
    pub electron_mass: f64,
    pub neutrino_energy: f64,
    pub neutrino_mass: f64,
    /// Deflection of the outgoing electron, degrees.
    pub deflection_deg: f64,
}

impl Default for Kinematics {
    fn default() -> Self {
        Self {
            electron_energy: 10.0,
            electron_mass: 1.0,
            neutrino_energy: 10.0,
            neutrino_mass: 0.1,
            deflection_deg: 90.0,
        }
    }
}

/// Spectral window as fractions of the electron energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cutoffs {
    pub omega_min_fraction: f64,
    pub omega_max_fraction: f64,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Self {
            omega_min_fraction: 1e-4,
            omega_max_fraction: 1e-1,
        }
    }
}

/// Continuum integration nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Quadrature {
    pub n_cos: usize,
    pub n_phi: usize,
    pub n_omega: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            n_cos: 192,
            n_phi: 192,
            n_omega: 8,
        }
    }
}

/// Truncated Fock-space check. It runs at its own, milder electron energy
/// so that the coarse angular grid resolves the emission cones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub electron_energy: f64,
    pub n_cos: usize,
    pub n_phi: usize,
    pub n_omega: usize,
    /// Align the grid's polar axis with the current's dominant direction.
    pub adapted_frame: bool,
    /// Fixed truncation; derived from the largest amplitude when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Truncation used for the displacement residuals.
    pub residual_n_max: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            electron_energy: 2.0,
            n_cos: 16,
            n_phi: 16,
            n_omega: 32,
            adapted_frame: true,
            n_max: None,
            residual_n_max: 40,
        }
    }
}

/// Photon momenta `[omega / E, n_x, n_y, n_z]`; directions are normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurrentRows {
    pub photons: Vec<[f64; 4]>,
}

impl Default for CurrentRows {
    fn default() -> Self {
        Self {
            photons: vec![
                [1e-3, 0.0, 0.0, 1.0],
                [1e-3, 1.0, 0.0, 0.0],
                [1e-2, 0.0, 1.0, 0.0],
                [1e-2, 1.0, 1.0, 1.0],
                [1e-1, -1.0, 0.0, 0.0],
                [1e-1, 0.0, 0.0, -1.0],
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Spectrum {
    pub lo_fraction: f64,
    pub hi_fraction: f64,
    pub points: usize,
}

impl Default for Spectrum {
    fn default() -> Self {
        Self {
            lo_fraction: 1e-3,
            hi_fraction: 1e-2,
            points: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapSweep {
    pub deflections_deg: Vec<f64>,
}

impl Default for OverlapSweep {
    fn default() -> Self {
        Self {
            deflections_deg: vec![0.0, 1.0, 10.0, 45.0, 90.0, 135.0, 179.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Branches {
    pub count: usize,
    pub vacuum_rate: f64,
    /// Explicit centre-of-momentum directions; sampled from the seed when empty.
    pub directions: Vec<[f64; 3]>,
}

impl Default for Branches {
    fn default() -> Self {
        Self {
            count: 6,
            vacuum_rate: irdeco_core::branches::DEFAULT_VACUUM_RATE,
            directions: Vec::new(),
        }
    }
}

/// Infrared-cutoff sweep for `decohere`, fractions of the electron energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffSweep {
    pub omega_max_fraction: f64,
    pub omega_min_fractions: Vec<f64>,
}

impl Default for CutoffSweep {
    fn default() -> Self {
        Self {
            omega_max_fraction: 1.0,
            omega_min_fractions: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rescatter {
    pub deltas: Vec<f64>,
    pub samples: u64,
}

impl Default for Rescatter {
    fn default() -> Self {
        Self {
            deltas: vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4],
            samples: 1_000_000,
        }
    }
}

/// Calorimeter threshold and the Monte Carlo used to cross-check it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Detector {
    pub threshold_fraction: f64,
    pub grid: [usize; 3],
    pub trials: u64,
}

impl Default for Detector {
    fn default() -> Self {
        Self {
            threshold_fraction: 1e-2,
            grid: [64, 64, 8],
            trials: 1_000_000,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("every config field is representable in TOML")
    }

    /// Structural checks; physical ones are left to the library.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: &str| Err(CliError::Config(msg.to_string()));
        if self.current.photons.is_empty() {
            return fail("[current] photons must not be empty");
        }
        if self.spectrum.points < 2 {
            return fail("[spectrum] points must be at least 2");
        }
        if self.overlap.deflections_deg.is_empty() {
            return fail("[overlap] deflections_deg must not be empty");
        }
        if self.sweep.omega_min_fractions.is_empty() {
            return fail("[sweep] omega_min_fractions must not be empty");
        }
        if self.rescatter.deltas.is_empty() {
            return fail("[rescatter] deltas must not be empty");
        }
        if !self.branches.directions.is_empty()
            && self.branches.directions.len() != self.branches.count
        {
            return fail("[branches] directions must list exactly `count` entries");
        }
        Ok(())
    }
}
