//! Pipeline configuration.
//!
//! Configs are TOML files with one table per stage. Lengths are given in
//! millimetres, angles in degrees and frequencies in MHz. Every key has a
//! default matching a 192-element 5.2 MHz linear array, so a config only
//! needs the keys it changes. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub array: ArrayConfig,
    pub acquisition: AcquisitionConfig,
    pub phantom: PhantomConfig,
    pub grid: GridConfig,
    pub beamform: BeamformSection,
    pub metrics: MetricsConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub pitch_mm: f64,
    pub elements: usize,
    pub center_frequency_mhz: f64,
    pub sampling_frequency_mhz: f64,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionConfig {
    pub sound_speed: f64,
    pub transmits: usize,
    /// Full transmit span; angles run from `-range/2` to `+range/2`.
    pub angular_range_deg: f64,
    /// Samples per trace; 0 sizes the window to the phantom and grid.
    pub samples: usize,
    pub t0_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomKind {
    None,
    Points,
    Wires,
    Speckle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomConfig {
    pub kind: PhantomKind,
    /// `[x, z]` pairs for `points`.
    pub points_mm: Vec<[f64; 2]>,
    /// Gaps between consecutive wires for `wires`.
    pub spacings_mm: Vec<f64>,
    pub depth_mm: f64,
    pub x_offset_mm: f64,
    /// `[x_min, x_max, z_min, z_max]` for `speckle`.
    pub region_mm: [f64; 4],
    pub density_per_mm2: f64,
    /// `[x, z, radius]` of the anechoic inclusion; radius 0 disables it.
    pub inclusion_mm: [f64; 3],
    pub noise_rms: f64,
    pub spherical_spreading: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_center_mm: f64,
    pub z0_mm: f64,
    pub dx_mm: f64,
    pub dz_mm: f64,
    pub nx: usize,
    pub nz: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Das,
    Kk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Vernier,
    Confocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compounding {
    Single,
    Coherent,
    Incoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationName {
    Linear,
    Nearest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamformSection {
    pub method: Method,
    pub scheme: Scheme,
    /// Receive angles per sub-image.
    pub receive: usize,
    /// Vernier shifts `j`, one sub-image each.
    pub shifts: Vec<usize>,
    pub compounding: Compounding,
    pub interpolation: InterpolationName,
    /// DAS acceptance half-angle; absent means the full aperture.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_acceptance_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// `[x, z, radius]` of the contrast ROI.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inclusion_mm: Option<[f64; 3]>,
    /// `[x_min, x_max, z_min, z_max]` of the background ROI.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_mm: Option<[f64; 4]>,
    /// Radius around the inclusion centre removed from the background.
    pub background_exclusion_mm: f64,
    pub fwhm_targets_mm: Vec<[f64; 2]>,
    pub fwhm_window_mm: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: 0,
            array: ArrayConfig::default(),
            acquisition: AcquisitionConfig::default(),
            phantom: PhantomConfig::default(),
            grid: GridConfig::default(),
            beamform: BeamformSection::default(),
            metrics: MetricsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            pitch_mm: 0.23,
            elements: 192,
            center_frequency_mhz: 5.2,
            sampling_frequency_mhz: 20.83,
            bandwidth: 0.6,
        }
    }
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            sound_speed: 1540.0,
            transmits: 15,
            angular_range_deg: 48.0,
            samples: 0,
            t0_us: 0.0,
        }
    }
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            kind: PhantomKind::Points,
            points_mm: vec![[0.0, 10.0]],
            spacings_mm: Vec::new(),
            depth_mm: 10.0,
            x_offset_mm: 0.0,
            region_mm: [-7.5, 7.5, 10.0, 20.0],
            density_per_mm2: 200.0,
            inclusion_mm: [0.0, 15.0, 2.5],
            noise_rms: 0.0,
            spherical_spreading: false,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_center_mm: 0.0,
            z0_mm: 6.8,
            dx_mm: 0.057,
            dz_mm: 0.036,
            nx: 180,
            nz: 180,
        }
    }
}

impl Default for BeamformSection {
    fn default() -> Self {
        Self {
            method: Method::Kk,
            scheme: Scheme::Confocal,
            receive: 21,
            shifts: vec![0],
            compounding: Compounding::Single,
            interpolation: InterpolationName::Linear,
            max_acceptance_deg: None,
        }
    }
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            inclusion_mm: None,
            background_mm: None,
            background_exclusion_mm: 0.0,
            fwhm_targets_mm: Vec::new(),
            fwhm_window_mm: 2.0,
            bins: kkbeam_core::metrics::GCNR_BINS,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            prefix: "kkbeam".into(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_table(toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (or starts from defaults when `None`) and applies
    /// `section.key=value` overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_table(table)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if self.acquisition.transmits == 0 {
            return bad("acquisition.transmits must be at least 1");
        }
        if !(self.acquisition.angular_range_deg >= 0.0
            && self.acquisition.angular_range_deg < 180.0)
        {
            return bad("acquisition.angular_range_deg must lie in [0, 180)");
        }
        if self.acquisition.transmits > 1 && self.acquisition.angular_range_deg == 0.0 {
            return bad("several transmits need a nonzero angular range");
        }
        if self.beamform.receive == 0 {
            return bad("beamform.receive must be at least 1");
        }
        if self.beamform.shifts.is_empty() {
            return bad("beamform.shifts must list at least one shift");
        }
        if self.beamform.compounding == Compounding::Single && self.beamform.shifts.len() > 1 {
            return bad("single-image beamforming takes exactly one shift");
        }
        if self.grid.nx == 0 || self.grid.nz == 0 {
            return bad("grid must have at least one pixel");
        }
        if self.metrics.bins == 0 {
            return bad("metrics.bins must be positive");
        }
        if self.phantom.kind == PhantomKind::Points && self.phantom.points_mm.is_empty() {
            return bad("phantom.points_mm is empty");
        }
        Ok(())
    }

    /// Threads to use: `KKBEAM_THREADS` wins over the config value.
    pub fn effective_threads(&self) -> Result<usize> {
        match std::env::var("KKBEAM_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("KKBEAM_THREADS={v} is not a count"))),
            Err(_) => Ok(self.threads),
        }
    }
}

/// Applies one `section.key=value` override. The value is read as a TOML
/// literal, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields one item");
    let mut cur = table;
    for k in parents {
        cur = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{k}` in `{path}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
