//! Pipeline configuration, loaded from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{DepthModel, Intrinsics};
use crate::error::{Error, Result};
use crate::inpaint::{DiffusionParams, PipelineOptions};
use crate::preprocess::{DepthMode, FilterParams};
use crate::regions::RegionParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Diffusion,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Program and leading arguments for the external backend.
    pub command: Vec<String>,
    /// Exchange directory; defaults to `<run dir>/exchange`.
    pub work_dir: Option<PathBuf>,
    pub diffusion: DiffusionParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub depth_mode: DepthMode,
    /// Normalized disparity jump that marks a discontinuity.
    pub threshold: f32,
    pub filter: FilterParams,
    pub min_edge_length: usize,
    /// Scale `min_edge_length` linearly with the long image side over 1024.
    pub scale_min_edge_length: bool,
    pub region: RegionParams,
    pub depth_cap: usize,
    pub backend: BackendConfig,
    /// Intrinsics of the input view; defaults derive from the image size.
    pub camera: Option<Intrinsics>,
    pub depth_model: DepthModel,
    /// Seed for the optional edge-order shuffle; unset keeps the order fixed.
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            depth_mode: DepthMode::default(),
            threshold: 0.04,
            filter: FilterParams::default(),
            min_edge_length: 10,
            scale_min_edge_length: false,
            region: RegionParams::default(),
            depth_cap: 8,
            backend: BackendConfig::default(),
            camera: None,
            depth_model: DepthModel::default(),
            seed: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<PipelineConfig> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        self.filter.validate()?;
        if self.min_edge_length == 0 {
            return Err(Error::config("min_edge_length must be at least 1"));
        }
        if self.depth_cap == 0 {
            return Err(Error::config("depth_cap must be at least 1"));
        }
        let d = self.backend.diffusion;
        if !(d.tol > 0.0) || d.max_iter == 0 {
            return Err(Error::config("diffusion needs tol > 0 and max_iter > 0"));
        }
        if self.backend.kind == BackendKind::External && self.backend.command.is_empty() {
            return Err(Error::config("external backend needs a command"));
        }
        if let Some(k) = self.camera {
            if !(k.fx > 0.0 && k.fy > 0.0) || !(k.cx.is_finite() && k.cy.is_finite()) {
                return Err(Error::config("camera intrinsics need fx, fy > 0"));
            }
        }
        self.depth_model.validate()
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            region: self.region,
            threshold: self.threshold,
            depth_cap: self.depth_cap,
            shuffle_seed: self.seed,
            validate: false,
        }
    }
}
