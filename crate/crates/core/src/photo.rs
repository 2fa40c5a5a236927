//! End-to-end build: RGB-D input to completed LDI and mesh.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::config::{BackendKind, PipelineConfig};
use crate::error::{Error, Result};
use crate::geom::Grid;
use crate::inpaint::{run_pipeline, Backend, DiffusionBackend, ExternalBackend, RunReport};
use crate::ldi::Ldi;
use crate::mesh::{ldi_to_mesh, TexturedMesh};
use crate::preprocess::{
    bilateral_median_filter, detect_discontinuities, link_depth_edges, normalize_disparity, scaled_length,
    DisparityMap,
};

/// Deterministic summary of a build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub width: usize,
    pub height: usize,
    pub discontinuity_sites: usize,
    pub edges: usize,
    pub levels: usize,
    pub edges_per_level: Vec<usize>,
    pub edges_processed: usize,
    pub synthesized_pixels: usize,
    pub ldi_pixels: usize,
    pub max_layers: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub depth_cap_hit: bool,
    pub warnings: Vec<String>,
}

/// Wall-clock seconds per stage, kept apart from the report so reports stay
/// reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
}

impl Timings {
    fn lap(&mut self, name: &str, since: &mut Instant) {
        let now = Instant::now();
        self.stages.push((name.to_string(), (now - *since).as_secs_f64()));
        *since = now;
    }

    pub fn total(&self) -> f64 {
        self.stages.iter().map(|s| s.1).sum()
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub disparity: DisparityMap,
    pub sharpened: DisparityMap,
    pub ldi: Ldi,
    pub camera: Camera,
    pub mesh: TexturedMesh,
    pub report: BuildReport,
    pub run: RunReport,
    pub timings: Timings,
}

pub fn make_backend(cfg: &PipelineConfig, run_dir: &Path) -> Box<dyn Backend> {
    match cfg.backend.kind {
        BackendKind::Diffusion => Box::new(DiffusionBackend::new(cfg.backend.diffusion)),
        BackendKind::External => {
            let dir = cfg
                .backend
                .work_dir
                .clone()
                .unwrap_or_else(|| run_dir.join("exchange"));
            Box::new(ExternalBackend::new(cfg.backend.command.clone(), dir))
        }
    }
}

pub fn input_camera(cfg: &PipelineConfig, width: usize, height: usize) -> Result<Camera> {
    match cfg.camera {
        Some(k) => Camera::new(k, nalgebra::Isometry3::identity()),
        None => Ok(Camera::default_for(width, height)),
    }
}

/// Normalize, sharpen, detect, lift, inpaint all layers, mesh.
pub fn build_photo(
    color: &Grid<[u8; 3]>,
    raw_depth: &Grid<f32>,
    cfg: &PipelineConfig,
    backend: &dyn Backend,
) -> Result<BuildOutput> {
    cfg.validate()?;
    if (color.width, color.height) != (raw_depth.width, raw_depth.height) {
        return Err(Error::input(format!(
            "color is {}x{} but depth is {}x{}",
            color.width, color.height, raw_depth.width, raw_depth.height
        )));
    }
    let (w, h) = (color.width, color.height);
    let mut timings = Timings::default();
    let mut t = Instant::now();

    let disparity = normalize_disparity(raw_depth, cfg.depth_mode)?;
    let sharpened = bilateral_median_filter(&disparity, cfg.filter)?;
    timings.lap("preprocess", &mut t);

    let disc = detect_discontinuities(&sharpened, cfg.threshold)?;
    let mut ldi = Ldi::lift_image(color, &sharpened)?;
    let min_len = if cfg.scale_min_edge_length {
        scaled_length(cfg.min_edge_length, w, h)
    } else {
        cfg.min_edge_length
    };
    let edges = link_depth_edges(&disc, &ldi, min_len)?;
    let edge_count = edges.len();
    timings.lap("edges", &mut t);

    let run = run_pipeline(&mut ldi, edges, backend, &cfg.pipeline_options())?;
    timings.lap("inpaint", &mut t);

    let camera = input_camera(cfg, w, h)?;
    let mesh = ldi_to_mesh(&ldi, &camera, cfg.depth_model);
    timings.lap("mesh", &mut t);

    let report = BuildReport {
        width: w,
        height: h,
        discontinuity_sites: disc.site_count(),
        edges: edge_count,
        levels: run.levels,
        edges_per_level: run.edges_per_level.clone(),
        edges_processed: run.edges_processed,
        synthesized_pixels: run.synthesized_pixels,
        ldi_pixels: ldi.len(),
        max_layers: ldi.max_layers(),
        vertices: mesh.vertex_count(),
        triangles: mesh.triangle_count(),
        depth_cap_hit: run.depth_cap_hit,
        warnings: run.warnings.clone(),
    };
    Ok(BuildOutput {
        disparity,
        sharpened,
        ldi,
        camera,
        mesh,
        report,
        run,
        timings,
    })
}
