//! Staged inpainting: structure (depth edges) first, then color and depth
//! conditioned on the inpainted edges.
//!
//! A [`Backend`] supplies the three stages. The built-in [`DiffusionBackend`]
//! extends context edges by straight continuation and fills color/depth by
//! solving a Laplace problem; [`ExternalBackend`] exchanges PFM planes with
//! a subprocess so trained models can be plugged in.

mod diffusion;
mod edges;
mod external;
mod pipeline;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use diffusion::{diffusion_inpaint, DiffusionBackend, DiffusionOutcome, DiffusionParams, Plane};
pub use edges::continue_edges;
pub use external::{read_result_plane, write_request, ExternalBackend, RequestSidecar};
pub use pipeline::{run_pipeline, PipelineOptions, RunReport};

use crate::error::{Error, Result};
use crate::ldi::SynthValue;
use crate::regions::{Cell, Patch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Edge,
    Color,
    Depth,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Edge => "edge",
            Stage::Color => "color",
            Stage::Depth => "depth",
        })
    }
}

/// Everything a backend may look at for one region.
///
/// All planes are row-major over the patch rectangle. Synthesis cells are
/// zeroed in `color`, `disparity` and `edges`; excluded cells must never be
/// read.
#[derive(Debug, Clone, PartialEq)]
pub struct InpaintRequest {
    /// Lattice position of the patch's top-left cell.
    pub origin: (i32, i32),
    pub width: usize,
    pub height: usize,
    /// Context color in `[0, 1]`.
    pub color: Vec<[f32; 3]>,
    pub disparity: Vec<f32>,
    /// Context edge map: per-cell mask of directions toward the nearer side.
    pub edges: Vec<u8>,
    pub synthesis: Vec<bool>,
    pub excluded: Vec<bool>,
    /// Flood-fill seeds on synthesis cells, zero elsewhere.
    pub seed_color: Vec<[f32; 3]>,
    pub seed_disparity: Vec<f32>,
}

impl InpaintRequest {
    pub fn from_patch(patch: &Patch, seeds: &[([u8; 3], f32)]) -> Self {
        let n = patch.area();
        let mut seed_color = vec![[0.0; 3]; n];
        let mut seed_disparity = vec![0.0; n];
        for (i, cell) in patch.cells.iter().enumerate() {
            if let Cell::Slot(k) = cell {
                seed_color[i] = seeds[*k].0.map(|c| c as f32 / 255.0);
                seed_disparity[i] = seeds[*k].1;
            }
        }
        InpaintRequest {
            origin: (patch.x0, patch.y0),
            width: patch.width,
            height: patch.height,
            color: patch.color.clone(),
            disparity: patch.disparity.clone(),
            edges: patch.edges.clone(),
            synthesis: patch.synthesis_mask(),
            excluded: patch.excluded_mask(),
            seed_color,
            seed_disparity,
        }
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn synthesis_count(&self) -> usize {
        self.synthesis.iter().filter(|s| **s).count()
    }

    fn check(&self) -> Result<()> {
        let n = self.area();
        let lens = [
            self.color.len(),
            self.disparity.len(),
            self.edges.len(),
            self.synthesis.len(),
            self.excluded.len(),
            self.seed_color.len(),
            self.seed_disparity.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::input("inpaint request planes differ in size"));
        }
        if self.synthesis.iter().zip(&self.excluded).any(|(s, e)| *s && *e) {
            return Err(Error::input("a cell is both synthesis and excluded"));
        }
        Ok(())
    }
}

/// Inpainted planes, defined on synthesis cells and zero elsewhere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InpaintResult {
    pub edges: Vec<u8>,
    pub color: Vec<[f32; 3]>,
    pub disparity: Vec<f32>,
}

impl InpaintResult {
    /// Read back per-slot values in `RegionPair::synthesis` order.
    pub fn slot_values(&self, patch: &Patch, slots: usize) -> (Vec<SynthValue>, Vec<u8>) {
        let mut values = vec![
            SynthValue {
                color: [0; 3],
                disparity: 0.0
            };
            slots
        ];
        let mut bits = vec![0u8; slots];
        for (i, cell) in patch.cells.iter().enumerate() {
            if let Cell::Slot(k) = cell {
                values[*k] = SynthValue {
                    color: self.color[i].map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8),
                    disparity: self.disparity[i],
                };
                bits[*k] = self.edges[i];
            }
        }
        (values, bits)
    }
}

/// The three inpainting stages. Implementations must only read context
/// cells, synthesis-cell seeds and earlier-stage outputs.
pub trait Backend: Send + Sync {
    fn inpaint_edges(&self, req: &InpaintRequest) -> std::result::Result<Vec<u8>, String>;

    fn inpaint_color(
        &self,
        req: &InpaintRequest,
        edges: &[u8],
    ) -> std::result::Result<Vec<[f32; 3]>, String>;

    fn inpaint_depth(
        &self,
        req: &InpaintRequest,
        edges: &[u8],
    ) -> std::result::Result<Vec<f32>, String>;
}

/// Run edge, then color, then depth. Color and depth both see the inpainted
/// edges but not each other's output. An empty synthesis mask never reaches
/// the backend.
pub fn inpaint_stage_order(req: &InpaintRequest, backend: &dyn Backend) -> Result<InpaintResult> {
    req.check()?;
    let n = req.area();
    if req.synthesis_count() == 0 {
        return Ok(InpaintResult {
            edges: vec![0; n],
            color: vec![[0.0; 3]; n],
            disparity: vec![0.0; n],
        });
    }
    let fail = |stage: Stage| move |message: String| Error::Backend { stage, message };
    let size_err = |stage: Stage, got: usize| Error::Backend {
        stage,
        message: format!("returned {got} cells, expected {n}"),
    };

    let mut edges = backend.inpaint_edges(req).map_err(fail(Stage::Edge))?;
    if edges.len() != n {
        return Err(size_err(Stage::Edge, edges.len()));
    }
    for (e, s) in edges.iter_mut().zip(&req.synthesis) {
        if !*s {
            *e = 0;
        }
    }

    let mut color = backend
        .inpaint_color(req, &edges)
        .map_err(fail(Stage::Color))?;
    if color.len() != n {
        return Err(size_err(Stage::Color, color.len()));
    }
    let mut disparity = backend
        .inpaint_depth(req, &edges)
        .map_err(fail(Stage::Depth))?;
    if disparity.len() != n {
        return Err(size_err(Stage::Depth, disparity.len()));
    }

    for i in 0..n {
        if !req.synthesis[i] {
            color[i] = [0.0; 3];
            disparity[i] = 0.0;
            continue;
        }
        if color[i].iter().any(|c| !c.is_finite() || *c < -1e-4 || *c > 1.0 + 1e-4) {
            return Err(Error::Backend {
                stage: Stage::Color,
                message: format!("color {:?} out of range", color[i]),
            });
        }
        let d = disparity[i];
        if !d.is_finite() || !(-1e-4..=1.0 + 1e-4).contains(&d) {
            return Err(Error::Backend {
                stage: Stage::Depth,
                message: format!("disparity {d} out of range"),
            });
        }
        color[i] = color[i].map(|c| c.clamp(0.0, 1.0));
        disparity[i] = d.clamp(0.0, 1.0);
    }
    Ok(InpaintResult {
        edges,
        color,
        disparity,
    })
}
