//! Layered depth images and novel views from a single RGB-D photo.
//!
//! An RGB-D image is lifted onto a layered depth image (LDI) whose pixels carry
//! explicit 4-neighbor links. Depth discontinuities are detected, linked into
//! edges, and cut one at a time; each cut spawns a context region (known pixels
//! on the far side) and a synthesis region (new pixels behind the near side)
//! that an inpainting backend fills. Synthesized pixels are merged back, and
//! any depth edges they introduce are processed in turn. The finished LDI is
//! converted into a vertex-colored triangle mesh and rendered from novel
//! viewpoints with a software rasterizer.
//!
//! Modules:
//!
//! - [`ldi`]: the lattice, its link invariants, cut/undo/merge and the binary container.
//! - [`preprocess`]: disparity normalization, bilateral median sharpening,
//!   discontinuity detection and edge linking.
//! - [`regions`]: context/synthesis flood fill and flattening into image patches.
//! - [`inpaint`]: the staged backend contract, the diffusion backend and the
//!   multi-level driver.
//! - [`mesh`], [`camera`], [`render`], [`export`]: mesh construction, rasterization,
//!   naive forward warping, trajectories, glTF/OBJ output.
//! - [`metrics`]: reconstruction/perceptual/style/TV losses, PSNR and SSIM.

pub mod camera;
pub mod config;
pub mod error;
pub mod export;
pub mod geom;
pub mod image_io;
pub mod inpaint;
pub mod ldi;
pub mod mesh;
pub mod metrics;
pub mod photo;
pub mod preprocess;
pub mod regions;
pub mod render;
pub mod scenes;

pub use camera::Camera;
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use geom::{Dir, Pos};
pub use ldi::{Ldi, LdiPixel, PixelId, SilhouettePair};
pub use mesh::TexturedMesh;
pub use preprocess::{DepthEdge, DisparityMap};
pub use regions::RegionPair;
