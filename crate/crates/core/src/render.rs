//! Software rasterizer, naive forward warp and camera trajectories.

use nalgebra::{Isometry3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{Camera, DepthModel, Intrinsics, Pose};
use crate::error::{Error, Result};
use crate::geom::Grid;
use crate::mesh::TexturedMesh;
use crate::preprocess::DisparityMap;

/// Geometry closer than this to the camera plane is clipped.
const NEAR: f64 = 1e-6;
/// Rows per rasterization band.
const BAND: usize = 16;
/// Barycentric slack so pixel centers on a shared edge count as inside.
const INSIDE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub color: Grid<[u8; 3]>,
    /// Camera-space depth; `f32::INFINITY` where nothing was drawn.
    pub depth: Grid<f32>,
    pub coverage: Grid<bool>,
}

impl RenderOutput {
    fn empty(width: usize, height: usize) -> Self {
        RenderOutput {
            color: Grid::new(width, height, [0, 0, 0]),
            depth: Grid::new(width, height, f32::INFINITY),
            coverage: Grid::new(width, height, false),
        }
    }

    pub fn hole_count(&self) -> usize {
        self.coverage.data.iter().filter(|c| !**c).count()
    }

    /// Holes inside the window that leaves out `margin` pixels on each side.
    pub fn holes_within(&self, margin: usize) -> usize {
        count_holes(&self.coverage, margin)
    }
}

pub fn count_holes(coverage: &Grid<bool>, margin: usize) -> usize {
    let (w, h) = (coverage.width, coverage.height);
    if 2 * margin >= w || 2 * margin >= h {
        return 0;
    }
    (margin..h - margin)
        .map(|y| (margin..w - margin).filter(|&x| !*coverage.get(x, y)).count())
        .sum()
}

struct Projected {
    u: f64,
    v: f64,
    inv_z: f64,
}

/// Z-buffered rasterization with perspective-correct color interpolation.
/// Pixel centers are sampled; ties in depth keep the earlier triangle.
pub fn render_view(mesh: &TexturedMesh, camera: &Camera, width: usize, height: usize) -> RenderOutput {
    let mut out = RenderOutput::empty(width, height);
    if width == 0 || height == 0 || mesh.triangles.is_empty() {
        return out;
    }
    let verts: Vec<Option<Projected>> = mesh
        .positions
        .iter()
        .map(|p| {
            let c = camera.to_camera(&Point3::new(p[0] as f64, p[1] as f64, p[2] as f64));
            (c.z > NEAR).then(|| Projected {
                u: camera.fx * c.x / c.z + camera.cx,
                v: camera.fy * c.y / c.z + camera.cy,
                inv_z: 1.0 / c.z,
            })
        })
        .collect();
    let colors: Vec<[f64; 3]> = mesh.colors.iter().map(|c| c.map(f64::from)).collect();

    // (triangle index, min row, max row) of every drawable triangle
    let spans: Vec<(usize, usize, usize)> = mesh
        .triangles
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let [a, b, c] = t.map(|k| verts[k as usize].as_ref());
            let (a, b, c) = (a?, b?, c?);
            let lo = a.v.min(b.v).min(c.v);
            let hi = a.v.max(b.v).max(c.v);
            if hi < 0.0 || lo > height as f64 {
                return None;
            }
            let y0 = (lo - 0.5).ceil().max(0.0) as usize;
            let y1 = ((hi - 0.5).floor().min(height as f64 - 1.0)).max(-1.0);
            (y1 >= y0 as f64).then_some((i, y0, y1 as usize))
        })
        .collect();

    let rows_per_band = BAND * width;
    out.color
        .data
        .par_chunks_mut(rows_per_band)
        .zip(out.depth.data.par_chunks_mut(rows_per_band))
        .zip(out.coverage.data.par_chunks_mut(rows_per_band))
        .enumerate()
        .for_each(|(band, ((color, depth), cover))| {
            let band_y0 = band * BAND;
            let band_y1 = band_y0 + color.len() / width;
            for &(ti, y0, y1) in &spans {
                if y1 < band_y0 || y0 >= band_y1 {
                    continue;
                }
                let t = mesh.triangles[ti];
                let [a, b, c] = t.map(|k| verts[k as usize].as_ref().unwrap());
                let area = (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u);
                if area == 0.0 {
                    continue;
                }
                let umin = a.u.min(b.u).min(c.u);
                let umax = a.u.max(b.u).max(c.u);
                let x0 = (umin - 0.5).ceil().max(0.0) as usize;
                let x1f = (umax - 0.5).floor().min(width as f64 - 1.0);
                if x1f < x0 as f64 {
                    continue;
                }
                let x1 = x1f as usize;
                for y in y0.max(band_y0)..=y1.min(band_y1 - 1) {
                    let py = y as f64 + 0.5;
                    for x in x0..=x1 {
                        let px = x as f64 + 0.5;
                        let w0 = ((b.u - px) * (c.v - py) - (b.v - py) * (c.u - px)) / area;
                        let w1 = ((c.u - px) * (a.v - py) - (c.v - py) * (a.u - px)) / area;
                        let w2 = 1.0 - w0 - w1;
                        if w0 < -INSIDE_EPS || w1 < -INSIDE_EPS || w2 < -INSIDE_EPS {
                            continue;
                        }
                        let inv_z = w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z;
                        let z = (1.0 / inv_z) as f32;
                        let i = (y - band_y0) * width + x;
                        if !(z < depth[i]) {
                            continue;
                        }
                        let (ca, cb, cc) = (
                            colors[t[0] as usize],
                            colors[t[1] as usize],
                            colors[t[2] as usize],
                        );
                        let mut rgb = [0u8; 3];
                        for k in 0..3 {
                            let v = (w0 * a.inv_z * ca[k] + w1 * b.inv_z * cb[k] + w2 * c.inv_z * cc[k])
                                / inv_z;
                            rgb[k] = v.round().clamp(0.0, 255.0) as u8;
                        }
                        depth[i] = z;
                        color[i] = rgb;
                        cover[i] = true;
                    }
                }
            }
        });
    out
}

/// Forward point splat: every source pixel lands on the destination pixel
/// containing its projected center; nearer points win.
pub fn naive_warp(
    color: &Grid<[u8; 3]>,
    disparity: &DisparityMap,
    model: DepthModel,
    src: &Camera,
    dst: &Camera,
) -> Result<RenderOutput> {
    let (w, h) = (color.width, color.height);
    if disparity.width() != w || disparity.height() != h {
        return Err(Error::input(format!(
            "color is {w}x{h} but disparity is {}x{}",
            disparity.width(),
            disparity.height()
        )));
    }
    let mut out = RenderOutput::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            let z = model.depth(disparity.get(x, y));
            let world = src.unproject(x as f64 + 0.5, y as f64 + 0.5, z);
            let (u, v, zc) = dst.project(&world);
            if zc <= NEAR || !u.is_finite() || !v.is_finite() {
                continue;
            }
            let (tx, ty) = (u.floor(), v.floor());
            if tx < 0.0 || ty < 0.0 || tx >= w as f64 || ty >= h as f64 {
                continue;
            }
            let i = out.depth.idx(tx as usize, ty as usize);
            let zc = zc as f32;
            if zc < out.depth.data[i] {
                out.depth.data[i] = zc;
                out.color.data[i] = *color.get(x, y);
                out.coverage.data[i] = true;
            }
        }
    }
    Ok(out)
}

/// Camera path, relative to the reference camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CameraPath {
    /// Sideways motion along x from `-amplitude` to `+amplitude`.
    Lateral { amplitude: f64 },
    /// Motion along the optical axis from `start` to `end`.
    Dolly { start: f64, end: f64 },
    /// Circle of `radius` in the image plane, looking at the point on the
    /// optical axis at `focus_depth`.
    Orbit { radius: f64, focus_depth: f64 },
    /// Explicit poses; the frame count must match.
    Poses { poses: Vec<Pose> },
}

/// Trajectory file.
///
/// ```json
/// { "frames": 30, "path": { "kind": "orbit", "radius": 0.05, "focus_depth": 2.0 } }
/// ```
///
/// `width`, `height` and `intrinsics` are optional and default to the
/// source image size and its default intrinsics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub frames: usize,
    pub path: CameraPath,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<Intrinsics>,
}

impl Trajectory {
    pub fn from_json(text: &str) -> Result<Trajectory> {
        let t: Trajectory = serde_json::from_str(text)
            .map_err(|e| Error::input(format!("trajectory: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::input(format!("trajectory {what} must be finite")))
            }
        };
        match &self.path {
            CameraPath::Lateral { amplitude } => finite(*amplitude, "amplitude"),
            CameraPath::Dolly { start, end } => {
                finite(*start, "start")?;
                finite(*end, "end")
            }
            CameraPath::Orbit {
                radius,
                focus_depth,
            } => {
                finite(*radius, "radius")?;
                if !(*focus_depth > 0.0 && focus_depth.is_finite()) {
                    return Err(Error::input("orbit focus_depth must be positive"));
                }
                Ok(())
            }
            CameraPath::Poses { poses } => {
                if poses.len() != self.frames {
                    return Err(Error::input(format!(
                        "trajectory lists {} poses for {} frames",
                        poses.len(),
                        self.frames
                    )));
                }
                poses.iter().try_for_each(|p| p.to_isometry().map(|_| ()))
            }
        }
    }

    /// Relative pose (reference camera <- frame camera) of every frame.
    pub fn relative_poses(&self) -> Result<Vec<Isometry3<f64>>> {
        self.validate()?;
        let n = self.frames;
        let s = |i: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        let shift = |x: f64, y: f64, z: f64| Isometry3::from_parts(Translation3::new(x, y, z), UnitQuaternion::identity());
        let poses = match &self.path {
            CameraPath::Lateral { amplitude } => (0..n)
                .map(|i| shift(amplitude * (2.0 * s(i) - 1.0), 0.0, 0.0))
                .collect(),
            CameraPath::Dolly { start, end } => {
                (0..n).map(|i| shift(0.0, 0.0, start + (end - start) * s(i))).collect()
            }
            CameraPath::Orbit {
                radius,
                focus_depth,
            } => (0..n)
                .map(|i| {
                    let theta = std::f64::consts::TAU * i as f64 / n as f64;
                    let eye = Vector3::new(radius * theta.cos(), radius * theta.sin(), 0.0);
                    let forward = Vector3::new(0.0, 0.0, *focus_depth) - eye;
                    let r = Rotation3::face_towards(&forward, &Vector3::y());
                    Isometry3::from_parts(Translation3::from(eye), UnitQuaternion::from_rotation_matrix(&r))
                })
                .collect(),
            CameraPath::Poses { poses } => poses
                .iter()
                .map(|p| p.to_isometry())
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(poses)
    }
}

/// Render every frame of a trajectory around the reference camera.
pub fn render_trajectory(
    mesh: &TexturedMesh,
    reference: &Camera,
    width: usize,
    height: usize,
    trajectory: &Trajectory,
) -> Result<Vec<RenderOutput>> {
    let base = match trajectory.intrinsics {
        Some(k) => Camera::new(k, reference.pose)?,
        None => *reference,
    };
    let w = trajectory.width.unwrap_or(width);
    let h = trajectory.height.unwrap_or(height);
    trajectory
        .relative_poses()?
        .into_iter()
        .map(|rel| Ok(render_view(mesh, &base.with_pose(base.pose * rel), w, h)))
        .collect()
}
