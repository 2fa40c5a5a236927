//! LDI to triangle mesh.

use std::collections::HashMap;

use crate::camera::{Camera, DepthModel};
use crate::error::{Error, Result};
use crate::geom::Dir;
use crate::ldi::{Ldi, PixelId};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TexturedMesh {
    pub positions: Vec<[f32; 3]>,
    pub colors: Vec<[u8; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

/// Twice the squared-area threshold below which a triangle counts as degenerate.
const MIN_AREA: f64 = 1e-12;

impl TexturedMesh {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.colors.len() {
            return Err(Error::input(format!(
                "{} positions but {} colors",
                self.positions.len(),
                self.colors.len()
            )));
        }
        if self.positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("mesh has non-finite vertex positions"));
        }
        let n = self.positions.len() as u32;
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::input(format!("triangle {t:?} indexes past {n} vertices")));
        }
        Ok(())
    }

    pub fn triangle_area(&self, t: [u32; 3]) -> f64 {
        let p = |i: u32| self.positions[i as usize].map(f64::from);
        let (a, b, c) = (p(t[0]), p(t[1]), p(t[2]));
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let cr = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        0.5 * (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt()
    }
}

/// One vertex per live pixel (in id order), two triangles per 2x2 cell whose
/// four pixels are mutually linked, split along the top-left to bottom-right
/// diagonal.
pub fn ldi_to_mesh(ldi: &Ldi, camera: &Camera, model: DepthModel) -> TexturedMesh {
    let mut mesh = TexturedMesh::default();
    let mut vertex: HashMap<PixelId, u32> = HashMap::with_capacity(ldi.len());
    for (id, p) in ldi.iter() {
        let z = model.depth(p.disparity);
        let w = camera.unproject(p.pos.x as f64 + 0.5, p.pos.y as f64 + 0.5, z);
        vertex.insert(id, mesh.positions.len() as u32);
        mesh.positions.push([w.x as f32, w.y as f32, w.z as f32]);
        mesh.colors.push(p.color);
    }
    for (tl, p) in ldi.iter() {
        let Some(tr) = p.link(Dir::Right) else { continue };
        let Some(bl) = p.link(Dir::Down) else { continue };
        let br_a = ldi.pixel(tr).and_then(|q| q.link(Dir::Down));
        let br_b = ldi.pixel(bl).and_then(|q| q.link(Dir::Right));
        let (Some(br), Some(br2)) = (br_a, br_b) else { continue };
        if br != br2 {
            continue;
        }
        let [a, b, c, d] = [tl, tr, br, bl].map(|id| vertex[&id]);
        for t in [[a, b, c], [a, c, d]] {
            if mesh.triangle_area(t) > MIN_AREA {
                mesh.triangles.push(t);
            }
        }
    }
    mesh
}
