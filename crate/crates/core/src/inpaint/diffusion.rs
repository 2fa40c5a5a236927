//! Isotropic diffusion (discrete Laplace) inpainting.

use serde::{Deserialize, Serialize};

use super::{continue_edges, Backend, InpaintRequest};
use crate::geom::Dir;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    /// Converged once the largest update in a sweep falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        DiffusionParams {
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

/// One scalar plane of a patch together with its masks.
#[derive(Debug, Clone, Copy)]
pub struct Plane<'a> {
    pub width: usize,
    pub height: usize,
    /// Boundary values on context cells; other cells are ignored.
    pub values: &'a [f32],
    /// Cells to solve for.
    pub mask: &'a [bool],
    /// Cells that may not be read at all.
    pub excluded: &'a [bool],
    /// Per-cell direction mask; a set bit blocks the stencil toward that side.
    pub barriers: &'a [u8],
    /// Fallback values for masked cells with no route to the boundary.
    pub seeds: &'a [f32],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOutcome {
    /// Solved values on masked cells, input values elsewhere.
    pub values: Vec<f32>,
    pub iterations: usize,
    pub converged: bool,
    /// Masked cells that fell back to their seed.
    pub seeded: usize,
}

fn neighbor(width: usize, height: usize, i: usize, d: Dir) -> Option<usize> {
    let (x, y) = (i % width, i / width);
    match d {
        Dir::Left => (x > 0).then(|| i - 1),
        Dir::Right => (x + 1 < width).then(|| i + 1),
        Dir::Up => (y > 0).then(|| i - width),
        Dir::Down => (y + 1 < height).then(|| i + width),
    }
}

fn blocked(barriers: &[u8], i: usize, j: usize, d: Dir) -> bool {
    barriers[i] & d.bit() != 0 || barriers[j] & d.opposite().bit() != 0
}

/// Solve the 4-neighbor discrete Laplace equation on the masked cells with
/// context cells as fixed boundary values.
///
/// Stencil neighbors across a barrier or on excluded cells are dropped.
/// Masked cells whose connected component never touches the boundary keep
/// their seed value. Sweeps are red-black Gauss-Seidel with successive
/// over-relaxation.
pub fn diffusion_inpaint(plane: Plane<'_>, params: DiffusionParams) -> DiffusionOutcome {
    let Plane {
        width,
        height,
        values,
        mask,
        excluded,
        barriers,
        seeds,
    } = plane;
    let n = width * height;
    let mut out: Vec<f64> = values.iter().map(|v| *v as f64).collect();

    // slot index per masked cell
    let mut slot_of = vec![usize::MAX; n];
    let cells: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    for (k, &i) in cells.iter().enumerate() {
        slot_of[i] = k;
    }
    struct Node {
        fixed_sum: f64,
        count: usize,
        free: Vec<usize>,
    }
    let mut nodes: Vec<Node> = Vec::with_capacity(cells.len());
    for &i in &cells {
        let mut node = Node {
            fixed_sum: 0.0,
            count: 0,
            free: Vec::with_capacity(4),
        };
        for d in Dir::ALL {
            let Some(j) = neighbor(width, height, i, d) else {
                continue;
            };
            if excluded[j] || blocked(barriers, i, j, d) {
                continue;
            }
            node.count += 1;
            if mask[j] {
                node.free.push(slot_of[j]);
            } else {
                node.fixed_sum += values[j] as f64;
            }
        }
        nodes.push(node);
    }

    // components that never reach a fixed value keep their seeds
    let mut anchored = vec![false; cells.len()];
    let mut stack: Vec<usize> = (0..cells.len())
        .filter(|&k| nodes[k].count > nodes[k].free.len())
        .collect();
    for &k in &stack {
        anchored[k] = true;
    }
    while let Some(k) = stack.pop() {
        for &m in &nodes[k].free {
            if !anchored[m] {
                anchored[m] = true;
                stack.push(m);
            }
        }
    }
    let mut seeded = 0;
    for (k, &i) in cells.iter().enumerate() {
        out[i] = seeds[i] as f64;
        if !anchored[k] {
            seeded += 1;
        }
    }

    let mut vals: Vec<f64> = cells.iter().map(|&i| out[i]).collect();
    let red: Vec<usize> = (0..cells.len())
        .filter(|&k| anchored[k] && (cells[k] % width + cells[k] / width) % 2 == 0)
        .collect();
    let black: Vec<usize> = (0..cells.len())
        .filter(|&k| anchored[k] && (cells[k] % width + cells[k] / width) % 2 == 1)
        .collect();
    let span = width.max(height).max(2) as f64;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / span).sin());

    let mut iterations = 0;
    let mut converged = red.is_empty() && black.is_empty();
    while !converged && iterations < params.max_iter {
        iterations += 1;
        let mut max_update: f64 = 0.0;
        for set in [&red, &black] {
            for &k in set.iter() {
                let node = &nodes[k];
                let sum = node.fixed_sum + node.free.iter().map(|&m| vals[m]).sum::<f64>();
                let target = sum / node.count as f64;
                let delta = omega * (target - vals[k]);
                vals[k] += delta;
                max_update = max_update.max(delta.abs());
            }
        }
        converged = max_update < params.tol;
    }

    for (k, &i) in cells.iter().enumerate() {
        out[i] = vals[k];
    }
    DiffusionOutcome {
        values: out.into_iter().map(|v| v as f32).collect(),
        iterations,
        converged,
        seeded,
    }
}

/// Built-in baseline: straight edge continuation plus Laplace color/depth.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiffusionBackend {
    pub params: DiffusionParams,
}

impl DiffusionBackend {
    pub fn new(params: DiffusionParams) -> Self {
        DiffusionBackend { params }
    }

    fn barriers(req: &InpaintRequest, edges: &[u8]) -> Vec<u8> {
        (0..req.area())
            .map(|i| {
                if req.synthesis[i] {
                    edges[i]
                } else if req.excluded[i] {
                    0
                } else {
                    req.edges[i]
                }
            })
            .collect()
    }

    fn solve(&self, req: &InpaintRequest, barriers: &[u8], values: &[f32], seeds: &[f32]) -> Vec<f32> {
        diffusion_inpaint(
            Plane {
                width: req.width,
                height: req.height,
                values,
                mask: &req.synthesis,
                excluded: &req.excluded,
                barriers,
                seeds,
            },
            self.params,
        )
        .values
    }
}

impl Backend for DiffusionBackend {
    fn inpaint_edges(&self, req: &InpaintRequest) -> Result<Vec<u8>, String> {
        Ok(continue_edges(
            &req.edges,
            &req.synthesis,
            &req.excluded,
            req.width,
            req.height,
        ))
    }

    fn inpaint_color(&self, req: &InpaintRequest, edges: &[u8]) -> Result<Vec<[f32; 3]>, String> {
        let barriers = Self::barriers(req, edges);
        let mut out = vec![[0.0f32; 3]; req.area()];
        for c in 0..3 {
            let values: Vec<f32> = req.color.iter().map(|v| v[c]).collect();
            let seeds: Vec<f32> = req.seed_color.iter().map(|v| v[c]).collect();
            for (o, v) in out.iter_mut().zip(self.solve(req, &barriers, &values, &seeds)) {
                o[c] = v;
            }
        }
        Ok(out)
    }

    fn inpaint_depth(&self, req: &InpaintRequest, edges: &[u8]) -> Result<Vec<f32>, String> {
        let barriers = Self::barriers(req, edges);
        Ok(self.solve(req, &barriers, &req.disparity, &req.seed_disparity))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_1d(values: &[f32], mask: &[bool], barriers: &[u8]) -> DiffusionOutcome {
        let n = values.len();
        diffusion_inpaint(
            Plane {
                width: n,
                height: 1,
                values,
                mask,
                excluded: &vec![false; n],
                barriers,
                seeds: &vec![0.9; n],
            },
            DiffusionParams::default(),
        )
    }

    #[test]
    fn constant_boundary() {
        let mut values = vec![0.0; 25];
        let mut mask = vec![false; 25];
        for y in 0..5 {
            for x in 0..5 {
                if (1..4).contains(&x) && (1..4).contains(&y) {
                    mask[y * 5 + x] = true;
                } else {
                    values[y * 5 + x] = 0.42;
                }
            }
        }
        let out = diffusion_inpaint(
            Plane {
                width: 5,
                height: 5,
                values: &values,
                mask: &mask,
                excluded: &[false; 25],
                barriers: &[0; 25],
                seeds: &[0.0; 25],
            },
            DiffusionParams::default(),
        );
        assert!(out.converged);
        for (v, m) in out.values.iter().zip(&mask) {
            if *m {
                assert!((v - 0.42).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn strip_between_zero_and_one() {
        let out = solve_1d(
            &[0.0, 0.0, 0.0, 0.0, 1.0],
            &[false, true, true, true, false],
            &[0; 5],
        );
        for (got, want) in out.values[1..4].iter().zip([0.25, 0.5, 0.75]) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn barrier_splits_the_strip() {
        // 0 | s s || s s | 1 with a barrier between cells 2 and 3
        let mut barriers = [0u8; 6];
        barriers[2] = Dir::Right.bit();
        let out = solve_1d(
            &[0.2, 0.0, 0.0, 0.0, 0.0, 0.8],
            &[false, true, true, true, true, false],
            &barriers,
        );
        for v in &out.values[1..3] {
            assert!((v - 0.2).abs() < 1e-6);
        }
        for v in &out.values[3..5] {
            assert!((v - 0.8).abs() < 1e-6);
        }
    }

    #[test]
    fn isolated_cell_keeps_seed() {
        let out = solve_1d(&[0.0, 0.0, 0.0], &[false, true, false], &[0, 0b11, 0]);
        assert_eq!(out.seeded, 1);
        assert!((out.values[1] - 0.9).abs() < 1e-7);
    }

    #[test]
    fn excluded_cells_are_not_boundary() {
        let mut excluded = vec![false; 4];
        excluded[3] = true;
        let out = diffusion_inpaint(
            Plane {
                width: 4,
                height: 1,
                values: &[0.3, 0.0, 0.0, 1.0],
                mask: &[false, true, true, false],
                excluded: &excluded,
                barriers: &[0; 4],
                seeds: &[0.0; 4],
            },
            DiffusionParams::default(),
        );
        assert!((out.values[1] - 0.3).abs() < 1e-6);
        assert!((out.values[2] - 0.3).abs() < 1e-6);
    }
}
