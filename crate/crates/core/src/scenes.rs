//! Synthetic RGB-D scenes with known geometry, and closed-form hole counts
//! for the naive forward warp.

use rand::Rng;

use crate::camera::DepthModel;
use crate::geom::Grid;

/// Scene given as raw disparity (use `DepthMode::Disparity`).
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub color: Grid<[u8; 3]>,
    pub disparity: Grid<f32>,
}

/// Axis-aligned rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

fn background_color(x: usize, y: usize) -> [u8; 3] {
    [(40 + (x * 3) % 160) as u8, (60 + (y * 5) % 140) as u8, 150]
}

fn mid_color(x: usize, y: usize) -> [u8; 3] {
    [90, (120 + (x + y) % 40) as u8, 60]
}

fn near_color(x: usize, y: usize) -> [u8; 3] {
    [(200 + (x % 4) * 10) as u8, 50, (40 + (y % 4) * 10) as u8]
}

impl Scene {
    /// Far background at disparity 0 with a near square at disparity 1.
    pub fn two_layer(width: usize, height: usize, square: Rect) -> Scene {
        let mut color = Grid::new(width, height, [0, 0, 0]);
        let mut disparity = Grid::new(width, height, 0.0f32);
        for y in 0..height {
            for x in 0..width {
                let near = square.contains(x, y);
                *color.get_mut(x, y) = if near { near_color(x, y) } else { background_color(x, y) };
                *disparity.get_mut(x, y) = if near { 1.0 } else { 0.0 };
            }
        }
        Scene { color, disparity }
    }

    /// Background at 0, a band at 0.5 covering rows `[0, band_rows)`, and a
    /// near square at 1 straddling the band's lower boundary.
    pub fn nested(width: usize, height: usize, band_rows: usize, square: Rect) -> Scene {
        let mut color = Grid::new(width, height, [0, 0, 0]);
        let mut disparity = Grid::new(width, height, 0.0f32);
        for y in 0..height {
            for x in 0..width {
                let (c, d) = if square.contains(x, y) {
                    (near_color(x, y), 1.0)
                } else if y < band_rows {
                    (mid_color(x, y), 0.5)
                } else {
                    (background_color(x, y), 0.0)
                };
                *color.get_mut(x, y) = c;
                *disparity.get_mut(x, y) = d;
            }
        }
        Scene { color, disparity }
    }

    /// Stack of random rectangles with random disparities on a random
    /// background level.
    pub fn random<R: Rng>(rng: &mut R, width: usize, height: usize, max_rects: usize) -> Scene {
        let mut color = Grid::new(width, height, [0, 0, 0]);
        let base: f32 = rng.gen_range(0.0..0.3);
        let mut disparity = Grid::new(width, height, base);
        for y in 0..height {
            for x in 0..width {
                *color.get_mut(x, y) = background_color(x, y);
            }
        }
        let n = rng.gen_range(1..=max_rects.max(1));
        for _ in 0..n {
            let x0 = rng.gen_range(0..width);
            let y0 = rng.gen_range(0..height);
            let x1 = rng.gen_range(x0 + 1..=width);
            let y1 = rng.gen_range(y0 + 1..=height);
            let d: f32 = rng.gen_range(0.0..=1.0);
            let tint: [u8; 3] = [rng.gen(), rng.gen(), rng.gen()];
            for y in y0..y1 {
                for x in x0..x1 {
                    *disparity.get_mut(x, y) = d;
                    *color.get_mut(x, y) = tint;
                }
            }
        }
        Scene { color, disparity }
    }
}

/// Horizontal image shift, in pixels, of a surface at normalized disparity
/// `disp` when the camera moves by `t` along x. Points move left for t > 0.
pub fn layer_shift(disp: f32, model: DepthModel, fx: f64, t: f64) -> f64 {
    fx * t / model.depth(disp)
}

/// Integer offset that the splat applies to a layer shifted by `shift`:
/// the pixel center `i + 0.5 - shift` falls in column `i + offset`.
pub fn splat_offset(shift: f64) -> i64 {
    (0.5 - shift).floor() as i64
}

/// Border margin that hides the columns any layer slides out of.
pub fn hole_margin(max_shift: f64) -> usize {
    max_shift.abs().ceil() as usize + 1
}

/// Closed-form naive-warp hole count for `Scene::two_layer` under a lateral
/// camera translation, inside the window that leaves out `margin` pixels on
/// each side. Each uncovered strip is the part of the square's old footprint
/// that neither layer slides onto.
pub fn two_layer_naive_holes(
    width: usize,
    height: usize,
    square: Rect,
    model: DepthModel,
    fx: f64,
    t: f64,
    margin: usize,
) -> usize {
    let kf = splat_offset(layer_shift(1.0, model, fx, t));
    let kb = splat_offset(layer_shift(0.0, model, fx, t));
    let (c0, c1) = (square.x0 as i64, square.x1 as i64);
    // background image of the square's footprint
    let (g0, g1) = (c0 + kb, c1 + kb);
    // foreground image
    let (f0, f1) = (c0 + kf, c1 + kf);
    let (lo, hi) = (margin as i64, width as i64 - margin as i64);
    let mut cols = 0;
    for x in g0.max(lo)..g1.min(hi) {
        if !(f0..f1).contains(&x) {
            cols += 1;
        }
    }
    let rows = (square.y0.max(margin)..square.y1.min(height - margin)).len();
    cols as usize * rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_round_half_down() {
        assert_eq!(splat_offset(0.0), 0);
        assert_eq!(splat_offset(2.0), -2);
        assert_eq!(splat_offset(1.4), -1);
        assert_eq!(splat_offset(1.6), -2);
        assert_eq!(splat_offset(-1.6), 2);
    }

    #[test]
    fn zero_translation_no_holes() {
        let sq = Rect { x0: 40, y0: 40, x1: 80, y1: 80 };
        assert_eq!(two_layer_naive_holes(128, 128, sq, DepthModel::default(), 100.0, 0.0, 1), 0);
    }
}
