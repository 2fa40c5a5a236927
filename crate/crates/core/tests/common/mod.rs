//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use photo3d::camera::Camera;
use photo3d::geom::{Dir, Grid, Pos};
use photo3d::ldi::{Ldi, PixelId, SilhouettePair};
use photo3d::mesh::TexturedMesh;
use photo3d::metrics::{FeatureMap, Image};
use photo3d::preprocess::{DisparityMap, FilterParams};
use photo3d::regions::RegionParams;

/// Straight per-pixel weighted median: gather the clipped window in row
/// order, sort stably by value, walk distinct values until half the total
/// weight is reached.
pub fn filter_reference(d: &DisparityMap, p: FilterParams) -> Vec<f32> {
    let (w, h) = (d.width() as i64, d.height() as i64);
    let r = (p.window / 2) as i64;
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let c = d.get(x as usize, y as usize) as f64;
            let mut s: Vec<(f32, f64)> = Vec::new();
            for qy in (y - r).max(0)..=(y + r).min(h - 1) {
                for qx in (x - r).max(0)..=(x + r).min(w - 1) {
                    let v = d.get(qx as usize, qy as usize);
                    let dist2 = ((qx - x) * (qx - x) + (qy - y) * (qy - y)) as f64;
                    let ws = (-dist2 / (2.0 * p.sigma_spatial * p.sigma_spatial)).exp();
                    let diff = v as f64 - c;
                    let wi = (-(diff * diff) / (2.0 * p.sigma_intensity * p.sigma_intensity)).exp();
                    s.push((v, ws * wi));
                }
            }
            let total: f64 = s.iter().map(|t| t.1).sum();
            s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut acc = 0.0;
            let mut chosen = s.last().unwrap().0;
            let mut k = 0;
            while k < s.len() {
                let v = s[k].0;
                while k < s.len() && s[k].0 == v {
                    acc += s[k].1;
                    k += 1;
                }
                if acc * 2.0 >= total {
                    chosen = v;
                    break;
                }
            }
            out.push(chosen);
        }
    }
    out
}

/// Number of pixels in a row that sit strictly between two plateau levels.
pub fn transition_width(row: &[f32], lo: f32, hi: f32) -> usize {
    let eps = 1e-6;
    row.iter().filter(|&&v| v > lo + eps && v < hi - eps).count()
}

/// Region sets from an independent level-synchronous BFS over position grids:
/// (synthesis positions, context pixel ids).
pub fn region_oracle(ldi: &Ldi, sil: &SilhouettePair, params: RegionParams) -> (BTreeSet<Pos>, BTreeSet<PixelId>) {
    let (w, h) = (ldi.width(), ldi.height());
    const FREE: u8 = 0;
    const CTX: u8 = 1;
    const SYN: u8 = 2;
    let mut owner = vec![FREE; w * h];
    let at = |p: Pos| p.y as usize * w + p.x as usize;
    let mut ctx_ring: BTreeMap<PixelId, usize> = BTreeMap::new();
    let mut syn: BTreeSet<Pos> = BTreeSet::new();

    let mut ctx_front: Vec<PixelId> = Vec::new();
    for &id in &sil.background {
        let pos = ldi.pixel(id).unwrap().pos;
        if owner[at(pos)] == FREE {
            owner[at(pos)] = CTX;
            ctx_ring.insert(id, 0);
            ctx_front.push(id);
        }
    }
    let mut syn_front: Vec<Pos> = Vec::new();
    for (&id, &bits) in &sil.background_dirs {
        if !ctx_ring.contains_key(&id) {
            continue;
        }
        let px = ldi.pixel(id).unwrap();
        for d in Dir::ALL {
            if bits & d.bit() == 0 || px.link(d).is_some() {
                continue;
            }
            let q = px.pos.step(d);
            if q.in_bounds(w, h) && owner[at(q)] == FREE {
                owner[at(q)] = SYN;
                syn.insert(q);
                syn_front.push(q);
            }
        }
    }
    let occupied_blocks = |from: Pos, d: Dir| -> bool {
        if ldi.pixels_at(from).is_empty() {
            return false;
        }
        ldi.pixels_at(from.step(d))
            .iter()
            .any(|&t| ldi.pixel(t).unwrap().link(d.opposite()).is_none())
    };
    let rounds = params.n_syn.max(params.n_ctx);
    for ring in 1..=rounds {
        if ring <= params.n_ctx {
            let mut next = BTreeMap::new();
            for &id in &ctx_front {
                for d in Dir::ALL {
                    if let Some(n) = ldi.pixel(id).unwrap().link(d) {
                        let np = ldi.pixel(n).unwrap().pos;
                        if !ctx_ring.contains_key(&n) && owner[at(np)] == FREE {
                            next.entry(np).or_insert(n);
                        }
                    }
                }
            }
            ctx_front.clear();
            for (np, n) in next {
                owner[at(np)] = CTX;
                ctx_ring.insert(n, ring);
                ctx_front.push(n);
            }
        }
        if ring <= params.n_syn {
            let mut next = BTreeSet::new();
            for &p in &syn_front {
                for d in Dir::ALL {
                    let q = p.step(d);
                    if q.in_bounds(w, h) && owner[at(q)] == FREE && !occupied_blocks(p, d) {
                        next.insert(q);
                    }
                }
            }
            syn_front.clear();
            for q in next {
                owner[at(q)] = SYN;
                syn.insert(q);
                syn_front.push(q);
            }
        }
    }
    let mut context = BTreeSet::new();
    for (id, ring) in ctx_ring {
        if ring < params.dilate {
            syn.insert(ldi.pixel(id).unwrap().pos);
        } else {
            context.insert(id);
        }
    }
    (syn, context)
}

/// Mean SSIM by direct weighted sums over every valid 11x11 window.
pub fn ssim_oracle(a: &Image, b: &Image) -> f64 {
    let k = 11usize;
    let sigma: f64 = 1.5;
    let mut g = vec![0.0; k * k];
    let mut s = 0.0;
    for j in 0..k {
        for i in 0..k {
            let dx = i as f64 - 5.0;
            let dy = j as f64 - 5.0;
            g[j * k + i] = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            s += g[j * k + i];
        }
    }
    g.iter_mut().for_each(|v| *v /= s);
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let mut total = 0.0;
    for c in 0..a.channels {
        let mut acc = 0.0;
        let mut count = 0;
        for y0 in 0..=a.height - k {
            for x0 in 0..=a.width - k {
                let (mut mx, mut my) = (0.0, 0.0);
                for j in 0..k {
                    for i in 0..k {
                        mx += g[j * k + i] * a.at(x0 + i, y0 + j, c);
                        my += g[j * k + i] * b.at(x0 + i, y0 + j, c);
                    }
                }
                let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
                for j in 0..k {
                    for i in 0..k {
                        let da = a.at(x0 + i, y0 + j, c) - mx;
                        let db = b.at(x0 + i, y0 + j, c) - my;
                        vx += g[j * k + i] * da * da;
                        vy += g[j * k + i] * db * db;
                        cov += g[j * k + i] * da * db;
                    }
                }
                acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        total += acc / count as f64;
    }
    total / a.channels as f64
}

/// TV by enumerating every unordered 4-adjacent pair of in-mask pixels.
pub fn tv_oracle(img: &Image, mask: &[bool]) -> f64 {
    let mut pairs = Vec::new();
    for p in 0..img.width * img.height {
        for q in p + 1..img.width * img.height {
            let (px, py) = (p % img.width, p / img.width);
            let (qx, qy) = (q % img.width, q / img.width);
            if px.abs_diff(qx) + py.abs_diff(qy) == 1 && mask[p] && mask[q] {
                pairs.push((p, q));
            }
        }
    }
    let mut total = 0.0;
    for (p, q) in pairs {
        for c in 0..img.channels {
            total += (img.data[p * img.channels + c] - img.data[q * img.channels + c]).abs();
        }
    }
    total / img.data.len() as f64
}

/// Style loss with an explicit (HW x C) matrix and a triple loop Gram.
pub fn style_oracle(a: &[FeatureMap], b: &[FeatureMap]) -> f64 {
    let gram = |f: &FeatureMap| {
        let hw = f.height * f.width;
        let c = f.channels;
        let m: Vec<Vec<f64>> = (0..hw).map(|r| (0..c).map(|ch| f.data[ch * hw + r]).collect()).collect();
        let mut g = vec![vec![0.0; c]; c];
        for i in 0..c {
            for j in 0..c {
                for row in &m {
                    g[i][j] += row[i] * row[j];
                }
                g[i][j] /= (c * f.height * f.width) as f64;
            }
        }
        g
    };
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (gx, gy) = (gram(x), gram(y));
        let mut l1 = 0.0;
        for i in 0..x.channels {
            for j in 0..x.channels {
                l1 += (gx[i][j] - gy[i][j]).abs();
            }
        }
        total += l1 / (x.channels * x.channels) as f64;
    }
    total
}

pub fn perceptual_oracle(a: &[FeatureMap], b: &[FeatureMap]) -> f64 {
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        let mut l1 = 0.0;
        for c in 0..x.channels {
            for r in 0..x.height {
                for q in 0..x.width {
                    let i = (c * x.height + r) * x.width + q;
                    l1 += (x.data[i] - y.data[i]).abs();
                }
            }
        }
        total += l1 / (x.channels * x.height * x.width) as f64;
    }
    total
}

/// For each pixel center, the smallest depth among all triangles that
/// contain it (infinity if none).
pub fn zbuffer_oracle(mesh: &TexturedMesh, cam: &Camera, w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; w * h];
    for t in &mesh.triangles {
        let v: Vec<(f64, f64, f64)> = t
            .iter()
            .map(|&i| {
                let p = mesh.positions[i as usize];
                cam.project(&nalgebra::Point3::new(p[0] as f64, p[1] as f64, p[2] as f64))
            })
            .collect();
        if v.iter().any(|p| p.2 <= 1e-6) {
            continue;
        }
        for y in 0..h {
            for x in 0..w {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let area = (v[1].0 - v[0].0) * (v[2].1 - v[0].1) - (v[1].1 - v[0].1) * (v[2].0 - v[0].0);
                if area == 0.0 {
                    continue;
                }
                let l0 = ((v[1].0 - px) * (v[2].1 - py) - (v[1].1 - py) * (v[2].0 - px)) / area;
                let l1 = ((v[2].0 - px) * (v[0].1 - py) - (v[2].1 - py) * (v[0].0 - px)) / area;
                let l2 = 1.0 - l0 - l1;
                if l0 < -1e-9 || l1 < -1e-9 || l2 < -1e-9 {
                    continue;
                }
                let z = 1.0 / (l0 / v[0].2 + l1 / v[1].2 + l2 / v[2].2);
                if z < out[y * w + x] {
                    out[y * w + x] = z;
                }
            }
        }
    }
    out
}

/// Count of 2x2 position blocks whose four pixels are pairwise linked
/// along the block's sides, found by scanning positions.
pub fn linked_cell_oracle(ldi: &Ldi) -> usize {
    let mut cells = 0;
    for y in 0..ldi.height() as i32 - 1 {
        for x in 0..ldi.width() as i32 - 1 {
            for &a in ldi.pixels_at(Pos::new(x, y)) {
                for &b in ldi.pixels_at(Pos::new(x + 1, y)) {
                    for &c in ldi.pixels_at(Pos::new(x, y + 1)) {
                        for &d in ldi.pixels_at(Pos::new(x + 1, y + 1)) {
                            let l = |p: PixelId, dir: Dir, q: PixelId| ldi.pixel(p).unwrap().link(dir) == Some(q);
                            if l(a, Dir::Right, b) && l(a, Dir::Down, c) && l(b, Dir::Down, d) && l(c, Dir::Right, d) {
                                cells += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    cells
}

/// Sub-pixel horizontal displacement of `moved` relative to `reference`
/// from the peak of the row-averaged normalized cross-correlation.
pub fn horizontal_shift(reference: &Grid<f64>, moved: &Grid<f64>, valid: &Grid<bool>, max_shift: i64) -> f64 {
    let (w, h) = (reference.width as i64, reference.height as i64);
    let score = |s: i64| -> f64 {
        let (mut sab, mut saa, mut sbb, mut sa, mut sb, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                let xr = x - s;
                if xr < 0 || xr >= w || !*valid.get(x as usize, y as usize) {
                    continue;
                }
                let a = *moved.get(x as usize, y as usize);
                let b = *reference.get(xr as usize, y as usize);
                sab += a * b;
                saa += a * a;
                sbb += b * b;
                sa += a;
                sb += b;
                n += 1.0;
            }
        }
        let cov = sab / n - (sa / n) * (sb / n);
        let va = saa / n - (sa / n).powi(2);
        let vb = sbb / n - (sb / n).powi(2);
        cov / (va * vb).sqrt()
    };
    let scores: Vec<(i64, f64)> = (-max_shift..=max_shift).map(|s| (s, score(s))).collect();
    let (best, _) = scores
        .iter()
        .copied()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let (l, c, r) = (score(best - 1), score(best), score(best + 1));
    let denom = l - 2.0 * c + r;
    let frac = if denom.abs() > 1e-15 { 0.5 * (l - r) / denom } else { 0.0 };
    best as f64 + frac
}

/// Lift a raw disparity grid (already in [0, 1]) without filtering.
pub fn lift(color: &Grid<[u8; 3]>, disparity: &Grid<f32>) -> (Ldi, DisparityMap) {
    let d = DisparityMap::from_vec(disparity.width, disparity.height, disparity.data.clone()).unwrap();
    (Ldi::lift_image(color, &d).unwrap(), d)
}
