//! Depth normalization, bilateral median sharpening, discontinuity detection
//! and linking of discontinuities into depth edges.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Grid, Pos};
use crate::ldi::{Ldi, PixelId};

/// Per-image normalized disparity in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap(Grid<f32>);

impl DisparityMap {
    /// Wraps finite values as-is; no normalization is applied.
    pub fn from_vec(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::input(format!(
                "{} disparity values for a {width}x{height} map",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("disparity contains non-finite values"));
        }
        Ok(DisparityMap(Grid::from_vec(width, height, values)))
    }

    /// Skips the finiteness check. Lets tests feed bad data further down.
    pub fn from_vec_unchecked(width: usize, height: usize, values: Vec<f32>) -> Self {
        DisparityMap(Grid::from_vec(width, height, values))
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        *self.0.get(x, y)
    }

    pub fn values(&self) -> &[f32] {
        &self.0.data
    }

    pub fn grid(&self) -> &Grid<f32> {
        &self.0
    }
}

/// What the raw depth channel holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DepthMode {
    /// Metric or relative depth; must be strictly positive.
    #[default]
    Depth,
    /// Already inverse depth; any finite value.
    Disparity,
}

/// Map raw depth or disparity affinely onto `[0, 1]` (min disparity to 0,
/// max to 1). A constant input maps to 0.5 everywhere.
pub fn normalize_disparity(raw: &Grid<f32>, mode: DepthMode) -> Result<DisparityMap> {
    let mut disp = Vec::with_capacity(raw.data.len());
    for &v in &raw.data {
        if !v.is_finite() {
            return Err(Error::input("depth input contains non-finite values"));
        }
        match mode {
            DepthMode::Depth if v <= 0.0 => {
                return Err(Error::input(format!("non-positive depth value {v}")))
            }
            DepthMode::Depth => disp.push(1.0 / v as f64),
            DepthMode::Disparity => disp.push(v as f64),
        }
    }
    let lo = disp.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = disp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let out = if disp.is_empty() || hi - lo <= 0.0 {
        vec![0.5f32; disp.len()]
    } else {
        disp.iter().map(|d| ((d - lo) / (hi - lo)) as f32).collect()
    };
    DisparityMap::from_vec(raw.width, raw.height, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub window: usize,
    pub sigma_spatial: f64,
    pub sigma_intensity: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            window: 7,
            sigma_spatial: 4.0,
            sigma_intensity: 0.5,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.window % 2 == 0 || self.window == 0 {
            return Err(Error::config(format!(
                "filter window must be odd, got {}",
                self.window
            )));
        }
        if !(self.sigma_spatial > 0.0) || !(self.sigma_intensity > 0.0) {
            return Err(Error::config("filter sigmas must be positive"));
        }
        Ok(())
    }
}

/// Weighted median over a clipped window, with weights
/// `exp(-|p-q|^2 / 2 s_s^2) * exp(-(d(p)-d(q))^2 / 2 s_i^2)`.
///
/// The median is the smallest window value whose cumulative weight reaches
/// half the total. Output values are always taken from the input.
pub fn bilateral_median_filter(d: &DisparityMap, params: FilterParams) -> Result<DisparityMap> {
    params.validate()?;
    let (w, h) = (d.width(), d.height());
    let r = (params.window / 2) as i64;
    let two_ss = 2.0 * params.sigma_spatial * params.sigma_spatial;
    let two_si = 2.0 * params.sigma_intensity * params.sigma_intensity;
    let side = params.window;
    let spatial: Vec<f64> = (0..side * side)
        .map(|k| {
            let dx = (k % side) as i64 - r;
            let dy = (k / side) as i64 - r;
            (-((dx * dx + dy * dy) as f64) / two_ss).exp()
        })
        .collect();

    let out: Vec<f32> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let spatial = &spatial;
            let mut samples: Vec<(f32, f64)> = Vec::with_capacity(side * side);
            (0..w)
                .map(move |x| {
                    samples.clear();
                    let center = d.get(x, y) as f64;
                    for dy in -r..=r {
                        let qy = y as i64 + dy;
                        if qy < 0 || qy >= h as i64 {
                            continue;
                        }
                        for dx in -r..=r {
                            let qx = x as i64 + dx;
                            if qx < 0 || qx >= w as i64 {
                                continue;
                            }
                            let v = d.get(qx as usize, qy as usize);
                            let diff = v as f64 - center;
                            let ws = spatial[((dy + r) as usize) * side + (dx + r) as usize];
                            samples.push((v, ws * (-(diff * diff) / two_si).exp()));
                        }
                    }
                    weighted_median(&mut samples)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    DisparityMap::from_vec(w, h, out)
}

fn weighted_median(samples: &mut [(f32, f64)]) -> f32 {
    let total: f64 = samples.iter().map(|s| s.1).sum();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    let mut i = 0;
    while i < samples.len() {
        // equal values are one candidate
        let v = samples[i].0;
        while i < samples.len() && samples[i].0 == v {
            acc += samples[i].1;
            i += 1;
        }
        if 2.0 * acc >= total {
            return v;
        }
    }
    samples.last().map(|s| s.0).unwrap_or(0.0)
}

/// Thresholded disparity jumps between 4-neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct Discontinuities {
    /// Marked on the far (lower-disparity) side of every jump.
    pub map: Grid<bool>,
    /// `(near, far)` position pairs in scan order.
    pub pairs: Vec<(Pos, Pos)>,
}

impl Discontinuities {
    pub fn site_count(&self) -> usize {
        self.map.data.iter().filter(|m| **m).count()
    }
}

pub fn detect_discontinuities(d: &DisparityMap, threshold: f32) -> Result<Discontinuities> {
    if !(threshold > 0.0) {
        return Err(Error::config(format!(
            "discontinuity threshold must be positive, got {threshold}"
        )));
    }
    let (w, h) = (d.width(), d.height());
    let mut map = Grid::new(w, h, false);
    let mut pairs = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let here = d.get(x, y);
            for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                if nx >= w || ny >= h {
                    continue;
                }
                let there = d.get(nx, ny);
                if (here - there).abs() > threshold {
                    let (a, b) = (Pos::new(x as i32, y as i32), Pos::new(nx as i32, ny as i32));
                    let (near, far) = if here > there { (a, b) } else { (b, a) };
                    map.set(far, true);
                    pairs.push((near, far));
                }
            }
        }
    }
    Ok(Discontinuities { map, pairs })
}

/// Two pixels across a discontinuity. `near` has the higher disparity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CutPair {
    pub near: PixelId,
    pub far: PixelId,
}

/// A connected chain of discontinuity sites; the unit of inpainting.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthEdge {
    pub id: usize,
    /// Recursion level: 1 for detected edges, parent level + 1 for inpainted ones.
    pub level: usize,
    /// Far-side site positions in scan order.
    pub sites: Vec<Pos>,
    pub cut_pairs: Vec<CutPair>,
}

impl DepthEdge {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

const RING: [(i32, i32); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// A site is a junction when it has at least three marked 8-neighbors that
/// fall into at least three separate runs around the ring.
pub fn is_junction(map: &Grid<bool>, p: Pos) -> bool {
    let marked: Vec<bool> = RING
        .iter()
        .map(|&(dx, dy)| *map.at(p.offset(dx, dy)).unwrap_or(&false))
        .collect();
    if marked.iter().filter(|m| **m).count() < 3 {
        return false;
    }
    let runs = (0..8).filter(|&i| marked[i] && !marked[(i + 7) % 8]).count();
    runs >= 3
}

/// Marked ring cells of `p` with the index of the run they belong to.
fn ring_runs(map: &Grid<bool>, p: Pos) -> Vec<(Pos, usize)> {
    let marked: Vec<bool> = RING
        .iter()
        .map(|&(dx, dy)| *map.at(p.offset(dx, dy)).unwrap_or(&false))
        .collect();
    let Some(start) = (0..8).find(|&i| !marked[i]) else {
        return RING.iter().map(|&(dx, dy)| (p.offset(dx, dy), 0)).collect();
    };
    let mut out = Vec::new();
    let mut run = 0;
    for k in 1..=8 {
        let i = (start + k) % 8;
        if marked[i] {
            if !marked[(i + 7) % 8] {
                run += 1;
            }
            out.push((p.offset(RING[i].0, RING[i].1), run));
        }
    }
    out
}

/// Scale a length tuned for 1024-pixel images to the given image size.
pub fn scaled_length(base: usize, width: usize, height: usize) -> usize {
    let long = width.max(height) as f64;
    ((base as f64 * long / 1024.0).round() as usize).max(1)
}

/// Link marked sites into depth edges.
///
/// Junction sites split components; components shorter than
/// `min_edge_length` (isolated specks and dangling branches) are dropped;
/// each junction then joins the first surviving neighboring edge (through
/// chains of junctions if needed). Edges are
/// ordered by their topmost-leftmost site.
pub fn link_depth_edges(
    disc: &Discontinuities,
    ldi: &Ldi,
    min_edge_length: usize,
) -> Result<Vec<DepthEdge>> {
    let map = &disc.map;
    if map.width != ldi.width() || map.height != ldi.height() {
        return Err(Error::input("discontinuity map does not match the LDI"));
    }
    let (w, h) = (map.width, map.height);
    let mut junction = Grid::new(w, h, false);
    for y in 0..h {
        for x in 0..w {
            let p = Pos::new(x as i32, y as i32);
            if *map.get(x, y) && is_junction(map, p) {
                junction.set(p, true);
            }
        }
    }

    // ring cells of each junction, tagged with their run, so arms that meet
    // at a junction are not rejoined through a diagonal step around it
    let mut arm: BTreeMap<Pos, Vec<(Pos, usize)>> = BTreeMap::new();
    for y in 0..h {
        for x in 0..w {
            if *junction.get(x, y) {
                let j = Pos::new(x as i32, y as i32);
                for (q, run) in ring_runs(map, j) {
                    arm.entry(q).or_default().push((j, run));
                }
            }
        }
    }
    let separated = |p: Pos, q: Pos| -> bool {
        let (Some(a), Some(b)) = (arm.get(&p), arm.get(&q)) else {
            return false;
        };
        a.iter()
            .any(|(j, ra)| b.iter().any(|(k, rb)| j == k && ra != rb))
    };

    let mut label: Grid<Option<usize>> = Grid::new(w, h, None);
    let mut comps: Vec<Vec<Pos>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !*map.get(x, y) || *junction.get(x, y) || label.get(x, y).is_some() {
                continue;
            }
            let id = comps.len();
            let start = Pos::new(x as i32, y as i32);
            label.set(start, Some(id));
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(p) = stack.pop() {
                for (dx, dy) in RING {
                    let q = p.offset(dx, dy);
                    if map.at(q) == Some(&true)
                        && !*junction.at(q).unwrap()
                        && label.at(q).unwrap().is_none()
                        && !separated(p, q)
                    {
                        label.set(q, Some(id));
                        comp.push(q);
                        stack.push(q);
                    }
                }
            }
            comps.push(comp);
        }
    }

    // junction-only clusters form components of their own
    let mut jlabel: Grid<Option<usize>> = Grid::new(w, h, None);
    let mut clusters: Vec<Vec<Pos>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let start = Pos::new(x as i32, y as i32);
            if !*junction.get(x, y) || jlabel.get(x, y).is_some() {
                continue;
            }
            let id = clusters.len();
            jlabel.set(start, Some(id));
            let mut cluster = vec![start];
            let mut stack = vec![start];
            while let Some(p) = stack.pop() {
                for (dx, dy) in RING {
                    let q = p.offset(dx, dy);
                    if junction.at(q) == Some(&true) && jlabel.at(q).unwrap().is_none() {
                        jlabel.set(q, Some(id));
                        cluster.push(q);
                        stack.push(q);
                    }
                }
            }
            clusters.push(cluster);
        }
    }
    for cluster in clusters {
        let touches = cluster.iter().any(|&p| {
            RING.iter()
                .any(|&(dx, dy)| label.at(p.offset(dx, dy)).copied().flatten().is_some())
        });
        if !touches {
            let id = comps.len();
            for &p in &cluster {
                label.set(p, Some(id));
            }
            comps.push(cluster);
        }
    }

    // remaining junctions join the first surviving neighboring edge, spreading
    // through junction chains until nothing changes
    let keep: Vec<bool> = comps.iter().map(|c| c.len() >= min_edge_length).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                if !*junction.get(x, y) || label.get(x, y).is_some() {
                    continue;
                }
                let p = Pos::new(x as i32, y as i32);
                let owner = RING
                    .iter()
                    .filter_map(|&(dx, dy)| label.at(p.offset(dx, dy)).copied().flatten())
                    .filter(|&c| keep[c])
                    .min();
                if let Some(c) = owner {
                    label.set(p, Some(c));
                    comps[c].push(p);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut edges: Vec<DepthEdge> = comps
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(mut sites, _)| {
            sites.sort_by_key(|p| p.scan_key());
            DepthEdge {
                id: 0,
                level: 1,
                sites,
                cut_pairs: Vec::new(),
            }
        })
        .collect();
    edges.sort_by_key(|e| e.sites[0].scan_key());

    let mut owner: Grid<Option<usize>> = Grid::new(w, h, None);
    for (k, e) in edges.iter_mut().enumerate() {
        e.id = k;
        for s in &e.sites {
            owner.set(*s, Some(k));
        }
    }
    for &(near, far) in &disc.pairs {
        if let Some(k) = *owner.at(far).unwrap() {
            let pair = resolve_cut_pair(ldi, near, far)?;
            edges[k].cut_pairs.push(pair);
        }
    }
    Ok(edges)
}

fn resolve_cut_pair(ldi: &Ldi, near: Pos, far: Pos) -> Result<CutPair> {
    let dir = far
        .dir_to(near)
        .ok_or_else(|| Error::consistency("cut pair positions are not 4-adjacent"))?;
    for &f in ldi.pixels_at(far) {
        if let Some(n) = ldi.pixel(f).and_then(|p| p.link(dir)) {
            return Ok(CutPair { near: n, far: f });
        }
    }
    match (ldi.pixels_at(near).first(), ldi.pixels_at(far).first()) {
        (Some(&n), Some(&f)) => Ok(CutPair { near: n, far: f }),
        _ => Err(Error::consistency(format!(
            "no LDI pixels at cut pair {near:?}/{far:?}"
        ))),
    }
}

/// Full preprocessing chain for a lifted image: filter, detect, link.
pub fn extract_edges(
    ldi: &Ldi,
    disparity: &DisparityMap,
    filter: FilterParams,
    threshold: f32,
    min_edge_length: usize,
) -> Result<(DisparityMap, Vec<DepthEdge>)> {
    let sharpened = bilateral_median_filter(disparity, filter)?;
    let disc = detect_discontinuities(&sharpened, threshold)?;
    let edges = link_depth_edges(&disc, ldi, min_edge_length)?;
    Ok((sharpened, edges))
}

/// Sites that belong to some edge, for debug overlays.
pub fn edge_site_set(edges: &[DepthEdge]) -> BTreeSet<Pos> {
    edges.iter().flat_map(|e| e.sites.iter().copied()).collect()
}
