//! Context and synthesis regions for one cut depth edge.
//!
//! The context region is grown along live LDI links from the background
//! silhouette, so it stops at every cut. The synthesis region starts one step
//! past the silhouette, in each direction where a silhouette pixel lost its
//! link, and grows over lattice positions. The two alternate ring by ring,
//! context first, and never claim the same position. Finally the innermost
//! context rings are handed over to synthesis (dilation).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Dir, Grid, Pos};
use crate::ldi::{Ldi, PixelId, SilhouettePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionParams {
    /// Synthesis expansion rounds.
    pub n_syn: usize,
    /// Context expansion rounds.
    pub n_ctx: usize,
    /// Context rings next to the silhouette converted into synthesis slots.
    pub dilate: usize,
}

impl Default for RegionParams {
    fn default() -> Self {
        RegionParams {
            n_syn: 40,
            n_ctx: 100,
            dilate: 5,
        }
    }
}

/// A new pixel slot to be inpainted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSlot {
    pub pos: Pos,
    pub seed_color: [u8; 3],
    pub seed_disparity: f32,
    /// Background silhouette pixel the seed was copied from.
    pub source: PixelId,
    /// Context pixel this slot replaces (dilated slots only).
    pub replaces: Option<PixelId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegionPair {
    pub edge_id: usize,
    /// Slots in scan order of their positions.
    pub synthesis: Vec<SynthSlot>,
    /// Context pixels in scan order of their positions.
    pub context: Vec<PixelId>,
}

impl RegionPair {
    pub fn is_empty(&self) -> bool {
        self.synthesis.is_empty() && self.context.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Claim {
    Context,
    Synthesis,
}

/// True when a synthesis step from `from` to `to` would cross a silhouette:
/// some pixel at `to` has no link back toward an occupied `from`.
fn crosses_silhouette(ldi: &Ldi, from: Pos, dir: Dir) -> bool {
    if ldi.pixels_at(from).is_empty() {
        return false;
    }
    let back = dir.opposite();
    ldi.pixels_at(from.step(dir))
        .iter()
        .any(|&id| ldi.pixel(id).is_some_and(|p| p.link(back).is_none()))
}

pub fn extract_regions(
    ldi: &Ldi,
    sil: &SilhouettePair,
    edge_id: usize,
    params: RegionParams,
) -> Result<RegionPair> {
    if sil.background.is_empty() {
        return Ok(RegionPair {
            edge_id,
            ..RegionPair::default()
        });
    }
    let (w, h) = (ldi.width(), ldi.height());
    let mut claimed: BTreeMap<Pos, Claim> = BTreeMap::new();
    // pixel -> (ring, source)
    let mut context: BTreeMap<PixelId, (usize, PixelId)> = BTreeMap::new();
    // pos -> source
    let mut synthesis: BTreeMap<Pos, PixelId> = BTreeMap::new();

    let mut ctx_frontier: Vec<PixelId> = Vec::new();
    for &id in &sil.background {
        let p = ldi
            .pixel(id)
            .ok_or_else(|| Error::consistency(format!("silhouette pixel {} is dead", id.0)))?;
        if claimed.contains_key(&p.pos) {
            continue;
        }
        claimed.insert(p.pos, Claim::Context);
        context.insert(id, (0, id));
        ctx_frontier.push(id);
    }

    let mut syn_frontier: Vec<Pos> = Vec::new();
    let mut init: BTreeMap<Pos, PixelId> = BTreeMap::new();
    for (&id, &dirs) in &sil.background_dirs {
        if !context.contains_key(&id) {
            continue;
        }
        let p = ldi.pixel(id).unwrap();
        for d in crate::geom::dirs_in(dirs) {
            if p.link(d).is_some() {
                continue;
            }
            let q = p.pos.step(d);
            if !q.in_bounds(w, h) || claimed.contains_key(&q) {
                continue;
            }
            init.entry(q).or_insert(id);
        }
    }
    for (q, src) in init {
        claimed.insert(q, Claim::Synthesis);
        synthesis.insert(q, src);
        syn_frontier.push(q);
    }

    let rounds = params.n_syn.max(params.n_ctx);
    for ring in 1..=rounds {
        if ring <= params.n_ctx && !ctx_frontier.is_empty() {
            let mut cand: BTreeMap<Pos, (PixelId, PixelId)> = BTreeMap::new();
            for &id in &ctx_frontier {
                let p = ldi.pixel(id).unwrap();
                let src = context[&id].1;
                for d in Dir::ALL {
                    let Some(n) = p.link(d) else { continue };
                    if context.contains_key(&n) {
                        continue;
                    }
                    let np = ldi.pixel(n).unwrap().pos;
                    if claimed.contains_key(&np) {
                        continue;
                    }
                    let e = cand.entry(np).or_insert((src, n));
                    if (src, n) < *e {
                        *e = (src, n);
                    }
                }
            }
            ctx_frontier.clear();
            for (pos, (src, n)) in cand {
                claimed.insert(pos, Claim::Context);
                context.insert(n, (ring, src));
                ctx_frontier.push(n);
            }
        }
        if ring <= params.n_syn && !syn_frontier.is_empty() {
            let mut cand: BTreeMap<Pos, PixelId> = BTreeMap::new();
            for &p in &syn_frontier {
                let src = synthesis[&p];
                for d in Dir::ALL {
                    let q = p.step(d);
                    if !q.in_bounds(w, h) || claimed.contains_key(&q) {
                        continue;
                    }
                    if crosses_silhouette(ldi, p, d) {
                        continue;
                    }
                    let e = cand.entry(q).or_insert(src);
                    if src < *e {
                        *e = src;
                    }
                }
            }
            syn_frontier.clear();
            for (q, src) in cand {
                claimed.insert(q, Claim::Synthesis);
                synthesis.insert(q, src);
                syn_frontier.push(q);
            }
        }
        if ctx_frontier.is_empty() && syn_frontier.is_empty() {
            break;
        }
    }

    let seed = |src: PixelId| {
        let p = ldi.pixel(src).unwrap();
        (p.color, p.disparity)
    };
    let mut slots: Vec<SynthSlot> = synthesis
        .into_iter()
        .map(|(pos, source)| {
            let (c, d) = seed(source);
            SynthSlot {
                pos,
                seed_color: c,
                seed_disparity: d,
                source,
                replaces: None,
            }
        })
        .collect();
    let mut ctx_ids = Vec::new();
    for (&id, &(ring, source)) in &context {
        if ring < params.dilate {
            let (c, d) = seed(source);
            slots.push(SynthSlot {
                pos: ldi.pixel(id).unwrap().pos,
                seed_color: c,
                seed_disparity: d,
                source,
                replaces: Some(id),
            });
        } else {
            ctx_ids.push(id);
        }
    }
    slots.sort_by_key(|s| s.pos.scan_key());
    ctx_ids.sort_by_key(|id| (ldi.pixel(*id).unwrap().pos.scan_key(), *id));
    Ok(RegionPair {
        edge_id,
        synthesis: slots,
        context: ctx_ids,
    })
}

/// What a patch cell holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    /// Neither region; backends must not read it.
    Excluded,
    Context(PixelId),
    /// Index into `RegionPair::synthesis`.
    Slot(usize),
}

/// A region pair flattened onto its bounding rectangle.
///
/// Colors are in `[0, 1]`. Edge cells carry a direction mask pointing at the
/// nearer side of the discontinuity; zero means no edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub x0: i32,
    pub y0: i32,
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Cell>,
    pub color: Vec<[f32; 3]>,
    pub disparity: Vec<f32>,
    pub edges: Vec<u8>,
}

impl Patch {
    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn is_synthesis(&self, i: usize) -> bool {
        matches!(self.cells[i], Cell::Slot(_))
    }

    pub fn is_excluded(&self, i: usize) -> bool {
        matches!(self.cells[i], Cell::Excluded)
    }

    pub fn synthesis_mask(&self) -> Vec<bool> {
        (0..self.area()).map(|i| self.is_synthesis(i)).collect()
    }

    pub fn excluded_mask(&self) -> Vec<bool> {
        (0..self.area()).map(|i| self.is_excluded(i)).collect()
    }

    pub fn local(&self, pos: Pos) -> Option<usize> {
        let (x, y) = (pos.x - self.x0, pos.y - self.y0);
        (x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height)
            .then(|| y as usize * self.width + x as usize)
    }
}

/// Flatten a region pair onto its minimal bounding rectangle. Synthesis cells
/// are zeroed in every plane; `context_edges` supplies edge masks for
/// context pixels.
pub fn flatten_regions(
    ldi: &Ldi,
    region: &RegionPair,
    context_edges: &BTreeMap<PixelId, u8>,
) -> Result<Patch> {
    let mut positions: Vec<Pos> = region.synthesis.iter().map(|s| s.pos).collect();
    for id in &region.context {
        let p = ldi
            .pixel(*id)
            .ok_or_else(|| Error::consistency(format!("context pixel {} is dead", id.0)))?;
        positions.push(p.pos);
    }
    if positions.is_empty() {
        return Ok(Patch {
            x0: 0,
            y0: 0,
            width: 0,
            height: 0,
            cells: vec![],
            color: vec![],
            disparity: vec![],
            edges: vec![],
        });
    }
    let x0 = positions.iter().map(|p| p.x).min().unwrap();
    let y0 = positions.iter().map(|p| p.y).min().unwrap();
    let x1 = positions.iter().map(|p| p.x).max().unwrap();
    let y1 = positions.iter().map(|p| p.y).max().unwrap();
    let (width, height) = ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
    let n = width * height;
    let mut patch = Patch {
        x0,
        y0,
        width,
        height,
        cells: vec![Cell::Excluded; n],
        color: vec![[0.0; 3]; n],
        disparity: vec![0.0; n],
        edges: vec![0; n],
    };
    for (k, s) in region.synthesis.iter().enumerate() {
        let i = patch.local(s.pos).unwrap();
        if patch.cells[i] != Cell::Excluded {
            return Err(Error::consistency(format!(
                "two synthesis slots at {:?}",
                s.pos
            )));
        }
        patch.cells[i] = Cell::Slot(k);
    }
    for &id in &region.context {
        let p = ldi.pixel(id).unwrap();
        let i = patch.local(p.pos).unwrap();
        if patch.cells[i] != Cell::Excluded {
            return Err(Error::consistency(format!(
                "context pixel {} overlaps another region cell at {:?}",
                id.0, p.pos
            )));
        }
        patch.cells[i] = Cell::Context(id);
        patch.color[i] = p.color.map(|c| c as f32 / 255.0);
        patch.disparity[i] = p.disparity;
        patch.edges[i] = context_edges.get(&id).copied().unwrap_or(0);
    }
    Ok(patch)
}

/// Debug overlay: context tinted blue, synthesis tinted red.
pub fn overlay(base: &Grid<[u8; 3]>, ldi: &Ldi, region: &RegionPair) -> Grid<[u8; 3]> {
    let mut out = base.clone();
    let tint = |c: [u8; 3], t: [u8; 3]| {
        [
            ((c[0] as u16 + t[0] as u16) / 2) as u8,
            ((c[1] as u16 + t[1] as u16) / 2) as u8,
            ((c[2] as u16 + t[2] as u16) / 2) as u8,
        ]
    };
    for id in &region.context {
        if let Some(p) = ldi.pixel(*id) {
            let c = *out.get(p.pos.x as usize, p.pos.y as usize);
            out.set(p.pos, tint(c, [0, 0, 255]));
        }
    }
    for s in &region.synthesis {
        let c = *out.get(s.pos.x as usize, s.pos.y as usize);
        out.set(s.pos, tint(c, [255, 0, 0]));
    }
    out
}

/// Positions occupied by the context pixels.
pub fn context_positions(ldi: &Ldi, region: &RegionPair) -> BTreeSet<Pos> {
    region
        .context
        .iter()
        .filter_map(|id| ldi.pixel(*id).map(|p| p.pos))
        .collect()
}
