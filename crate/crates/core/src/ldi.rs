//! Layered depth image with explicit per-pixel connectivity.
//!
//! Every lattice position holds zero or more pixels. A pixel links to at most
//! one pixel in each cardinal direction, and links are always symmetric.
//! Pixel ids are append-only: removing a pixel leaves a tombstone that may
//! forward to the pixel that replaced it.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Dir, Grid, Pos};
use crate::preprocess::{CutPair, DepthEdge, DisparityMap};
use crate::regions::RegionPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct LdiPixel {
    pub pos: Pos,
    pub color: [u8; 3],
    /// Normalized inverse depth in `[0, 1]`.
    pub disparity: f32,
    pub links: [Option<PixelId>; 4],
}

impl LdiPixel {
    pub fn link(&self, dir: Dir) -> Option<PixelId> {
        self.links[dir.index()]
    }

    pub fn link_count(&self) -> usize {
        self.links.iter().filter(|l| l.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Entry {
    Live(LdiPixel),
    Dead { successor: Option<PixelId> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ldi {
    width: usize,
    height: usize,
    store: Vec<Entry>,
    index: Vec<Vec<PixelId>>,
    live: usize,
}

/// One removed link, enough to restore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutLink {
    pub from: PixelId,
    pub dir: Dir,
    pub to: PixelId,
}

/// Result of cutting one depth edge.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SilhouettePair {
    /// Near-side pixels of the cut pairs.
    pub foreground: BTreeSet<PixelId>,
    /// Far-side pixels of the cut pairs.
    pub background: BTreeSet<PixelId>,
    /// For every background pixel, the directions in which it faces the cut.
    pub background_dirs: BTreeMap<PixelId, u8>,
    /// Links removed by this cut, in removal order.
    pub cut_links: Vec<CutLink>,
}

impl SilhouettePair {
    pub fn is_empty(&self) -> bool {
        self.foreground.is_empty() && self.background.is_empty()
    }
}

/// Color and disparity written into one synthesis slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthValue {
    pub color: [u8; 3],
    pub disparity: f32,
}

#[derive(Debug, Clone, Copy)]
pub struct MergeOptions {
    /// Disparity difference above which an inpainted edge keeps two slots apart.
    pub threshold: f32,
}

impl Ldi {
    pub fn new(width: usize, height: usize) -> Self {
        Ldi {
            width,
            height,
            store: Vec::new(),
            index: vec![Vec::new(); width * height],
            live: 0,
        }
    }

    /// Single layer everywhere, every pixel linked to its four lattice neighbors.
    pub fn lift_image(color: &Grid<[u8; 3]>, disparity: &DisparityMap) -> Result<Ldi> {
        if color.width != disparity.width() || color.height != disparity.height() {
            return Err(Error::input(format!(
                "color is {}x{} but disparity is {}x{}",
                color.width,
                color.height,
                disparity.width(),
                disparity.height()
            )));
        }
        if disparity.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::input("disparity contains non-finite values"));
        }
        let (w, h) = (color.width, color.height);
        let mut ldi = Ldi::new(w, h);
        for y in 0..h {
            for x in 0..w {
                ldi.add_pixel(
                    Pos::new(x as i32, y as i32),
                    *color.get(x, y),
                    disparity.get(x, y),
                );
            }
        }
        // ids are row-major, so the neighbor id is computable directly
        for y in 0..h {
            for x in 0..w {
                let id = PixelId((y * w + x) as u32);
                if x + 1 < w {
                    ldi.link(id, Dir::Right, PixelId((y * w + x + 1) as u32))?;
                }
                if y + 1 < h {
                    ldi.link(id, Dir::Down, PixelId(((y + 1) * w + x) as u32))?;
                }
            }
        }
        Ok(ldi)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of live pixels.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Upper bound (exclusive) on every id ever issued.
    pub fn id_bound(&self) -> u32 {
        self.store.len() as u32
    }

    pub fn pixel(&self, id: PixelId) -> Option<&LdiPixel> {
        match self.store.get(id.0 as usize) {
            Some(Entry::Live(p)) => Some(p),
            _ => None,
        }
    }

    fn pixel_mut(&mut self, id: PixelId) -> Option<&mut LdiPixel> {
        match self.store.get_mut(id.0 as usize) {
            Some(Entry::Live(p)) => Some(p),
            _ => None,
        }
    }

    fn live_pixel(&self, id: PixelId) -> Result<&LdiPixel> {
        self.pixel(id)
            .ok_or_else(|| Error::consistency(format!("pixel {} is not live", id.0)))
    }

    /// Follow tombstone forwarding to the live pixel that now stands for `id`.
    pub fn resolve(&self, mut id: PixelId) -> Option<PixelId> {
        loop {
            match self.store.get(id.0 as usize)? {
                Entry::Live(_) => return Some(id),
                Entry::Dead { successor } => id = (*successor)?,
            }
        }
    }

    pub fn pixels_at(&self, pos: Pos) -> &[PixelId] {
        if pos.in_bounds(self.width, self.height) {
            &self.index[pos.y as usize * self.width + pos.x as usize]
        } else {
            &[]
        }
    }

    /// Live pixels in id order.
    pub fn iter(&self) -> impl Iterator<Item = (PixelId, &LdiPixel)> {
        self.store.iter().enumerate().filter_map(|(i, e)| match e {
            Entry::Live(p) => Some((PixelId(i as u32), p)),
            Entry::Dead { .. } => None,
        })
    }

    /// Number of directed links (each undirected adjacency counts twice).
    pub fn directed_link_count(&self) -> usize {
        self.iter().map(|(_, p)| p.link_count()).sum()
    }

    /// Largest number of pixels stacked on one lattice position.
    pub fn max_layers(&self) -> usize {
        self.index.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn add_pixel(&mut self, pos: Pos, color: [u8; 3], disparity: f32) -> PixelId {
        assert!(
            pos.in_bounds(self.width, self.height),
            "pixel position {pos:?} outside lattice"
        );
        let id = PixelId(self.store.len() as u32);
        self.store.push(Entry::Live(LdiPixel {
            pos,
            color,
            disparity,
            links: [None; 4],
        }));
        self.index[pos.y as usize * self.width + pos.x as usize].push(id);
        self.live += 1;
        id
    }

    /// Link `a` to `b` in direction `dir` (and `b` back to `a`). Both slots
    /// must be free and the positions lattice-adjacent.
    pub fn link(&mut self, a: PixelId, dir: Dir, b: PixelId) -> Result<()> {
        let pa = self.live_pixel(a)?;
        let pb = self.live_pixel(b)?;
        if pa.pos.step(dir) != pb.pos {
            return Err(Error::consistency(format!(
                "link {dir:?} from {:?} to {:?} is not one lattice step",
                pa.pos, pb.pos
            )));
        }
        if pa.link(dir).is_some() || pb.link(dir.opposite()).is_some() {
            return Err(Error::consistency(format!(
                "link {dir:?} between {} and {} would overwrite an existing link",
                a.0, b.0
            )));
        }
        self.pixel_mut(a).unwrap().links[dir.index()] = Some(b);
        self.pixel_mut(b).unwrap().links[dir.opposite().index()] = Some(a);
        Ok(())
    }

    /// Remove the link leaving `a` in direction `dir`, returning the former neighbor.
    pub fn unlink(&mut self, a: PixelId, dir: Dir) -> Result<Option<PixelId>> {
        let Some(b) = self.live_pixel(a)?.link(dir) else {
            return Ok(None);
        };
        self.pixel_mut(a).unwrap().links[dir.index()] = None;
        match self.pixel_mut(b) {
            Some(pb) if pb.links[dir.opposite().index()] == Some(a) => {
                pb.links[dir.opposite().index()] = None;
                Ok(Some(b))
            }
            _ => Err(Error::consistency(format!(
                "asymmetric link {dir:?} from {}",
                a.0
            ))),
        }
    }

    /// Unlink and tombstone a pixel. `successor` is followed by [`Ldi::resolve`].
    pub fn remove_pixel(&mut self, id: PixelId, successor: Option<PixelId>) -> Result<()> {
        let pos = self.live_pixel(id)?.pos;
        for d in Dir::ALL {
            self.unlink(id, d)?;
        }
        let cell = &mut self.index[pos.y as usize * self.width + pos.x as usize];
        cell.retain(|p| *p != id);
        self.store[id.0 as usize] = Entry::Dead { successor };
        self.live -= 1;
        Ok(())
    }

    /// Full-structure check: index/store bijection, bounds and link symmetry.
    pub fn validate(&self) -> Result<()> {
        let mut indexed = 0usize;
        for (i, cell) in self.index.iter().enumerate() {
            let pos = Pos::new((i % self.width) as i32, (i / self.width) as i32);
            for id in cell {
                let p = self.pixel(*id).ok_or_else(|| {
                    Error::consistency(format!("index holds dead pixel {}", id.0))
                })?;
                if p.pos != pos {
                    return Err(Error::consistency(format!(
                        "pixel {} indexed at {pos:?} but stored at {:?}",
                        id.0, p.pos
                    )));
                }
                indexed += 1;
            }
        }
        if indexed != self.live {
            return Err(Error::consistency(format!(
                "index holds {indexed} pixels, store holds {}",
                self.live
            )));
        }
        for (id, p) in self.iter() {
            if !p.pos.in_bounds(self.width, self.height) {
                return Err(Error::consistency(format!("pixel {} out of bounds", id.0)));
            }
            for d in Dir::ALL {
                let Some(n) = p.link(d) else { continue };
                let q = self.pixel(n).ok_or_else(|| {
                    Error::consistency(format!("pixel {} links {d:?} to dead {}", id.0, n.0))
                })?;
                if q.pos != p.pos.step(d) {
                    return Err(Error::consistency(format!(
                        "pixel {} links {d:?} to non-adjacent {}",
                        id.0, n.0
                    )));
                }
                if q.link(d.opposite()) != Some(id) {
                    return Err(Error::consistency(format!(
                        "link {d:?} from {} to {} is not symmetric",
                        id.0, n.0
                    )));
                }
            }
        }
        Ok(())
    }

    /// Disconnect the pixels across a depth edge.
    ///
    /// Pairs that are already unlinked (for example edges produced by a merge)
    /// still contribute their pixels to the silhouettes but record no cut link.
    pub fn cut_edge(&mut self, edge: &DepthEdge) -> Result<SilhouettePair> {
        let mut sil = SilhouettePair::default();
        for pair in &edge.cut_pairs {
            let (a, b) = self.resolve_pair(pair)?;
            let (pa, pb) = (self.live_pixel(a)?, self.live_pixel(b)?);
            let (near, far) = if pa.disparity >= pb.disparity {
                (a, b)
            } else {
                (b, a)
            };
            let (near_pos, far_pos) = (self.live_pixel(near)?.pos, self.live_pixel(far)?.pos);
            let dir = far_pos.dir_to(near_pos).ok_or_else(|| {
                Error::consistency(format!(
                    "cut pair {far_pos:?}/{near_pos:?} is not 4-adjacent"
                ))
            })?;
            if self.live_pixel(far)?.link(dir) == Some(near) {
                self.unlink(far, dir)?;
                sil.cut_links.push(CutLink {
                    from: far,
                    dir,
                    to: near,
                });
            }
            sil.foreground.insert(near);
            sil.background.insert(far);
            *sil.background_dirs.entry(far).or_insert(0) |= dir.bit();
        }
        Ok(sil)
    }

    /// Restore every link removed by `cut_edge`.
    pub fn undo_cut(&mut self, sil: &SilhouettePair) -> Result<()> {
        for c in sil.cut_links.iter().rev() {
            self.link(c.from, c.dir, c.to)?;
        }
        Ok(())
    }

    fn resolve_pair(&self, pair: &CutPair) -> Result<(PixelId, PixelId)> {
        let r = |id: PixelId| {
            self.resolve(id)
                .ok_or_else(|| Error::consistency(format!("stale pixel id {}", id.0)))
        };
        Ok((r(pair.near)?, r(pair.far)?))
    }

    /// Merge inpainted synthesis slots back into the lattice.
    ///
    /// Slots that replace an existing (dilated) context pixel tombstone it and
    /// forward its id to the new pixel, which takes over the old pixel's
    /// links to live neighbors outside the region. New pixels link to each
    /// other and to free-facing context pixels. A pair separated by an
    /// inpainted edge with a disparity jump above the threshold stays
    /// unlinked; such slot pairs are returned, grouped into depth edges, for
    /// the next level.
    pub fn merge_synthesized(
        &mut self,
        region: &RegionPair,
        values: &[SynthValue],
        edge_bits: &[u8],
        opts: MergeOptions,
    ) -> Result<Vec<DepthEdge>> {
        let n = region.synthesis.len();
        if values.len() != n || edge_bits.len() != n {
            return Err(Error::input(format!(
                "{n} synthesis slots but {} values and {} edge entries",
                values.len(),
                edge_bits.len()
            )));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        if let Some(bad) = values
            .iter()
            .find(|v| !v.disparity.is_finite() || !(0.0..=1.0).contains(&v.disparity))
        {
            return Err(Error::input(format!(
                "synthesized disparity {} outside [0, 1]",
                bad.disparity
            )));
        }

        let before = self.len();
        let mut new_ids = Vec::with_capacity(n);
        for (slot, v) in region.synthesis.iter().zip(values) {
            new_ids.push(self.add_pixel(slot.pos, v.color, v.disparity));
        }
        // links the replaced pixels had, for reattaching outside neighbors
        let mut inherited: Vec<(usize, Dir, PixelId)> = Vec::new();
        for (k, (slot, id)) in region.synthesis.iter().zip(&new_ids).enumerate() {
            if let Some(old) = slot.replaces {
                let old = self
                    .resolve(old)
                    .ok_or_else(|| Error::consistency(format!("stale pixel id {}", old.0)))?;
                let links = self.live_pixel(old)?.links;
                for d in Dir::ALL {
                    if let Some(n) = links[d.index()] {
                        inherited.push((k, d, n));
                    }
                }
                self.remove_pixel(old, Some(*id))?;
            }
        }

        let slot_at: BTreeMap<Pos, usize> = region
            .synthesis
            .iter()
            .enumerate()
            .map(|(i, s)| (s.pos, i))
            .collect();
        let mut context_at: BTreeMap<Pos, PixelId> = BTreeMap::new();
        for id in &region.context {
            if let Some(p) = self.pixel(*id) {
                if context_at.insert(p.pos, *id).is_some() {
                    return Err(Error::consistency(format!(
                        "two context pixels share position {:?}",
                        p.pos
                    )));
                }
            }
        }

        let mut cut_pairs: Vec<CutPair> = Vec::new();
        for (i, slot) in region.synthesis.iter().enumerate() {
            for d in [Dir::Right, Dir::Down] {
                let Some(&j) = slot_at.get(&slot.pos.step(d)) else {
                    continue;
                };
                let blocked =
                    edge_bits[i] & d.bit() != 0 || edge_bits[j] & d.opposite().bit() != 0;
                let jump = (values[i].disparity - values[j].disparity).abs();
                if blocked && jump > opts.threshold {
                    let (near, far) = if values[i].disparity >= values[j].disparity {
                        (new_ids[i], new_ids[j])
                    } else {
                        (new_ids[j], new_ids[i])
                    };
                    cut_pairs.push(CutPair { near, far });
                } else {
                    self.link(new_ids[i], d, new_ids[j])?;
                }
            }
        }
        // an inpainted edge only separates a pair across a real disparity jump
        let apart = |ldi: &Ldi, i: usize, d: Dir, other: PixelId| {
            edge_bits[i] & d.bit() != 0
                && ldi
                    .pixel(other)
                    .is_some_and(|o| (o.disparity - values[i].disparity).abs() > opts.threshold)
        };
        for (i, slot) in region.synthesis.iter().enumerate() {
            for d in Dir::ALL {
                let Some(&c) = context_at.get(&slot.pos.step(d)) else {
                    continue;
                };
                if apart(self, i, d, c) {
                    continue;
                }
                let free_here = self.pixel(new_ids[i]).unwrap().link(d).is_none();
                let free_there = self.live_pixel(c)?.link(d.opposite()).is_none();
                if free_here && free_there {
                    self.link(new_ids[i], d, c)?;
                }
            }
        }
        for (k, d, n) in inherited {
            // neighbors replaced in this merge are slots and were handled above
            let Some(np) = self.pixel(n) else { continue };
            if apart(self, k, d, n) || np.link(d.opposite()).is_some() {
                continue;
            }
            if self.pixel(new_ids[k]).unwrap().link(d).is_none() {
                self.link(new_ids[k], d, n)?;
            }
        }
        debug_assert!(self.len() >= before);
        Ok(group_cut_pairs(self, cut_pairs))
    }

    /// Serialize into the `LDI1` container. Live pixels are renumbered densely
    /// in id order; all fields are little-endian.
    pub fn write_container<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut remap = vec![u32::MAX; self.store.len()];
        for (k, (id, _)) in self.iter().enumerate() {
            remap[id.0 as usize] = k as u32;
        }
        w.write_all(CONTAINER_MAGIC)?;
        w.write_all(&(self.width as u32).to_le_bytes())?;
        w.write_all(&(self.height as u32).to_le_bytes())?;
        w.write_all(&(self.live as u32).to_le_bytes())?;
        for (_, p) in self.iter() {
            w.write_all(&(p.pos.x as u16).to_le_bytes())?;
            w.write_all(&(p.pos.y as u16).to_le_bytes())?;
            w.write_all(&p.color)?;
            w.write_all(&p.disparity.to_le_bytes())?;
            for l in p.links {
                let v = l.map_or(NO_LINK, |id| remap[id.0 as usize]);
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_container_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(16 + self.live * PIXEL_RECORD_LEN);
        self.write_container(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_container<R: Read>(mut r: R) -> Result<Ldi> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::input(format!("reading LDI container: {e}")))?;
        Ldi::from_container_bytes(&bytes)
    }

    pub fn from_container_bytes(bytes: &[u8]) -> Result<Ldi> {
        if bytes.len() < 16 || &bytes[..4] != CONTAINER_MAGIC {
            return Err(Error::input("not an LDI1 container"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let (width, height, count) = (
            u32_at(4) as usize,
            u32_at(8) as usize,
            u32_at(12) as usize,
        );
        if bytes.len() != 16 + count * PIXEL_RECORD_LEN {
            return Err(Error::input(format!(
                "container length {} does not match {count} pixel records",
                bytes.len()
            )));
        }
        let mut ldi = Ldi::new(width, height);
        let mut links = Vec::with_capacity(count);
        for k in 0..count {
            let o = 16 + k * PIXEL_RECORD_LEN;
            let x = u16::from_le_bytes([bytes[o], bytes[o + 1]]) as i32;
            let y = u16::from_le_bytes([bytes[o + 2], bytes[o + 3]]) as i32;
            let color = [bytes[o + 4], bytes[o + 5], bytes[o + 6]];
            let disparity = f32::from_le_bytes(bytes[o + 7..o + 11].try_into().unwrap());
            let pos = Pos::new(x, y);
            if !pos.in_bounds(width, height) {
                return Err(Error::input(format!("pixel {k} at {pos:?} outside lattice")));
            }
            ldi.add_pixel(pos, color, disparity);
            let mut l = [NO_LINK; 4];
            for (d, slot) in l.iter_mut().enumerate() {
                *slot = u32_at(o + 11 + 4 * d);
            }
            links.push(l);
        }
        for (k, l) in links.iter().enumerate() {
            for (d, &target) in l.iter().enumerate() {
                if target == NO_LINK {
                    continue;
                }
                if target as usize >= count {
                    return Err(Error::input(format!("pixel {k} links to missing {target}")));
                }
                ldi.pixel_mut(PixelId(k as u32)).unwrap().links[d] = Some(PixelId(target));
            }
        }
        ldi.validate()
            .map_err(|e| Error::input(format!("container failed validation: {e}")))?;
        Ok(ldi)
    }
}

pub const CONTAINER_MAGIC: &[u8; 4] = b"LDI1";
pub const NO_LINK: u32 = u32::MAX;
/// x, y (u16 each), rgb, disparity f32, four u32 links.
pub const PIXEL_RECORD_LEN: usize = 2 + 2 + 3 + 4 + 16;

/// Group merge-time cut pairs into depth edges: 8-connected components of the
/// far-side positions, ordered by their topmost-leftmost site.
fn group_cut_pairs(ldi: &Ldi, pairs: Vec<CutPair>) -> Vec<DepthEdge> {
    if pairs.is_empty() {
        return Vec::new();
    }
    let mut by_site: BTreeMap<Pos, Vec<CutPair>> = BTreeMap::new();
    for p in pairs {
        let pos = ldi.pixel(p.far).expect("fresh pixel").pos;
        by_site.entry(pos).or_default().push(p);
    }
    let sites: BTreeSet<Pos> = by_site.keys().copied().collect();
    let mut seen: BTreeSet<Pos> = BTreeSet::new();
    let mut comps: Vec<Vec<Pos>> = Vec::new();
    let mut ordered: Vec<Pos> = sites.iter().copied().collect();
    ordered.sort_by_key(|p| p.scan_key());
    for start in ordered {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let q = p.offset(dx, dy);
                    if sites.contains(&q) && seen.insert(q) {
                        comp.push(q);
                        stack.push(q);
                    }
                }
            }
        }
        comp.sort_by_key(|p| p.scan_key());
        comps.push(comp);
    }
    comps
        .into_iter()
        .enumerate()
        .map(|(k, sites)| {
            let cut_pairs = sites
                .iter()
                .flat_map(|s| by_site[s].iter().copied())
                .collect();
            DepthEdge {
                id: k,
                level: 0,
                sites,
                cut_pairs,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(w: usize, h: usize) -> Ldi {
        let color = Grid::new(w, h, [10u8, 20, 30]);
        let disp = DisparityMap::from_vec(w, h, vec![0.5; w * h]).unwrap();
        Ldi::lift_image(&color, &disp).unwrap()
    }

    #[test]
    fn lift_single_pixel_has_no_links() {
        let ldi = flat(1, 1);
        assert_eq!(ldi.len(), 1);
        assert_eq!(ldi.directed_link_count(), 0);
        ldi.validate().unwrap();
    }

    #[test]
    fn lift_two_by_two() {
        let ldi = flat(2, 2);
        assert_eq!(ldi.len(), 4);
        assert_eq!(ldi.directed_link_count(), 8);
    }

    #[test]
    fn lift_rejects_mismatch_and_nan() {
        let color = Grid::new(3, 2, [0u8; 3]);
        let disp = DisparityMap::from_vec(2, 3, vec![0.0; 6]).unwrap();
        assert!(matches!(
            Ldi::lift_image(&color, &disp),
            Err(Error::Input(_))
        ));
        let color = Grid::new(2, 1, [0u8; 3]);
        let disp = DisparityMap::from_vec_unchecked(2, 1, vec![0.0, f32::NAN]);
        assert!(matches!(
            Ldi::lift_image(&color, &disp),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn link_refuses_overwrite_and_non_adjacent() {
        let mut ldi = flat(3, 1);
        let extra = ldi.add_pixel(Pos::new(1, 0), [0; 3], 0.1);
        assert!(ldi.link(PixelId(0), Dir::Right, extra).is_err());
        assert!(ldi.link(extra, Dir::Right, PixelId(0)).is_err());
        ldi.validate().unwrap();
    }

    #[test]
    fn remove_pixel_tombstones_and_forwards() {
        let mut ldi = flat(3, 3);
        let replacement = ldi.add_pixel(Pos::new(1, 1), [1; 3], 0.5);
        ldi.remove_pixel(PixelId(4), Some(replacement)).unwrap();
        ldi.validate().unwrap();
        assert_eq!(ldi.len(), 9);
        assert!(ldi.pixel(PixelId(4)).is_none());
        assert_eq!(ldi.resolve(PixelId(4)), Some(replacement));
        // ids are not reused
        let next = ldi.add_pixel(Pos::new(0, 0), [0; 3], 0.0);
        assert_eq!(next, PixelId(10));
        ldi.remove_pixel(next, None).unwrap();
        assert_eq!(ldi.resolve(next), None);
    }

    #[test]
    fn container_round_trip_is_bit_exact() {
        let mut ldi = flat(4, 3);
        let extra = ldi.add_pixel(Pos::new(2, 1), [7, 8, 9], 0.123_456_7);
        ldi.remove_pixel(PixelId(0), None).unwrap();
        let up = ldi.pixels_at(Pos::new(2, 0))[0];
        ldi.unlink(up, Dir::Down).unwrap();
        ldi.link(up, Dir::Down, extra).unwrap();
        let bytes = ldi.to_container_bytes();
        assert_eq!(&bytes[..4], b"LDI1");
        assert_eq!(bytes.len(), 16 + ldi.len() * PIXEL_RECORD_LEN);
        let back = Ldi::from_container_bytes(&bytes).unwrap();
        assert_eq!(back.to_container_bytes(), bytes);
        assert_eq!(back.len(), ldi.len());
        assert_eq!(back.directed_link_count(), ldi.directed_link_count());
    }

    #[test]
    fn container_rejects_garbage() {
        assert!(Ldi::from_container_bytes(b"LDI0\0\0\0\0").is_err());
        let mut bytes = flat(2, 2).to_container_bytes();
        bytes.pop();
        assert!(Ldi::from_container_bytes(&bytes).is_err());
    }
}
