//! Multi-level driver: cut, extract, flatten, inpaint, merge, repeat on the
//! edges the merge produces.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{inpaint_stage_order, Backend, InpaintRequest};
use crate::error::Result;
use crate::ldi::{Ldi, MergeOptions, PixelId};
use crate::preprocess::DepthEdge;
use crate::regions::{extract_regions, flatten_regions, RegionParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub region: RegionParams,
    /// Disparity jump that keeps inpainted pixels apart across an inpainted edge.
    pub threshold: f32,
    /// Hard cap on recursion levels.
    pub depth_cap: usize,
    /// Shuffle each level's edge queue with this seed; `None` keeps id order.
    pub shuffle_seed: Option<u64>,
    /// Run the full LDI validator after every cut and merge.
    pub validate: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            region: RegionParams::default(),
            threshold: 0.04,
            depth_cap: 8,
            shuffle_seed: None,
            validate: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Levels that had at least one edge to process.
    pub levels: usize,
    pub edges_per_level: Vec<usize>,
    pub edges_processed: usize,
    pub synthesized_pixels: usize,
    pub depth_cap_hit: bool,
    pub warnings: Vec<String>,
}

/// Inpaint every edge, recursing into inpainted edges until none remain or
/// the depth cap is reached. Cuts for a whole level are applied before its
/// regions are extracted, so context never leaks across a pending edge.
pub fn run_pipeline(
    ldi: &mut Ldi,
    edges: Vec<DepthEdge>,
    backend: &dyn Backend,
    opts: &PipelineOptions,
) -> Result<RunReport> {
    let mut report = RunReport::default();
    let mut rng = opts.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    // far-side site pixel -> (direction mask toward the near side, owning edge)
    let mut sites: BTreeMap<PixelId, (u8, usize)> = BTreeMap::new();
    let mut next_uid = 0usize;
    let mut queue: Vec<(usize, DepthEdge)> = edges
        .into_iter()
        .map(|mut e| {
            e.level = 1;
            next_uid += 1;
            (next_uid - 1, e)
        })
        .collect();
    let mut level = 1;

    while !queue.is_empty() {
        if level > opts.depth_cap {
            report.depth_cap_hit = true;
            report.warnings.push(format!(
                "depth cap {} reached with {} edges pending",
                opts.depth_cap,
                queue.len()
            ));
            log::warn!("{}", report.warnings.last().unwrap());
            break;
        }
        if let Some(rng) = rng.as_mut() {
            queue.shuffle(rng);
        }
        report.levels = level;
        report.edges_per_level.push(queue.len());

        let mut cuts = Vec::with_capacity(queue.len());
        for (uid, edge) in &queue {
            let sil = ldi.cut_edge(edge)?;
            for (&far, &dirs) in &sil.background_dirs {
                let entry = sites.entry(far).or_insert((0, *uid));
                entry.0 |= dirs;
            }
            if opts.validate {
                ldi.validate()?;
            }
            cuts.push(sil);
        }

        let mut next = Vec::new();
        for ((uid, edge), sil) in queue.iter().zip(&cuts) {
            // earlier merges may have replaced silhouette pixels
            let mut sil = sil.clone();
            sil.background = sil.background.iter().filter_map(|id| ldi.resolve(*id)).collect();
            sil.background_dirs = sil
                .background_dirs
                .iter()
                .filter_map(|(id, d)| ldi.resolve(*id).map(|r| (r, *d)))
                .collect();

            let region = extract_regions(ldi, &sil, edge.id, opts.region)?;
            if region.synthesis.is_empty() {
                continue;
            }
            let context_edges: BTreeMap<PixelId, u8> = region
                .context
                .iter()
                .filter_map(|id| match sites.get(id) {
                    Some(&(bits, owner)) if owner != *uid => Some((*id, bits)),
                    _ => None,
                })
                .collect();
            let patch = flatten_regions(ldi, &region, &context_edges)?;
            let seeds: Vec<([u8; 3], f32)> = region
                .synthesis
                .iter()
                .map(|s| (s.seed_color, s.seed_disparity))
                .collect();
            let req = InpaintRequest::from_patch(&patch, &seeds);
            let result = inpaint_stage_order(&req, backend)?;
            let (values, bits) = result.slot_values(&patch, region.synthesis.len());
            let produced = ldi.merge_synthesized(
                &region,
                &values,
                &bits,
                MergeOptions {
                    threshold: opts.threshold,
                },
            )?;
            for slot in &region.synthesis {
                if let Some(old) = slot.replaces {
                    if let (Some(entry), Some(new)) = (sites.remove(&old), ldi.resolve(old)) {
                        sites.insert(new, entry);
                    }
                }
            }
            if opts.validate {
                ldi.validate()?;
            }
            report.edges_processed += 1;
            report.synthesized_pixels += region.synthesis.len();
            for mut e in produced {
                e.level = level + 1;
                e.id = next_uid;
                next.push((next_uid, e));
                next_uid += 1;
            }
        }
        queue = next;
        level += 1;
    }
    Ok(report)
}
