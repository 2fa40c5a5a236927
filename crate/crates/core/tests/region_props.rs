mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use photo3d::geom::{Grid, Pos};
use photo3d::ldi::PixelId;
use photo3d::preprocess::{detect_discontinuities, link_depth_edges};
use photo3d::regions::{extract_regions, flatten_regions, Cell, RegionParams};

fn scene() -> impl Strategy<Value = (usize, usize, Vec<f32>)> {
    (3..16usize, 3..16usize).prop_flat_map(|(w, h)| {
        (Just(w), Just(h), prop::collection::vec(prop::sample::select(vec![0.0f32, 0.5, 1.0]), w * h))
    })
}

fn params() -> impl Strategy<Value = RegionParams> {
    (0..6usize, 0..8usize, 0..4usize).prop_map(|(n_syn, n_ctx, dilate)| RegionParams { n_syn, n_ctx, dilate })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn regions_match_bfs_oracle((w, h, v) in scene(), p in params()) {
        let color = Grid::from_vec(w, h, (0..w * h).map(|i| [(i % 251) as u8, 0, 0]).collect());
        let (mut ldi, d) = common::lift(&color, &Grid::from_vec(w, h, v));
        let disc = detect_discontinuities(&d, 0.04).unwrap();
        let edges = link_depth_edges(&disc, &ldi, 1).unwrap();
        prop_assume!(!edges.is_empty());
        let sil = ldi.cut_edge(&edges[0]).unwrap();
        let region = extract_regions(&ldi, &sil, edges[0].id, p).unwrap();
        let (want_syn, want_ctx) = common::region_oracle(&ldi, &sil, p);

        let syn: BTreeSet<Pos> = region.synthesis.iter().map(|s| s.pos).collect();
        let ctx: BTreeSet<PixelId> = region.context.iter().copied().collect();
        prop_assert_eq!(&syn, &want_syn);
        prop_assert_eq!(&ctx, &want_ctx);
        prop_assert_eq!(syn.len(), region.synthesis.len());
        prop_assert_eq!(ctx.len(), region.context.len());

        let ctx_pos: BTreeSet<Pos> = ctx.iter().map(|id| ldi.pixel(*id).unwrap().pos).collect();
        prop_assert!(syn.is_disjoint(&ctx_pos));
        for s in &region.synthesis {
            prop_assert!(sil.background.contains(&s.source));
            if let Some(r) = s.replaces {
                prop_assert_eq!(ldi.pixel(r).unwrap().pos, s.pos);
            }
        }

        let patch = flatten_regions(&ldi, &region, &BTreeMap::new()).unwrap();
        let slots = patch.cells.iter().filter(|c| matches!(c, Cell::Slot(_))).count();
        let context = patch.cells.iter().filter(|c| matches!(c, Cell::Context(_))).count();
        prop_assert_eq!(slots, region.synthesis.len());
        prop_assert_eq!(context, region.context.len());
        for (i, c) in patch.cells.iter().enumerate() {
            if let Cell::Slot(_) | Cell::Excluded = c {
                prop_assert_eq!(patch.disparity[i], 0.0);
                prop_assert_eq!(patch.color[i], [0.0; 3]);
            }
        }
    }
}

#[test]
fn empty_silhouette_gives_empty_region() {
    let (ldi, _) = common::lift(&Grid::new(4, 4, [0, 0, 0]), &Grid::new(4, 4, 0.5));
    let region = extract_regions(&ldi, &Default::default(), 3, RegionParams::default()).unwrap();
    assert!(region.is_empty());
    assert_eq!(region.edge_id, 3);
}

#[test]
fn step_edge_grows_behind_the_foreground() {
    // foreground on the left half; background slots grow leftward under it
    let (w, h) = (20, 6);
    let v: Vec<f32> = (0..w * h).map(|i| if i % w < 10 { 1.0 } else { 0.0 }).collect();
    let (mut ldi, d) = common::lift(&Grid::new(w, h, [0, 0, 0]), &Grid::from_vec(w, h, v));
    let disc = detect_discontinuities(&d, 0.04).unwrap();
    let edges = link_depth_edges(&disc, &ldi, 1).unwrap();
    let sil = ldi.cut_edge(&edges[0]).unwrap();
    let p = RegionParams { n_syn: 3, n_ctx: 4, dilate: 0 };
    let region = extract_regions(&ldi, &sil, 0, p).unwrap();
    let xs: BTreeSet<i32> = region.synthesis.iter().map(|s| s.pos.x).collect();
    assert_eq!(xs, [6, 7, 8, 9].into_iter().collect());
    assert_eq!(region.synthesis.len(), 4 * h);
    assert_eq!(region.context.len(), 5 * h);
}
