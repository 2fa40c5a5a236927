//! Baseline structure stage: straight continuation of context depth edges.

const RING: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// Extend every context edge that ends right at the synthesis region.
///
/// An endpoint is a context edge cell with exactly one 8-neighboring context
/// edge cell; its last direction is the step from that neighbor to it. The
/// continuation walks that direction through synthesis cells until it leaves
/// the mask or runs into an already inpainted cell. Each inpainted cell
/// inherits the endpoint's edge mask. Endpoints are visited in scan order.
pub fn continue_edges(
    edges: &[u8],
    synthesis: &[bool],
    excluded: &[bool],
    width: usize,
    height: usize,
) -> Vec<u8> {
    let n = width * height;
    let mut out = vec![0u8; n];
    let is_site = |i: usize| edges[i] != 0 && !synthesis[i] && !excluded[i];
    let at = |x: i64, y: i64| {
        (x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height)
            .then(|| y as usize * width + x as usize)
    };
    for i in 0..n {
        if !is_site(i) {
            continue;
        }
        let (x, y) = ((i % width) as i64, (i / width) as i64);
        let mut neighbors = RING
            .iter()
            .filter(|(dx, dy)| at(x + dx, y + dy).is_some_and(is_site));
        let (Some(&(nx, ny)), None) = (neighbors.next(), neighbors.next()) else {
            continue;
        };
        let (dx, dy) = (-nx, -ny);
        let (mut px, mut py) = (x + dx, y + dy);
        while let Some(j) = at(px, py) {
            if !synthesis[j] || out[j] != 0 {
                break;
            }
            out[j] = edges[i];
            px += dx;
            py += dy;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Dir;

    #[test]
    fn nothing_touching_mask() {
        let (w, h) = (8, 4);
        let mut edges = vec![0u8; w * h];
        edges[0] = Dir::Up.bit();
        edges[1] = Dir::Up.bit();
        let mut synth = vec![false; w * h];
        synth[3 * w + 7] = true;
        let out = continue_edges(&edges, &synth, &vec![false; w * h], w, h);
        assert!(out.iter().all(|e| *e == 0));
    }

    #[test]
    fn horizontal_edge_crosses_six_wide_mask() {
        // edge on row 1, columns 0..3; mask columns 3..9
        let (w, h) = (12, 3);
        let mut edges = vec![0u8; w * h];
        for x in 0..3 {
            edges[w + x] = Dir::Up.bit();
        }
        let mut synth = vec![false; w * h];
        for y in 0..h {
            for x in 3..9 {
                synth[y * w + x] = true;
            }
        }
        let out = continue_edges(&edges, &synth, &vec![false; w * h], w, h);
        let marked: Vec<usize> = (0..w * h).filter(|&i| out[i] != 0).collect();
        assert_eq!(marked, (w + 3..w + 9).collect::<Vec<_>>());
        assert!(marked.iter().all(|&i| out[i] == Dir::Up.bit()));
    }

    #[test]
    fn opposite_stubs_meet() {
        let (w, h) = (14, 3);
        let mut edges = vec![0u8; w * h];
        for x in (0..3).chain(11..14) {
            edges[w + x] = Dir::Down.bit();
        }
        let mut synth = vec![false; w * h];
        for y in 0..h {
            for x in 3..11 {
                synth[y * w + x] = true;
            }
        }
        let out = continue_edges(&edges, &synth, &vec![false; w * h], w, h);
        let marked: Vec<usize> = (0..w * h).filter(|&i| out[i] != 0).collect();
        // one unbroken row from the left stub to the right stub
        assert_eq!(marked, (w + 3..w + 11).collect::<Vec<_>>());
    }
}
